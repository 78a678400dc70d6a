"""The reproducible verification suite behind `nonlocal-lab reproduce`.

Each criterion returns a CriterionResult with a pass flag and a one-line
detail string; MC-backed checks use five-standard-error tolerances and
fixed per-criterion seeds derived from the master seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bell, filters, lhv, measure, states
from .measure import born_table, obs_from_bloch, random_povm, random_projective

SIGMA = 5.0
FULL_POWER_N = 1_000_000


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: str
    findings: list[str] = field(default_factory=list)
    artifacts: dict[str, str] = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _seed(master: int, cid: int, k: int = 0) -> int:
    return master * 10_000 + cid * 100 + k


def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def _spin_projectors(v: np.ndarray) -> list[np.ndarray]:
    return obs_from_bloch(v).measurement().projectors


def criterion_01(seed: int, n: int) -> CriterionResult:
    value = bell.chsh_value(states.singlet(), bell.example_chsh_settings())
    target = 2 * np.sqrt(2)
    err = abs(value - target)
    return CriterionResult(
        1,
        "singlet CHSH at the standard settings equals 2*sqrt(2)",
        err <= 1e-10,
        f"value {value:.12g}, |err| {err:.3g} (tol 1e-10)",
    )


def criterion_02(seed: int, n: int) -> CriterionResult:
    rng = np.random.default_rng(_seed(seed, 2))
    worst_excess = -np.inf
    worst_gap = -np.inf
    for k in range(50):
        rho = states.random_density(2, 2, rng)
        res = bell.horodecki_m(rho)
        bound = 2 * np.sqrt(res.m_rho)
        excess = bell.chsh_max_random(rho, 10_000, _seed(seed, 2, k + 1)) - bound
        gap = bound - bell.chsh_value(rho, res.settings)
        worst_excess = max(worst_excess, excess)
        worst_gap = max(worst_gap, gap)
    ok = worst_excess <= 1e-9 and worst_gap <= 1e-6
    return CriterionResult(
        2,
        "random search never beats 2*sqrt(M); constructed settings attain it",
        ok,
        f"max excess {worst_excess:.3g} (tol 1e-9), max shortfall {worst_gap:.3g} (tol 1e-6)",
    )


def _werner_formula_table(d: int, pa, pb) -> np.ndarray:
    phi = states.werner_local_phi(d)
    out = np.empty((len(pa.projectors), len(pb.projectors)))
    for i, p in enumerate(pa.projectors):
        for j, q in enumerate(pb.projectors):
            tp, tq = np.trace(p).real, np.trace(q).real
            tpq = np.trace(p @ q).real
            out[i, j] = ((d - phi) * tp * tq + (d * phi - 1) * tpq) / (d**3 - d)
    return out


def criterion_03(seed: int, n: int, workers=None) -> CriterionResult:
    worst = 0.0
    for d in (2, 3):
        rng = np.random.default_rng(_seed(seed, 3, d))
        for k in range(5):
            pa, pb = random_projective(d, rng), random_projective(d, rng)
            table = lhv.simulate_werner(d, pa, pb, n, _seed(seed, 3, 10 * d + k), workers)
            worst = max(worst, table.max_sigma(_werner_formula_table(d, pa, pb)))
    return CriterionResult(
        3,
        "Werner minimizer model reproduces the closed-form joint table (d=2,3)",
        worst <= SIGMA,
        f"max cell deviation {worst:.2f} sigma over 10 runs (tol {SIGMA})",
    )


def criterion_04(seed: int, n: int, workers=None) -> CriterionResult:
    rng = np.random.default_rng(_seed(seed, 4))
    est = lhv.simplex_integral_mc(3, 0, random_projective(3, rng), n, _seed(seed, 4, 1), workers)
    dev = abs(est.sigma_ratio(1 / 27))
    return CriterionResult(
        4,
        "restricted overlap integral at d=3 equals 1/27",
        dev <= SIGMA,
        f"estimate {est.mean:.8g} vs 1/27 = {1 / 27:.8g}, {dev:.2f} sigma",
    )


def criterion_05(seed: int, n: int, workers=None) -> CriterionResult:
    rng = np.random.default_rng(_seed(seed, 5))
    worst = 0.0
    mismatches = 0
    for k in range(10):
        x, y = _unit(rng), _unit(rng)
        res = lhv.simulate_gd_w2x2(x, y, n, _seed(seed, 5, k + 1), workers)
        worst = max(
            worst,
            abs(res.e_ab.sigma_ratio(-float(x @ y) / 2)),
            abs(res.e_a.sigma_ratio(0.0)),
            abs(res.e_b.sigma_ratio(0.0)),
        )
        mismatches += res.rewrite_mismatches
    ok = worst <= SIGMA and mismatches == 0
    return CriterionResult(
        5,
        "choice-method model: E(AB) = -(x.y)/2, flat marginals, sum-form rewrite exact",
        ok,
        f"max deviation {worst:.2f} sigma over 10 direction pairs; rewrite mismatches {mismatches}",
    )


def criterion_06(seed: int, n: int, workers=None) -> CriterionResult:
    rng = np.random.default_rng(_seed(seed, 6))
    worst = 0.0
    for k in range(3):
        x, y = _unit(rng), _unit(rng)
        res = lhv.simulate_epr_one_bit(x, y, n, _seed(seed, 6, k + 1), workers)
        worst = max(worst, abs(res["E_AB"].sigma_ratio(-float(x @ y))))
    return CriterionResult(
        6,
        "one-bit-assisted simulation reproduces E(AB) = -x.y",
        worst <= SIGMA,
        f"max deviation {worst:.2f} sigma over 3 direction pairs",
    )


def criterion_07(seed: int, n: int, workers=None) -> CriterionResult:
    rng = np.random.default_rng(_seed(seed, 7))
    worst = 0.0
    rate_msgs = []
    ok = True
    for k, q in enumerate((0.1, 0.3, 0.5)):
        x, y = _unit(rng), _unit(rng)
        res = lhv.simulate_hirsch_projective(q, x, y, n, _seed(seed, 7, k + 1), workers)
        oracle = born_table(states.rho_g(q), _spin_projectors(x), _spin_projectors(y))
        worst = max(
            worst,
            res.table.max_sigma(oracle),
            abs(res.e_a.sigma_ratio((1 - q) * float(x[2]))),
        )
        x2 = _unit(rng)
        res2 = lhv.simulate_hirsch_projective(q, x2, y, n, _seed(seed, 7, 10 + k), workers)
        r1, r2 = res.accept_rate, res2.accept_rate
        assert r1 is not None and r2 is not None
        diff_sigma = abs(r1.mean - r2.mean) / np.sqrt(r1.stderr**2 + r2.stderr**2)
        half_sigma = max(abs(r1.sigma_ratio(0.5)), abs(r2.sigma_ratio(0.5)))
        ok = ok and diff_sigma <= SIGMA and half_sigma <= SIGMA
        rate_msgs.append(f"q={q}: rates {r1.mean:.4f}/{r2.mean:.4f}")
    ok = ok and worst <= SIGMA
    return CriterionResult(
        7,
        "singlet/|0>-mixture model matches its state for q in {0.1, 0.3, 0.5}",
        ok,
        f"max table/marginal deviation {worst:.2f} sigma; acceptance " + "; ".join(rate_msgs),
    )


def criterion_08(seed: int, n: int, workers=None) -> CriterionResult:
    rng = np.random.default_rng(_seed(seed, 8))
    base = lhv.HirschModel(0.4)
    sigma = np.diag([1.0, 0.0]).astype(complex)
    target_check = np.max(np.abs(states.rho_g_prime(0.4).mat - states.lift_state(base.rho0, sigma, sigma).mat))
    worst = 0.0
    rate_worst = 0.0
    for k in range(5):
        ma, mb = random_povm(3, 2, rng), random_povm(3, 2, rng)
        res = lhv.simulate_povm_lift(base, sigma, sigma, ma, mb, n, _seed(seed, 8, k + 1), workers)
        oracle = born_table(res.target, ma.elements, mb.elements)
        worst = max(worst, res.table.max_sigma(oracle))
        rate_worst = max(rate_worst, abs(res.step4_a.sigma_ratio(0.5)), abs(res.step4_b.sigma_ratio(0.5)))
    ok = worst <= SIGMA and rate_worst <= SIGMA and target_check <= 1e-12
    return CriterionResult(
        8,
        "POVM-lift protocol matches the lifted state for 5 random POVM pairs",
        ok,
        f"max cell deviation {worst:.2f} sigma; fallback-branch rate off 1/2 by {rate_worst:.2f} sigma",
    )


def criterion_09(seed: int, n: int) -> CriterionResult:
    msgs = []
    artifacts = {}
    ok = True
    for q in (0.25, 0.5):
        scan_g = filters.hidden_nonlocality_scan("rho_g", q)
        scan_p = filters.hidden_nonlocality_scan("rho_g_prime", q)
        artifacts[f"scan_rho_g_q{q}.csv"] = filters.scan_to_csv(scan_g)
        artifacts[f"scan_rho_g_prime_q{q}.csv"] = filters.scan_to_csv(scan_p)
        m_g, m_p = scan_g[-1].m, scan_p[-1].m
        err_g, err_p = abs(m_g - (1 + q)), abs(m_p - (1 + q / 4))
        ok = ok and err_g <= 1e-4 and err_p <= 1e-4
        msgs.append(f"q={q}: |M-(1+q)|={err_g:.2g}, |M'-(1+q/4)|={err_p:.2g}")
    q = 0.3
    flt = filters.LocalFilter(np.diag([1.0, 1.0, 0.0]), np.eye(2))
    outcome = filters.apply_filters(states.rho_e(q), flt)
    assert outcome.post_state is not None
    embedded = states.embed_local(states.singlet(), 3, 2)
    exact = np.max(np.abs(outcome.post_state.mat - embedded.mat))
    block = states.restrict_block(outcome.post_state, (0, 1), (0, 1))
    chsh = bell.chsh_value(block, bell.optimal_settings(block))
    ok = (
        ok
        and exact <= 1e-12
        and abs(outcome.success_prob - q) <= 1e-12
        and abs(chsh - 2 * np.sqrt(2)) <= 1e-10
    )
    msgs.append(f"flag-state filter: singlet deviation {exact:.2g}, CHSH {chsh:.12g}")
    return CriterionResult(
        9,
        "filtering limits: M -> 1+q, 1+q/4; flag state filters to the exact singlet",
        ok,
        "; ".join(msgs),
        artifacts=artifacts,
    )


def criterion_10(seed: int, n: int) -> CriterionResult:
    ok = True
    worst = 0.0
    for d in range(3, 9):
        res = filters.popescu_protocol(d)
        target = 2 * np.sqrt(2) * d / (d + 2)
        worst = max(worst, abs(res.chsh - target))
        ok = ok and abs(res.chsh - target) <= 1e-10
        if d >= 5:
            ok = ok and res.chsh > 2
        else:
            ok = ok and res.chsh <= 2
    return CriterionResult(
        10,
        "projection protocol: CHSH = 2*sqrt(2) d/(d+2); violation exactly for d >= 5",
        ok,
        f"max |err| {worst:.3g} over d=3..8 (tol 1e-10)",
    )


def criterion_11(seed: int, n: int) -> CriterionResult:
    rng = np.random.default_rng(_seed(seed, 11))
    worst = 0.0
    for q in np.linspace(0, 1, 11):
        worst = max(worst, abs(states.flip_witness(states.rho_g(float(q))) - (1 - 3 * q) / 2))
    sign_ok = (
        states.flip_witness(states.rho_g(1 / 3 - 0.01)) > 0
        and states.flip_witness(states.rho_g(1 / 3 + 0.01)) < 0
        and abs(states.flip_witness(states.rho_g(1 / 3))) <= 1e-12
    )
    min_sep = np.inf
    for k in range(100):
        d = 2 if k % 2 == 0 else 3
        min_sep = min(min_sep, states.flip_witness(states.random_separable(d, d, rng)))
    ok = worst <= 1e-12 and sign_ok and min_sep >= -1e-9
    return CriterionResult(
        11,
        "flip witness: (1-3q)/2 on the singlet mixture, sign flip at q=1/3, non-negative on separables",
        ok,
        f"max formula error {worst:.2g}; min witness over 100 separable states {min_sep:.3g}",
    )


def _response_validity(seed: int, n_lambda: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    msgs = []
    ok = True
    for d in (2, 3):
        pa = random_projective(d, rng)
        kets, _ = lhv._refine_projective(pa)
        lam = lhv.sample_sphere_cd(rng, d, n_lambda)
        u = np.abs(lam @ kets.conj().T) ** 2
        row_sums = u.sum(axis=1)
        ok = ok and np.max(np.abs(row_sums - 1)) <= 1e-12
        # minimizer response: exactly one outcome fires by construction
        ma = random_povm(3, d, rng)
        ref, _ = measure.povm_refine(ma)
        xw, mk = lhv._rank1_weights(ref)
        ua = np.abs(lam @ mk.conj().T) ** 2
        mw = ua * xw
        chi = (ua - 1.0 / d) >= 0
        s = (mw * chi).sum(axis=1)
        p_alice = mw * chi + (1.0 - s)[:, None] * (xw / d)
        p_bob = (xw * (1.0 - ua)) / (d - 1)
        for name, p in (("threshold", p_alice), ("inverted", p_bob)):
            neg = float(p.min())
            norm_err = float(np.max(np.abs(p.sum(axis=1) - 1)))
            ok = ok and neg >= -1e-12 and norm_err <= 1e-12
            msgs.append(f"d={d} {name}: min {neg:.1e}, norm err {norm_err:.1e}")
    return ok, "; ".join(msgs)


def criterion_12(seed: int, n: int, workers=None) -> CriterionResult:
    valid, detail = _response_validity(_seed(seed, 12), 100_000)
    rng = np.random.default_rng(_seed(seed, 12, 1))
    pa, pb = random_projective(2, rng), random_projective(2, rng)
    x, y = _unit(rng), _unit(rng)
    n_small = min(n, 200_000)
    t1 = lhv.simulate_werner(2, pa, pb, n_small, _seed(seed, 12, 2), workers=1)
    t4 = lhv.simulate_werner(2, pa, pb, n_small, _seed(seed, 12, 2), workers=4)
    h1 = lhv.simulate_hirsch_projective(0.3, x, y, n_small, _seed(seed, 12, 3), workers=1)
    h4 = lhv.simulate_hirsch_projective(0.3, x, y, n_small, _seed(seed, 12, 3), workers=4)
    deterministic = (
        np.array_equal(t1.means, t4.means)
        and np.array_equal(t1.stderrs, t4.stderrs)
        and np.array_equal(h1.table.means, h4.table.means)
        and h1.e_ab == h4.e_ab
    )
    ok = valid and deterministic
    return CriterionResult(
        12,
        "response functions are normalized distributions; runs are worker-count invariant",
        ok,
        f"determinism {'ok' if deterministic else 'BROKEN'}; {detail}",
    )


def criterion_13(seed: int, n: int, workers=None) -> CriterionResult:
    valid, detail = _response_validity(_seed(seed, 13), 100_000)
    rng = np.random.default_rng(_seed(seed, 13, 1))
    pa, pb = random_projective(2, rng), random_projective(2, rng)
    ma = measure.Povm(list(pa.projectors))
    mb = measure.Povm(list(pb.projectors))
    table = lhv.simulate_barrett(2, ma, mb, 10 * n, _seed(seed, 13, 2), workers)
    oracle = born_table(states.barrett_state(2), ma.elements, mb.elements)
    max_sigma = table.max_sigma(oracle)
    findings = [f"threshold-model joint table at d=2, n={10 * n}: max deviation {max_sigma:.2f} sigma"]
    if max_sigma > SIGMA:
        findings.append(
            "DEVIATION above 5 sigma: the transcribed threshold response does not "
            "reproduce the antisymmetric-mixture target at this precision; per-cell "
            "ratios are in the attached table."
        )
    else:
        findings.append("no deviation beyond 5 sigma; the transcribed responses match the target state")
    return CriterionResult(
        13,
        "exploratory: threshold-response model vs its target (reported, gated on validity only)",
        valid,
        f"validity {'ok' if valid else 'BROKEN'}; joint-table max deviation {max_sigma:.2f} sigma",
        findings=findings,
        artifacts={"barrett_d2_table.csv": table.to_csv(oracle)},
    )


CRITERIA = [
    criterion_01,
    criterion_02,
    criterion_03,
    criterion_04,
    criterion_05,
    criterion_06,
    criterion_07,
    criterion_08,
    criterion_09,
    criterion_10,
    criterion_11,
    criterion_12,
    criterion_13,
]

_MC_CRITERIA = {3, 4, 5, 6, 7, 8, 12, 13}


def run_all(seed: int = 0, n: int = FULL_POWER_N, workers=None) -> list[CriterionResult]:
    results = []
    for i, crit in enumerate(CRITERIA, start=1):
        if i in _MC_CRITERIA:
            results.append(crit(seed, n, workers))
        else:
            results.append(crit(seed, n))
    return results


def write_report(results: list[CriterionResult], out_dir: str | Path, seed: int, n: int) -> Path:
    """Write report.json plus per-criterion artifacts; returns the JSON path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "seed": seed,
        "n": n,
        "all_passed": all(r.passed for r in results),
        "criteria": [
            {"id": r.cid, "name": r.name, "status": r.status, "detail": r.detail, "findings": r.findings}
            for r in results
        ],
    }
    path = out / "report.json"
    path.write_text(json.dumps(payload, indent=2) + "\n")
    for r in results:
        for fname, text in r.artifacts.items():
            (out / fname).write_text(text)
    return path

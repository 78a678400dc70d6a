"""Command-line front end: nonlocal-lab <witness|chsh|simulate|filter-scan|reproduce>."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance, bell, filters, lhv, measure, states
from .measure import born_table, obs_from_bloch, random_povm, random_projective
from .qmat import partial_transpose

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
SIGMA = 5.0

_WITNESS_NEG_TOL = 1e-12
_PPT_NEG_TOL = 1e-9


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _round12(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_round12(obj), indent=2)


def _parse_bloch(text: str) -> np.ndarray:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated components, got {text!r}")
    v = np.array(parts)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("direction must be nonzero")
    return v / norm


def _parse_count(text: str) -> int:
    n = int(float(text))
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {text!r}")
    return n


_STATE_NAMES = ("singlet", "werner", "werner-local", "werner2x2", "barrett", "rho-g", "rho-g-prime", "rho-e")


def _build_state(args) -> tuple[states.DensityMatrix, str]:
    if args.state_json:
        rho = states.DensityMatrix.from_json(Path(args.state_json).read_text())
        return rho, f"json:{args.state_json}"
    name = args.state
    if name is None:
        raise ValueError("provide a state name or --state-json")
    if name == "singlet":
        return states.singlet(), "singlet"
    if name == "werner":
        if args.phi is None:
            raise ValueError("werner requires --phi")
        return states.werner_phi(args.d, args.phi), f"werner(d={args.d}, phi={args.phi})"
    if name == "werner-local":
        return states.werner_local(args.d), f"werner-local(d={args.d})"
    if name == "werner2x2":
        if args.alpha is None:
            raise ValueError("werner2x2 requires --alpha")
        return states.werner2x2(args.alpha), f"werner2x2(alpha={args.alpha})"
    if name == "barrett":
        return states.barrett_state(args.d), f"barrett(d={args.d})"
    if name == "rho-g":
        if args.q is None:
            raise ValueError("rho-g requires --q")
        return states.rho_g(args.q), f"rho-g(q={args.q})"
    if name == "rho-g-prime":
        if args.q is None:
            raise ValueError("rho-g-prime requires --q")
        return states.rho_g_prime(args.q), f"rho-g-prime(q={args.q})"
    if name == "rho-e":
        if args.q is None:
            raise ValueError("rho-e requires --q")
        return states.rho_e(args.q), f"rho-e(q={args.q})"
    raise ValueError(f"unknown state {name!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def cmd_witness(args) -> int:
    rho, label = _build_state(args)
    w = states.flip_witness(rho) if rho.d_a == rho.d_b else None
    if w is None:
        verdict = "not applicable (unequal local dimensions)"
    elif w < -_WITNESS_NEG_TOL:
        verdict = "entangled"
    elif args.state in ("werner", "werner-local") and not args.state_json:
        verdict = "separable"
    else:
        verdict = "inconclusive (witness non-negative)"
    ppt_min = float(np.linalg.eigvalsh(partial_transpose(rho.mat, rho.d_a, rho.d_b, "B")).min())
    ppt_verdict = "entangled" if ppt_min < -_PPT_NEG_TOL else "no entanglement detected"
    payload = {
        "state": label,
        "flip_witness": w,
        "witness_verdict": verdict,
        "ppt_min_eigenvalue": ppt_min,
        "ppt_verdict": ppt_verdict,
    }
    if args.format == "json":
        _emit(_dump_json(payload), args.out)
    else:
        lines = [f"state: {label}"]
        if w is not None:
            lines.append(f"flip_witness: {_fmt(w)}")
        lines += [
            f"witness_verdict: {verdict}",
            f"ppt_min_eigenvalue: {_fmt(ppt_min)}",
            f"ppt_verdict: {ppt_verdict}",
        ]
        _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_chsh(args) -> int:
    rho, _ = _build_state(args)
    if (rho.d_a, rho.d_b) != (2, 2):
        raise ValueError("chsh requires a two-qubit state")
    if args.optimal:
        result = bell.horodecki_m(rho)
    else:
        missing = [f for f in ("x", "x2", "y", "y2") if getattr(args, f) is None]
        if missing:
            raise ValueError(f"provide --optimal or all four settings (missing {', '.join(missing)})")
        settings = bell.ChshSettings(args.x, args.x2, args.y, args.y2)
        base = bell.horodecki_m(rho)
        result = bell.ChshResult(
            value=bell.chsh_value(rho, settings),
            m_rho=base.m_rho,
            settings=settings,
            eigen_pair=base.eigen_pair,
        )
    _emit(_dump_json(json.loads(result.to_json())), args.out)
    return EXIT_OK


def _table_report(table, oracle, fmt: str, out: str | None, extra: dict | None = None) -> int:
    max_sigma = table.max_sigma(oracle)
    passed = max_sigma <= SIGMA
    if fmt == "json":
        payload = json.loads(table.to_json())
        payload["oracle"] = [[float(v) for v in row] for row in np.asarray(oracle)]
        payload["max_sigma"] = max_sigma
        payload["within_5_sigma"] = passed
        if extra:
            payload.update(extra)
        _emit(_dump_json(payload), out)
    else:
        text = table.to_csv(np.asarray(oracle))
        text += f"# max_sigma = {_fmt(max_sigma)} -> {'ok' if passed else 'FAIL'}\n"
        if extra:
            for k, v in extra.items():
                text += f"# {k} = {v}\n"
        _emit(text.rstrip("\n"), out)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_simulate(args) -> int:
    n, seed = args.n, args.seed
    rng = np.random.default_rng(seed)
    if args.model == "werner":
        pa, pb = random_projective(args.d, rng), random_projective(args.d, rng)
        table = lhv.simulate_werner(args.d, pa, pb, n, seed)
        oracle = born_table(states.werner_local(args.d), pa.projectors, pb.projectors)
        return _table_report(table, oracle, args.format, args.out)
    if args.model == "gd":
        res = lhv.simulate_gd_w2x2(args.x, args.y, n, seed)
        oracle = born_table(
            states.werner2x2(0.5), _spin_projs(args.x), _spin_projs(args.y)
        )
        extra = {
            "E_AB": res.e_ab.mean,
            "E_AB_target": -float(args.x @ args.y) / 2,
            "rewrite_agreement": res.rewrite_agreement,
        }
        code = _table_report(res.table, oracle, args.format, args.out, extra)
        if res.rewrite_mismatches:
            return EXIT_CHECK_FAILED
        return code
    if args.model == "epr1bit":
        res = lhv.simulate_epr_one_bit(args.x, args.y, n, seed)
        target = -float(args.x @ args.y)
        dev = abs(res["E_AB"].sigma_ratio(target))
        payload = {
            "E_AB": {"mean": res["E_AB"].mean, "stderr": res["E_AB"].stderr},
            "E_A": {"mean": res["E_A"].mean, "stderr": res["E_A"].stderr},
            "E_B": {"mean": res["E_B"].mean, "stderr": res["E_B"].stderr},
            "E_AB_target": target,
            "sigma": dev,
            "n": n,
            "seed": seed,
        }
        if args.format == "json":
            _emit(_dump_json(payload), args.out)
        else:
            _emit(
                "\n".join(
                    [
                        f"E_AB: {_fmt(res['E_AB'].mean)} +- {_fmt(res['E_AB'].stderr)} (target {_fmt(target)})",
                        f"E_A: {_fmt(res['E_A'].mean)} +- {_fmt(res['E_A'].stderr)}",
                        f"E_B: {_fmt(res['E_B'].mean)} +- {_fmt(res['E_B'].stderr)}",
                        f"sigma: {_fmt(dev)}",
                    ]
                ),
                args.out,
            )
        return EXIT_OK if dev <= SIGMA else EXIT_CHECK_FAILED
    if args.model == "hirsch":
        res = lhv.simulate_hirsch_projective(args.q, args.x, args.y, n, seed)
        oracle = born_table(states.rho_g(args.q), _spin_projs(args.x), _spin_projs(args.y))
        extra = {"E_A": res.e_a.mean, "E_A_target": (1 - args.q) * float(args.x[2])}
        if res.accept_rate is not None:
            extra["accept_rate"] = res.accept_rate.mean
        return _table_report(res.table, oracle, args.format, args.out, extra)
    if args.model == "povm-lift":
        base = lhv.HirschModel(args.q)
        sigma = np.diag([1.0, 0.0]).astype(complex)
        ma, mb = random_povm(3, 2, rng), random_povm(3, 2, rng)
        res = lhv.simulate_povm_lift(base, sigma, sigma, ma, mb, n, seed)
        oracle = born_table(res.target, ma.elements, mb.elements)
        extra = {"step4_rate_a": res.step4_a.mean, "step4_rate_b": res.step4_b.mean}
        return _table_report(res.table, oracle, args.format, args.out, extra)
    if args.model == "barrett":
        pa, pb = random_projective(args.d, rng), random_projective(args.d, rng)
        ma, mb = measure.Povm(list(pa.projectors)), measure.Povm(list(pb.projectors))
        table = lhv.simulate_barrett(args.d, ma, mb, n, seed)
        oracle = born_table(states.barrett_state(args.d), ma.elements, mb.elements)
        return _table_report(table, oracle, args.format, args.out)
    raise ValueError(f"unknown model {args.model!r}")


def _spin_projs(v: np.ndarray) -> list[np.ndarray]:
    return obs_from_bloch(v).measurement().projectors


def cmd_filter_scan(args) -> int:
    if args.family == "popescu":
        res = filters.popescu_protocol(args.d)
        text = "d,success_prob,chsh_fixed_settings,chsh_horodecki,M\n"
        text += (
            f"{args.d},{_fmt(res.success_prob)},{_fmt(res.chsh)},"
            f"{_fmt(res.chsh_horodecki)},{_fmt(res.m_rho)}\n"
        )
        _emit(text.rstrip("\n"), args.out)
        return EXIT_OK
    if args.q is None:
        raise ValueError(f"family {args.family!r} requires --q")
    rows = filters.hidden_nonlocality_scan(args.family, args.q, args.eps_grid)
    _emit(filters.scan_to_csv(rows).rstrip("\n"), args.out)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.n < acceptance.FULL_POWER_N:
        print(
            f"warning: n={args.n} is below the calibrated {acceptance.FULL_POWER_N}; "
            "5-sigma checks are underpowered",
            file=sys.stderr,
        )
    results = acceptance.run_all(seed=args.seed, n=args.n)
    path = acceptance.write_report(results, args.out, args.seed, args.n)
    for r in results:
        print(f"{r.status}  C{r.cid:02d}  {r.name}")
        print(f"      {r.detail}")
        for f in r.findings:
            print(f"      note: {f}")
    failed = [r.cid for r in results if not r.passed]
    print(f"report written to {path}")
    if failed:
        print(f"FAILED criteria: {failed}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _add_state_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("state", nargs="?", choices=_STATE_NAMES, help="named state family")
    p.add_argument("--d", type=int, default=2, help="local dimension (default 2)")
    p.add_argument("--phi", type=float, default=None, help="flip-trace parameter in [-1, 1]")
    p.add_argument("--alpha", type=float, default=None, help="singlet weight in [0, 1]")
    p.add_argument("--q", type=float, default=None, help="singlet weight in [0, 1]")
    p.add_argument("--state-json", default=None, help="load the state from a JSON file instead")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("witness", help="flip witness + partial-transpose check of a state")
    _add_state_args(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("chsh", help="CHSH value and Horodecki diagnosis of a two-qubit state")
    _add_state_args(p)
    p.add_argument("--optimal", action="store_true", help="use the constructed optimal settings")
    for flag in ("--x", "--x2", "--y", "--y2"):
        p.add_argument(flag, type=_parse_bloch, default=None, help="Bloch direction as 'vx,vy,vz'")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("simulate", help="run a hidden-variable protocol against its Born oracle")
    p.add_argument("model", choices=("werner", "gd", "epr1bit", "hirsch", "povm-lift", "barrett"))
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--q", type=float, default=0.4)
    p.add_argument("--x", type=_parse_bloch, default=np.array([0.0, 0.0, 1.0]))
    p.add_argument("--y", type=_parse_bloch, default=np.array([0.0, 0.0, 1.0]))
    p.add_argument("--n", type=_parse_count, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("filter-scan", help="filter a state family over an epsilon grid")
    p.add_argument("family", choices=("rho-g", "rho-g-prime", "popescu"))
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--d", type=int, default=5)
    p.add_argument(
        "--eps-grid",
        type=lambda s: [float(x) for x in s.split(",")],
        default=list(filters.DEFAULT_EPS_GRID),
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_filter_scan)

    p = sub.add_parser("reproduce", help="run the full verification suite and write a report")
    p.add_argument("--out", default="report")
    p.add_argument("--n", type=_parse_count, default=acceptance.FULL_POWER_N)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""CHSH evaluation, correlation matrices, and the Horodecki criterion."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .measure import expectation_joint, obs_from_bloch
from .qmat import PAULIS, tensor
from .states import DensityMatrix

_RANK_TOL = 1e-12


@dataclass
class ChshSettings:
    """Two Bloch directions per party: Alice measures x or x2, Bob y or y2."""

    x: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    y2: np.ndarray

    def __post_init__(self) -> None:
        for name in ("x", "x2", "y", "y2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError(f"setting {name} must be a unit vector")
            setattr(self, name, v)

    def to_dict(self) -> dict:
        return {
            "x": [float(c) for c in self.x],
            "x'": [float(c) for c in self.x2],
            "y": [float(c) for c in self.y],
            "y'": [float(c) for c in self.y2],
        }


@dataclass
class ChshResult:
    """CHSH diagnosis of a two-qubit state."""

    value: float
    m_rho: float
    settings: ChshSettings
    eigen_pair: tuple[float, float]

    def to_json(self) -> str:
        return json.dumps(
            {
                "value": self.value,
                "M": self.m_rho,
                "settings": self.settings.to_dict(),
                "eigenvalues": [self.eigen_pair[0], self.eigen_pair[1]],
            }
        )


def _require_two_qubits(rho: DensityMatrix) -> None:
    if (rho.d_a, rho.d_b) != (2, 2):
        raise ValueError(f"two-qubit state required, got {rho.d_a}x{rho.d_b}")


def correlation_matrix(rho: DensityMatrix) -> np.ndarray:
    """3x3 matrix t[n, m] = tr(rho sigma_n (x) sigma_m)."""
    _require_two_qubits(rho)
    t = np.empty((3, 3))
    for n, sn in enumerate(PAULIS):
        for m, sm in enumerate(PAULIS):
            val = np.trace(rho.mat @ tensor(sn, sm))
            t[n, m] = val.real
    if np.max(np.abs(t)) > 1 + 1e-9:
        raise ValueError("correlation entries outside [-1, 1]")
    return t


def chsh_value(rho: DensityMatrix, s: ChshSettings) -> float:
    """E(x,y) + E(x',y) + E(x',y') - E(x,y') for spin observables."""
    _require_two_qubits(rho)
    oa = {k: obs_from_bloch(v) for k, v in (("x", s.x), ("x2", s.x2))}
    ob = {k: obs_from_bloch(v) for k, v in (("y", s.y), ("y2", s.y2))}
    return (
        expectation_joint(rho, oa["x"], ob["y"])
        + expectation_joint(rho, oa["x2"], ob["y"])
        + expectation_joint(rho, oa["x2"], ob["y2"])
        - expectation_joint(rho, oa["x"], ob["y2"])
    )


def chsh_value_from_t(t: np.ndarray, s: ChshSettings) -> float:
    """Same combination evaluated through the correlation matrix (E = a.T b)."""
    return float(s.x @ t @ s.y + s.x2 @ t @ s.y + s.x2 @ t @ s.y2 - s.x @ t @ s.y2)


def chsh_max_random(rho: DensityMatrix, n_settings: int, seed: int) -> float:
    """Best CHSH value over n_settings random setting quadruples."""
    t = correlation_matrix(rho)
    rng = np.random.default_rng(seed)
    vs = rng.standard_normal((4, n_settings, 3))
    vs /= np.linalg.norm(vs, axis=2, keepdims=True)
    x, x2, y, y2 = vs
    vals = (
        np.einsum("ni,ij,nj->n", x, t, y)
        + np.einsum("ni,ij,nj->n", x2, t, y)
        + np.einsum("ni,ij,nj->n", x2, t, y2)
        - np.einsum("ni,ij,nj->n", x, t, y2)
    )
    return float(vals.max())


def example_chsh_settings() -> ChshSettings:
    """Maximal-violation settings for the singlet: Alice measures spin along
    z and x, Bob along -(z+x)/sqrt(2) and (z-x)/sqrt(2)."""
    s = 1 / np.sqrt(2)
    return ChshSettings(
        x=np.array([0.0, 0.0, 1.0]),
        x2=np.array([1.0, 0.0, 0.0]),
        y=np.array([-s, 0.0, -s]),
        y2=np.array([-s, 0.0, s]),
    )


def _canonical_settings() -> ChshSettings:
    e = np.eye(3)
    return ChshSettings(e[0], e[1], e[0], e[1])


def optimal_settings(rho: DensityMatrix) -> ChshSettings:
    """Settings achieving the Horodecki maximum 2 sqrt(M(rho)).

    Built from the top two eigenvectors z, z' of T^T T: Alice's directions
    along T z and T z', Bob's y = cos(theta) z + sin(theta) z' and
    y' = cos(theta) z - sin(theta) z' with tan(theta) = |T z'| / |T z|.
    The residual orientation freedom is resolved by trying the four sign
    choices for (z, z') and keeping the best.
    """
    t = correlation_matrix(rho)
    u = t.T @ t
    vals, vecs = np.linalg.eigh(u)
    z, zp = vecs[:, 2], vecs[:, 1]
    if np.linalg.norm(t @ z) < _RANK_TOL and np.linalg.norm(t @ zp) < _RANK_TOL:
        return _canonical_settings()
    best: tuple[float, ChshSettings] | None = None
    fallback = np.array([1.0, 0.0, 0.0])
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            za, zb = s1 * z, s2 * zp
            ta, tb = t @ za, t @ zb
            na, nb = np.linalg.norm(ta), np.linalg.norm(tb)
            xa = ta / na if na > _RANK_TOL else fallback
            xb = tb / nb if nb > _RANK_TOL else fallback
            theta = np.arctan2(nb, na)
            y = np.cos(theta) * za + np.sin(theta) * zb
            y2 = np.cos(theta) * za - np.sin(theta) * zb
            cand = ChshSettings(xb, xa, y, y2)
            val = chsh_value_from_t(t, cand)
            if best is None or val > best[0]:
                best = (val, cand)
    assert best is not None
    return best[1]


def horodecki_m(rho: DensityMatrix) -> ChshResult:
    """M(rho) = sum of the two largest eigenvalues of T^T T, together with
    settings that attain the maximal CHSH value 2 sqrt(M(rho))."""
    t = correlation_matrix(rho)
    vals = np.linalg.eigvalsh(t.T @ t)
    u, u_tilde = float(vals[2]), float(vals[1])
    settings = optimal_settings(rho)
    value = chsh_value_from_t(t, settings)
    return ChshResult(value=value, m_rho=u + u_tilde, settings=settings, eigen_pair=(u, u_tilde))

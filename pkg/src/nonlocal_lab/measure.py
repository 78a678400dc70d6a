"""Observables, projective measurements, POVMs and Born-rule probabilities."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .qmat import PAULIS, I2, HERM_TOL, PSD_TOL, hermitian_eig, hermiticity_error, projector, tensor
from .states import DensityMatrix

COMPLETENESS_TOL = 1e-10
ZERO_WEIGHT_TOL = 1e-12
PROB_TOL = 1e-10


def bloch_vector(x: float, y: float, z: float) -> np.ndarray:
    v = np.array([x, y, z], dtype=float)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > 1e-12:
        raise ValueError(f"Bloch vector must be unit length, got norm {n}")
    return v


def _encode_matrix(m: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).reshape(-1)]


def _decode_matrix(entries) -> np.ndarray:
    flat = np.array([complex(re, im) for re, im in entries])
    d = int(round(np.sqrt(flat.size)))
    if d * d != flat.size:
        raise ValueError(f"expected a square matrix, got {flat.size} entries")
    return flat.reshape(d, d)


@dataclass
class ProjectiveMeasurement:
    """Orthogonal projectors summing to the identity, with real outcome labels."""

    projectors: list[np.ndarray]
    labels: list[float]

    def __post_init__(self) -> None:
        self.projectors = [np.asarray(p, dtype=complex) for p in self.projectors]
        if len(self.projectors) != len(self.labels):
            raise ValueError("one label per projector required")
        d = self.projectors[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for i, p in enumerate(self.projectors):
            for j, q in enumerate(self.projectors):
                expect = p if i == j else 0.0
                if np.max(np.abs(p @ q - expect)) > COMPLETENESS_TOL:
                    raise ValueError(f"projectors {i},{j} are not orthogonal idempotents")
            total += p
        if np.max(np.abs(total - np.eye(d))) > COMPLETENESS_TOL:
            raise ValueError("projectors do not sum to the identity")

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @classmethod
    def from_basis(cls, vectors: np.ndarray, labels: list[float] | None = None) -> "ProjectiveMeasurement":
        """Rank-1 measurement from the columns of an orthonormal matrix."""
        vectors = np.asarray(vectors, dtype=complex)
        k = vectors.shape[1]
        if labels is None:
            labels = list(range(k))
        return cls([projector(vectors[:, i]) for i in range(k)], list(labels))

    def to_json(self) -> str:
        return json.dumps({"labels": list(self.labels), "operators": [_encode_matrix(p) for p in self.projectors]})

    @classmethod
    def from_json(cls, text: str) -> "ProjectiveMeasurement":
        obj = json.loads(text)
        return cls([_decode_matrix(e) for e in obj["operators"]], obj["labels"])


@dataclass
class Povm:
    """Positive elements summing to the identity, with opaque outcome labels."""

    elements: list[np.ndarray]
    labels: list = field(default_factory=list)

    def __post_init__(self) -> None:
        self.elements = [np.asarray(e, dtype=complex) for e in self.elements]
        if not self.labels:
            self.labels = list(range(len(self.elements)))
        if len(self.elements) != len(self.labels):
            raise ValueError("one label per element required")
        d = self.elements[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for i, e in enumerate(self.elements):
            if hermiticity_error(e) > HERM_TOL:
                raise ValueError(f"POVM element {i} is not Hermitian")
            if np.linalg.eigvalsh(e).min() < -PSD_TOL:
                raise ValueError(f"POVM element {i} is not positive semi-definite")
            total += e
        if np.max(np.abs(total - np.eye(d))) > COMPLETENESS_TOL:
            raise ValueError("POVM elements do not sum to the identity")

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def to_json(self) -> str:
        return json.dumps({"labels": list(self.labels), "operators": [_encode_matrix(e) for e in self.elements]})

    @classmethod
    def from_json(cls, text: str) -> "Povm":
        obj = json.loads(text)
        return cls([_decode_matrix(e) for e in obj["operators"]], obj["labels"])


@dataclass
class Observable:
    """Hermitian operator; outcomes are its eigenvalues."""

    matrix: np.ndarray
    _measurement: ProjectiveMeasurement | None = None

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=complex)
        err = hermiticity_error(self.matrix)
        if err > HERM_TOL:
            raise ValueError(f"observable is not Hermitian (max deviation {err:.3e})")

    def measurement(self, degeneracy_tol: float = 1e-8) -> ProjectiveMeasurement:
        """Spectral measurement, merging eigenvalues closer than degeneracy_tol."""
        if self._measurement is not None:
            return self._measurement
        vals, vecs = hermitian_eig(self.matrix)
        projectors: list[np.ndarray] = []
        labels: list[float] = []
        i = 0
        while i < len(vals):
            j = i
            while j + 1 < len(vals) and abs(vals[j + 1] - vals[i]) <= degeneracy_tol:
                j += 1
            block = vecs[:, i : j + 1]
            projectors.append(block @ block.conj().T)
            labels.append(float(np.mean(vals[i : j + 1])))
            i = j + 1
        self._measurement = ProjectiveMeasurement(projectors, labels)
        return self._measurement


def obs_from_bloch(v) -> Observable:
    """Spin observable v . sigma with outcomes +-1 and projectors (I +- v.sigma)/2."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > 1e-12:
        raise ValueError(f"Bloch vector must be unit length, got norm {n}")
    m = sum(float(vi) * s for vi, s in zip(v, PAULIS))
    meas = ProjectiveMeasurement([(I2 + m) / 2, (I2 - m) / 2], [1.0, -1.0])
    return Observable(m, meas)


def born_joint(rho: DensityMatrix, ma: np.ndarray, nb: np.ndarray) -> float:
    """tr(rho  ma (x) nb), clamped to [0, 1].

    ma and nb must be positive operators on the respective local spaces;
    values outside [-1e-10, 1 + 1e-10] are rejected as invalid input.
    """
    ma = np.asarray(ma, dtype=complex)
    nb = np.asarray(nb, dtype=complex)
    if ma.shape != (rho.d_a, rho.d_a) or nb.shape != (rho.d_b, rho.d_b):
        raise ValueError(
            f"operator dimensions {ma.shape}, {nb.shape} do not match state ({rho.d_a}, {rho.d_b})"
        )
    val = np.trace(rho.mat @ tensor(ma, nb))
    if abs(val.imag) > PROB_TOL:
        raise ValueError(f"joint probability came out non-real ({val})")
    p = val.real
    if p < -PROB_TOL or p > 1 + PROB_TOL:
        raise ValueError(f"joint probability {p} outside [0, 1]")
    return float(min(max(p, 0.0), 1.0))


def born_table(rho: DensityMatrix, elements_a: list[np.ndarray], elements_b: list[np.ndarray]) -> np.ndarray:
    """Matrix of joint Born probabilities for two local outcome sets."""
    out = np.empty((len(elements_a), len(elements_b)))
    for i, ma in enumerate(elements_a):
        for j, nb in enumerate(elements_b):
            out[i, j] = born_joint(rho, ma, nb)
    return out


def expectation_joint(rho: DensityMatrix, obs_a: Observable, obs_b: Observable) -> float:
    """Joint expectation as the label-weighted sum of Born probabilities."""
    ma = obs_a.measurement()
    mb = obs_b.measurement()
    total = 0.0
    for a, pa in zip(ma.labels, ma.projectors):
        for b, pb in zip(mb.labels, mb.projectors):
            total += a * b * born_joint(rho, pa, pb)
    return total


def post_measurement_state(rho: DensityMatrix, m: np.ndarray) -> tuple[DensityMatrix | None, float]:
    """State update rho -> M rho M^dag / p with p = tr(M rho M^dag).

    Returns (None, 0.0) when the outcome probability vanishes.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (rho.dim, rho.dim):
        raise ValueError(f"measurement operator shape {m.shape} does not match state dimension {rho.dim}")
    unnorm = m @ rho.mat @ m.conj().T
    p = np.trace(unnorm).real
    if p < ZERO_WEIGHT_TOL:
        return None, 0.0
    return DensityMatrix(unnorm / p, rho.d_a, rho.d_b), float(p)


def povm_refine(povm: Povm) -> tuple[Povm, list[int]]:
    """Split every POVM element into weighted rank-1 pieces.

    Each refined element is alpha |v><v| with alpha in (0, 1]; eigenvalues
    below 1e-12 are dropped. The returned back-map sends each refined
    outcome to the index of its originating coarse outcome, so coarse
    probabilities are recovered by summation.
    """
    elements: list[np.ndarray] = []
    back_map: list[int] = []
    labels: list = []
    for i, e in enumerate(povm.elements):
        vals, vecs = hermitian_eig(e)
        for k, w in enumerate(vals):
            if w > ZERO_WEIGHT_TOL:
                elements.append(w * projector(vecs[:, k]))
                back_map.append(i)
                labels.append(f"{povm.labels[i]}:{k}")
    return Povm(elements, labels), back_map


def coarse_grain(table: np.ndarray, back_map_a: list[int], back_map_b: list[int], ka: int, kb: int) -> np.ndarray:
    """Sum a refined-outcome probability table back onto coarse outcomes."""
    out = np.zeros((ka, kb))
    for i, a in enumerate(back_map_a):
        for j, b in enumerate(back_map_b):
            out[a, b] += table[i, j]
    return out


def random_projective(d: int, rng: np.random.Generator) -> ProjectiveMeasurement:
    """Rank-1 measurement in a Haar-random basis, labels 0..d-1."""
    from .qmat import haar_unitary

    return ProjectiveMeasurement.from_basis(haar_unitary(d, rng))


def random_povm(n_outcomes: int, d: int, rng: np.random.Generator) -> Povm:
    """Random POVM from normalized Wishart blocks."""
    blocks = []
    for _ in range(n_outcomes):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        blocks.append(g @ g.conj().T)
    total = sum(blocks)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = vecs @ np.diag(vals**-0.5) @ vecs.conj().T
    return Povm([inv_sqrt @ b @ inv_sqrt for b in blocks])

"""Named bipartite states, the flip witness, twirling, and state lifting."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import qmat
from .qmat import basis_ket, flip, is_density, ket, partial_trace, projector, tensor


@dataclass
class DensityMatrix:
    """Positive unit-trace matrix with bipartite dimension metadata."""

    mat: np.ndarray
    d_a: int
    d_b: int

    def __post_init__(self) -> None:
        self.mat = np.asarray(self.mat, dtype=complex)
        check = is_density(self.mat)
        if not check:
            raise ValueError(
                "not a density matrix: hermiticity error "
                f"{check.hermiticity_error:.3e}, min eigenvalue {check.min_eigenvalue:.3e}, "
                f"trace error {check.trace_error:.3e}"
            )
        if self.mat.shape[0] != self.d_a * self.d_b:
            raise ValueError(
                f"dimension mismatch: matrix is {self.mat.shape[0]}-dimensional, dA*dB = {self.d_a * self.d_b}"
            )

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def reduced(self, side: str = "A") -> np.ndarray:
        """Reduced operator of one party (side='A' keeps Alice)."""
        traced = "B" if side == "A" else "A"
        return partial_trace(self.mat, self.d_a, self.d_b, side=traced)

    def to_json(self) -> str:
        entries = [[float(z.real), float(z.imag)] for z in self.mat.reshape(-1)]
        return json.dumps({"dA": self.d_a, "dB": self.d_b, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "DensityMatrix":
        obj = json.loads(text)
        d_a, d_b = int(obj["dA"]), int(obj["dB"])
        flat = np.array([complex(re, im) for re, im in obj["entries"]])
        dim = d_a * d_b
        if flat.size != dim * dim:
            raise ValueError(f"expected {dim * dim} entries, got {flat.size}")
        return cls(flat.reshape(dim, dim), d_a, d_b)


def singlet() -> DensityMatrix:
    """|Psi-><Psi-| with |Psi-> = (|01> - |10>)/sqrt(2)."""
    psi = (ket(0, 1, 0, 0) - ket(0, 0, 1, 0)) / np.sqrt(2)
    return DensityMatrix(projector(psi), 2, 2)


def singlet_ket(d_a: int = 2, d_b: int = 2) -> np.ndarray:
    """(|01> - |10>)/sqrt(2), supported on the first two local levels."""
    psi = (tensor_ket(basis_ket(d_a, 0), basis_ket(d_b, 1)) - tensor_ket(basis_ket(d_a, 1), basis_ket(d_b, 0)))
    return psi / np.sqrt(2)


def tensor_ket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def werner_phi(d: int, phi: float) -> DensityMatrix:
    """Werner state on C^d (x) C^d with tr(V W) = phi.

    W = [(d - phi) I + (d phi - 1) V] / (d^3 - d), phi in [-1, 1].
    """
    if d < 2:
        raise ValueError(f"werner_phi requires d >= 2, got {d}")
    if not -1.0 <= phi <= 1.0:
        raise ValueError(f"phi must lie in [-1, 1], got {phi}")
    v = flip(d)
    w = ((d - phi) * np.eye(d * d) + (d * phi - 1) * v) / (d**3 - d)
    return DensityMatrix(w, d, d)


def werner_local_phi(d: int) -> float:
    """Flip parameter of the Werner state simulated by the minimizer model."""
    return -1.0 + (1.0 + d) / d**2


def werner_local(d: int) -> DensityMatrix:
    """The entangled Werner state with phi = -1 + (1+d)/d^2."""
    return werner_phi(d, werner_local_phi(d))


def werner2x2(alpha: float) -> DensityMatrix:
    """alpha |Psi-><Psi-| + (1 - alpha) I/4 on two qubits."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    w = alpha * singlet().mat + (1 - alpha) * np.eye(4) / 4
    return DensityMatrix(w, 2, 2)


def antisymmetric_projector(d: int) -> np.ndarray:
    """Projector onto span{(|ij> - |ji>)/sqrt(2), i < j} = (I - V)/2."""
    return (np.eye(d * d) - flip(d)) / 2


def barrett_alpha(d: int) -> float:
    return (d - 1) ** (d - 1) * (3 * d - 1) / ((d + 1) * d**d)


def barrett_state(d: int) -> DensityMatrix:
    """Mixture of the normalized antisymmetric projector and white noise.

    The antisymmetric weight is (d-1)^(d-1) (3d-1) / ((d+1) d^d); the state
    is entangled for every d >= 2 (weight above 1/(1+d)).
    """
    if d < 2:
        raise ValueError(f"barrett_state requires d >= 2, got {d}")
    alpha = barrett_alpha(d)
    anti = antisymmetric_projector(d)
    w = alpha * anti / np.trace(anti).real + (1 - alpha) * np.eye(d * d) / d**2
    return DensityMatrix(w, d, d)


def rho_g(q: float) -> DensityMatrix:
    """q |Psi-><Psi-| + (1-q) |0><0| (x) I/2 on two qubits."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    noise = tensor(projector(basis_ket(2, 0)), np.eye(2) / 2)
    return DensityMatrix(q * singlet().mat + (1 - q) * noise, 2, 2)


def rho_e(q: float) -> DensityMatrix:
    """q |Psi-><Psi-| + (1-q) |2><2| (x) I/2 on C^3 (x) C^2.

    The singlet lives in the span of the first two qutrit levels; |2> is
    the flag level that local filtering removes.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    psi = singlet_ket(3, 2)
    noise = tensor(projector(basis_ket(3, 2)), np.eye(2) / 2)
    return DensityMatrix(q * projector(psi) + (1 - q) * noise, 3, 2)


def _local_state(sigma, d: int) -> np.ndarray:
    m = sigma.mat if isinstance(sigma, DensityMatrix) else np.asarray(sigma, dtype=complex)
    if m.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} single-party state, got shape {m.shape}")
    if not is_density(m):
        raise ValueError("sigma is not a valid state")
    return m


def lift_state(rho0: DensityMatrix, sigma_a, sigma_b) -> DensityMatrix:
    """Noise-dilution map that turns a projective-local base state into a
    POVM-simulable one:

        rho' = [rho0 + (d-1)(rhoA (x) sigmaB + sigmaA (x) rhoB)
                + (d-1)^2 sigmaA (x) sigmaB] / d^2

    with rhoA, rhoB the reduced states of rho0. All local dimensions must
    equal the same d; the sigmas are arbitrary single-party d-level states.
    """
    d = rho0.d_a
    if rho0.d_b != d:
        raise ValueError(f"lift_state needs equal local dimensions, got {rho0.d_a}x{rho0.d_b}")
    sa = _local_state(sigma_a, d)
    sb = _local_state(sigma_b, d)
    red_a = rho0.reduced("A")
    red_b = rho0.reduced("B")
    m = (
        rho0.mat
        + (d - 1) * (tensor(red_a, sb) + tensor(sa, red_b))
        + (d - 1) ** 2 * tensor(sa, sb)
    ) / d**2
    return DensityMatrix(m, d, d)


def rho_g_prime(q: float) -> DensityMatrix:
    """Lift of rho_g(q) with sigma_A = sigma_B = |0><0|."""
    sig = projector(basis_ket(2, 0))
    return lift_state(rho_g(q), sig, sig)


def embed_local(rho: DensityMatrix, d_a: int, d_b: int) -> DensityMatrix:
    """Zero-pad each party into a larger local space (original levels first)."""
    if d_a < rho.d_a or d_b < rho.d_b:
        raise ValueError("embedding dimensions must not shrink")
    out = np.zeros((d_a, d_b, d_a, d_b), dtype=complex)
    out[: rho.d_a, : rho.d_b, : rho.d_a, : rho.d_b] = rho.mat.reshape(rho.d_a, rho.d_b, rho.d_a, rho.d_b)
    return DensityMatrix(out.reshape(d_a * d_b, d_a * d_b), d_a, d_b)


def restrict_block(rho: DensityMatrix, keep_a: tuple[int, ...], keep_b: tuple[int, ...]) -> DensityMatrix:
    """Restrict to the given local levels and renormalize.

    Raises if the kept block carries (almost) no weight.
    """
    idx = [a * rho.d_b + b for a in keep_a for b in keep_b]
    sub = rho.mat[np.ix_(idx, idx)]
    tr = np.trace(sub).real
    if tr < 1e-12:
        raise ValueError("kept block carries no weight")
    return DensityMatrix(sub / tr, len(keep_a), len(keep_b))


def flip_witness(rho: DensityMatrix) -> float:
    """tr(V rho). Negative values certify entanglement; for Werner states
    the sign decides separability exactly."""
    if rho.d_a != rho.d_b:
        raise ValueError(f"flip witness needs equal local dimensions, got {rho.d_a}x{rho.d_b}")
    val = np.trace(flip(rho.d_a) @ rho.mat)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"flip witness came out non-real ({val})")
    return float(val.real)


def twirl(rho: DensityMatrix) -> DensityMatrix:
    """Project onto the span of {I, V}: the Werner state with the same
    trace and the same tr(V .) as the input."""
    return werner_phi(rho.d_a, flip_witness(rho))


# Random-state generators used by the verification suites.

def random_density(d_a: int, d_b: int, rng: np.random.Generator) -> DensityMatrix:
    """Full-rank random state G G^dag / tr(G G^dag) with Ginibre G."""
    dim = d_a * d_b
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, d_a, d_b)


def random_pure_product(d_a: int, d_b: int, rng: np.random.Generator) -> DensityMatrix:
    a = qmat.haar_ket(d_a, rng)
    b = qmat.haar_ket(d_b, rng)
    return DensityMatrix(tensor(projector(a), projector(b)), d_a, d_b)


def random_separable(d_a: int, d_b: int, rng: np.random.Generator, max_terms: int = 8) -> DensityMatrix:
    """Convex mixture of up to max_terms Haar-random pure product states."""
    k = int(rng.integers(1, max_terms + 1))
    weights = rng.random(k)
    weights /= weights.sum()
    m = sum(w * random_pure_product(d_a, d_b, rng).mat for w in weights)
    return DensityMatrix(m, d_a, d_b)

"""Gaussian states of weak thermal light in the quadrature picture.

A spatially incoherent or partially coherent thermal source, observed
through M collected modes, is fully described by its coherence matrix
Gamma with entries Gamma_ij = <a_i^dag a_j> in photons per temporal
mode.  The corresponding zero-mean Gaussian state has quadrature
covariance

    V = I/2 + [[Re Gamma, -Im Gamma], [Im Gamma, Re Gamma]]

with hbar = 1, so the vacuum variance is 1/2.

Every covariance matrix in this package uses the xxpp ordering: all
position quadratures first, then all momentum quadratures.  The
interleaved xpxp ordering, common in displays of small covariance
matrices, is reachable only through the explicit permutation helpers
below, and serialized states record both orderings for auditability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import PhysicalityError, ValidationError

HERMITICITY_TOL = 1e-12
SYMMETRY_TOL = 1e-12
PSD_FLOOR = -1e-10
SYMPLECTIC_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a)
    out.setflags(write=False)
    return out


def symplectic_form(n_modes: int) -> NDArray[np.float64]:
    """Symplectic form Omega in xxpp ordering, [[0, I], [-I, 0]]."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


# ---------------------------------------------------------------------------
# quadrature ordering
# ---------------------------------------------------------------------------

def xxpp_to_xpxp_indices(n_modes: int) -> NDArray[np.intp]:
    """Permutation taking xxpp-ordered entries to xpxp order.

    Entry k of the result is the xxpp index of the quadrature sitting at
    position k of the xpxp layout, so v_xpxp = v_xxpp[perm].
    """
    perm = np.empty(2 * n_modes, dtype=np.intp)
    perm[0::2] = np.arange(n_modes)
    perm[1::2] = np.arange(n_modes) + n_modes
    return perm


def to_xpxp(a: np.ndarray) -> np.ndarray:
    """Reorder a quadrature vector or matrix from xxpp to xpxp."""
    n_modes, perm = _ordering_perm(a)
    if a.ndim == 1:
        return a[perm]
    return a[np.ix_(perm, perm)]


def to_xxpp(a: np.ndarray) -> np.ndarray:
    """Reorder a quadrature vector or matrix from xpxp to xxpp."""
    n_modes, perm = _ordering_perm(a)
    inv = np.argsort(perm)
    if a.ndim == 1:
        return a[inv]
    return a[np.ix_(inv, inv)]


def _ordering_perm(a: np.ndarray) -> tuple[int, NDArray[np.intp]]:
    dim = a.shape[0]
    if dim % 2 or a.ndim not in (1, 2):
        raise ValidationError("quadrature arrays must have even leading dimension")
    if a.ndim == 2 and a.shape[0] != a.shape[1]:
        raise ValidationError("quadrature matrices must be square")
    n_modes = dim // 2
    return n_modes, xxpp_to_xpxp_indices(n_modes)


# ---------------------------------------------------------------------------
# coherence matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoherenceMatrix:
    """Mode-space correlation matrix <a_i^dag a_j>.

    Hermitian and positive semidefinite; the trace is the total mean
    photon number per temporal mode.
    """

    gamma: NDArray[np.complexfloating]

    def __post_init__(self) -> None:
        gamma = np.array(self.gamma, dtype=complex)
        if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1] or gamma.shape[0] == 0:
            raise ValidationError("coherence matrix must be square and non-empty")
        residual = float(np.max(np.abs(gamma - gamma.conj().T)))
        if residual > HERMITICITY_TOL:
            raise ValidationError(
                f"coherence matrix is not Hermitian: residual {residual:.3e} "
                f"exceeds {HERMITICITY_TOL:.0e}"
            )
        gamma = (gamma + gamma.conj().T) / 2
        min_eig = float(np.linalg.eigvalsh(gamma)[0])
        if min_eig < PSD_FLOOR:
            raise ValidationError(
                f"coherence matrix is not positive semidefinite: min eigenvalue "
                f"{min_eig:.3e} is below {PSD_FLOOR:.0e}"
            )
        object.__setattr__(self, "gamma", _readonly(gamma))

    @property
    def n_modes(self) -> int:
        return self.gamma.shape[0]

    @property
    def mean_photon_number(self) -> float:
        return float(np.trace(self.gamma).real)

    def block(self) -> NDArray[np.float64]:
        """Real 2M x 2M coherence block [[Re, -Im], [Im, Re]] (xxpp)."""
        return coherence_block(self.gamma)

    def to_json(self) -> str:
        payload = {
            "n_modes": self.n_modes,
            "gamma_re": self.gamma.real.tolist(),
            "gamma_im": self.gamma.imag.tolist(),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CoherenceMatrix":
        payload = json.loads(text)
        gamma = np.asarray(payload["gamma_re"], dtype=float) + 1j * np.asarray(
            payload["gamma_im"], dtype=float
        )
        return cls(gamma)


def coherence_block(gamma: np.ndarray) -> NDArray[np.float64]:
    """Embed a Hermitian mode matrix as its real xxpp quadrature block."""
    gamma = np.asarray(gamma)
    re, im = gamma.real, gamma.imag
    return np.block([[re, -im], [im, re]])


# ---------------------------------------------------------------------------
# Gaussian states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance of a Gaussian state, xxpp ordering.

    The constructor enforces shape and symmetry only; physicality
    (V + i Omega / 2 >= 0) is guaranteed by the state constructors in
    this module and can be diagnosed for arbitrary matrices with
    validate_state.
    """

    mu: NDArray[np.float64]
    v: NDArray[np.float64]

    def __post_init__(self) -> None:
        mu = np.array(self.mu, dtype=float)
        v = np.array(self.v, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
            raise ValidationError("covariance must be square with even dimension")
        if mu.shape != (v.shape[0],):
            raise ValidationError(
                f"mean vector length {mu.shape} does not match covariance "
                f"dimension {v.shape[0]}"
            )
        residual = float(np.max(np.abs(v - v.T)))
        if residual > SYMMETRY_TOL:
            raise ValidationError(
                f"covariance is not symmetric: residual {residual:.3e} exceeds "
                f"{SYMMETRY_TOL:.0e}"
            )
        object.__setattr__(self, "mu", _readonly(mu))
        object.__setattr__(self, "v", _readonly((v + v.T) / 2))

    @property
    def n_modes(self) -> int:
        return self.v.shape[0] // 2

    @property
    def v_xpxp(self) -> NDArray[np.float64]:
        return to_xpxp(self.v)

    def to_json(self) -> str:
        payload = {
            "ordering": "xxpp",
            "n_modes": self.n_modes,
            "mu": self.mu.tolist(),
            "v": self.v.tolist(),
            "v_xpxp": self.v_xpxp.tolist(),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GaussianState":
        payload = json.loads(text)
        if payload.get("ordering") != "xxpp":
            raise ValidationError("serialized states must declare xxpp ordering")
        return cls(np.asarray(payload["mu"], float), np.asarray(payload["v"], float))


@dataclass(frozen=True)
class StateDiagnostics:
    """Result of validate_state; purely informational."""

    symmetric: bool
    symmetry_residual: float
    physical: bool
    min_heisenberg_eig: float

    @property
    def ok(self) -> bool:
        return self.symmetric and self.physical


def validate_state(state: GaussianState) -> StateDiagnostics:
    """Diagnose symmetry and physicality of a state's covariance.

    Physicality is the matrix uncertainty relation V + i Omega / 2 >= 0,
    checked through the minimum eigenvalue of the Hermitian form.
    """
    v = np.asarray(state.v, dtype=float)
    residual = float(np.max(np.abs(v - v.T)))
    omega = symplectic_form(state.n_modes)
    heisenberg = v.astype(complex) + 0.5j * omega
    min_eig = float(np.linalg.eigvalsh(heisenberg)[0])
    return StateDiagnostics(
        symmetric=residual <= SYMMETRY_TOL,
        symmetry_residual=residual,
        physical=min_eig >= PSD_FLOOR,
        min_heisenberg_eig=min_eig,
    )


def covariance_from_coherence(gamma: CoherenceMatrix) -> GaussianState:
    """Zero-mean Gaussian state with V = I/2 + coherence block."""
    dim = 2 * gamma.n_modes
    v = np.eye(dim) / 2 + gamma.block()
    return GaussianState(np.zeros(dim), v)


# ---------------------------------------------------------------------------
# source models
# ---------------------------------------------------------------------------

def two_lens_coherence(eps: float, g_abs: float, theta: float) -> CoherenceMatrix:
    """Coherence matrix of two collected modes with mutual coherence g.

    Gamma = (eps/2) [[1, g], [g*, 1]] with g = g_abs * exp(i theta);
    eps is the total mean photon number per temporal mode.
    """
    _check_eps_g(eps, g_abs)
    g = g_abs * np.exp(1j * theta)
    gamma = (eps / 2) * np.array([[1.0, g], [np.conj(g), 1.0]])
    return CoherenceMatrix(gamma)


def two_lens_state(eps: float, g_abs: float, theta: float) -> GaussianState:
    """Gaussian state of the two collected modes (xxpp covariance)."""
    return covariance_from_coherence(two_lens_coherence(eps, g_abs, theta))


def two_lens_cov_derivs(
    eps: float, g_abs: float, theta: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Analytic derivatives of the two-mode covariance wrt (g_abs, theta)."""
    _check_eps_g(eps, g_abs)
    phase = np.exp(1j * theta)
    d_gamma_dg = (eps / 2) * np.array([[0.0, phase], [np.conj(phase), 0.0]])
    d_gamma_dth = (eps * g_abs / 2) * np.array(
        [[0.0, 1j * phase], [np.conj(1j * phase), 0.0]]
    )
    return coherence_block(d_gamma_dg), coherence_block(d_gamma_dth)


def multi_lens_coherence(eps: float, g: np.ndarray) -> CoherenceMatrix:
    """Coherence matrix (eps/2) g for M collected modes.

    g must be Hermitian, positive semidefinite, with unit diagonal and
    off-diagonal magnitudes at most 1.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    g = np.asarray(g, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValidationError("mutual coherence matrix must be square")
    if np.max(np.abs(np.diag(g) - 1.0)) > HERMITICITY_TOL:
        raise ValidationError("mutual coherence matrix must have unit diagonal")
    if np.max(np.abs(g)) > 1 + HERMITICITY_TOL:
        raise ValidationError("mutual coherence magnitudes cannot exceed 1")
    return CoherenceMatrix((eps / 2) * g)


def multi_lens_state(eps: float, g: np.ndarray) -> GaussianState:
    """Gaussian state of M collected modes with mutual coherences g."""
    return covariance_from_coherence(multi_lens_coherence(eps, g))


def _check_eps_g(eps: float, g_abs: float) -> None:
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if not 0 <= g_abs <= 1:
        raise ValidationError("the coherence magnitude must lie in [0, 1]")


# ---------------------------------------------------------------------------
# symplectic transformations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymplecticOp:
    """Affine Gaussian unitary: quadratures map to S r + d."""

    s: NDArray[np.float64]
    d: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        s = np.array(self.s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValidationError("symplectic matrix must be square with even dimension")
        d = np.zeros(s.shape[0]) if self.d is None else np.array(self.d, dtype=float)
        if d.shape != (s.shape[0],):
            raise ValidationError("displacement length does not match the symplectic matrix")
        omega = symplectic_form(s.shape[0] // 2)
        residual = float(np.max(np.abs(s @ omega @ s.T - omega)))
        if residual > SYMPLECTIC_TOL:
            raise ValidationError(
                f"matrix is not symplectic: residual {residual:.3e} exceeds "
                f"{SYMPLECTIC_TOL:.0e}"
            )
        object.__setattr__(self, "s", _readonly(s))
        object.__setattr__(self, "d", _readonly(d))

    @property
    def n_modes(self) -> int:
        return self.s.shape[0] // 2


def apply_symplectic(state: GaussianState, op: SymplecticOp) -> GaussianState:
    """Transform a state under a Gaussian unitary: mu -> S mu + d, V -> S V S^T."""
    if op.n_modes != state.n_modes:
        raise ValidationError("operation and state act on different mode counts")
    v = op.s @ state.v @ op.s.T
    return GaussianState(op.s @ state.mu + op.d, (v + v.T) / 2)


def passive_symplectic(u: np.ndarray) -> SymplecticOp:
    """Symplectic matrix of a passive linear-optics unitary a -> U a."""
    u = np.asarray(u, dtype=complex)
    if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > 1e-10:
        raise ValidationError("passive transformations require a unitary matrix")
    return SymplecticOp(coherence_block(u))


def balanced_beam_splitter(n_modes: int, i: int, j: int) -> SymplecticOp:
    """50:50 beam splitter sending a_i, a_j to (a_i + a_j)/sqrt2, (a_i - a_j)/sqrt2."""
    if i == j:
        raise ValidationError("beam splitter needs two distinct modes")
    u = np.eye(n_modes, dtype=complex)
    u[np.ix_([i, j], [i, j])] = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    return passive_symplectic(u)


def phase_shift(n_modes: int, mode: int, delta: float) -> SymplecticOp:
    """Phase shift a_mode -> exp(i delta) a_mode."""
    u = np.eye(n_modes, dtype=complex)
    u[mode, mode] = np.exp(1j * delta)
    return passive_symplectic(u)


def squeezer(n_modes: int, mode: int, r: float) -> SymplecticOp:
    """Single-mode squeezer scaling x by e^r and p by e^-r."""
    diag = np.ones(2 * n_modes)
    diag[mode] = np.exp(r)
    diag[n_modes + mode] = np.exp(-r)
    return SymplecticOp(np.diag(diag))


def haar_unitary(n_modes: int, rng: np.random.Generator) -> NDArray[np.complexfloating]:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = rng.standard_normal((n_modes, n_modes)) + 1j * rng.standard_normal(
        (n_modes, n_modes)
    )
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_symplectic(
    n_modes: int, rng: np.random.Generator, squeeze_max: float = 2.0
) -> SymplecticOp:
    """Random symplectic from passive-squeeze-passive composition.

    Squeeze log-gains are drawn uniformly from [-squeeze_max, squeeze_max],
    so the construction reaches every symplectic in that squeezing range.
    """
    s_in = passive_symplectic(haar_unitary(n_modes, rng)).s
    s_out = passive_symplectic(haar_unitary(n_modes, rng)).s
    r = rng.uniform(-squeeze_max, squeeze_max, size=n_modes)
    squeeze = np.diag(np.concatenate([np.exp(r), np.exp(-r)]))
    return SymplecticOp(s_out @ squeeze @ s_in)

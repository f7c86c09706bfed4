"""Measurement models: Gaussian POVMs, photon counting, and mode sorting.

A Gaussian measurement is described by a POVM covariance matrix V_pi and
the list of quadratures actually read out.  The outcome statistics on a
Gaussian state are again Gaussian, with covariance (V_state + V_pi)
restricted to the measured quadratures; noiseless homodyne corresponds to
reading a subset of quadratures with V_pi = 0 there, which is the exact
infinite-noise limit on the discarded conjugates.

Non-Gaussian models live here too: two-mode single-photon counting after
interference, projection of a weak thermal state onto single-photon mode
vectors, and the sorter that projects onto an orthonormalized hierarchy of
PSF derivatives.  Discrete outcome models all flow through
DiscreteDistribution, which carries outcome probabilities together with
their parameter derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import PhysicalityError, ValidationError
from .gstate import (
    PSD_FLOOR,
    SYMMETRY_TOL,
    CoherenceMatrix,
    GaussianState,
    random_symplectic,
    symplectic_form,
)
from .optics import Grid, psf_y_derivative

PROB_SUM_TOL = 1e-10
DERIV_SUM_TOL = 1e-9
WEAK_SOURCE_LIMIT = 0.1
GRAM_SCHMIDT_PIVOT = 1e-10


def _as_readonly(a: np.ndarray, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GaussianMeasurement:
    """General-dyne measurement: POVM covariance plus read-out quadratures.

    v_pi is a symmetric 2m x 2m matrix in xxpp ordering; measured lists the
    quadrature indices that are read out.  Validity requires
    v_pi + (i/2) Omega, restricted to the measured block, to be positive
    semidefinite; unmeasured quadratures are marginalized exactly.
    """

    v_pi: NDArray[np.float64]
    measured: tuple[int, ...]
    label: str = "gaussian"

    def __post_init__(self) -> None:
        v = np.array(self.v_pi, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
            raise ValidationError("v_pi must be square with even dimension")
        if np.max(np.abs(v - v.T)) > SYMMETRY_TOL:
            raise ValidationError("v_pi must be symmetric")
        v = (v + v.T) / 2
        meas = tuple(int(k) for k in self.measured)
        if len(meas) == 0:
            raise ValidationError("at least one quadrature must be measured")
        if sorted(set(meas)) != list(meas):
            raise ValidationError("measured indices must be sorted and unique")
        if meas[0] < 0 or meas[-1] >= v.shape[0]:
            raise ValidationError("measured index out of range")
        ix = np.ix_(meas, meas)
        omega = symplectic_form(v.shape[0] // 2)
        h = v[ix] + 0.5j * omega[ix]
        if float(np.linalg.eigvalsh((h + h.conj().T) / 2).min()) < PSD_FLOOR:
            raise PhysicalityError(
                "measurement covariance violates the uncertainty bound on the "
                "measured quadratures"
            )
        object.__setattr__(self, "v_pi", _as_readonly(v))
        object.__setattr__(self, "measured", meas)

    @property
    def n_modes(self) -> int:
        return self.v_pi.shape[0] // 2


@dataclass(frozen=True)
class OutcomeGaussian:
    """Gaussian outcome statistics on the measured quadratures."""

    mean: NDArray[np.float64]
    cov: NDArray[np.float64]
    measured: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", _as_readonly(self.mean))
        object.__setattr__(self, "cov", _as_readonly(self.cov))


def gaussian_outcome_distribution(
    state: GaussianState, meas: GaussianMeasurement
) -> OutcomeGaussian:
    """Outcome mean and covariance of a Gaussian measurement on a state."""
    if meas.n_modes != state.n_modes:
        raise ValidationError(
            f"measurement acts on {meas.n_modes} modes, state has {state.n_modes}"
        )
    ix = np.ix_(meas.measured, meas.measured)
    cov = (state.v + meas.v_pi)[ix]
    if float(np.linalg.eigvalsh(cov).min()) < PSD_FLOOR:
        raise PhysicalityError("outcome covariance is not positive semidefinite")
    return OutcomeGaussian(state.mu[list(meas.measured)], cov, meas.measured)


def homodyne_measurement(selection: str) -> GaussianMeasurement:
    """Noiseless quadrature read-out.

    selection has one character per mode: 'x' or 'p' picks the quadrature,
    '-' skips the mode.  Measuring both quadratures of one mode noiselessly
    is rejected by the physicality check.
    """
    m = len(selection)
    if m == 0:
        raise ValidationError("selection string is empty")
    measured: list[int] = []
    for k, ch in enumerate(selection):
        if ch == "x":
            measured.append(k)
        elif ch == "p":
            measured.append(m + k)
        elif ch != "-":
            raise ValidationError(f"selection characters must be x, p or -: {ch!r}")
    return GaussianMeasurement(np.zeros((2 * m, 2 * m)), tuple(sorted(measured)),
                               label=f"homodyne[{selection}]")


def heterodyne_measurement(n_modes: int) -> GaussianMeasurement:
    """Simultaneous x and p detection with the minimal added vacuum noise."""
    if n_modes < 1:
        raise ValidationError("n_modes must be positive")
    return GaussianMeasurement(
        np.eye(2 * n_modes) / 2, tuple(range(2 * n_modes)), label="heterodyne"
    )


def random_valid_gaussian_measurement(
    n_modes: int, rng: np.random.Generator, squeeze_max: float = 2.0
) -> GaussianMeasurement:
    """Random physical general-dyne covariance V_pi = S S^T / 2."""
    s = random_symplectic(n_modes, rng, squeeze_max=squeeze_max).s
    return GaussianMeasurement(
        s @ s.T / 2, tuple(range(2 * n_modes)), label="random-dyne"
    )


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite outcome distribution with analytic parameter derivatives.

    probs sums to 1; each row of dprobs (one per parameter) sums to 0.
    notes collects model warnings, e.g. when a weak-source approximation is
    pushed past its stated range.
    """

    labels: tuple[str, ...]
    probs: NDArray[np.float64]
    params: tuple[str, ...]
    dprobs: NDArray[np.float64]
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=float)
        d = np.array(self.dprobs, dtype=float)
        if p.ndim != 1 or len(self.labels) != p.size:
            raise ValidationError("labels and probs must align")
        if d.shape != (len(self.params), p.size):
            raise ValidationError("dprobs must be (n_params, n_outcomes)")
        if float(p.min()) < -PROB_SUM_TOL:
            raise ValidationError(f"negative outcome probability {p.min()!r}")
        p = np.clip(p, 0.0, None)
        if abs(float(p.sum()) - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"probabilities sum to {p.sum()!r}, not 1")
        scale = max(1.0, float(np.abs(d).max(initial=0.0)))
        if d.size and float(np.abs(d.sum(axis=1)).max()) > DERIV_SUM_TOL * scale:
            raise ValidationError("derivative rows must sum to zero")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "probs", _as_readonly(p))
        object.__setattr__(self, "dprobs", _as_readonly(d))
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def n_outcomes(self) -> int:
        return self.probs.size

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "probs": self.probs.tolist(),
            "params": list(self.params),
            "dprobs": self.dprobs.tolist(),
            "notes": list(self.notes),
        }


def photon_counting_two_mode(
    eps: float,
    g_abs: float,
    theta: float,
    delta: float = 0.0,
) -> DiscreteDistribution:
    """Click statistics of two interfered weak thermal modes.

    The modes are mixed on a balanced beam splitter after a relative phase
    delta; outcomes are a photon in the plus port, a photon in the minus
    port, or no photon, with multi-photon events dropped at order eps^2.

        P(+/-) = (eps/2) (1 +/- |g| cos(theta + delta)),  P(0) = 1 - eps.
    """
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    if not 0 <= g_abs <= 1:
        raise ValidationError("|g| must lie in [0, 1]")
    c = math.cos(theta + delta)
    s = math.sin(theta + delta)
    gamma = g_abs * c
    probs = np.array([eps / 2 * (1 + gamma), eps / 2 * (1 - gamma), 1 - eps])
    dprobs = np.array(
        [
            [eps / 2 * c, -eps / 2 * c, 0.0],
            [-eps / 2 * g_abs * s, eps / 2 * g_abs * s, 0.0],
        ]
    )
    notes: tuple[str, ...] = ()
    if eps > WEAK_SOURCE_LIMIT:
        notes = (
            f"eps={eps:g} exceeds the weak-source regime (<= {WEAK_SOURCE_LIMIT}); "
            "dropped multi-photon terms are O(eps^2)",
        )
    return DiscreteDistribution(
        ("plus", "minus", "vacuum"), probs, ("g_abs", "theta"), dprobs, notes
    )


def _one_photon_operator(gamma: CoherenceMatrix) -> tuple[np.ndarray, float]:
    """A = (I + Gamma)^{-1} Gamma and log det(I + Gamma)."""
    m = np.eye(gamma.n_modes) + gamma.gamma
    sign, logdet = np.linalg.slogdet(m)
    if sign.real <= 0:
        raise ValidationError("I + Gamma must be positive definite")
    return np.linalg.solve(m, gamma.gamma), float(logdet.real)


def vacuum_probability(gamma: CoherenceMatrix) -> float:
    """P(no photon) = 1 / det(I + Gamma) for a thermal state."""
    _, logdet = _one_photon_operator(gamma)
    return math.exp(-logdet)


def one_photon_total_probability(gamma: CoherenceMatrix) -> float:
    """P(exactly one photon, any mode) = tr[(I+Gamma)^{-1} Gamma] / det(I+Gamma)."""
    a, logdet = _one_photon_operator(gamma)
    return float(np.trace(a).real) * math.exp(-logdet)


def single_photon_projection_probability(gamma: CoherenceMatrix, j: int) -> float:
    """P(one photon in basis mode j and none elsewhere).

    Equals [(I+Gamma)^{-1} Gamma]_jj / det(I+Gamma); for weak sources this
    is Gamma_jj up to a relative O(tr Gamma) correction.
    """
    if not 0 <= j < gamma.n_modes:
        raise ValidationError("mode index out of range")
    a, logdet = _one_photon_operator(gamma)
    return float(a[j, j].real) * math.exp(-logdet)


def single_photon_mode_probability(
    gamma: CoherenceMatrix, mode: np.ndarray
) -> float:
    """P(one photon in the given unit mode vector and none elsewhere)."""
    v = np.asarray(mode, dtype=complex)
    if v.shape != (gamma.n_modes,):
        raise ValidationError("mode vector length must match the coherence matrix")
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > 1e-8:
        raise ValidationError("mode vector must be normalized")
    a, logdet = _one_photon_operator(gamma)
    return float((v.conj() @ a @ v).real) * math.exp(-logdet)


@dataclass(frozen=True)
class SpadeBasis:
    """Orthonormal hierarchy of PSF derivative modes on a grid.

    b[l] are embedded orthonormal vectors obtained by Gram-Schmidt on the
    scaled derivative vectors omega_0 .. omega_k_max; a[m, l] stores the
    expansion coefficients <b_l | omega_m>, which vanish for l > m.  When a
    derivative vector is linearly dependent on its predecessors the
    hierarchy is truncated and effective_order records the highest mode
    kept.
    """

    grid: Grid
    y0: float
    length: float
    k_max: int
    b: NDArray[np.float64]
    a: NDArray[np.float64]
    effective_order: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "b", _as_readonly(self.b))
        object.__setattr__(self, "a", _as_readonly(self.a))


def spade_basis(
    psf,
    grid: Grid,
    y0: float,
    length: float,
    k_max: int,
    step: float | None = None,
) -> SpadeBasis:
    """Gram-Schmidt orthonormalization of the PSF derivative hierarchy."""
    from .optics import derivative_vectors  # local alias, single source of truth

    if k_max < 1:
        raise ValidationError("k_max must be at least 1")
    dv = derivative_vectors(psf, grid, y0, length, k_max, step=step)
    omega = dv.embedded()
    basis_rows: list[np.ndarray] = []
    effective = -1
    for m in range(k_max + 1):
        v = omega[m].copy()
        for _ in range(2):  # second pass keeps orthogonality near 1e-15
            for b in basis_rows:
                v -= (b @ v) * b
        nrm = float(np.linalg.norm(v))
        if nrm <= GRAM_SCHMIDT_PIVOT * float(np.linalg.norm(omega[m])):
            break
        basis_rows.append(v / nrm)
        effective = m
    if effective < 1:
        raise ValidationError(
            "derivative hierarchy collapsed at order zero; the psf grid is "
            "too coarse or the psf is degenerate"
        )
    b = np.asarray(basis_rows)
    a = omega @ b.T  # a[m, l] = <b_l, omega_m>, zero above the diagonal
    return SpadeBasis(grid, y0, length, k_max, b, a, effective)


def spade_outcome_distribution(
    t: np.ndarray,
    eps: float,
    basis: SpadeBasis,
    n_params: int | None = None,
) -> DiscreteDistribution:
    """Outcome statistics of interferometric sorting on a weak thermal scene.

    The scene enters through its normalized position moments t (t[0] = 1),
    with the coherence matrix expanded as
    Gamma = eps * sum_{m,n} t[m+n] |omega_m><omega_n|.  Outcomes are the
    ground mode b_0 (weight 1/2) and the pairwise superpositions
    (b_i +/- b_{i+1})/sqrt(2) (weight 1/2 each); a single completion bucket
    absorbs the vacuum and everything outside the listed modes, so the
    truncation error of the expansion never drives a listed probability
    negative.  Derivatives are with respect to t[1..n_params].
    """
    t = np.asarray(t, dtype=float)
    k = basis.effective_order
    if t.ndim != 1 or t.size < 2 * k + 1:
        raise ValidationError(
            f"need moments up to order {2 * k} for a sorter of order {k}"
        )
    if abs(t[0] - 1.0) > 1e-12:
        raise ValidationError("t[0] must be 1 (weights are normalized)")
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    if n_params is None:
        n_params = t.size - 1
    if not 1 <= n_params <= t.size - 1:
        raise ValidationError("n_params must address available moments")

    # coefficient vectors c[m] = <outcome | omega_m> for each listed outcome
    a = basis.a[: k + 1, : k + 1]
    coeff_rows: list[np.ndarray] = [a[:, 0]]
    weights: list[float] = [0.5]
    labels: list[str] = ["sorter_b0"]
    for i in range(k):
        plus = (a[:, i] + a[:, i + 1]) / math.sqrt(2)
        minus = (a[:, i] - a[:, i + 1]) / math.sqrt(2)
        coeff_rows.extend([plus, minus])
        weights.extend([0.5, 0.5])
        labels.extend([f"sorter_phi{i}+", f"sorter_phi{i}-"])

    hankel = np.array([[t[m + n] for n in range(k + 1)] for m in range(k + 1)])
    probs = []
    dprobs = np.zeros((n_params, len(coeff_rows) + 1))
    for o, (c, w) in enumerate(zip(coeff_rows, weights)):
        probs.append(eps * w * float(c @ hankel @ c))
        for kk in range(1, n_params + 1):
            acc = 0.0
            for m in range(max(0, kk - k), min(k, kk) + 1):
                acc += c[m] * c[kk - m]
            dprobs[kk - 1, o] = eps * w * acc
    probs.append(1.0 - sum(probs))
    dprobs[:, -1] = -dprobs[:, :-1].sum(axis=1)
    labels.append("other")

    notes: list[str] = []
    if eps > WEAK_SOURCE_LIMIT:
        notes.append(
            f"eps={eps:g} exceeds the weak-source regime (<= {WEAK_SOURCE_LIMIT})"
        )
    if basis.effective_order < basis.k_max:
        notes.append(
            f"sorter truncated at order {basis.effective_order} "
            f"(requested {basis.k_max})"
        )
    return DiscreteDistribution(
        tuple(labels),
        np.asarray(probs),
        tuple(f"t{kk}" for kk in range(1, n_params + 1)),
        dprobs,
        tuple(notes),
    )

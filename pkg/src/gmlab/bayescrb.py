"""Bayesian lower bounds on the worst-case separation error.

For a prior p(L) = q(L)^2 on [0, L_max], the Bayesian information

    K[p] = integral( q^2 F + 4 (q')^2 ) dL

bounds the average mean-square error of any estimator by 1/K, and the
worst-case error by 1/K for the best prior.  Minimizing K over
normalized q is the smallest eigenvalue of the Sturm-Liouville problem

    lambda q = -4 q'' + F(L) q,   q(0) = q(L_max) = 0,

discretized here with symmetric second-order finite differences so the
discrete operator stays a real symmetric tridiagonal matrix.

For the quadratic profile F = k N L^2 / sigma^4 the minimizer is known in
closed form: q(L) = (2/pi)^(1/4) (L / omega^(3/2)) exp(-L^2 / 4 omega^2)
with omega = sigma / (kN)^(1/4) and lambda = 6 sqrt(kN) / sigma^2.  The
density q^2 peaks at L = sqrt(2) omega (set d/dL of L^2 exp(-L^2/2w^2)
to zero).  The three worst-case ceilings implemented in
worst_case_bounds scale as N, sqrt(N), and sqrt(N) for sorter-based,
direct, and Gaussian read-outs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import trapezoid
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, ValidationError

PRIOR_NORM_TOL = 1e-8
TRUNCATION_OMEGA_FACTOR = 8.0
DEFAULT_DOMAIN_OMEGA_FACTOR = 12.0


def _grid_ok(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 3 or np.any(np.diff(x) <= 0):
        raise ValidationError("grid must be increasing with at least three points")
    return x


@dataclass(frozen=True)
class PriorFunction:
    """Prior amplitude q on a grid, with p = q^2 normalized to 1."""

    grid: NDArray[np.float64]
    q: NDArray[np.float64]

    def __post_init__(self) -> None:
        x = _grid_ok(self.grid)
        q = np.asarray(self.q, dtype=float)
        if q.shape != x.shape:
            raise ValidationError("q must be sampled on the grid")
        nrm = float(trapezoid(q**2, x))
        if abs(nrm - 1.0) > PRIOR_NORM_TOL:
            raise ValidationError(f"prior density integrates to {nrm!r}, not 1")
        x.setflags(write=False)
        qq = q.copy()
        qq.setflags(write=False)
        object.__setattr__(self, "grid", x)
        object.__setattr__(self, "q", qq)

    @classmethod
    def normalized(cls, grid, q) -> "PriorFunction":
        grid = _grid_ok(grid)
        q = np.asarray(q, dtype=float)
        nrm = math.sqrt(float(trapezoid(q**2, grid)))
        if nrm <= 0:
            raise ValidationError("prior amplitude is identically zero")
        return cls(grid, q / nrm)

    @property
    def p(self) -> NDArray[np.float64]:
        return self.q**2


@dataclass(frozen=True)
class FisherProfile:
    """Nonnegative information profile F(L) on a grid (total, N included)."""

    grid: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        x = _grid_ok(self.grid)
        v = np.asarray(self.values, dtype=float)
        if v.shape != x.shape:
            raise ValidationError("values must be sampled on the grid")
        if float(v.min()) < 0:
            raise ValidationError("the information profile must be nonnegative")
        x.setflags(write=False)
        vv = v.copy()
        vv.setflags(write=False)
        object.__setattr__(self, "grid", x)
        object.__setattr__(self, "values", vv)

    @classmethod
    def quadratic(
        cls, k_const: float, n_copies: int, sigma: float, grid
    ) -> "FisherProfile":
        """F(L) = k N L^2 / sigma^4, the leading-order Gaussian-measurement
        ceiling for the two-point separation."""
        grid = _grid_ok(grid)
        if k_const <= 0 or sigma <= 0 or n_copies < 1:
            raise ValidationError("require k_const > 0, sigma > 0, n_copies >= 1")
        return cls(grid, k_const * n_copies * grid**2 / sigma**4)

    @classmethod
    def constant(cls, value: float, grid) -> "FisherProfile":
        grid = _grid_ok(grid)
        return cls(grid, np.full(grid.shape, float(value)))

    def at(self, x: np.ndarray) -> NDArray[np.float64]:
        return np.interp(np.asarray(x, dtype=float), self.grid, self.values)


def k_functional(prior: PriorFunction, profile: FisherProfile) -> float:
    """K[p] = integral(q^2 F + 4 q'^2) with central-difference q'."""
    if prior.grid.shape != profile.grid.shape or np.max(
        np.abs(prior.grid - profile.grid)
    ) > 1e-12 * max(1.0, float(np.abs(prior.grid).max())):
        raise ValidationError("prior and profile must share one grid")
    dq = np.gradient(prior.q, prior.grid)
    return float(trapezoid(prior.q**2 * profile.values + 4 * dq**2, prior.grid))


@dataclass(frozen=True)
class EigenSolution:
    """Smallest eigenpair of -4 d^2/dL^2 + F(L) with Dirichlet ends.

    boundary_mass is the prior mass in the outer 5% of the domain; a
    non-negligible value means L_max truncates the minimizer and the
    eigenvalue is only an upper bound on the untruncated one.
    l_max_sensitivity is the relative eigenvalue shift when the domain is
    cut to 0.75 L_max.
    """

    prior: PriorFunction
    lam: float
    l_max: float
    n_grid: int
    boundary_mass: float
    l_max_sensitivity: float

    @property
    def truncated(self) -> bool:
        return self.boundary_mass > 1e-6


def _smallest_eigenpair(
    profile: FisherProfile, l_max: float, n_grid: int
) -> tuple[np.ndarray, np.ndarray, float]:
    h = l_max / (n_grid + 1)
    interior = np.linspace(h, l_max - h, n_grid)
    diag = 8.0 / h**2 + profile.at(interior)
    off = np.full(n_grid - 1, -4.0 / h**2)
    try:
        vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceError(f"tridiagonal eigensolve failed: {exc}") from exc
    lam = float(vals[0])
    v = vecs[:, 0]
    grid = np.concatenate([[0.0], interior, [l_max]])
    q = np.concatenate([[0.0], v, [0.0]])
    nrm = math.sqrt(float(trapezoid(q**2, grid)))
    q = q / nrm
    if q[np.argmax(np.abs(q))] < 0:
        q = -q
    return grid, q, lam


def eigen_solver(
    profile: FisherProfile,
    l_max: float | None = None,
    n_grid: int = 601,
    boundary: str = "dirichlet",
) -> EigenSolution:
    """Minimize K[p] over priors on [0, l_max]: smallest eigenpair of the
    finite-difference discretization, O(h^2) accurate.

    n_grid counts interior points; l_max defaults to the profile's grid
    end.  Returns the normalized minimizer, the eigenvalue, and domain
    diagnostics (no single L_max suits every profile, so sensitivity to
    the cut is always reported).
    """
    if boundary != "dirichlet":
        raise ValidationError("only dirichlet boundaries are supported")
    if n_grid < 200:
        raise ValidationError("n_grid must be at least 200")
    if l_max is None:
        l_max = float(profile.grid[-1])
    if l_max <= 0:
        raise ValidationError("l_max must be positive")
    grid, q, lam = _smallest_eigenpair(profile, l_max, n_grid)
    prior = PriorFunction(grid, q)
    edge = grid >= 0.95 * l_max
    boundary_mass = float(trapezoid(np.where(edge, q**2, 0.0), grid))
    n_cut = max(200, int(0.75 * (n_grid + 1)) - 1)
    _, _, lam_cut = _smallest_eigenpair(profile, 0.75 * l_max, n_cut)
    sens = abs(lam_cut - lam) / abs(lam) if lam != 0 else float("inf")
    return EigenSolution(prior, lam, l_max, n_grid, boundary_mass, sens)


@dataclass(frozen=True)
class OptimalPrior:
    """Closed-form minimizer for the quadratic information profile."""

    prior: PriorFunction
    lam: float
    omega: float
    truncated: bool


def optimal_prior_quadratic_fi(
    k_const: float,
    n_copies: int,
    sigma: float,
    l_max: float | None = None,
    n_grid: int = 1201,
) -> OptimalPrior:
    """Closed-form optimal prior for F = k N L^2 / sigma^4.

    q(L) = (2/pi)^(1/4) (L/omega^(3/2)) exp(-L^2/(4 omega^2)) with
    omega = sigma/(kN)^(1/4); the attained value is
    lambda = 6/ omega^2 = 6 sqrt(kN) / sigma^2.  The density q^2 peaks at
    L = sqrt(2) omega.  A domain shorter than 8 omega clips the Gaussian
    tail and is flagged as truncated.
    """
    if k_const <= 0 or sigma <= 0 or n_copies < 1:
        raise ValidationError("require k_const > 0, sigma > 0, n_copies >= 1")
    omega = sigma / (k_const * n_copies) ** 0.25
    lam = 6 * math.sqrt(k_const * n_copies) / sigma**2
    if l_max is None:
        l_max = DEFAULT_DOMAIN_OMEGA_FACTOR * omega
    truncated = l_max < TRUNCATION_OMEGA_FACTOR * omega
    grid = np.linspace(0.0, l_max, n_grid)
    q = (2 / math.pi) ** 0.25 * grid / omega**1.5 * np.exp(
        -(grid**2) / (4 * omega**2)
    )
    prior = (
        PriorFunction(grid, q) if not truncated else PriorFunction.normalized(grid, q)
    )
    return OptimalPrior(prior, lam, omega, truncated)


@dataclass(frozen=True)
class WorstCaseBound:
    """Ceiling on K[p] for a read-out family, and the matching floor on
    the worst-case mean-square error."""

    family: str
    n_copies: int
    sigma: float
    k_const: float | None
    k_bound: float

    @property
    def mse_lower(self) -> float:
        return 1.0 / self.k_bound


def worst_case_bounds(
    family: str,
    n_copies: int,
    sigma: float,
    k_const: float | None = None,
) -> WorstCaseBound:
    """Worst-case-error ceilings per read-out family.

    sorter-based counting: K <= N / (4 sigma^2)         (linear in N)
    direct imaging:        K <= 3 sqrt(N) / (sqrt(2) sigma^2)
    any Gaussian read-out: K <= 6 sqrt(k N) / sigma^2   (k from the
        separation bound, k = eps^2 (sqrt(3)+1)^2 / 4 for a Gaussian PSF)

    The sqrt(N) families pay a quadratically larger copy budget for the
    same worst-case error.
    """
    if n_copies < 1 or sigma <= 0:
        raise ValidationError("require n_copies >= 1 and sigma > 0")
    n = n_copies
    if family == "spade":
        k = n / (4 * sigma**2)
    elif family == "direct":
        k = 3 * math.sqrt(n) / (math.sqrt(2) * sigma**2)
    elif family == "gaussian":
        if k_const is None or k_const <= 0:
            raise ValidationError("the gaussian family needs k_const > 0")
        k = 6 * math.sqrt(k_const * n) / sigma**2
    else:
        raise ValidationError("family must be spade, direct, or gaussian")
    return WorstCaseBound(family, n, sigma, k_const, k)


def separation_bound_constant(eps: float) -> float:
    """k such that F(L) <= k N L^2 / sigma^4 for any Gaussian measurement
    on a Gaussian-PSF two-point scene: k = eps^2 (sqrt(3)+1)^2 / 4."""
    if eps <= 0:
        raise ValidationError("eps must be positive")
    return eps**2 * (math.sqrt(3) + 1) ** 2 / 4

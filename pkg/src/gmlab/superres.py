"""Sub-Rayleigh scenes and the information reachable by each read-out.

A scene is a finite set of incoherent point emitters of total brightness
eps within an extent L around a known centroid, imaged through a PSF onto
a discretized detection plane.  The scene's coherence matrix lives in
pixel-mode space (quadrature weights absorbed), so mode-space formulas
apply verbatim.

Parameter charts:

* the separation L of a symmetric two-point scene, and
* the normalized intensity moments t_n of a general scene,
  t_n = sum_i zeta_i ((y_i - y0)/L)^n, with t_0 pinned to 1 and the
  centroid known.

For each chart the module computes the information of direct imaging,
derivative-mode sorting, and arbitrary Gaussian measurements, plus the
ceilings that Gaussian measurements cannot exceed: the moment bound
(per-element, from derivative-vector norms), the two-point separation
bound, and the interferometric variant.  Exponent fits turn the scaling
separations into measurable slopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ValidationError
from .gstate import CoherenceMatrix, GaussianState, covariance_from_coherence
from .fisher import FisherMatrix, fim_discrete, fim_gaussian
from .measure import (
    DiscreteDistribution,
    SpadeBasis,
    spade_basis,
    spade_outcome_distribution,
)
from .optics import (
    DerivativeVectors,
    GaussianPsf,
    Grid,
    derivative_vectors,
    psf_y_derivative,
)

__all__ = [
    "Grid",
    "GaussianPsf",
    "DerivativeVectors",
    "derivative_vectors",
    "SourceScene",
    "MomentVector",
    "scene_coherence",
    "scene_coherence_dl",
    "scene_state",
    "gamma_expansion",
    "gamma_expansion_dt",
    "direct_imaging_distribution",
    "direct_imaging_fim_moments",
    "spade_fim_moments",
    "spade_two_point_fim",
    "moment_gaussian_bound",
    "separation_gaussian_bound",
    "separation_interferometric_bound",
    "gaussian_measurement_fim_scene",
    "ScalingFit",
    "scaling_exponent_fit",
]

SCENE_PSF_NORM_TOL = 1e-6
TRACE_REL_TOL = 1e-8


@dataclass(frozen=True)
class SourceScene:
    """Incoherent point sources around a known centroid.

    points are absolute positions; weights are normalized intensities;
    eps is the mean photon number per temporal mode collected from the
    whole scene.  All points must lie within L/2 of the centroid y0.
    """

    points: tuple[float, ...]
    weights: tuple[float, ...]
    y0: float
    length: float
    eps: float
    psf: GaussianPsf
    grid: Grid

    def __post_init__(self) -> None:
        pts = tuple(float(p) for p in self.points)
        wts = tuple(float(w) for w in self.weights)
        if len(pts) == 0 or len(pts) != len(wts):
            raise ValidationError("points and weights must align and be nonempty")
        if any(w < 0 for w in wts):
            raise ValidationError("weights must be nonnegative")
        if abs(sum(wts) - 1.0) > 1e-12:
            raise ValidationError(f"weights must sum to 1, got {sum(wts)!r}")
        if self.length <= 0:
            raise ValidationError("scene extent L must be positive")
        if not 0 < self.eps <= 1:
            raise ValidationError("eps must lie in (0, 1]")
        half = self.length / 2 + 1e-12 * self.length
        if any(abs(p - self.y0) > half for p in pts):
            raise ValidationError("all points must lie within L/2 of the centroid")
        for p in pts:
            nrm = self.grid.norm(self.psf(self.grid.x - p))
            if abs(nrm - 1.0) > SCENE_PSF_NORM_TOL:
                raise ValidationError(
                    f"psf at source position {p!r} has quadrature norm {nrm!r}; "
                    "widen the grid"
                )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def two_point(
        cls,
        length: float,
        eps: float,
        psf: GaussianPsf,
        grid: Grid | None = None,
        y0: float = 0.0,
    ) -> "SourceScene":
        """Two equal emitters at y0 -/+ L/2."""
        if grid is None:
            grid = Grid.for_psf(psf, span=length, center=y0)
        return cls(
            (y0 - length / 2, y0 + length / 2),
            (0.5, 0.5),
            y0,
            length,
            eps,
            psf,
            grid,
        )

    @property
    def offsets(self) -> NDArray[np.float64]:
        """Normalized positions (y_i - y0)/L in [-1/2, 1/2]."""
        return (np.asarray(self.points) - self.y0) / self.length

    def with_separation(self, length: float) -> "SourceScene":
        """Same shape and grid, rescaled to a new extent."""
        pts = tuple(self.y0 + u * length for u in self.offsets)
        return SourceScene(
            pts, self.weights, self.y0, length, self.eps, self.psf, self.grid
        )


@dataclass(frozen=True)
class MomentVector:
    """Normalized intensity moments t_0 .. t_n_max of a scene.

    Moments of a probability measure on [-1/2, 1/2]: t_0 = 1, |t_n| <=
    2^-n, even moments nonnegative, and the Cauchy-Schwarz lattice
    t_{n+m}^2 <= t_{2n} t_{2m} wherever the indices exist.
    """

    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        t = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise ValidationError("moment vector must be one-dimensional")
        if abs(t[0] - 1.0) > 1e-12:
            raise ValidationError("t_0 must be 1")
        if float(np.abs(t).max()) > 1 + 1e-12:
            raise ValidationError("moments of a measure on [-1/2,1/2] satisfy |t_n| <= 1")
        for n in range(0, t.size, 2):
            if t[n] < -1e-12:
                raise ValidationError(f"even moment t_{n} must be nonnegative")
        for n in range(t.size):
            for m in range(n, t.size):
                if n + m < t.size and 2 * n < t.size and 2 * m < t.size:
                    if t[n + m] ** 2 > t[2 * n] * t[2 * m] + 1e-10:
                        raise ValidationError(
                            f"moments violate Cauchy-Schwarz at (n,m)=({n},{m})"
                        )
        t.setflags(write=False)
        object.__setattr__(self, "values", t)

    @classmethod
    def from_scene(cls, scene: SourceScene, n_max: int) -> "MomentVector":
        u = scene.offsets
        w = np.asarray(scene.weights)
        return cls(np.array([float(np.sum(w * u**n)) for n in range(n_max + 1)]))

    @property
    def n_max(self) -> int:
        return self.values.size - 1

    def __getitem__(self, n: int) -> float:
        return float(self.values[n])


def scene_coherence(scene: SourceScene) -> CoherenceMatrix:
    """Pixel-mode coherence matrix Gamma = eps sum_i zeta_i |psi_i><psi_i|.

    Real symmetric for a real PSF; its plain trace equals eps up to the
    quadrature normalization of the PSF.
    """
    g = np.zeros((scene.grid.n_points, scene.grid.n_points))
    for p, w in zip(scene.points, scene.weights):
        v = scene.grid.embed(scene.psf(scene.grid.x - p))
        g += scene.eps * w * np.outer(v, v)
    gamma = CoherenceMatrix(g.astype(complex))
    tr = gamma.mean_photon_number
    if abs(tr - scene.eps) > TRACE_REL_TOL * scene.eps:
        raise ValidationError(
            f"coherence trace {tr!r} deviates from eps={scene.eps!r}; "
            "the grid does not resolve the psf"
        )
    return gamma


def scene_coherence_dl(scene: SourceScene) -> NDArray[np.float64]:
    """Analytic derivative of the pixel-mode coherence matrix in L.

    d psi_i / dL = u_i * d/dy psf(x - y) at y_i, with u_i the normalized
    offset, so dGamma = eps sum_i zeta_i u_i (d_i psi_i^T + psi_i d_i^T).
    """
    out = np.zeros((scene.grid.n_points, scene.grid.n_points))
    u = scene.offsets
    for p, w, ui in zip(scene.points, scene.weights, u):
        if ui == 0.0:
            continue
        psi = scene.grid.embed(scene.psf(scene.grid.x - p))
        dpsi = scene.grid.embed(psf_y_derivative(scene.psf, scene.grid, p, 1))
        block = np.outer(dpsi, psi)
        out += scene.eps * w * ui * (block + block.T)
    return out


def scene_state(scene: SourceScene) -> GaussianState:
    """Zero-mean Gaussian state of the pixel modes, V = I/2 + blocks of
    the (real) coherence matrix."""
    return covariance_from_coherence(scene_coherence(scene))


def gamma_expansion(
    t, dv: DerivativeVectors, eps: float, order: int
) -> CoherenceMatrix:
    """Coherence matrix from the moment chart,
    Gamma = eps sum_{m,n<=order} t_{m+n} |omega_m><omega_n|.

    The truncation residual against scene_coherence is O(L^{order+1}).
    """
    t = np.asarray(getattr(t, "values", t), dtype=float)
    if order < 0 or order > dv.n_max:
        raise ValidationError("order exceeds the available derivative vectors")
    if t.size < 2 * order + 1:
        raise ValidationError(f"need moments up to order {2 * order}")
    w = dv.embedded()[: order + 1]
    hankel = np.array(
        [[t[m + n] for n in range(order + 1)] for m in range(order + 1)]
    )
    return CoherenceMatrix((eps * w.T @ hankel @ w).astype(complex))


def gamma_expansion_dt(
    dv: DerivativeVectors, k: int, eps: float, order: int
) -> NDArray[np.float64]:
    """dGamma/dt_k = eps sum_{m+n=k, m,n<=order} |omega_m><omega_n|."""
    if not 1 <= k <= 2 * order:
        raise ValidationError("moment index k must lie in [1, 2*order]")
    if order > dv.n_max:
        raise ValidationError("order exceeds the available derivative vectors")
    w = dv.embedded()
    out = np.zeros((dv.grid.n_points, dv.grid.n_points))
    for m in range(max(0, k - order), min(order, k) + 1):
        out += eps * np.outer(w[m], w[k - m])
    return out


def direct_imaging_distribution(
    t,
    eps: float,
    dv: DerivativeVectors,
    order: int,
    n_params: int | None = None,
) -> DiscreteDistribution:
    """Pixel-click statistics of direct imaging in the moment chart.

    p_j = eps sum_{m,n<=order} t_{m+n} omega_m(x_j) omega_n(x_j) per grid
    cell (quadrature weights absorbed), one photon at most; a completion
    bucket absorbs the vacuum and the truncation remainder.  Derivatives
    are with respect to t_1..t_n_params.
    """
    t = np.asarray(getattr(t, "values", t), dtype=float)
    if t.size < 2 * order + 1:
        raise ValidationError(f"need moments up to order {2 * order}")
    if n_params is None:
        n_params = order
    if not 1 <= n_params <= 2 * order:
        raise ValidationError("n_params must lie in [1, 2*order]")
    w = dv.embedded()[: order + 1]
    hankel = np.array(
        [[t[m + n] for n in range(order + 1)] for m in range(order + 1)]
    )
    probs = eps * np.einsum("mj,mn,nj->j", w, hankel, w)
    dprobs = np.zeros((n_params, probs.size + 1))
    for k in range(1, n_params + 1):
        row = np.zeros(probs.size)
        for m in range(max(0, k - order), min(order, k) + 1):
            row += w[m] * w[k - m]
        dprobs[k - 1, :-1] = eps * row
    dprobs[:, -1] = -dprobs[:, :-1].sum(axis=1)
    labels = tuple(f"px{j}" for j in range(probs.size)) + ("no_click",)
    all_probs = np.concatenate([probs, [1.0 - float(probs.sum())]])
    return DiscreteDistribution(
        labels,
        all_probs,
        tuple(f"t{k}" for k in range(1, n_params + 1)),
        dprobs,
    )


def direct_imaging_fim_moments(
    scene: SourceScene,
    n_max: int,
    n_copies: int = 1,
    order: int | None = None,
) -> FisherMatrix:
    """Classical information of direct imaging about t_1..t_n_max.

    Diagonal elements scale as Theta(L^{2n}): the Rayleigh curse in the
    moment chart.
    """
    if order is None:
        order = n_max
    if order < n_max:
        raise ValidationError("expansion order must cover the estimated moments")
    t = MomentVector.from_scene(scene, 2 * order)
    dv = derivative_vectors(
        scene.psf, scene.grid, scene.y0, scene.length, order
    )
    dist = direct_imaging_distribution(t, scene.eps, dv, order, n_params=n_max)
    return fim_discrete(dist, n_copies=n_copies)


def spade_fim_moments(
    scene: SourceScene,
    basis: SpadeBasis | None = None,
    n_max: int = 2,
    n_copies: int = 1,
    k_max: int | None = None,
) -> FisherMatrix:
    """Information of derivative-mode sorting about t_1..t_n_max.

    Even diagonal elements scale as Theta(L^{2n-2 floor(n/2)}), beating
    direct imaging's Theta(L^{2n}).
    """
    if basis is None:
        basis = spade_basis(
            scene.psf,
            scene.grid,
            scene.y0,
            scene.length,
            k_max if k_max is not None else max(n_max, 2),
        )
    if basis.effective_order < n_max:
        raise ValidationError(
            f"sorter order {basis.effective_order} cannot address moments "
            f"up to t_{n_max}"
        )
    t = MomentVector.from_scene(scene, 2 * basis.effective_order)
    dist = spade_outcome_distribution(t.values, scene.eps, basis, n_params=n_max)
    return fim_discrete(dist, n_copies=n_copies)


def spade_two_point_fim(
    scene: SourceScene,
    k_max: int = 3,
    n_copies: int = 1,
    basis: SpadeBasis | None = None,
) -> FisherMatrix:
    """Information of per-mode photon counting in the sorter basis about
    the separation L of a two-point scene.

    Exact single-photon-sector probabilities P(b_l) = <b_l|A|b_l>/det(I+Gamma)
    with A = (I+Gamma)^{-1} Gamma and analytic L-derivatives; outcomes are
    the sorter modes, the one-photon remainder, the vacuum, and a
    multi-photon bucket.  The result is L-independent at leading order,
    in contrast to the O(L^2) of any Gaussian read-out.
    """
    if basis is None:
        basis = spade_basis(
            scene.psf, scene.grid, scene.y0, scene.length, k_max
        )
    gamma = scene_coherence(scene).gamma.real
    dgamma = scene_coherence_dl(scene)
    m = np.eye(gamma.shape[0]) + gamma
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0:
        raise ValidationError("I + Gamma must be positive definite")
    a = np.linalg.solve(m, gamma)
    b = np.linalg.solve(m, dgamma)
    da = np.linalg.solve(m, b.T).T  # (I+G)^-1 dG (I+G)^-1, m symmetric
    p0 = math.exp(-logdet)
    tr_b = float(np.trace(b))
    rows = basis.b[: basis.effective_order + 1]
    q = np.einsum("li,ij,lj->l", rows, a, rows)
    dq = np.einsum("li,ij,lj->l", rows, da, rows)
    tr_a = float(np.trace(a))
    tr_da = float(np.trace(da))

    probs = [float(qi) * p0 for qi in q]
    dprobs = [p0 * (float(dqi) - float(qi) * tr_b) for qi, dqi in zip(q, dq)]
    rest = (tr_a - float(q.sum())) * p0
    drest = p0 * ((tr_da - float(dq.sum())) - (tr_a - float(q.sum())) * tr_b)
    multi = 1.0 - p0 - tr_a * p0
    dmulti = p0 * tr_b - p0 * (tr_da - tr_a * tr_b)
    labels = tuple(f"sorter_b{l}" for l in range(len(q))) + (
        "one_photon_rest",
        "vacuum",
        "multi_photon",
    )
    dist = DiscreteDistribution(
        labels,
        np.array(probs + [rest, p0, multi]),
        ("L",),
        np.array([dprobs + [drest, -p0 * tr_b, dmulti]]),
    )
    return fim_discrete(dist, n_copies=n_copies)


def moment_gaussian_bound(
    dv: DerivativeVectors,
    n: int,
    eps: float,
    n_copies: int = 1,
    m: int | None = None,
) -> float:
    """Ceiling on any Gaussian measurement's information about t_n.

        F_{t_n t_n} <= 4 N (n+1) eps^2 ( sum_{a+b=n} ||omega_a|| ||omega_b|| )^2,

    which is N eps^2 O(L^{2n}); off-diagonal pairs are bounded by the
    geometric mean of the diagonals.
    """
    if m is not None and m != n:
        return math.sqrt(
            moment_gaussian_bound(dv, n, eps, n_copies)
            * moment_gaussian_bound(dv, m, eps, n_copies)
        )
    if not 0 <= n <= dv.n_max:
        raise ValidationError("derivative vectors do not cover this moment order")
    norms = dv.norms()
    s = sum(norms[a] * norms[n - a] for a in range(n + 1))
    return 4 * n_copies * (n + 1) * eps**2 * s**2


def separation_gaussian_bound(
    eps: float,
    length: float,
    n_copies: int = 1,
    sigma: float | None = None,
    dv: DerivativeVectors | None = None,
) -> float:
    """Ceiling on any Gaussian measurement's information about the
    separation of a symmetric two-point scene, at leading order in L.

    Gaussian-PSF closed form N eps^2 L^2 (sqrt(3)+1)^2 / (4 sigma^4); the
    general-PSF form 4 N eps^2 L^2 (||e1||^2 + ||e0|| ||e2||)^2 uses the
    unscaled derivative norms and reduces to the closed form for a
    Gaussian PSF.
    """
    if length < 0:
        raise ValidationError("L must be nonnegative")
    if dv is not None:
        if dv.n_max < 2:
            raise ValidationError("need derivative vectors up to order 2")
        e0 = dv.norm(0)
        e1 = dv.norm(1) / dv.length
        e2 = dv.norm(2) * 2 / dv.length**2
        return 4 * n_copies * eps**2 * length**2 * (e1**2 + e0 * e2) ** 2
    if sigma is None:
        raise ValidationError("pass sigma for the closed form or dv for the general one")
    return (
        n_copies * eps**2 * length**2 * (math.sqrt(3) + 1) ** 2 / (4 * sigma**4)
    )


def separation_interferometric_bound(
    eps: float, k: float, length: float, n_copies: int = 1
) -> float:
    """Two-aperture (baseline wavevector k) Gaussian-measurement ceiling
    2 N eps^2 k^2 sin^2(kL) for the separation of a two-point scene."""
    if k <= 0:
        raise ValidationError("wavevector k must be positive")
    if length < 0:
        raise ValidationError("L must be nonnegative")
    return 2 * n_copies * eps**2 * k**2 * math.sin(k * length) ** 2


def gaussian_measurement_fim_scene(
    scene: SourceScene,
    meas,
    params="L",
    n_copies: int = 1,
    order: int | None = None,
) -> FisherMatrix:
    """Information of an arbitrary Gaussian measurement on a scene.

    params is either "L" (separation chart, analytic derivative) or an
    integer n_max (moment chart via the derivative-vector expansion).
    meas must be defined on the grid's pixel modes.
    """
    if meas.n_modes != scene.grid.n_points:
        raise ValidationError(
            f"measurement acts on {meas.n_modes} modes, grid has "
            f"{scene.grid.n_points}"
        )
    v = scene_state(scene).v
    ix = np.ix_(meas.measured, meas.measured)
    c = (v + meas.v_pi)[ix]

    def blocks(dg: np.ndarray) -> np.ndarray:
        z = np.zeros_like(dg)
        return np.block([[dg, z], [z, dg]])[ix]

    if params == "L":
        derivs = [blocks(scene_coherence_dl(scene))]
        names: tuple[str, ...] = ("L",)
    else:
        n_max = int(params)
        if n_max < 1:
            raise ValidationError("params must be 'L' or a positive moment count")
        if order is None:
            order = n_max
        dv = derivative_vectors(
            scene.psf, scene.grid, scene.y0, scene.length, order
        )
        derivs = [
            blocks(gamma_expansion_dt(dv, k, scene.eps, order))
            for k in range(1, n_max + 1)
        ]
        names = tuple(f"t{k}" for k in range(1, n_max + 1))
    return fim_gaussian(c, derivs=derivs, params=names, n_copies=n_copies)


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power-law fit value = 10^intercept * scale^slope."""

    slope: float
    intercept: float
    rms_residual: float
    n_points: int


def scaling_exponent_fit(scales, values) -> ScalingFit:
    """Fit the log-log slope of a positive power-law sample set."""
    x = np.asarray(scales, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size != y.size or x.size < 4:
        raise ValidationError("need at least four (scale, value) pairs")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValidationError("scales and values must be positive")
    lx = np.log10(x)
    ly = np.log10(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return ScalingFit(
        float(slope),
        float(intercept),
        float(np.sqrt(np.mean(resid**2))),
        int(x.size),
    )

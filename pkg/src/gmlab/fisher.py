"""Fisher information for Gaussian and discrete outcome models.

Two computational routes are kept deliberately independent so they can
cross-check each other:

* the generic half-trace formula F_ij = (1/2) tr(C^-1 dC_i C^-1 dC_j)
  for zero-mean Gaussian outcome statistics, with analytic or central-
  difference covariance derivatives, and
* closed-form expressions for the standard two-mode interferometric
  read-outs (post-interference homodyne and heterodyne, and two-port
  photon counting).

The closed forms here are the information actually extractable from the
stated outcome distributions; see xx_form_report for a variant expression
whose diagonal is exactly twice these values and whose cross term is not
positive semidefinite.  The report treats the generic numeric route as
ground truth and quantifies the deviation instead of asserting either
expression.

Upper bounds on any Gaussian measurement's information (two-lens,
multi-lens, single-lens) live here as well, together with a bound
checker that compares a computed matrix element-by-element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import (
    DivergentInformationError,
    SingularCovarianceError,
    ValidationError,
)
from .gstate import (
    GaussianState,
    apply_symplectic,
    balanced_beam_splitter,
    two_lens_state,
)

FIM_SYMMETRY_TOL = 1e-10
FIM_PSD_FLOOR = -1e-8
RANK_REL_TOL = 1e-10
COV_MIN_EIG = 1e-12
DEFAULT_FD_STEP_SCALE = 1e-5


def numeric_jacobian(f, at, step: float | None = None) -> list[np.ndarray]:
    """Central-difference derivatives of a matrix-valued function.

    Step defaults to 1e-5 * max(1, |param|) per coordinate.
    """
    at = np.atleast_1d(np.asarray(at, dtype=float))
    out: list[np.ndarray] = []
    for i in range(at.size):
        h = step if step is not None else DEFAULT_FD_STEP_SCALE * max(1.0, abs(at[i]))
        if h <= 0:
            raise ValidationError("finite-difference step must be positive")
        hi = at.copy()
        lo = at.copy()
        hi[i] += h
        lo[i] -= h
        fp = np.asarray(f(hi), dtype=float)
        fm = np.asarray(f(lo), dtype=float)
        d = (fp - fm) / (2 * h)
        if not np.all(np.isfinite(d)):
            raise ValidationError(f"non-finite derivative for parameter {i}")
        out.append(d)
    return out


@dataclass(frozen=True)
class FisherMatrix:
    """Fisher information matrix for n_copies independent copies.

    matrix is the total information (already scaled by n_copies).
    divergent lists parameters whose information is infinite for the
    model at hand; the finite part is still stored.
    """

    params: tuple[str, ...]
    matrix: NDArray[np.float64]
    n_copies: int = 1
    divergent: tuple[str, ...] = field(default_factory=tuple)
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        d = len(self.params)
        if m.shape != (d, d):
            raise ValidationError("matrix shape must match the parameter list")
        if m.size and np.max(np.abs(m - m.T)) > FIM_SYMMETRY_TOL * max(
            1.0, float(np.abs(m).max())
        ):
            raise ValidationError("Fisher matrix must be symmetric")
        m = (m + m.T) / 2
        eigs = np.linalg.eigvalsh(m)
        if float(eigs.min()) < FIM_PSD_FLOOR * max(1.0, float(eigs.max())):
            raise ValidationError(
                f"Fisher matrix has negative eigenvalue {eigs.min()!r}"
            )
        if self.n_copies < 1:
            raise ValidationError("n_copies must be at least 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "divergent", tuple(self.divergent))
        object.__setattr__(self, "notes", tuple(self.notes))

    def __getitem__(self, pair: tuple[str, str]) -> float:
        i = self.params.index(pair[0])
        j = self.params.index(pair[1])
        return float(self.matrix[i, j])

    @property
    def rank(self) -> int:
        eigs = np.abs(np.linalg.eigvalsh(self.matrix))
        top = float(eigs.max(initial=0.0))
        if top == 0.0:
            return 0
        return int(np.sum(eigs > RANK_REL_TOL * top))

    @property
    def max_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).max())

    def to_json(self) -> dict:
        return {
            "params": list(self.params),
            "matrix": self.matrix.tolist(),
            "n_copies": self.n_copies,
            "divergent": list(self.divergent),
            "notes": list(self.notes),
        }


def _check_cov(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValidationError("covariance must be square")
    if np.max(np.abs(c - c.T)) > FIM_SYMMETRY_TOL * max(1.0, float(np.abs(c).max())):
        raise ValidationError("covariance must be symmetric")
    c = (c + c.T) / 2
    eigs = np.linalg.eigvalsh(c)
    if float(eigs.min()) <= COV_MIN_EIG:
        raise SingularCovarianceError(
            f"outcome covariance is singular (min eigenvalue {eigs.min()!r}); "
            "information diverges for a noiseless deterministic quadrature"
        )
    return c


def fim_gaussian(
    cov,
    at=None,
    derivs=None,
    params: tuple[str, ...] | None = None,
    n_copies: int = 1,
    step: float | None = None,
) -> FisherMatrix:
    """Half-trace Fisher matrix of zero-mean Gaussian outcome statistics.

    cov is either a callable mapping a parameter vector to the outcome
    covariance (derivatives then default to central differences at `at`)
    or a fixed matrix accompanied by explicit derivative matrices.
    """
    if callable(cov):
        if at is None:
            raise ValidationError("pass the evaluation point for a callable cov")
        at = np.atleast_1d(np.asarray(at, dtype=float))
        c = _check_cov(cov(at))
        if derivs is None:
            derivs = numeric_jacobian(cov, at, step=step)
    else:
        if derivs is None:
            raise ValidationError("fixed covariance requires explicit derivatives")
        c = _check_cov(cov)
    dmats = [np.asarray(d, dtype=float) for d in derivs]
    for d in dmats:
        if d.shape != c.shape:
            raise ValidationError("derivative shape does not match the covariance")
    k = len(dmats)
    x = [np.linalg.solve(c, d) for d in dmats]
    f = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            f[i, j] = f[j, i] = 0.5 * float(np.sum(x[i] * x[j].T))
    if params is None:
        params = tuple(f"p{i}" for i in range(k))
    if len(params) != k:
        raise ValidationError("params length must match the derivative count")
    return FisherMatrix(tuple(params), n_copies * f, n_copies=n_copies)


def fim_discrete(dist, n_copies: int = 1) -> FisherMatrix:
    """Classical Fisher matrix sum_k dp_i dp_j / p_k of a finite model.

    dist provides probs, dprobs, params (see measure.DiscreteDistribution).
    Outcomes with zero probability but nonzero derivative make the
    information formally infinite; those parameters are flagged as
    divergent and excluded from the finite sum instead of dividing by
    zero.
    """
    p = np.asarray(dist.probs, dtype=float)
    d = np.asarray(dist.dprobs, dtype=float)
    params = tuple(dist.params)
    scale = max(1.0, float(np.abs(d).max(initial=0.0)))
    pos = p > 0
    divergent: list[str] = []
    for i, name in enumerate(params):
        if np.any(np.abs(d[i, ~pos]) > 1e-12 * scale):
            divergent.append(name)
    f = (d[:, pos] / p[pos]) @ d[:, pos].T
    f = n_copies * (f + f.T) / 2
    notes = tuple(dist.notes)
    if divergent:
        notes = notes + (
            "information diverges for: " + ", ".join(divergent) + " "
            "(zero-probability outcome with nonzero sensitivity); finite part kept",
        )
    return FisherMatrix(params, f, n_copies=n_copies, divergent=tuple(divergent),
                        notes=notes)


def photon_counting_fim(
    eps: float,
    g_abs: float,
    theta: float,
    delta: float = 0.0,
    n_copies: int = 1,
) -> FisherMatrix:
    """Information of two-port photon counting on the two-lens state.

    F = N eps / (1 - |g|^2 cos^2(theta+delta)) *
        [[cos^2, -|g| sin cos], [-|g| sin cos, |g|^2 sin^2]]
    with the trig functions evaluated at theta + delta.  The matrix is
    rank 1: one interference pattern pins down a single combination of
    (|g|, theta); scanning the auxiliary phase delta across copies
    recovers both.  Linear in eps, which is the whole point: quadrature
    read-outs are stuck at O(eps^2).
    """
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    if not 0 <= g_abs <= 1:
        raise ValidationError("|g| must lie in [0, 1]")
    c = math.cos(theta + delta)
    s = math.sin(theta + delta)
    denom = 1 - g_abs**2 * c**2
    if denom < 1e-12:
        raise DivergentInformationError(
            "|g| cos(theta+delta) = 1: a zero-probability port with nonzero "
            "sensitivity makes the information diverge"
        )
    pref = n_copies * eps / denom
    m = pref * np.array(
        [
            [c**2, -g_abs * s * c],
            [-g_abs * s * c, g_abs**2 * s**2],
        ]
    )
    return FisherMatrix(
        ("g_abs", "theta"),
        m,
        n_copies=n_copies,
        notes=(
            "rank 1: a single interference pattern resolves one combination "
            "of (g_abs, theta); vary the auxiliary phase across copies for both",
        ),
    )


def heterodyne_fim_closed_form(
    eps: float, g_abs: float, n_copies: int = 1
) -> FisherMatrix:
    """Closed-form information of dual-port heterodyne after interference.

    F_gg = N eps^2 [ (2+eps-eps|g|)^-2 + (2+eps+eps|g|)^-2 ],
    F_tt = 2 N eps^2 |g|^2 / (4 + eps (4 + eps - eps |g|^2)),
    F_gt = 0.  Matches the generic half-trace route on the heterodyne
    outcome covariance; O(eps^2) in the weak-source limit.
    """
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    if not 0 <= g_abs <= 1:
        raise ValidationError("|g| must lie in [0, 1]")
    n = n_copies
    f_gg = n * eps**2 * (
        1 / (2 + eps - eps * g_abs) ** 2 + 1 / (2 + eps + eps * g_abs) ** 2
    )
    f_tt = 2 * n * eps**2 * g_abs**2 / (4 + eps * (4 + eps - eps * g_abs**2))
    return FisherMatrix(("g_abs", "theta"), np.diag([f_gg, f_tt]), n_copies=n)


def homodyne_fim_closed_form(
    eps: float,
    g_abs: float,
    theta: float = 0.0,
    n_copies: int = 1,
    variant: str = "xp",
) -> FisherMatrix:
    """Closed-form information of single-quadrature read-out after
    balanced interference of the two lens modes.

    Variants name the quadratures read at the two output ports.  For
    'xp'/'px' (conjugate quadratures),

        F_gg = (N eps^2 / 2) [ (1+eps-eps|g|)^-2 + (1+eps+eps|g|)^-2 ],
        F_tt = N eps^2 |g|^2 / (1 + eps (2 + eps - eps |g|^2)),
        F_gt = 0,

    independent of theta.  For 'xx'/'pp' (same quadrature at both ports)
    the matrix is rank 1,

        F = N eps^2 (A^2 + B^2 c^2) / (A^2 - B^2 c^2)^2
            * [[c^2, -|g| s c], [-|g| s c, |g|^2 s^2]],

    with A = 1+eps, B = eps|g|, c = cos(theta), s = sin(theta).  Both
    match the generic half-trace route on the corresponding marginals.
    """
    if variant not in ("xx", "pp", "xp", "px"):
        raise ValidationError("variant must be one of xx, pp, xp, px")
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    if not 0 <= g_abs <= 1:
        raise ValidationError("|g| must lie in [0, 1]")
    n = n_copies
    a = 1 + eps
    b = eps * g_abs
    if variant in ("xp", "px"):
        f_gg = n * eps**2 / 2 * (1 / (a - b) ** 2 + 1 / (a + b) ** 2)
        f_tt = n * eps**2 * g_abs**2 / (a**2 - b**2)
        return FisherMatrix(("g_abs", "theta"), np.diag([f_gg, f_tt]), n_copies=n)
    c = math.cos(theta)
    s = math.sin(theta)
    pref = n * eps**2 * (a**2 + b**2 * c**2) / (a**2 - b**2 * c**2) ** 2
    m = pref * np.array(
        [
            [c**2, -g_abs * s * c],
            [-g_abs * s * c, g_abs**2 * s**2],
        ]
    )
    notes = (
        "rank 1: same-quadrature read-out senses only one combination of "
        "(g_abs, theta)",
    )
    return FisherMatrix(("g_abs", "theta"), m, n_copies=n, notes=notes)


def homodyne_xx_alternate_form(
    eps: float, g_abs: float, theta: float, n_copies: int = 1
) -> NDArray[np.float64]:
    """Variant same-quadrature expression kept for comparison only.

    Prefactor N eps^2 (2 + eps(4 + eps(2+|g|^2)) + eps^2|g|^2 cos 2theta)
    over ((1+eps)^2 - eps^2|g|^2 cos^2 theta)^2, times
    [[cos^2, -sin 2theta], [-sin 2theta, sin^2]].  The prefactor is exactly
    twice homodyne_fim_closed_form's, so the leading element is doubled;
    the matrix part drops |g| entirely, and the whole is generally not
    positive semidefinite.  Returned as a plain array; see xx_form_report.
    """
    c = math.cos(theta)
    s = math.sin(theta)
    num = eps**2 * (
        2 + eps * (4 + eps * (2 + g_abs**2)) + eps**2 * g_abs**2 * math.cos(2 * theta)
    )
    den = ((1 + eps) ** 2 - eps**2 * g_abs**2 * c**2) ** 2
    return (
        n_copies
        * num
        / den
        * np.array(
            [
                [c**2, -math.sin(2 * theta)],
                [-math.sin(2 * theta), s**2],
            ]
        )
    )


@dataclass(frozen=True)
class XxFormReport:
    """Numeric ground truth vs the two same-quadrature closed forms."""

    numeric: NDArray[np.float64]
    closed_form: NDArray[np.float64]
    alternate: NDArray[np.float64]
    closed_form_max_dev: float
    alternate_max_dev: float
    alternate_psd: bool


def _two_lens_xx_marginal_cov(eps: float):
    """Covariance of (x1, x2) at the interferometer outputs as a function
    of (|g|, theta)."""
    bs = balanced_beam_splitter(2, 0, 1)

    def cov(at: np.ndarray) -> np.ndarray:
        g, th = float(at[0]), float(at[1])
        state = apply_symplectic(two_lens_state(eps, g, th), bs)
        return state.v[np.ix_([0, 1], [0, 1])]

    return cov


def xx_form_report(
    eps: float, g_abs: float, theta: float, n_copies: int = 1
) -> XxFormReport:
    """Compare the same-quadrature closed forms against the numeric route.

    The numeric half-trace value on the marginal (x1, x2) covariance is
    the ground truth; deviations are reported as max |dF| / max |F|.
    """
    numeric = fim_gaussian(
        _two_lens_xx_marginal_cov(eps),
        at=(g_abs, theta),
        params=("g_abs", "theta"),
        n_copies=n_copies,
    ).matrix
    closed = homodyne_fim_closed_form(
        eps, g_abs, theta, n_copies=n_copies, variant="xx"
    ).matrix
    alt = homodyne_xx_alternate_form(eps, g_abs, theta, n_copies=n_copies)
    scale = max(float(np.abs(numeric).max()), 1e-300)
    dev_closed = float(np.abs(closed - numeric).max()) / scale
    dev_alt = float(np.abs(alt - numeric).max()) / scale
    alt_psd = bool(np.linalg.eigvalsh((alt + alt.T) / 2).min() >= -1e-12 * scale)
    return XxFormReport(numeric, closed, alt, dev_closed, dev_alt, alt_psd)


@dataclass(frozen=True)
class FimBounds:
    """Per-element upper bounds |F_ij| <= element[(i, j)], with an optional
    matrix bound F <= matrix_coeff * I."""

    label: str
    element: dict
    matrix_coeff: float | None = None


def two_lens_gaussian_bounds(
    eps: float, g_abs: float, n_copies: int = 1
) -> FimBounds:
    """Ceiling on any Gaussian measurement's information about (|g|, theta)
    in two-lens interferometry, joint measurements over copies included.

        F_gg <= 2 N eps^2,   F_tt <= 2 N eps^2 |g|^2,
        |F_gt| <= 2 N eps^2 |g|,   F <= 2 N eps^2 (1 + |g|^2) I.

    O(eps^2), versus the O(eps) of photon counting.
    """
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    if not 0 <= g_abs <= 1:
        raise ValidationError("|g| must lie in [0, 1]")
    n = n_copies
    element = {
        ("g_abs", "g_abs"): 2 * n * eps**2,
        ("theta", "theta"): 2 * n * eps**2 * g_abs**2,
        ("g_abs", "theta"): 2 * n * eps**2 * g_abs,
    }
    return FimBounds(
        "two-lens-gaussian", element, matrix_coeff=2 * n * eps**2 * (1 + g_abs**2)
    )


def multi_lens_gaussian_bounds(
    eps: float, g: np.ndarray, n_copies: int = 1
) -> FimBounds:
    """Gaussian-measurement ceiling for an M-lens array.

    Parameters are the pairwise coherences g_ij = |g_ij| e^{i theta_ij},
    i < j.  Element bounds: F_{|g_ij||g_ij|} <= 2 N eps^2 and
    F_{theta_ij theta_ij} <= 2 N |g_ij|^2 eps^2; matrix bound
    F <= 2 M (M-1) N eps^2 I over all M(M-1) real parameters.
    """
    g = np.asarray(g, dtype=complex)
    m = g.shape[0]
    if g.ndim != 2 or g.shape != (m, m) or m < 2:
        raise ValidationError("g must be a square matrix over at least two lenses")
    if np.max(np.abs(g - g.conj().T)) > 1e-12:
        raise ValidationError("g must be Hermitian")
    if np.max(np.abs(np.diag(g) - 1)) > 1e-12:
        raise ValidationError("g must have unit diagonal")
    if float(np.abs(g).max()) > 1 + 1e-12:
        raise ValidationError("coherences must satisfy |g_ij| <= 1")
    n = n_copies
    element = {}
    for i in range(m):
        for j in range(i + 1, m):
            gij = abs(g[i, j])
            element[(f"g_abs_{i}{j}", f"g_abs_{i}{j}")] = 2 * n * eps**2
            element[(f"theta_{i}{j}", f"theta_{i}{j}")] = 2 * n * gij**2 * eps**2
    return FimBounds(
        "multi-lens-gaussian",
        element,
        matrix_coeff=2 * m * (m - 1) * n * eps**2,
    )


def single_lens_gaussian_bound(
    g_dtheta: np.ndarray, n_copies: int = 1, rank_rel_tol: float = RANK_REL_TOL
) -> float:
    """Gaussian-measurement ceiling for one parameter in single-lens imaging.

    g_dtheta is the derivative of the quadrature coupling block with
    respect to the parameter; the bound is
    max_i |lambda_i|^2 * rank * 2N, with the rank taken at a relative
    eigenvalue threshold so grid-quadrature noise does not inflate it.
    """
    g_dtheta = np.asarray(g_dtheta, dtype=float)
    if g_dtheta.ndim != 2 or g_dtheta.shape[0] != g_dtheta.shape[1]:
        raise ValidationError("g_dtheta must be square")
    if np.max(np.abs(g_dtheta - g_dtheta.T)) > 1e-10 * max(
        1.0, float(np.abs(g_dtheta).max())
    ):
        raise ValidationError("g_dtheta must be symmetric")
    eigs = np.abs(np.linalg.eigvalsh((g_dtheta + g_dtheta.T) / 2))
    top = float(eigs.max(initial=0.0))
    if top == 0.0:
        return 0.0
    rank = int(np.sum(eigs > rank_rel_tol * top))
    return top**2 * rank * 2 * n_copies


@dataclass(frozen=True)
class BoundRow:
    pair: tuple[str, str]
    value: float
    bound: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.bound - self.value


@dataclass(frozen=True)
class BoundReport:
    """Element-by-element comparison of a Fisher matrix to its bounds."""

    label: str
    rows: tuple[BoundRow, ...]
    tol: float

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "tol": self.tol,
            "all_passed": self.all_passed,
            "rows": [
                {
                    "pair": list(r.pair),
                    "value": r.value,
                    "bound": r.bound,
                    "slack": r.slack,
                    "passed": r.passed,
                }
                for r in self.rows
            ],
        }

    def csv_rows(self) -> list[dict]:
        return [
            {
                "pair": f"{r.pair[0]}|{r.pair[1]}",
                "value": r.value,
                "bound": r.bound,
                "slack": r.slack,
                "passed": int(r.passed),
            }
            for r in self.rows
        ]


def check_bounds(fim: FisherMatrix, bounds: FimBounds, tol: float = 1e-8) -> BoundReport:
    """Check |F_ij| <= bound + tol per element and, when the bounds carry a
    matrix coefficient, lambda_max(F) <= coeff + tol."""
    rows: list[BoundRow] = []
    for (pi, pj), b in bounds.element.items():
        if pi in fim.params and pj in fim.params:
            v = abs(fim[(pi, pj)])
            rows.append(BoundRow((pi, pj), v, float(b), v <= b + tol))
    if bounds.matrix_coeff is not None:
        v = fim.max_eigenvalue
        rows.append(
            BoundRow(
                ("matrix", "lambda_max"),
                v,
                float(bounds.matrix_coeff),
                v <= bounds.matrix_coeff + tol,
            )
        )
    if not rows:
        raise ValidationError("no bound addresses any parameter of this matrix")
    return BoundReport(bounds.label, tuple(rows), tol)


def tensor_copies(v: np.ndarray, n: int) -> NDArray[np.float64]:
    """Block-diagonal covariance of n independent copies in xxpp ordering.

    Copies are mode-major: quadrature k of copy c sits at index c*m + k
    within each of the x and p halves.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
        raise ValidationError("v must be square with even dimension")
    if n < 1:
        raise ValidationError("n must be at least 1")
    m = v.shape[0] // 2
    eye = np.eye(n)
    xx = np.kron(eye, v[:m, :m])
    xp = np.kron(eye, v[:m, m:])
    pp = np.kron(eye, v[m:, m:])
    return np.block([[xx, xp], [xp.T, pp]])


def two_lens_joint_fim(
    eps: float,
    g_abs: float,
    theta: float,
    meas,
    n_joint: int = 1,
    n_copies: int = 1,
) -> FisherMatrix:
    """Information of one Gaussian measurement applied jointly to n_joint
    copies of the two-lens state, times n_copies repetitions.

    meas must act on 2*n_joint modes; its POVM covariance may couple the
    copies arbitrarily.  Uses analytic covariance derivatives.
    """
    from .gstate import two_lens_cov_derivs  # analytic dV/d|g|, dV/dtheta

    state = two_lens_state(eps, g_abs, theta)
    if meas.n_modes != 2 * n_joint:
        raise ValidationError(
            f"measurement acts on {meas.n_modes} modes, expected {2 * n_joint}"
        )
    big = tensor_copies(state.v, n_joint)
    dvg, dvt = two_lens_cov_derivs(eps, g_abs, theta)
    ix = np.ix_(meas.measured, meas.measured)
    c = (big + meas.v_pi)[ix]
    derivs = [tensor_copies(dvg, n_joint)[ix], tensor_copies(dvt, n_joint)[ix]]
    return fim_gaussian(
        c, derivs=derivs, params=("g_abs", "theta"), n_copies=n_copies
    )

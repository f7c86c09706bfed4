"""Monte Carlo cross-checks of Cramer-Rao predictions.

Each family simulates a concrete read-out, runs a maximum-likelihood
estimate per trial, and compares the empirical mean squared error with
the inverse Fisher information for the same sample size.  The bootstrap
half-width turns "below the bound" into a statistically meaningful
statement instead of a point comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import ConvergenceError, ValidationError
from ..fisher import heterodyne_fim_closed_form, photon_counting_fim
from ..gstate import apply_symplectic, balanced_beam_splitter, two_lens_state
from ..measure import photon_counting_two_mode

BOOTSTRAP_RESAMPLES = 200
MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class McResult:
    """Empirical MSE of an ML estimator next to its CRB."""

    family: str
    estimate: str
    true_value: float
    n_samples: int
    n_trials: int
    mse: float
    crb: float
    ci_half_width: float
    converged_rate: float
    notes: tuple[str, ...] = field(default=())

    @property
    def ratio(self) -> float:
        return self.mse / self.crb

    @property
    def below_crb_significantly(self) -> bool:
        """True when the MSE sits below the CRB by more than 3 bootstrap widths."""
        return self.mse < self.crb - 3.0 * self.ci_half_width


def _maximize(loglik, lo: float, hi: float) -> tuple[float, bool]:
    res = minimize_scalar(
        lambda x: -loglik(x),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x), bool(res.success)


def _bootstrap_half_width(sq_errors: np.ndarray, rng: np.random.Generator) -> float:
    n = sq_errors.size
    idx = rng.integers(0, n, size=(BOOTSTRAP_RESAMPLES, n))
    means = sq_errors[idx].mean(axis=1)
    return 1.96 * float(np.std(means, ddof=1))


def _require(params: dict, *names: str) -> list[float]:
    out = []
    for name in names:
        if name not in params:
            raise ValidationError(f"mc params missing '{name}'")
        out.append(float(params[name]))
    return out


def _run_bernoulli(params, estimate, n_samples, n_trials, root):
    (p,) = _require(params, "p")
    if not 0 < p < 1:
        raise ValidationError("mc params 'p' must lie strictly in (0, 1)")
    crb = p * (1.0 - p) / n_samples
    estimates = np.empty(n_trials)
    ok = np.zeros(n_trials, dtype=bool)
    for t, ss in enumerate(root.spawn(n_trials)):
        rng = np.random.Generator(np.random.PCG64(ss))
        k = rng.binomial(n_samples, p)

        def loglik(q, k=k):
            return k * np.log(q) + (n_samples - k) * np.log1p(-q)

        estimates[t], ok[t] = _maximize(loglik, 1e-9, 1.0 - 1e-9)
    return estimates, ok, crb, p


def _run_photon_counting(params, estimate, n_samples, n_trials, root):
    eps, g_abs, theta, delta = _require(params, "eps", "g_abs", "theta", "delta")
    dist = photon_counting_two_mode(eps, g_abs, theta, delta=delta)
    fim = photon_counting_fim(eps, g_abs, theta, delta=delta, n_copies=n_samples)
    if estimate == "theta":
        crb = 1.0 / fim[("theta", "theta")]
        true = theta
        if not 1e-3 < theta + delta < np.pi - 1e-3:
            raise ValidationError(
                "mc photon_counting needs theta + delta inside (0, pi) "
                "for an identifiable phase"
            )
        lo, hi = -delta + 1e-9, -delta + np.pi - 1e-9
    else:
        crb = 1.0 / fim[("g_abs", "g_abs")]
        true = g_abs
        lo, hi = 1e-9, 1.0 - 1e-9

    probs = dist.probs
    estimates = np.empty(n_trials)
    ok = np.zeros(n_trials, dtype=bool)
    for t, ss in enumerate(root.spawn(n_trials)):
        rng = np.random.Generator(np.random.PCG64(ss))
        counts = rng.multinomial(n_samples, probs)

        def loglik(x, counts=counts):
            if estimate == "theta":
                p = photon_counting_two_mode(eps, g_abs, x, delta=delta).probs
            else:
                p = photon_counting_two_mode(eps, x, theta, delta=delta).probs
            return float(np.dot(counts, np.log(np.maximum(p, 1e-300))))

        estimates[t], ok[t] = _maximize(loglik, lo, hi)
    return estimates, ok, crb, true


def _run_heterodyne(params, estimate, n_samples, n_trials, root):
    eps, g_abs, theta = _require(params, "eps", "g_abs", "theta")

    def outcome_cov(g):
        state = apply_symplectic(
            two_lens_state(eps, g, theta), balanced_beam_splitter(2, 0, 1)
        )
        return state.v + 0.5 * np.eye(4)

    c_true = outcome_cov(g_abs)
    chol = np.linalg.cholesky(c_true)
    fim = heterodyne_fim_closed_form(eps, g_abs, n_copies=n_samples)
    crb = 1.0 / fim[("g_abs", "g_abs")]

    estimates = np.empty(n_trials)
    ok = np.zeros(n_trials, dtype=bool)
    for t, ss in enumerate(root.spawn(n_trials)):
        rng = np.random.Generator(np.random.PCG64(ss))
        z = rng.standard_normal((n_samples, 4))
        y = z @ chol.T
        second_moment = y.T @ y / n_samples

        def loglik(g, s=second_moment):
            c = outcome_cov(g)
            sign, logdet = np.linalg.slogdet(c)
            return -0.5 * n_samples * (logdet + np.trace(np.linalg.solve(c, s)))

        estimates[t], ok[t] = _maximize(loglik, 1e-9, 1.0 - 1e-9)
    return estimates, ok, crb, g_abs


_FAMILIES = {
    "bernoulli": _run_bernoulli,
    "photon_counting": _run_photon_counting,
    "heterodyne": _run_heterodyne,
}


def mc_crb_check(
    family: str,
    params: dict,
    estimate: str,
    n_samples: int,
    n_trials: int,
    seed: int = 0,
) -> McResult:
    """Simulate `n_trials` experiments of `n_samples` shots each.

    Raises ConvergenceError when more than MAX_FAILURE_RATE of the
    per-trial optimizations fail to converge.
    """
    if family not in _FAMILIES:
        raise ValidationError(f"unknown mc family {family!r}")
    if n_trials < 10:
        raise ValidationError("mc needs at least 10 trials")
    root = np.random.SeedSequence(seed)
    estimates, ok, crb, true = _FAMILIES[family](
        params, estimate, n_samples, n_trials, root
    )

    failure_rate = 1.0 - float(np.mean(ok))
    if failure_rate > MAX_FAILURE_RATE:
        raise ConvergenceError(
            f"mc family {family!r}: {failure_rate:.1%} of {n_trials} trials "
            "failed to converge"
        )

    sq_errors = (estimates[ok] - true) ** 2
    boot_rng = np.random.Generator(np.random.PCG64(root.spawn(n_trials + 1)[-1]))
    half_width = _bootstrap_half_width(sq_errors, boot_rng)

    notes = []
    if abs(np.mean(estimates[ok]) - true) > 3.0 * np.sqrt(crb / ok.sum()):
        notes.append("estimator bias exceeds three standard errors")
    return McResult(
        family=family,
        estimate=estimate,
        true_value=true,
        n_samples=n_samples,
        n_trials=n_trials,
        mse=float(np.mean(sq_errors)),
        crb=float(crb),
        ci_half_width=half_width,
        converged_rate=float(np.mean(ok)),
        notes=tuple(notes),
    )

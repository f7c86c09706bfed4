"""Sweep drivers behind the command-line experiments.

Each driver takes a typed config plus a seed and returns plain tables;
every random draw comes from its own SeedSequence substream keyed by the
sweep indices, so rerunning any configuration reproduces the output
byte for byte regardless of iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..bayescrb import (
    FisherProfile,
    eigen_solver,
    k_functional,
    optimal_prior_quadratic_fi,
    worst_case_bounds,
)
from ..errors import ValidationError
from ..fisher import (
    check_bounds,
    heterodyne_fim_closed_form,
    homodyne_fim_closed_form,
    photon_counting_fim,
    single_lens_gaussian_bound,
    two_lens_gaussian_bounds,
    two_lens_joint_fim,
)
from ..measure import random_valid_gaussian_measurement, spade_basis
from ..optics import GaussianPsf, Grid, derivative_vectors
from ..superres import (
    SourceScene,
    direct_imaging_fim_moments,
    gaussian_measurement_fim_scene,
    moment_gaussian_bound,
    scene_coherence_dl,
    scaling_exponent_fit,
    separation_gaussian_bound,
    spade_fim_moments,
    spade_two_point_fim,
)
from .config import (
    BayesConfig,
    InterferometricConfig,
    McConfig,
    SingleLensConfig,
    SuperresConfig,
)
from .emit import Table
from .montecarlo import mc_crb_check


@dataclass(frozen=True)
class SweepResult:
    tables: tuple[Table, ...]
    bounds_ok: bool
    notes: tuple[str, ...] = field(default=())


def _substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


def _fit_rows(tag: str, quantity: str, scales, values, rows: list) -> None:
    vals = np.asarray(values, dtype=float)
    if np.all(vals > 0):
        fit = scaling_exponent_fit(scales, vals)
        rows.append(
            (tag, quantity, fit.slope, fit.intercept, fit.rms_residual, fit.n_points)
        )


def _sweep_interferometric(cfg: InterferometricConfig, seed: int) -> SweepResult:
    lo, hi, pts = cfg.eps_grid
    eps_values = np.geomspace(lo, hi, pts)
    fim_rows: list[tuple] = []
    bound_rows: list[tuple] = []
    slope_rows: list[tuple] = []
    series: dict[tuple[str, str], list[float]] = {}
    bounds_ok = True

    for name in cfg.measurements:
        for i, eps in enumerate(eps_values):
            eps = float(eps)
            if name == "random":
                entries = []
                for j in range(cfg.n_random):
                    rng = _substream(seed, i, j)
                    meas = random_valid_gaussian_measurement(
                        2 * cfg.joint_copies, rng, squeeze_max=cfg.squeeze_max
                    )
                    fim = two_lens_joint_fim(
                        eps,
                        cfg.g_abs,
                        cfg.theta,
                        meas,
                        n_joint=cfg.joint_copies,
                        n_copies=cfg.n_copies,
                    )
                    entries.append((j, fim, cfg.joint_copies))
            elif name == "heterodyne":
                fim = heterodyne_fim_closed_form(eps, cfg.g_abs, n_copies=cfg.n_copies)
                entries = [(0, fim, 1)]
            elif name in ("homodyne_xp", "homodyne_xx"):
                fim = homodyne_fim_closed_form(
                    eps,
                    cfg.g_abs,
                    cfg.theta,
                    variant=name.split("_")[1],
                    n_copies=cfg.n_copies,
                )
                entries = [(0, fim, 1)]
            else:
                fim = photon_counting_fim(
                    eps, cfg.g_abs, cfg.theta, delta=cfg.delta, n_copies=cfg.n_copies
                )
                entries = [(0, fim, 1)]

            for j, fim, n_joint in entries:
                f_gg = fim[("g_abs", "g_abs")]
                f_tt = fim[("theta", "theta")]
                fim_rows.append((name, j, eps, f_gg, f_tt))
                if name != "random":
                    series.setdefault((name, "f_g_g"), []).append(f_gg)
                    series.setdefault((name, "f_theta_theta"), []).append(f_tt)
                if name == "photon_counting":
                    continue  # bound applies to Gaussian read-outs only
                report = check_bounds(
                    fim,
                    two_lens_gaussian_bounds(
                        eps, cfg.g_abs, n_copies=cfg.n_copies * n_joint
                    ),
                )
                bounds_ok = bounds_ok and report.all_passed
                for row in report.rows:
                    bound_rows.append(
                        (
                            name,
                            j,
                            eps,
                            f"{row.pair[0]}|{row.pair[1]}",
                            row.value,
                            row.bound,
                            row.slack,
                            int(row.passed),
                        )
                    )

    for (name, quantity), values in series.items():
        _fit_rows(name, quantity, eps_values, values, slope_rows)

    tables = (
        Table("fim", ("measurement", "draw", "eps", "f_g_g", "f_theta_theta"), tuple(fim_rows)),
        Table(
            "bounds",
            ("measurement", "draw", "eps", "pair", "value", "bound", "slack", "passed"),
            tuple(bound_rows),
        ),
        Table(
            "slopes",
            ("measurement", "quantity", "slope", "intercept", "rms_residual", "n_points"),
            tuple(slope_rows),
        ),
    )
    return SweepResult(tables, bounds_ok)


def _build_scene(cfg: SingleLensConfig) -> SourceScene:
    psf = GaussianPsf(cfg.psf_sigma)
    grid = Grid.for_psf(
        psf,
        span=cfg.scene_length,
        center=0.0,
        n_points=cfg.grid.n_points,
        half_width_sigmas=cfg.grid.half_width_sigmas,
    )
    if cfg.scene_kind == "two_point":
        return SourceScene.two_point(cfg.scene_length, cfg.eps, psf, grid=grid)
    weights = np.asarray(cfg.scene_weights, dtype=float)
    weights = weights / weights.sum()
    y0 = float(np.dot(weights, cfg.scene_points))
    return SourceScene(
        tuple(cfg.scene_points),
        tuple(weights),
        y0,
        cfg.scene_length,
        cfg.eps,
        psf,
        grid,
    )


def _scene_measurement(name: str, n_modes: int, rng=None, squeeze_max: float = 2.0):
    from ..measure import heterodyne_measurement, homodyne_measurement

    if name == "heterodyne":
        return heterodyne_measurement(n_modes)
    if name == "homodyne_x":
        return homodyne_measurement("x" * n_modes)
    return random_valid_gaussian_measurement(n_modes, rng, squeeze_max=squeeze_max)


def _sweep_single_lens(cfg: SingleLensConfig, seed: int) -> SweepResult:
    scene = _build_scene(cfg)
    w = scene.grid.n_points
    dv = derivative_vectors(
        scene.psf, scene.grid, scene.y0, scene.length, cfg.n_moments
    )
    coupling_dl = scene_coherence_dl(scene)

    def doubled(dg: np.ndarray) -> np.ndarray:
        z = np.zeros_like(dg)
        return np.block([[dg, z], [z, dg]])

    fim_rows: list[tuple] = []
    bound_rows: list[tuple] = []
    cond_rows: list[tuple] = []
    bounds_ok = True

    names: list[tuple[str, int]] = []
    for name in cfg.measurements:
        if name == "random":
            names.extend(("random", j) for j in range(cfg.n_random))
        else:
            names.append((name, 0))

    moment_params = tuple(f"t{k}" for k in range(1, cfg.n_moments + 1))
    for name, j in names:
        rng = _substream(seed, j) if name == "random" else None
        meas = _scene_measurement(name, w, rng)
        fim = gaussian_measurement_fim_scene(
            scene, meas, params=cfg.n_moments, n_copies=cfg.n_copies
        )
        for pi in moment_params:
            for pj in moment_params:
                fim_rows.append((name, j, pi, pj, fim[(pi, pj)]))
        eigs = np.linalg.eigvalsh(fim.matrix)
        cond = float(eigs[-1] / eigs[0]) if eigs[0] > 0 else float("inf")
        cond_rows.append((name, j, cond, fim.rank))

        for k in range(1, cfg.n_moments + 1):
            from ..superres import gamma_expansion_dt

            value = fim[(f"t{k}", f"t{k}")]
            spectral = single_lens_gaussian_bound(
                doubled(gamma_expansion_dt(dv, k, scene.eps, cfg.n_moments)),
                n_copies=cfg.n_copies,
            )
            moment = moment_gaussian_bound(
                dv, k, scene.eps, n_copies=cfg.n_copies
            )
            bound = min(spectral, moment)
            passed = value <= bound + 1e-8
            bounds_ok = bounds_ok and passed
            bound_rows.append(
                (name, j, f"t{k}", value, spectral, moment, bound - value, int(passed))
            )

    tables = (
        Table("fim", ("measurement", "draw", "param_i", "param_j", "value"), tuple(fim_rows)),
        Table(
            "bounds",
            (
                "measurement",
                "draw",
                "param",
                "value",
                "spectral_bound",
                "moment_bound",
                "slack",
                "passed",
            ),
            tuple(bound_rows),
        ),
        Table("conditioning", ("measurement", "draw", "cond", "rank"), tuple(cond_rows)),
    )
    return SweepResult(tables, bounds_ok)


def _sweep_superres(cfg: SuperresConfig, seed: int) -> SweepResult:
    psf = GaussianPsf(cfg.psf_sigma)
    lo, hi, pts = cfg.l_grid
    l_values = np.geomspace(lo, hi, pts) * cfg.psf_sigma
    grid = Grid.for_psf(
        psf,
        span=float(l_values.max()),
        center=0.0,
        n_points=cfg.grid.n_points,
        half_width_sigmas=cfg.grid.half_width_sigmas,
    )
    w = grid.n_points
    n_top = max(cfg.moment_orders)
    basis_order = max(n_top, cfg.spade_k_max)

    fim_ll_rows: list[tuple] = []
    bounds_ll_rows: list[tuple] = []
    fim_moment_rows: list[tuple] = []
    bounds_moment_rows: list[tuple] = []
    slope_rows: list[tuple] = []
    series_ll: dict[str, list[float]] = {}
    series_moment: dict[tuple[str, int], list[float]] = {}
    bounds_ok = True

    gaussian_names = [
        m for m in cfg.measurements if m in ("heterodyne", "homodyne_x", "random")
    ]
    for i, length in enumerate(l_values):
        length = float(length)
        scene = SourceScene.two_point(length, cfg.eps, psf, grid=grid)
        l_bound = separation_gaussian_bound(
            cfg.eps, length, n_copies=cfg.n_copies, sigma=cfg.psf_sigma
        )
        allowance = cfg.allowance_per_l * length / cfg.psf_sigma

        for name in gaussian_names:
            draws = range(cfg.n_random) if name == "random" else (0,)
            for j in draws:
                rng = _substream(seed, i, j) if name == "random" else None
                meas = _scene_measurement(name, w, rng)
                value = gaussian_measurement_fim_scene(
                    scene, meas, params="L", n_copies=cfg.n_copies
                )[("L", "L")]
                fim_ll_rows.append((name, j, length, value))
                if name != "random":
                    series_ll.setdefault(name, []).append(value)
                ceiling = l_bound * (1.0 + allowance)
                passed = value <= ceiling + 1e-8
                bounds_ok = bounds_ok and passed
                bounds_ll_rows.append(
                    (
                        name,
                        j,
                        length,
                        value,
                        l_bound,
                        allowance,
                        ceiling - value,
                        int(passed),
                    )
                )

                if name == "random":
                    mfim = gaussian_measurement_fim_scene(
                        scene, meas, params=n_top, n_copies=cfg.n_copies
                    )
                    dv = derivative_vectors(psf, grid, 0.0, length, n_top)
                    for n in cfg.moment_orders:
                        mvalue = mfim[(f"t{n}", f"t{n}")]
                        mbound = moment_gaussian_bound(
                            dv, n, cfg.eps, n_copies=cfg.n_copies
                        )
                        mpassed = mvalue <= mbound + 1e-8
                        bounds_ok = bounds_ok and mpassed
                        bounds_moment_rows.append(
                            (
                                name,
                                j,
                                length,
                                n,
                                mvalue,
                                mbound,
                                mbound - mvalue,
                                int(mpassed),
                            )
                        )

        if "spade" in cfg.measurements:
            basis = spade_basis(psf, grid, 0.0, length, basis_order)
            value = spade_two_point_fim(
                scene, k_max=cfg.spade_k_max, n_copies=cfg.n_copies, basis=basis
            )[("L", "L")]
            fim_ll_rows.append(("spade", 0, length, value))
            series_ll.setdefault("spade", []).append(value)

            sfim = spade_fim_moments(
                scene, basis=basis, n_max=n_top, n_copies=cfg.n_copies
            )
            for n in cfg.moment_orders:
                mvalue = sfim[(f"t{n}", f"t{n}")]
                fim_moment_rows.append(("spade", length, n, mvalue))
                series_moment.setdefault(("spade", n), []).append(mvalue)

        if "direct" in cfg.measurements:
            dfim = direct_imaging_fim_moments(
                scene, n_top, n_copies=cfg.n_copies
            )
            for n in cfg.moment_orders:
                mvalue = dfim[(f"t{n}", f"t{n}")]
                fim_moment_rows.append(("direct", length, n, mvalue))
                series_moment.setdefault(("direct", n), []).append(mvalue)

    for name, values in series_ll.items():
        _fit_rows(name, "f_l_l", l_values, values, slope_rows)
    for (name, n), values in series_moment.items():
        _fit_rows(name, f"f_t{n}_t{n}", l_values, values, slope_rows)

    tables = (
        Table("fim_ll", ("measurement", "draw", "length", "f_l_l"), tuple(fim_ll_rows)),
        Table(
            "bounds_ll",
            (
                "measurement",
                "draw",
                "length",
                "value",
                "bound_leading",
                "allowance",
                "slack",
                "passed",
            ),
            tuple(bounds_ll_rows),
        ),
        Table("fim_moments", ("route", "length", "n", "value"), tuple(fim_moment_rows)),
        Table(
            "bounds_moments",
            ("measurement", "draw", "length", "n", "value", "bound", "slack", "passed"),
            tuple(bounds_moment_rows),
        ),
        Table(
            "slopes",
            ("measurement", "quantity", "slope", "intercept", "rms_residual", "n_points"),
            tuple(slope_rows),
        ),
    )
    return SweepResult(tables, bounds_ok)


def _sweep_bayes(cfg: BayesConfig, seed: int) -> SweepResult:
    bound_rows: list[tuple] = []
    eigen_rows: list[tuple] = []
    slope_rows: list[tuple] = []
    lam_series: list[float] = []
    bounds_ok = True

    for n in cfg.n_values:
        for family in cfg.families:
            wc = worst_case_bounds(family, n, cfg.sigma, k_const=cfg.k_const)
            bound_rows.append((family, n, wc.k_bound, wc.mse_lower))

        closed = optimal_prior_quadratic_fi(cfg.k_const, n, cfg.sigma)
        omega = closed.omega
        l_max = cfg.l_max_omega_factor * omega
        grid = np.linspace(0.0, l_max, cfg.n_grid + 2)
        profile = FisherProfile.quadratic(cfg.k_const, n, cfg.sigma, grid)
        sol = eigen_solver(profile, l_max=l_max, n_grid=cfg.n_grid)
        k_direct = k_functional(
            sol.prior, FisherProfile.quadratic(cfg.k_const, n, cfg.sigma, sol.prior.grid)
        )
        rel_err = abs(sol.lam - closed.lam) / closed.lam
        passed = rel_err <= 0.02 and not sol.truncated
        bounds_ok = bounds_ok and passed
        lam_series.append(sol.lam)
        eigen_rows.append(
            (
                n,
                sol.lam,
                closed.lam,
                rel_err,
                k_direct,
                sol.boundary_mass,
                sol.l_max_sensitivity,
                int(sol.truncated),
                int(passed),
            )
        )

    if len(cfg.n_values) >= 4:
        _fit_rows("gaussian", "lambda_vs_n", cfg.n_values, lam_series, slope_rows)

    tables = (
        Table("worst_case", ("family", "n_copies", "k_bound", "mse_lower"), tuple(bound_rows)),
        Table(
            "eigen",
            (
                "n_copies",
                "lambda",
                "lambda_closed",
                "rel_err",
                "k_functional",
                "boundary_mass",
                "l_max_sensitivity",
                "truncated",
                "passed",
            ),
            tuple(eigen_rows),
        ),
        Table(
            "slopes",
            ("measurement", "quantity", "slope", "intercept", "rms_residual", "n_points"),
            tuple(slope_rows),
        ),
    )
    return SweepResult(tables, bounds_ok)


def _sweep_mc(cfg: McConfig, seed: int) -> SweepResult:
    result = mc_crb_check(
        cfg.family,
        cfg.params,
        cfg.estimate,
        cfg.n_samples,
        cfg.n_trials,
        seed=seed,
    )
    passed = not result.below_crb_significantly
    table = Table(
        "mc",
        (
            "family",
            "estimate",
            "true_value",
            "n_samples",
            "n_trials",
            "mse",
            "crb",
            "ratio",
            "ci_half_width",
            "converged_rate",
            "passed",
        ),
        (
            (
                result.family,
                result.estimate,
                result.true_value,
                result.n_samples,
                result.n_trials,
                result.mse,
                result.crb,
                result.ratio,
                result.ci_half_width,
                result.converged_rate,
                int(passed),
            ),
        ),
    )
    return SweepResult((table,), passed, notes=result.notes)


_SWEEPS = {
    "interferometric": _sweep_interferometric,
    "single-lens": _sweep_single_lens,
    "superres": _sweep_superres,
    "bayes": _sweep_bayes,
    "mc": _sweep_mc,
}


def run_sweep(experiment: str, cfg, seed: int) -> SweepResult:
    """Dispatch one experiment; returns its tables and the bound verdict."""
    if experiment not in _SWEEPS:
        raise ValidationError(f"unknown experiment {experiment!r}")
    return _SWEEPS[experiment](cfg, seed)

"""Experiment configuration: JSON schema, validation, and hashing.

Configs are plain JSON with a schema_version and an experiment tag; every
field is validated individually so error messages name the offending
field.  The canonical-form SHA-256 of the parsed config is recorded in
output provenance, so any field change shows up as a new hash while
whitespace-only edits do not.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from ..errors import ValidationError

SCHEMA_VERSION = 1
EXPERIMENTS = ("interferometric", "single-lens", "superres", "bayes", "mc")


def _get(cfg: dict, name: str, kind, required: bool = True, default=None):
    if name not in cfg:
        if required:
            raise ValidationError(f"config field '{name}' is missing")
        return default
    v = cfg[name]
    if kind is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if not isinstance(v, kind) or isinstance(v, bool) and kind is not bool:
        raise ValidationError(
            f"config field '{name}' must be {getattr(kind, '__name__', kind)}, "
            f"got {type(v).__name__}"
        )
    return v


def _positive(cfg: dict, name: str, kind=float, required: bool = True, default=None):
    v = _get(cfg, name, kind, required, default)
    if v is not None and v <= 0:
        raise ValidationError(f"config field '{name}' must be positive, got {v!r}")
    return v


def _log_grid(cfg: dict, name: str) -> tuple[float, float, int]:
    d = _get(cfg, name, dict)
    lo = _positive(d, "min")
    hi = _positive(d, "max")
    pts = _get(d, "points", int)
    if hi <= lo:
        raise ValidationError(f"config field '{name}.max' must exceed '{name}.min'")
    if pts < 2:
        raise ValidationError(f"config field '{name}.points' must be at least 2")
    return lo, hi, pts


def _str_list(cfg: dict, name: str, allowed: tuple[str, ...]) -> tuple[str, ...]:
    v = _get(cfg, name, list)
    if not v:
        raise ValidationError(f"config field '{name}' must be a nonempty list")
    for item in v:
        if item not in allowed:
            raise ValidationError(
                f"config field '{name}' entry {item!r} not in {sorted(allowed)}"
            )
    return tuple(v)


@dataclass(frozen=True)
class GridSpec:
    n_points: int
    half_width_sigmas: float

    @classmethod
    def parse(cls, cfg: dict, name: str = "grid") -> "GridSpec":
        d = _get(cfg, name, dict, required=False, default={}) or {}
        n = _get(d, "points", int, required=False, default=161)
        hw = _positive(d, "half_width_sigmas", float, required=False, default=8.0)
        if n < 3:
            raise ValidationError(f"config field '{name}.points' must be >= 3")
        return cls(n, hw)


@dataclass(frozen=True)
class InterferometricConfig:
    eps_grid: tuple[float, float, int]
    g_abs: float
    theta: float
    delta: float
    measurements: tuple[str, ...]
    n_random: int
    joint_copies: int
    n_copies: int
    squeeze_max: float


@dataclass(frozen=True)
class SingleLensConfig:
    eps: float
    psf_sigma: float
    grid: GridSpec
    scene_kind: str
    scene_length: float
    scene_points: tuple[float, ...] | None
    scene_weights: tuple[float, ...] | None
    n_moments: int
    measurements: tuple[str, ...]
    n_random: int
    n_copies: int


@dataclass(frozen=True)
class SuperresConfig:
    eps: float
    psf_sigma: float
    l_grid: tuple[float, float, int]
    grid: GridSpec
    measurements: tuple[str, ...]
    moment_orders: tuple[int, ...]
    n_random: int
    spade_k_max: int
    n_copies: int
    allowance_per_l: float


@dataclass(frozen=True)
class BayesConfig:
    families: tuple[str, ...]
    n_values: tuple[int, ...]
    sigma: float
    k_const: float
    l_max_omega_factor: float
    n_grid: int


@dataclass(frozen=True)
class McConfig:
    family: str
    estimate: str
    params: dict
    n_samples: int
    n_trials: int


def _parse_interferometric(cfg: dict) -> InterferometricConfig:
    meas = _str_list(
        cfg,
        "measurements",
        ("heterodyne", "homodyne_xp", "homodyne_xx", "photon_counting", "random"),
    )
    joint = _get(cfg, "joint_copies", int, required=False, default=1)
    if not 1 <= joint <= 3:
        raise ValidationError("config field 'joint_copies' must lie in [1, 3]")
    g_abs = _get(cfg, "g_abs", float)
    if not 0 <= g_abs <= 1:
        raise ValidationError("config field 'g_abs' must lie in [0, 1]")
    return InterferometricConfig(
        eps_grid=_log_grid(cfg, "eps_grid"),
        g_abs=g_abs,
        theta=_get(cfg, "theta", float),
        delta=_get(cfg, "delta", float, required=False, default=0.0),
        measurements=meas,
        n_random=_get(cfg, "n_random", int, required=False, default=0),
        joint_copies=joint,
        n_copies=_positive(cfg, "n_copies", int, required=False, default=1),
        squeeze_max=_positive(cfg, "squeeze_max", float, required=False, default=2.0),
    )


def _parse_scene(cfg: dict) -> tuple[str, float, tuple | None, tuple | None]:
    d = _get(cfg, "scene", dict)
    kind = _get(d, "kind", str)
    if kind == "two_point":
        return kind, _positive(d, "length"), None, None
    if kind == "points":
        pts = _get(d, "points", list)
        wts = _get(d, "weights", list)
        if len(pts) != len(wts) or not pts:
            raise ValidationError(
                "config fields 'scene.points' and 'scene.weights' must align"
            )
        return (
            kind,
            _positive(d, "length"),
            tuple(float(p) for p in pts),
            tuple(float(w) for w in wts),
        )
    raise ValidationError("config field 'scene.kind' must be two_point or points")


def _parse_single_lens(cfg: dict) -> SingleLensConfig:
    kind, length, pts, wts = _parse_scene(cfg)
    return SingleLensConfig(
        eps=_positive(cfg, "eps"),
        psf_sigma=_positive(cfg, "psf_sigma", float, required=False, default=1.0),
        grid=GridSpec.parse(cfg),
        scene_kind=kind,
        scene_length=length,
        scene_points=pts,
        scene_weights=wts,
        n_moments=_positive(cfg, "n_moments", int, required=False, default=2),
        measurements=_str_list(
            cfg, "measurements", ("heterodyne", "homodyne_x", "random")
        ),
        n_random=_get(cfg, "n_random", int, required=False, default=0),
        n_copies=_positive(cfg, "n_copies", int, required=False, default=1),
    )


def _parse_superres(cfg: dict) -> SuperresConfig:
    orders = _get(cfg, "moment_orders", list, required=False, default=[1, 2])
    for n in orders:
        if not isinstance(n, int) or n < 1:
            raise ValidationError(
                "config field 'moment_orders' entries must be positive integers"
            )
    return SuperresConfig(
        eps=_positive(cfg, "eps"),
        psf_sigma=_positive(cfg, "psf_sigma", float, required=False, default=1.0),
        l_grid=_log_grid(cfg, "l_grid"),
        grid=GridSpec.parse(cfg),
        measurements=_str_list(
            cfg,
            "measurements",
            ("heterodyne", "homodyne_x", "random", "spade", "direct"),
        ),
        moment_orders=tuple(orders),
        n_random=_get(cfg, "n_random", int, required=False, default=0),
        spade_k_max=_positive(cfg, "spade_k_max", int, required=False, default=3),
        n_copies=_positive(cfg, "n_copies", int, required=False, default=1),
        allowance_per_l=_get(cfg, "allowance_per_l", float, required=False, default=2.0),
    )


def _parse_bayes(cfg: dict) -> BayesConfig:
    n_values = _get(cfg, "n_values", list)
    if not n_values or any(
        not isinstance(n, int) or isinstance(n, bool) or n < 1 for n in n_values
    ):
        raise ValidationError(
            "config field 'n_values' must be a nonempty list of positive integers"
        )
    if "k_const" in cfg:
        k_const = _positive(cfg, "k_const")
    elif "eps" in cfg:
        from ..bayescrb import separation_bound_constant

        k_const = separation_bound_constant(_positive(cfg, "eps"))
    else:
        raise ValidationError("config needs field 'k_const' or 'eps'")
    n_grid = _get(cfg, "n_grid", int, required=False, default=601)
    if n_grid < 200:
        raise ValidationError("config field 'n_grid' must be at least 200")
    return BayesConfig(
        families=_str_list(cfg, "families", ("spade", "direct", "gaussian")),
        n_values=tuple(n_values),
        sigma=_positive(cfg, "sigma", float, required=False, default=1.0),
        k_const=k_const,
        l_max_omega_factor=_positive(
            cfg, "l_max_omega_factor", float, required=False, default=12.0
        ),
        n_grid=n_grid,
    )


def _parse_mc(cfg: dict) -> McConfig:
    family = _get(cfg, "family", str)
    if family not in ("photon_counting", "heterodyne", "bernoulli"):
        raise ValidationError(
            "config field 'family' must be photon_counting, heterodyne, or bernoulli"
        )
    estimate = _get(cfg, "estimate", str)
    params = _get(cfg, "params", dict)
    allowed = {
        "photon_counting": ("theta", "g_abs"),
        "heterodyne": ("g_abs",),
        "bernoulli": ("p",),
    }[family]
    if estimate not in allowed:
        raise ValidationError(
            f"config field 'estimate' must be one of {allowed} for {family}"
        )
    for key, val in params.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ValidationError(f"config field 'params.{key}' must be a number")
    n_samples = _positive(cfg, "n_samples", int)
    n_trials = _positive(cfg, "n_trials", int)
    return McConfig(family, estimate, dict(params), n_samples, n_trials)


_PARSERS = {
    "interferometric": _parse_interferometric,
    "single-lens": _parse_single_lens,
    "superres": _parse_superres,
    "bayes": _parse_bayes,
    "mc": _parse_mc,
}


def parse_config(raw: dict, expect: str | None = None):
    """Validate a parsed JSON config and return the typed config object."""
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a JSON object")
    version = _get(raw, "schema_version", int)
    if version != SCHEMA_VERSION:
        raise ValidationError(
            f"config field 'schema_version' must be {SCHEMA_VERSION}, got {version}"
        )
    experiment = _get(raw, "experiment", str)
    if experiment not in EXPERIMENTS:
        raise ValidationError(
            f"config field 'experiment' must be one of {list(EXPERIMENTS)}"
        )
    if expect is not None and experiment != expect:
        raise ValidationError(
            f"config field 'experiment' is {experiment!r}, but the "
            f"{expect!r} command was invoked"
        )
    seed = raw.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise ValidationError("config field 'seed' must be a nonnegative integer")
    return _PARSERS[experiment](raw)


def load_config(path: str, expect: str | None = None):
    """Read and validate a JSON config file; returns (raw dict, typed config)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path!r} is not valid JSON: {exc}") from exc
    return raw, parse_config(raw, expect=expect)


def config_hash(raw: dict) -> str:
    """SHA-256 of the canonical (sorted, compact) JSON form."""
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

"""Run configuration, initial data and scenario orchestration.

Configuration is flat ``key = value`` text with dotted keys::

    scenario = decay3d
    grid.n = 64
    grid.box_length = 32*pi
    initial.target_h2 = 1e-2

Every key has a default (see :data:`DEFAULTS`); scenarios overlay their own
defaults before the user's file and ``--override`` values are applied.
"""

from __future__ import annotations

import ast
import json
import math
import operator
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import inequalities as ineq
from .errors import BlowUpError, ConfigurationError, DomainError
from .integrator import PicardConfig, StepperConfig, default_dt, evolve, picard_local_solve, record_times
from .model import PhysicalParams, PotentialSpec, formulation_residual
from .spectral import (
    GridSpec,
    NormSpec,
    RealField,
    band_limited_random,
    norm,
    read_snapshot,
    write_snapshot,
)

SCENARIOS = ("decay3d", "smalldata", "contraction", "inequalities", "baseline", "equivalence")

DEFAULTS = {
    "scenario": "decay3d",
    "seed": 0,
    "out": "runs",
    "grid.dim": 3,
    "grid.n": 64,
    "grid.box_length": "32*pi",
    "params.delta": 1.0,
    "params.g0": 1.0,
    "params.g2": 1.0,
    "params.M": 1.0,
    "params.kappa0": "none",
    "params.kappa1": "none",
    "params.kappa2": "none",
    "potential.variant": "gompper_schick",
    "potential.h0": 0.2,
    "potential.alpha": 0.0,
    "stepper.scheme": "ifrk4",
    "stepper.dt": "auto",
    "stepper.dt_max": 1.0,
    "stepper.c_cfl": 0.5,
    "stepper.dealias": "two_thirds",
    "stepper.linear_only": False,
    "stepper.form": "auto",
    "run.t_end": "auto",
    "run.cadence": 10.0,
    "initial.family": "gaussian",
    "initial.amplitude": 1.0,
    "initial.width": 3.0,
    "initial.center": "auto",
    "initial.slope": 0.5,
    "initial.k_max": "auto",
    "initial.seed": "auto",
    "initial.path": "",
    "initial.target_h2": 1e-2,
    "initial.zero_mean": True,
    "diagnostics.n_grad": 3,
    "diagnostics.neg_s": 0.5,
    "diagnostics.snapshot_every": 0,
    "picard.T1": 0.1,
    "picard.j_max": 6,
    "picard.n_inner": 256,
    "ineq.samples": 100,
    "ineq.k_max": 5,
    "equivalence.samples": 100,
}

SCENARIO_DEFAULTS = {
    "decay3d": {"stepper.dt_max": 2.0},
    "smalldata": {"run.t_end": 100.0, "run.cadence": 1.0, "stepper.dt_max": 0.25},
    "baseline": {},
    "contraction": {"grid.n": 32, "grid.box_length": "8*pi", "initial.width": 1.5},
    "inequalities": {"grid.n": 16, "grid.box_length": "2*pi"},
    "equivalence": {"grid.n": 32, "grid.box_length": "2*pi"},
}

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def _arith(text):
    """Evaluate a small arithmetic expression that may use ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(text)

    return float(ev(ast.parse(text.strip(), mode="eval")))


def _as_float(key, raw):
    try:
        return _arith(str(raw))
    except (ValueError, SyntaxError, ZeroDivisionError):
        raise ConfigurationError(f"{key}: expected a number, got {raw!r}") from None


def _as_int(key, raw):
    value = _as_float(key, raw)
    if value != int(value):
        raise ConfigurationError(f"{key}: expected an integer, got {raw!r}")
    return int(value)


def _as_bool(key, raw):
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"{key}: expected true/false, got {raw!r}")


def _opt_float(key, raw):
    if str(raw).strip().lower() in ("none", "auto", ""):
        return None
    return _as_float(key, raw)


def parse_config_text(text, source="<config>"):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value.strip().strip('"').strip("'")
    return out


def parse_override(item):
    if "=" not in item:
        raise ConfigurationError(f"--override expects KEY=VALUE, got {item!r}")
    key, value = item.split("=", 1)
    return key.strip(), value.strip()


def merge_settings(file_values=None, overrides=None, scenario=None, out=None, seed=None):
    """Defaults <- scenario defaults <- file <- overrides <- explicit flags."""
    user = dict(file_values or {})
    user.update(dict(overrides or {}))
    if scenario is not None:
        user["scenario"] = scenario
    if out is not None:
        user["out"] = out
    if seed is not None:
        user["seed"] = seed
    unknown = sorted(set(user) - set(DEFAULTS))
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
    name = str(user.get("scenario", DEFAULTS["scenario"]))
    if name not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    settings = dict(DEFAULTS)
    settings.update(SCENARIO_DEFAULTS[name])
    settings.update(user)
    return settings


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial-data family and normalisation.

    ``family`` is ``gaussian`` (amplitude, width, center), ``random``
    (amplitude, slope, k_max, seed) or ``file`` (path to a snapshot).
    """

    family: str = "gaussian"
    amplitude: float = 1.0
    width: float = 3.0
    center: tuple | None = None
    slope: float = 0.5
    k_max: int | None = None
    seed: int = 0
    path: str = ""
    target_h2: float | None = 1e-2
    zero_mean: bool = True

    def __post_init__(self):
        if self.family not in ("gaussian", "random", "file"):
            raise ConfigurationError(f"initial.family must be gaussian, random or file, got {self.family!r}")
        if self.family == "gaussian" and not self.width > 0:
            raise ConfigurationError(f"initial.width must be positive, got {self.width}")
        if self.target_h2 is not None and not self.target_h2 > 0:
            raise ConfigurationError(f"initial.target_h2 must be positive or none, got {self.target_h2}")


def generate_initial_data(spec, grid):
    """Build ``u0``; the mean is removed before the H^2 normalisation."""
    if spec.family == "gaussian":
        center = spec.center if spec.center is not None else (grid.box_length / 2,) * grid.dim
        if len(center) != grid.dim:
            raise ConfigurationError(f"initial.center needs {grid.dim} components")
        L = grid.box_length
        r2 = sum(((x - c + L / 2) % L - L / 2) ** 2 for x, c in zip(grid.coordinates(), center))
        values = spec.amplitude * np.exp(-r2 / (2 * spec.width**2))
    elif spec.family == "random":
        raw = band_limited_random(grid, spec.k_max, spec.slope, spec.seed, mean_free=False).values
        peak = np.abs(raw).max()
        values = spec.amplitude * raw / peak if peak > 0 else raw
    else:
        field_ = read_snapshot(spec.path)
        if field_.grid != grid:
            raise ConfigurationError(
                f"{spec.path}: snapshot grid {field_.grid} does not match configured grid {grid}"
            )
        values = field_.values
    values = np.array(values, dtype=float) + np.zeros(grid.shape)
    if spec.zero_mean:
        values = values - values.mean()
    u = RealField(grid, values)
    if spec.target_h2 is not None:
        current = norm(u, NormSpec.sobolev(2, homogeneous=False))
        if current == 0:
            raise ConfigurationError("initial data is identically zero; the target H^2 norm is unreachable")
        u = RealField(grid, values * (spec.target_h2 / current))
    return u


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    grid: GridSpec
    params: PhysicalParams
    stepper: StepperConfig
    t_end: float
    cadence: float
    out: Path
    seed: int
    initial: InitialDataSpec
    request: diag.RecordRequest
    picard: PicardConfig
    snapshot_every: int = 0
    ineq_samples: int = 100
    ineq_k_max: int = 5
    equivalence_samples: int = 100
    settings: dict = field(default_factory=dict)


def build_config(settings):
    """Validate merged settings and build a :class:`RunConfig`."""
    s = settings
    grid = GridSpec(
        _as_int("grid.dim", s["grid.dim"]),
        _as_int("grid.n", s["grid.n"]),
        _as_float("grid.box_length", s["grid.box_length"]),
    )
    potential = PotentialSpec(
        str(s["potential.variant"]),
        h0=_as_float("potential.h0", s["potential.h0"]),
        alpha=_as_float("potential.alpha", s["potential.alpha"]),
    )
    kappas = [_opt_float(k, s[k]) for k in ("params.kappa0", "params.kappa1", "params.kappa2")]
    delta = _as_float("params.delta", s["params.delta"])
    M = _as_float("params.M", s["params.M"])
    if any(k is not None for k in kappas):
        if any(k is None for k in kappas):
            raise ConfigurationError("params.kappa0/1/2 must be given together")
        params = PhysicalParams.from_kappa(delta, *kappas, h0=potential.h0, M=M)
    else:
        g2 = _as_float("params.g2", s["params.g2"])
        if not g2 > 0:
            raise ConfigurationError(f"params.g2 must be positive, got {g2}")
        params = PhysicalParams(delta, _as_float("params.g0", s["params.g0"]), g2, M, potential)
    if params.potential.variant == "gompper_schick" and not params.kappa0 > 0:
        raise ConfigurationError(f"kappa0 must be positive, got {params.kappa0}")

    seed = _as_int("seed", s["seed"])
    if seed < 0:
        raise ConfigurationError(f"seed must be a nonnegative integer, got {seed}")
    center = None if str(s["initial.center"]).strip() == "auto" else tuple(
        _as_float("initial.center", c) for c in str(s["initial.center"]).split(",")
    )
    k_max = None if str(s["initial.k_max"]).strip() == "auto" else _as_int("initial.k_max", s["initial.k_max"])
    init_seed = seed if str(s["initial.seed"]).strip() == "auto" else _as_int("initial.seed", s["initial.seed"])
    initial = InitialDataSpec(
        family=str(s["initial.family"]),
        amplitude=_as_float("initial.amplitude", s["initial.amplitude"]),
        width=_as_float("initial.width", s["initial.width"]),
        center=center,
        slope=_as_float("initial.slope", s["initial.slope"]),
        k_max=k_max,
        seed=init_seed,
        path=str(s["initial.path"]),
        target_h2=_opt_float("initial.target_h2", s["initial.target_h2"]),
        zero_mean=_as_bool("initial.zero_mean", s["initial.zero_mean"]),
    )

    dt_raw = str(s["stepper.dt"]).strip().lower()
    if dt_raw == "auto":
        scale = initial.amplitude if initial.target_h2 is None else initial.target_h2
        dt = default_dt(
            grid,
            params,
            abs(scale),
            c_cfl=_as_float("stepper.c_cfl", s["stepper.c_cfl"]),
            dt_max=_as_float("stepper.dt_max", s["stepper.dt_max"]),
        )
    else:
        dt = _as_float("stepper.dt", s["stepper.dt"])
    stepper = StepperConfig(
        scheme=str(s["stepper.scheme"]),
        dt=dt,
        dealias=str(s["stepper.dealias"]),
        linear_only=_as_bool("stepper.linear_only", s["stepper.linear_only"]),
        form=str(s["stepper.form"]),
    )
    cadence = _as_float("run.cadence", s["run.cadence"])
    if not cadence > 0:
        raise ConfigurationError(f"run.cadence must be positive, got {cadence}")
    t_raw = str(s["run.t_end"]).strip().lower()
    if t_raw == "auto":
        t_end = diag.decay_window(cadence, grid.box_length, params.kappa0 if params.kappa0 > 0 else 1.0)[1]
    else:
        t_end = _as_float("run.t_end", s["run.t_end"])
    if not t_end > 0:
        raise ConfigurationError(f"run.t_end must be positive, got {t_end}")
    request = diag.RecordRequest(
        n_grad=_as_int("diagnostics.n_grad", s["diagnostics.n_grad"]),
        neg_s=_as_float("diagnostics.neg_s", s["diagnostics.neg_s"]),
        dealias=stepper.dealias,
    )
    picard = PicardConfig(
        T1=_as_float("picard.T1", s["picard.T1"]),
        j_max=_as_int("picard.j_max", s["picard.j_max"]),
        n_inner=_as_int("picard.n_inner", s["picard.n_inner"]),
        stepper=stepper,
    )
    return RunConfig(
        scenario=str(s["scenario"]),
        grid=grid,
        params=params,
        stepper=stepper,
        t_end=t_end,
        cadence=cadence,
        out=Path(str(s["out"])),
        seed=seed,
        initial=initial,
        request=request,
        picard=picard,
        snapshot_every=_as_int("diagnostics.snapshot_every", s["diagnostics.snapshot_every"]),
        ineq_samples=_as_int("ineq.samples", s["ineq.samples"]),
        ineq_k_max=_as_int("ineq.k_max", s["ineq.k_max"]),
        equivalence_samples=_as_int("equivalence.samples", s["equivalence.samples"]),
        settings=dict(s),
    )


def load_config(path=None, overrides=(), scenario=None, out=None, seed=None):
    file_values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        file_values = parse_config_text(text, str(path))
    pairs = [parse_override(o) if isinstance(o, str) else o for o in overrides]
    return build_config(merge_settings(file_values, pairs, scenario, out, seed))


# -- scenario results -----------------------------------------------------------


@dataclass
class ScenarioResult:
    """Checks and reported values of one scenario run."""

    scenario: str
    checks: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    extra_tables: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    text: list = field(default_factory=list)
    exit_code: int = EXIT_PASS

    @property
    def passed(self):
        return all(self.checks.values())

    def check(self, name, ok, **values):
        self.checks[name] = bool(ok)
        self.values.update(values)


def _fits(records, window, s_pred, result, label=""):
    """Fits for l = 0, 1, or ``None`` (with the reason in ``result.values``) if the window is too short."""
    out = {}
    try:
        for l in (0, 1):
            t, v = diag.series(records, f"grad{l}")
            out[l] = diag.fit_decay(t, v, window, l=l, sigma_pred=diag.heat_exponent(l, s_pred))
    except DomainError as exc:
        result.values[f"{label}fit_error"] = str(exc)
        return None
    return out


def _s_prediction(cfg):
    if cfg.initial.family == "gaussian":
        return diag.sharp_s(0.0, cfg.grid.dim)
    if cfg.initial.family == "random":
        return diag.sharp_s(cfg.initial.slope, cfg.grid.dim)
    return float("nan")


def _evolve_checked(cfg, u0, result):
    try:
        return evolve(
            u0,
            cfg.stepper,
            cfg.params,
            cfg.t_end,
            cfg.cadence,
            request=cfg.request,
            snapshot_every=cfg.snapshot_every or None,
        )
    except BlowUpError as err:
        result.records = list(getattr(err, "trajectory").records) if hasattr(err, "trajectory") else []
        result.values["blowup_t"] = err.t
        result.values["blowup_message"] = str(err)
        result.checks["no_blowup"] = False
        result.exit_code = EXIT_BLOWUP
        return None


def _keep_trajectory(traj, result):
    result.records = traj.records
    result.snapshots.append(("final", traj.final))
    result.snapshots.extend((f"snap_{i:05d}", f) for i, (_, f) in enumerate(traj.snapshots))


def _scenario_decay3d(cfg, result):
    u0 = generate_initial_data(cfg.initial, cfg.grid)
    result.snapshots.append(("u0", u0))
    traj = _evolve_checked(cfg, u0, result)
    if traj is None:
        return
    _keep_trajectory(traj, result)
    times = [r.t for r in traj.records]
    base = diag.heat_baseline_series(u0, times, cfg.params, cfg.request)
    result.extra_tables["baseline"] = base
    window = diag.decay_window(cfg.cadence, cfg.grid.box_length, cfg.params.kappa0)
    s_pred = _s_prediction(cfg)
    fits = _fits(traj.records, window, s_pred, result)
    bfits = _fits(base, window, s_pred, result, "baseline_")
    mon = diag.negative_norm_monitor(traj.records)
    result.check("negative_norm_bounded", not mon.growth_flag, neg_norm_sup=mon.sup)
    if fits is None or bfits is None:
        result.check("decay_fit_available", False)
        return
    result.values.update(
        window_t1=window[0],
        window_t2=window[1],
        s_pred=s_pred,
        sigma0=fits[0].sigma,
        sigma1=fits[1].sigma,
        sigma0_r2=fits[0].r2,
        sigma1_r2=fits[1].r2,
        sigma0_baseline=bfits[0].sigma,
        sigma1_baseline=bfits[1].sigma,
        sigma0_pred=fits[0].sigma_pred,
        sigma1_pred=fits[1].sigma_pred,
        sigma0_guaranteed=diag.heat_exponent(0, min(s_pred, 0.5)),
        sigma1_guaranteed=diag.heat_exponent(1, min(s_pred, 0.5)),
    )
    result.check("sigma0_matches_baseline", abs(fits[0].sigma - bfits[0].sigma) <= 0.05)
    result.check("gradient_costs_quarter", abs(fits[1].sigma - fits[0].sigma - 0.25) <= 0.10)
    for l in (0, 1):
        rel = abs(fits[l].sigma - fits[l].sigma_pred) / fits[l].sigma_pred
        result.check(f"sigma{l}_absolute_within_25pct", rel <= 0.25, **{f"sigma{l}_relative_gap": rel})
    for f in list(fits.values()) + list(bfits.values()):
        result.text.append(
            f"l={f.l} window=[{f.t1:g}, {f.t2:g}] samples={f.samples} sigma={f.sigma:.6f} "
            f"r2={f.r2:.6f} predicted={f.sigma_pred:.6f}"
        )


def _scenario_smalldata(cfg, result):
    u0 = generate_initial_data(cfg.initial, cfg.grid)
    result.snapshots.append(("u0", u0))
    traj = _evolve_checked(cfg, u0, result)
    if traj is None:
        return
    _keep_trajectory(traj, result)
    h2 = np.array([r.h2 for r in traj.records])
    result.check("h2_bounded", h2.max() <= 2 * h2[0], h2_initial=h2[0], h2_sup=h2.max())
    if len(traj.records) >= 3:
        rep = diag.dissipation_check(traj.records, cfg.params.M)
        result.check(
            "energy_non_increasing",
            rep.max_increment <= 1e-8 * abs(rep.f0),
            max_energy_increment=rep.max_increment,
            free_energy_0=rep.f0,
        )
        result.check("dissipation_rate_5pct", rep.max_mismatch <= 0.05, dissipation_mismatch=rep.max_mismatch)
    else:
        result.check("dissipation_records_available", False)
    chain = np.array([r.chain(0, cfg.request.n_grad) for r in traj.records])
    result.check("energy_chain_non_increasing", np.all(np.diff(chain) <= 1e-8 * chain[:-1]))
    mon = diag.negative_norm_monitor(traj.records)
    result.check("negative_norm_bounded", not mon.growth_flag, neg_norm_sup=mon.sup)


def _scenario_baseline(cfg, result):
    u0 = generate_initial_data(cfg.initial, cfg.grid)
    result.snapshots.append(("u0", u0))
    times = record_times(cfg.t_end, cfg.cadence)
    recs = diag.heat_baseline_series(u0, times, cfg.params, cfg.request)
    result.records = recs
    l2 = np.array([r.l2 for r in recs])
    result.check("l2_non_increasing", np.all(np.diff(l2) <= 0))
    # the reference flow u_t + Lap^2 u = 0 has unit coefficient
    window = diag.decay_window(cfg.cadence, cfg.grid.box_length, 1.0)
    s_pred = _s_prediction(cfg)
    fits = _fits(recs, window, s_pred, result)
    if fits is None:
        result.check("decay_fit_available", False)
        return
    result.values.update(sigma0=fits[0].sigma, sigma1=fits[1].sigma, s_pred=s_pred)
    result.check("gradient_costs_quarter", abs(fits[1].sigma - fits[0].sigma - 0.25) <= 0.10)


def _scenario_contraction(cfg, result):
    u0 = generate_initial_data(cfg.initial, cfg.grid)
    result.snapshots.append(("u0", u0))
    res = picard_local_solve(u0, cfg.picard, cfg.params)
    result.values.update(
        lambda_max=res.lambda_max,
        lambdas=",".join(format(r, ".6g") for r in res.ratios),
        sup_diffs=",".join(format(d, ".6g") for d in res.sup_diffs),
    )
    result.check("lambda_max_below_one", res.contracting)
    decreasing = all(b < a for a, b in zip(res.sup_diffs[:-1], res.sup_diffs[1:]))
    result.check("differences_geometric", decreasing and len(res.sup_diffs) >= 2)


def _scenario_inequalities(cfg, result):
    g = cfg.grid
    fine = g.refined(2)
    reports = []
    interp_max = 0.0
    for l, k, s in ((1, 1, 0.5), (2, 1, 0.0), (1, 2, 0.5)):
        rep = ineq.calibrate(ineq.Interpolation(l, k, s), cfg.ineq_samples, cfg.seed, g, cfg.ineq_k_max)
        reports.append(rep)
        interp_max = max(interp_max, rep.max_ratio)
    result.check("interpolation_constant_one", interp_max <= 1 + 1e-10, interpolation_max_ratio=interp_max)
    for case, tol in ((ineq.HLS(0.5, 1.5), 0.2), (ineq.Agmon(), 0.5)):
        a = ineq.calibrate(case, cfg.ineq_samples, cfg.seed, g, cfg.ineq_k_max)
        b = ineq.calibrate(case, cfg.ineq_samples, cfg.seed, fine, cfg.ineq_k_max)
        reports += [a, b]
        change = abs(b.max_ratio / a.max_ratio - 1)
        result.check(f"{case.kind}_refinement_stable", change <= tol, **{f"{case.kind}_refinement_change": change})
    for case in (
        ineq.HomogeneousEmbedding(1.0),
        ineq.GagliardoNirenberg(1, 0, 2, 4, 2, 2, 0.875),
        ineq.KatoPonce(1, 2, 4, 4, 4, 4),
    ):
        if g.dim != 3:
            continue
        rep = ineq.calibrate(case, max(10, cfg.ineq_samples // 10), cfg.seed, g, cfg.ineq_k_max)
        reports.append(rep)
        result.check(f"{case.kind}_finite", math.isfinite(rep.max_ratio))
    result.extra_tables["inequalities"] = reports
    result.text += [r.summary() for r in reports]


def _scenario_equivalence(cfg, result):
    g = cfg.grid
    worst = 0.0
    base = cfg.params
    g0 = abs(base.g0) or 1.0
    for sign in (1, -1):
        params = PhysicalParams(base.delta, sign * g0, base.g2, 1.0, base.potential)
        streams = np.random.SeedSequence(cfg.seed).spawn(cfg.equivalence_samples)
        for ss in streams:
            u = band_limited_random(g, None, -1.0, ss)
            u = RealField(g, 0.5 * u.values / np.abs(u.values).max())
            worst = max(worst, formulation_residual(u, params, cfg.stepper.dealias))
    result.check("formulation_equivalence", worst <= 1e-10, max_residual=worst)


_RUNNERS = {
    "decay3d": _scenario_decay3d,
    "smalldata": _scenario_smalldata,
    "baseline": _scenario_baseline,
    "contraction": _scenario_contraction,
    "inequalities": _scenario_inequalities,
    "equivalence": _scenario_equivalence,
}


def execute_scenario(cfg):
    """Run the scenario's computation without touching the filesystem."""
    if cfg.scenario not in _RUNNERS:
        raise ConfigurationError(f"unknown scenario {cfg.scenario!r}")
    result = ScenarioResult(cfg.scenario)
    _RUNNERS[cfg.scenario](cfg, result)
    if result.exit_code == EXIT_PASS and not result.passed:
        result.exit_code = EXIT_FAIL
    return result


def _fmt_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_outputs(result, cfg, out_dir=None):
    """Write CSVs, snapshots, resolved config and (last, atomically) the summary."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        resolved = out / "config.resolved.txt"
        resolved.write_text("".join(f"{k} = {_fmt_value(v)}\n" for k, v in sorted(cfg.settings.items())))
        written.append(resolved)
        if result.records:
            path = out / "diagnostics.csv"
            diag.write_records_csv(path, result.records)
            written.append(path)
        for name, table in result.extra_tables.items():
            path = out / f"{name}.csv"
            if name == "inequalities":
                ineq.write_calibration_csv(path, table)
            else:
                diag.write_records_csv(path, table)
            written.append(path)
        for name, f in result.snapshots:
            path = out / f"{name}.bin"
            write_snapshot(path, f)
            written.append(path)
        if result.text:
            path = out / "report.txt"
            path.write_text("\n".join(result.text) + "\n")
            written.append(path)
        lines = [f"scenario = {result.scenario}", f"status = {'pass' if result.exit_code == EXIT_PASS else 'fail'}"]
        lines.append(f"exit_code = {result.exit_code}")
        lines += [f"check.{k} = {'pass' if v else 'fail'}" for k, v in result.checks.items()]
        lines += [f"{k} = {_fmt_value(v)}" for k, v in result.values.items()]
        summary = out / "summary.txt"
        tmp = out / ".summary.txt.tmp"
        tmp.write_text("\n".join(lines) + "\n")
        os.replace(tmp, summary)
        written.append(summary)
    except OSError as exc:
        raise OSError(f"writing outputs to {out}: {exc}") from exc
    return written


def run_scenario(cfg, out_dir=None):
    """Run ``cfg.scenario`` and write its artifacts; returns ``(exit_code, out_dir, result)``."""
    result = execute_scenario(cfg)
    write_outputs(result, cfg, out_dir)
    return result.exit_code, Path(out_dir if out_dir is not None else cfg.out), result


def read_summary(path):
    """Parse a ``summary.txt`` back into a dict of strings."""
    return parse_config_text(Path(path).read_text(), str(path))


def describe(cfg):
    """JSON-serialisable view of a configuration, for ``check``."""
    return json.dumps({k: _fmt_value(v) for k, v in sorted(cfg.settings.items())}, indent=1)

"""Integrating-factor time stepping and the successive-approximation solver.

The stiff linear symbol is diagonal in Fourier space and is integrated
exactly; only the nonlinear remainder is stepped explicitly (Lawson-type
integrating-factor Euler and classical RK4).  The state is carried as an
unnormalised ``rfftn`` half spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from .errors import BlowUpError, ConfigurationError, DomainError
from .model import (
    GOMPPER_SCHICK,
    ProductSpace,
    kappa_linear_symbol,
    kappa_nonlinear_hat,
    mu_explicit_hat,
    mu_linear_symbol,
)
from .spectral import RealField, sobolev_weight

SCHEMES = ("ifeuler", "ifrk4")
BLOWUP_LINF = 1e6
MAX_PICARD_HORIZON = 1.0


@dataclass(frozen=True)
class StepperConfig:
    scheme: str = "ifrk4"
    dt: float = 0.01
    dealias: str = "two_thirds"
    linear_only: bool = False
    form: str = "auto"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"stepper.scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.dt > 0:
            raise ConfigurationError(f"stepper.dt must be positive, got {self.dt}")
        if self.dealias is True:
            object.__setattr__(self, "dealias", "two_thirds")
        elif self.dealias is False:
            object.__setattr__(self, "dealias", "off")
        if self.form not in ("auto", "kappa", "mu"):
            raise ConfigurationError(f"stepper.form must be auto, kappa or mu, got {self.form!r}")


@dataclass(frozen=True)
class PicardConfig:
    T1: float = 0.1
    j_max: int = 6
    n_inner: int = 256
    stepper: StepperConfig = field(default_factory=StepperConfig)

    def __post_init__(self):
        if not 0 < self.T1 <= MAX_PICARD_HORIZON:
            raise ConfigurationError(f"picard.T1 must lie in (0, {MAX_PICARD_HORIZON}], got {self.T1}")
        if self.j_max < 1:
            raise ConfigurationError(f"picard.j_max must be >= 1, got {self.j_max}")
        if self.n_inner < 4:
            raise ConfigurationError(f"picard.n_inner must be >= 4, got {self.n_inner}")


def linear_propagator(k_magnitude, params, dt):
    """``exp(-(delta |k|^6 + kappa0 |k|^4) dt)``."""
    if dt < 0:
        raise DomainError("dt must be nonnegative")
    k2 = np.asarray(k_magnitude, dtype=float) ** 2
    return np.exp(-(params.delta * k2**3 + params.kappa0 * k2**2) * dt)


def default_dt(grid, params, u_scale, c_cfl=0.5, dt_max=1.0):
    """Explicit-part step bound ``c_cfl / max_k kappa1 (u_scale^2 + kappa2^2) |k|^4``, capped at ``dt_max``."""
    k4 = float((grid.ksq_half[grid.mask_half] ** 2).max())
    rate = params.kappa1 * (u_scale**2 + params.kappa2**2) * k4
    return min(dt_max, c_cfl / rate) if rate > 0 else dt_max


def resolve_form(cfg, params):
    if cfg.form != "auto":
        if cfg.form == "kappa" and params.potential.variant != GOMPPER_SCHICK:
            raise ConfigurationError("the kappa form requires the Gompper-Schick potential")
        return cfg.form
    if params.potential.variant == GOMPPER_SCHICK and params.M == 1:
        return "kappa"
    return "mu"


class Stepper:
    """Advances half spectra on one grid with one configuration."""

    def __init__(self, grid, params, cfg):
        self.grid = grid
        self.params = params
        self.cfg = cfg
        self.form = resolve_form(cfg, params)
        if self.form == "kappa":
            self.symbol = kappa_linear_symbol(grid, params)
            self._explicit = kappa_nonlinear_hat
        else:
            self.symbol = mu_linear_symbol(grid, params)
            self._explicit = mu_explicit_hat
        self.space = ProductSpace(grid, cfg.dealias)
        self._exp = {}

    def explicit(self, uh):
        if self.cfg.linear_only:
            return np.zeros_like(uh)
        return self._explicit(uh, self.grid, self.params, self.space)

    def _factors(self, dt):
        if dt not in self._exp:
            self._exp[dt] = (np.exp(self.symbol * dt), np.exp(self.symbol * (dt / 2)))
        return self._exp[dt]

    def advance(self, uh, dt=None):
        dt = self.cfg.dt if dt is None else dt
        E, Eh = self._factors(dt)
        if self.cfg.linear_only:
            return E * uh
        if self.cfg.scheme == "ifeuler":
            return E * (uh + dt * self.explicit(uh))
        k1 = self.explicit(uh)
        k2 = self.explicit(Eh * (uh + 0.5 * dt * k1))
        k3 = self.explicit(Eh * uh + 0.5 * dt * k2)
        k4 = self.explicit(E * uh + dt * Eh * k3)
        return E * uh + (dt / 6.0) * (E * k1 + 2.0 * Eh * (k2 + k3) + k4)

    def check(self, uh, t, last_record=None):
        if not np.all(np.isfinite(uh)):
            raise BlowUpError(f"non-finite values at t={t:g}", t, last_record)
        bound = float(np.sum(np.abs(uh) * self.grid.half_weights)) / self.grid.size
        if bound > BLOWUP_LINF:
            peak = float(np.abs(self.grid.irfft(uh)).max())
            if peak > BLOWUP_LINF:
                raise BlowUpError(f"|u|_inf = {peak:.3g} exceeds {BLOWUP_LINF:g} at t={t:g}", t, last_record)


def step(u, cfg, params, t=0.0):
    """One time step of size ``cfg.dt``."""
    g = u.grid
    stepper = Stepper(g, params, cfg)
    vh = stepper.advance(g.rfft(u.values))
    stepper.check(vh, t + cfg.dt)
    return RealField(g, g.irfft(vh))


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    final: RealField | None = None
    t: float = 0.0


def record_times(t_end, cadence):
    """``0, cadence, 2 cadence, ...`` clipped to and always ending with ``t_end``."""
    if not t_end > 0:
        raise ConfigurationError(f"t_end must be positive, got {t_end}")
    if not cadence > 0:
        raise ConfigurationError(f"cadence must be positive, got {cadence}")
    count = int(math.floor(t_end / cadence + 1e-9))
    times = [i * cadence for i in range(count + 1)]
    if t_end - times[-1] > 1e-9 * cadence:
        times.append(t_end)
    else:
        times[-1] = t_end
    return times


def evolve(u0, cfg, params, t_end, cadence, request=None, snapshot_every=None, on_record=None):
    """Advance ``u0`` to ``t_end``, emitting a diagnostics record every ``cadence``.

    Steps are shortened where needed so that records land exactly on the
    cadence grid.  ``snapshot_every`` keeps every k-th record's field.
    ``on_record`` (if given) is called with each record as it is produced.
    On blow-up a :class:`BlowUpError` is raised whose ``trajectory``
    attribute holds everything produced so far.
    """
    g = u0.grid
    request = request or diagnostics.RecordRequest()
    stepper = Stepper(g, params, cfg)
    traj = Trajectory()
    uh = g.rfft(u0.values)
    times = record_times(t_end, cadence)

    def emit(t, uh, index):
        rec = diagnostics.record_from_half(uh, g, t, params, request)
        traj.records.append(rec)
        if on_record is not None:
            on_record(rec)
        if snapshot_every and index % snapshot_every == 0:
            traj.snapshots.append((t, RealField(g, g.irfft(uh))))

    emit(0.0, uh, 0)
    t = 0.0
    try:
        for i, t_next in enumerate(times[1:], start=1):
            nsub = max(1, int(math.ceil((t_next - t) / cfg.dt - 1e-9)))
            h = (t_next - t) / nsub
            for j in range(nsub):
                uh = stepper.advance(uh, h)
                stepper.check(uh, t + (j + 1) * h, traj.records[-1])
            t = t_next
            emit(t, uh, i)
    except BlowUpError as err:
        traj.final = None
        traj.t = err.t
        err.trajectory = traj
        raise
    traj.final = RealField(g, g.irfft(uh))
    traj.t = t
    return traj


@dataclass
class PicardResult:
    """Outcome of the successive-approximation solve on ``[0, T1]``.

    ``sup_diffs[j-1] = sup_t ||A^j - A^{j-1}||_{H^2}`` for ``j = 1..j_max``
    (with ``A^0 = 0``); ``ratios`` are consecutive quotients of those.
    """

    times: np.ndarray
    sup_diffs: list
    ratios: list
    sup_norms: list
    finals: list
    iterates: list | None = None

    @property
    def lambda_max(self):
        return max(self.ratios) if self.ratios else float("nan")

    @property
    def contracting(self):
        return bool(self.ratios) and all(r < 1 for r in self.ratios)

    @property
    def diverged(self):
        return bool(self.ratios) and all(r >= 1 for r in self.ratios)


def _midpoint(series, n):
    """Cubic Lagrange value of a uniformly sampled series at ``t_n + h/2``."""
    last = len(series) - 1
    if last < 3:
        return 0.5 * (series[n] + series[n + 1])
    if n == 0:
        return (5 * series[0] + 15 * series[1] - 5 * series[2] + series[3]) / 16
    if n == last - 1:
        return (series[n - 2] - 5 * series[n - 1] + 15 * series[n] + 5 * series[n + 1]) / 16
    return (-series[n - 1] + 9 * series[n] + 9 * series[n + 1] - series[n + 2]) / 16


class _FrozenCoefficients:
    """Physical-space coefficients built from the previous iterate at one instant."""

    def __init__(self, ph, grid, params, space):
        k0, k1, k2 = params.kappa
        h0 = params.h0
        p = space.physical(ph)
        self.diffusion = k1 * (p + k2) * (p - k2)
        self.grad = [k1 * p * space.physical(1j * k * ph) for k in grid.k_half_odd]
        self.reaction = (p - 1) ** 2 * (p + 1) * (p * p + h0)


def _picard_rhs(wh, coef, grid, space):
    """Explicit part of the linearised problem for the next iterate."""
    lap = space.physical(-grid.ksq_half * wh)
    w = space.physical(wh)
    bracket = coef.diffusion * lap - coef.reaction * (w + 1.0)
    for gp, k in zip(coef.grad, grid.k_half_odd):
        bracket += gp * space.physical(1j * k * wh)
    return grid.ksq_half * space.spectral(bracket)


def picard_local_solve(u0, cfg, params, keep_iterates=False):
    """Successive approximations ``A^{j+1} = Phi(A^j)`` starting from ``A^0 = 0``.

    Each linear problem for ``A^{j+1}`` is integrated on ``[0, T1]`` with the
    constant-coefficient symbol treated exactly and the ``A^j``-dependent
    terms explicitly (RK4 or Euler per ``cfg.stepper.scheme``), with
    ``cfg.n_inner`` uniform steps.  ``A^j`` at RK4 half steps comes from
    cubic interpolation in time.
    """
    if params.potential.variant != GOMPPER_SCHICK:
        raise ConfigurationError("the successive-approximation solver needs the Gompper-Schick potential")
    g = u0.grid
    space = ProductSpace(g, cfg.stepper.dealias)
    symbol = kappa_linear_symbol(g, params)
    h = cfg.T1 / cfg.n_inner
    E, Eh = np.exp(symbol * h), np.exp(symbol * h / 2)
    h2w = sobolev_weight(g, 2.0, homogeneous=False)
    times = np.linspace(0.0, cfg.T1, cfg.n_inner + 1)
    u0h = g.rfft(u0.values)

    def h2(vh):
        return math.sqrt(g.half_sq_sum(vh, h2w))

    prev = [np.zeros(g.half_shape, dtype=complex)] * (cfg.n_inner + 1)
    sup_diffs, sup_norms, finals, kept = [], [], [], []
    for _ in range(cfg.j_max):
        coef_at = {}

        def coef(key):
            if key not in coef_at:
                n, half = key
                ph = _midpoint(prev, n) if half else prev[n]
                coef_at[key] = _FrozenCoefficients(ph, g, params, space)
            return coef_at[key]

        cur = [u0h]
        wh = u0h
        failed = False
        with np.errstate(over="raise", invalid="raise"):
            try:
                for n in range(cfg.n_inner):
                    c0, cm, c1 = coef((n, False)), coef((n, True)), coef((n + 1, False))
                    k1 = _picard_rhs(wh, c0, g, space)
                    if cfg.stepper.scheme == "ifeuler":
                        wh = E * (wh + h * k1)
                    else:
                        k2 = _picard_rhs(Eh * (wh + 0.5 * h * k1), cm, g, space)
                        k3 = _picard_rhs(Eh * wh + 0.5 * h * k2, cm, g, space)
                        k4 = _picard_rhs(E * wh + h * Eh * k3, c1, g, space)
                        wh = E * wh + (h / 6.0) * (E * k1 + 2.0 * Eh * (k2 + k3) + k4)
                    coef_at.pop((n, False), None)
                    coef_at.pop((n, True), None)
                    cur.append(wh)
            except FloatingPointError:
                failed = True
        if failed:
            sup_diffs.append(float("inf"))
            break
        sup_diffs.append(max(h2(a - b) for a, b in zip(cur, prev)))
        sup_norms.append(max(h2(a) for a in cur))
        finals.append(RealField(g, g.irfft(cur[-1])))
        if keep_iterates:
            kept.append(cur)
        prev = cur
    ratios = []
    for a, b in zip(sup_diffs[:-1], sup_diffs[1:]):
        if a > 0 and math.isfinite(a):
            ratios.append(b / a)
    return PicardResult(times, sup_diffs, ratios, sup_norms, finals, kept if keep_iterates else None)

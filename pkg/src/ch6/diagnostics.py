"""Time-slice diagnostics, energy bookkeeping and algebraic decay fits."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DomainError
from .model import PhysicalParams, ProductSpace, free_energy, mu_hat
from .spectral import RealField, norm, power_symbol, sobolev_weight


@dataclass(frozen=True)
class RecordRequest:
    """What a record contains beyond the fixed columns.

    ``n_grad`` is the highest ``l`` of ``||nabla^l u||_{L^2}``; ``neg_s`` the
    order of the negative Sobolev norm ``||Lambda^{-s} u||_{L^2}``.
    """

    n_grad: int = 3
    neg_s: float = 0.5
    extra: tuple = ()
    dealias: str = "two_thirds"


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    l2: float
    h2: float
    grad: tuple
    neg_s: float
    s: float
    free_energy: float
    mu_grad: float
    norms: dict = field(default_factory=dict)

    def chain(self, l, m):
        """``E_l^m = sum_{k=l..m} ||nabla^k u||^2`` from the stored gradient norms."""
        return energy_chain_from_norms(self.grad, l, m).value


@dataclass(frozen=True)
class EnergyChain:
    l: int
    m: int
    value: float


def energy_chain_from_norms(grad_norms, l, m):
    if not 0 <= l <= m < len(grad_norms):
        raise DomainError(f"need 0 <= l <= m <= {len(grad_norms) - 1}, got l={l}, m={m}")
    return EnergyChain(l, m, float(sum(g * g for g in grad_norms[l : m + 1])))


def energy_chain(u, l, m):
    g = u.grid
    uh = g.rfft(u.values)
    if not 0 <= l <= m:
        raise DomainError(f"need 0 <= l <= m, got l={l}, m={m}")
    value = sum(g.half_sq_sum(uh, g.ksq_half**k) for k in range(l, m + 1))
    return EnergyChain(l, m, float(value))


def record_from_half(uh, grid, t, params, request):
    """Build a record from an unnormalised half spectrum."""
    g = grid
    abs2 = np.abs(uh) ** 2 * g.half_weights
    scale = g.volume / g.size**2

    def total(weight=None):
        return float((abs2 if weight is None else abs2 * weight).sum()) * scale

    grad = tuple(math.sqrt(total(g.ksq_half**l)) for l in range(request.n_grad + 1))
    u = RealField(g, g.irfft(uh))
    mh = mu_hat(uh, g, params, ProductSpace(g, request.dealias))
    extra = {spec: norm(u, spec) for spec in request.extra}
    return DiagnosticsRecord(
        t=float(t),
        mass=float(uh.flat[0].real) * g.cell_volume,
        l2=grad[0],
        h2=math.sqrt(total(sobolev_weight(g, 2.0, homogeneous=False))),
        grad=grad,
        neg_s=math.sqrt(total(power_symbol(g.kmag_half, -2.0 * request.neg_s))),
        s=float(request.neg_s),
        free_energy=free_energy(u, params),
        mu_grad=math.sqrt(g.half_sq_sum(mh, g.ksq_half)),
        norms=extra,
    )


def record(u, t, params, request=None):
    """Diagnostics of the field ``u`` at time ``t``."""
    return record_from_half(u.grid.rfft(u.values), u.grid, t, params, request or RecordRequest())


# -- energy dissipation -----------------------------------------------------


@dataclass(frozen=True)
class DissipationReport:
    max_increment: float
    f0: float
    max_mismatch: float
    correlation: float
    dFdt: np.ndarray
    predicted: np.ndarray


# weights (times 12 h) for f' at sample 1, 2 or 3 of five equally spaced samples
_FIVE_POINT = {
    1: (-3, -10, 18, -6, 1),
    2: (1, -8, 0, 8, -1),
    3: (-1, 6, -18, 10, 3),
}


def _uniform(t):
    h = np.diff(t)
    return np.allclose(h, h[0], rtol=1e-9, atol=0)


def _time_derivative(t, F, stencil):
    """``dF/dt`` at interior samples.

    With ``stencil=5`` every point whose five-sample neighbourhood is
    equally spaced gets a fourth-order formula (centred, or shifted by one
    next to the ends); the rest use second-order differences.
    """
    n = t.size
    d = np.empty(n - 2)
    for j, i in enumerate(range(1, n - 1)):
        if stencil == 5 and n >= 5:
            lo = min(max(i - 2, 0), n - 5)
            w = slice(lo, lo + 5)
            if _uniform(t[w]):
                h = t[lo + 1] - t[lo]
                d[j] = np.dot(_FIVE_POINT[i - lo], F[w]) / (12 * h)
                continue
        hm, hp = t[i] - t[i - 1], t[i + 1] - t[i]
        d[j] = (hm * hm * F[i + 1] - hp * hp * F[i - 1] + (hp * hp - hm * hm) * F[i]) / (hm * hp * (hm + hp))
    return d


def dissipation_check(records, M=1.0, stencil=5):
    """Compare finite-difference ``dF/dt`` with ``-M ||grad mu||^2`` at interior records.

    ``stencil=3`` uses second-order differences throughout; ``stencil=5``
    switches to the fourth-order five-point formula away from the ends.
    """
    if len(records) < 3:
        raise DomainError("dissipation_check needs at least 3 records")
    if stencil not in (3, 5):
        raise DomainError(f"stencil must be 3 or 5, got {stencil}")
    t = np.array([r.t for r in records])
    F = np.array([r.free_energy for r in records])
    dFdt = _time_derivative(t, F, stencil)
    pred = -M * np.array([r.mu_grad for r in records[1:-1]]) ** 2
    gap = np.abs(dFdt - pred)
    # differencing round-off: a few ulps of F divided by the record spacing
    noise = 64 * np.finfo(float).eps * np.abs(F).max() / np.diff(t).min()
    rel = gap / np.maximum(np.abs(pred), noise) if noise > 0 else np.where(gap > 0, np.inf, 0.0)
    if np.std(dFdt) > 0 and np.std(pred) > 0:
        corr = float(np.corrcoef(dFdt, pred)[0, 1])
    else:
        corr = 1.0 if np.allclose(dFdt, pred) else float("nan")
    return DissipationReport(
        max_increment=float(max(0.0, np.max(np.diff(F)))),
        f0=float(F[0]),
        max_mismatch=float(rel.max()),
        correlation=corr,
        dFdt=dFdt,
        predicted=pred,
    )


# -- decay fits -------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    l: int
    t1: float
    t2: float
    sigma: float
    r2: float
    sigma_pred: float = float("nan")
    samples: int = 0


def decay_window(cadence, box_length, kappa0):
    """Fit window ``[10 cadence, 0.1 (L / 2 pi)^4 / kappa0]``.

    Past the upper end the smallest nonzero lattice wavenumber dominates and
    the decay turns exponential.
    """
    return 10.0 * cadence, 0.1 * (box_length / (2 * np.pi)) ** 4 / kappa0


def fit_decay(times, values, window, l=0, sigma_pred=float("nan")):
    """Least-squares slope of ``log(value)`` against ``log(1 + t)`` inside ``window``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    t1, t2 = window
    if not t2 > t1 >= 0:
        raise DomainError(f"bad fit window {window}")
    sel = (t >= t1) & (t <= t2)
    if sel.sum() < 8:
        raise DomainError(f"need at least 8 samples in the window, found {int(sel.sum())}")
    if np.any(v[sel] <= 0):
        raise DomainError("decay fit needs strictly positive values")
    res = stats.linregress(np.log1p(t[sel]), np.log(v[sel]))
    r2 = float(min(1.0, max(0.0, res.rvalue**2)))
    return DecayFit(l, float(t1), float(t2), float(-res.slope), r2, float(sigma_pred), int(sel.sum()))


def heat_exponent(l, s):
    """Decay exponent ``(l + s) / 4`` of ``||nabla^l u||`` for data in the ``-s`` homogeneous space."""
    return (l + s) / 4.0


def lp_exponent(l, p):
    """Exponent for ``L^p`` data, ``3/4 (1/p - 1/2) + l/4``."""
    return 0.75 * (1.0 / p - 0.5) + l / 4.0


def sharp_s(slope, dim=3):
    """Critical ``s`` for data whose low-frequency amplitude behaves like ``|k|^slope``."""
    return slope + dim / 2.0


def series(records, column):
    """Time series ``(t, value)`` for a record attribute or ``grad<l>``."""
    t = np.array([r.t for r in records])
    if column.startswith("grad"):
        l = int(re.search(r"(\d+)$", column).group(1))
        return t, np.array([r.grad[l] for r in records])
    return t, np.array([getattr(r, column) for r in records])


# -- heat baseline ----------------------------------------------------------


def heat_baseline(u0, t, params=None, request=None):
    """Record of the exact solution of ``u_t + Lap^2 u = 0`` at time ``t``."""
    return heat_baseline_series(u0, [t], params, request)[0]


def heat_baseline_series(u0, times, params=None, request=None):
    g = u0.grid
    params = params or PhysicalParams()
    request = request or RecordRequest()
    uh = g.rfft(u0.values)
    return [
        record_from_half(np.exp(-g.ksq_half**2 * t) * uh, g, t, params, request) for t in times
    ]


# -- negative norm monitor --------------------------------------------------


@dataclass(frozen=True)
class NegativeNormReport:
    sup: float
    initial: float
    final: float
    growth_flag: bool
    non_increasing: bool


def negative_norm_monitor(records, factor=2.0):
    """Running sup of ``||Lambda^{-s} u||``; flags a final value above ``factor`` times the initial."""
    vals = np.array([r.neg_s for r in records])
    if vals.size == 0:
        raise DomainError("no records")
    return NegativeNormReport(
        sup=float(vals.max()),
        initial=float(vals[0]),
        final=float(vals[-1]),
        growth_flag=bool(vals[-1] > factor * vals[0]),
        non_increasing=bool(np.all(np.diff(vals) <= 1e-14 * max(vals[0], 1e-300))),
    )


# -- CSV --------------------------------------------------------------------


def csv_header(n_grad):
    return ["t", "mass", "L2", "H2"] + [f"gradL2_{l}" for l in range(n_grad + 1)] + [
        "neg_s",
        "free_energy",
        "mu_grad",
    ]


def _fmt(x):
    return format(float(x), ".17g")


def write_records_csv(path, records):
    n_grad = len(records[0].grad) - 1 if records else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(n_grad))
        for r in records:
            w.writerow(
                [_fmt(v) for v in (r.t, r.mass, r.l2, r.h2, *r.grad, r.neg_s, r.free_energy, r.mu_grad)]
            )


def read_records_csv(path):
    """Columns of a diagnostics CSV as a dict of float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in row] for row in body]) if body else np.zeros((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}

"""Numerical checks of the functional inequalities behind the energy method.

Every check returns ``LHS / RHS`` for concrete fields.  Inequalities with an
unspecified constant are judged by whether that ratio stays bounded and
stable under grid refinement (:func:`calibrate`); the frequency-side
interpolation inequality has constant exactly one.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .spectral import RealField, band_limited_random, lp_norm, power_symbol, upsample

_TOL = 1e-12


def _close(a, b):
    return abs(a - b) <= _TOL * max(1.0, abs(a), abs(b))


def _inv(p):
    return 0.0 if math.isinf(p) else 1.0 / p


def derivative_magnitude(f, order):
    """Pointwise ``|nabla^order f|`` (Frobenius norm over all index tuples).

    Non-integer orders fall back to ``|Lambda^order f|``.
    """
    g = f.grid
    fh = g.rfft(f.values)
    if float(order) != int(order):
        return np.abs(g.irfft(power_symbol(g.kmag_half, float(order)) * fh))
    order = int(order)
    if order == 0:
        return np.abs(f.values)
    total = np.zeros(g.shape)
    for combo in itertools.combinations_with_replacement(range(g.dim), order):
        counts = [combo.count(ax) for ax in range(g.dim)]
        mult = math.factorial(order) / math.prod(math.factorial(c) for c in counts)
        sym = np.ones(g.half_shape, dtype=complex)
        for ax, c in enumerate(counts):
            if c:
                k = g.k_half_odd[ax] if c % 2 else g.k_half[ax]
                sym = sym * (1j * k) ** c
        comp = g.irfft(sym * fh)
        total += mult * comp * comp
    return np.sqrt(total)


def _lambda_l2(f, s):
    g = f.grid
    return math.sqrt(g.half_sq_sum(g.rfft(f.values), power_symbol(g.kmag_half, 2.0 * s)))


def _lambda_lp(f, s, p):
    g = f.grid
    vals = g.irfft(power_symbol(g.kmag_half, float(s)) * g.rfft(f.values))
    return lp_norm(vals, g, p)


class InequalityCase:
    kind = "abstract"

    def validate(self, dim):
        pass

    def sides(self, f, g=None):
        raise NotImplementedError

    @property
    def param_hash(self):
        return hashlib.sha1(repr(self).encode()).hexdigest()[:10]


@dataclass(frozen=True)
class Interpolation(InequalityCase):
    """``||nabla^l f|| <= ||nabla^{l+k} f||^{1-theta} ||Lambda^{-s} f||^theta``.

    The default ``theta = k / (l + k + s)`` is the exponent fixed by scaling;
    passing ``theta`` explicitly tests other choices.
    """

    l: float
    k: float
    s: float
    theta: float | None = None
    kind = "interpolation"

    @property
    def exponent(self):
        return self.k / (self.l + self.k + self.s) if self.theta is None else self.theta

    def validate(self, dim):
        if min(self.l, self.k, self.s) < 0 or self.l + self.k + self.s <= 0:
            raise DomainError("interpolation needs l, k, s >= 0 with l + k + s > 0")
        if not 0 <= self.exponent <= 1:
            raise DomainError(f"theta must lie in [0, 1], got {self.exponent}")

    def sides(self, f, g=None):
        th = self.exponent
        lhs = _lambda_l2(f, self.l)
        rhs = _lambda_l2(f, self.l + self.k) ** (1 - th) * _lambda_l2(f, -self.s) ** th
        return lhs, rhs


@dataclass(frozen=True)
class Agmon(InequalityCase):
    """``||f||_inf <= c ||grad f||^{1/2} ||Lap f||^{1/2}`` with ``c = 1``."""

    kind = "agmon"

    def sides(self, f, g=None):
        return lp_norm(f.values, f.grid, math.inf), math.sqrt(_lambda_l2(f, 1) * _lambda_l2(f, 2))


@dataclass(frozen=True)
class HLS(InequalityCase):
    """``||Lambda^{-s} f||_{L^2} <= c ||f||_{L^p}`` with ``1/2 + s/d = 1/p``."""

    s: float
    p: float
    kind = "hls"

    def validate(self, dim):
        if not (0 <= self.s < dim / 2 and 1 < self.p <= 2):
            raise DomainError("HLS needs 0 <= s < d/2 and 1 < p <= 2")
        if not _close(0.5 + self.s / dim, 1.0 / self.p):
            raise DomainError(f"HLS balance 1/2 + s/d = 1/p violated (s={self.s}, p={self.p})")

    def sides(self, f, g=None):
        return _lambda_l2(f, -self.s), lp_norm(f.values, f.grid, self.p)


@dataclass(frozen=True)
class HomogeneousEmbedding(InequalityCase):
    """``||f||_{L^{2d/(d-2s)}} <= c ||Lambda^s f||_{L^2}`` for ``0 <= s < d/2``."""

    s: float
    kind = "embedding"

    def validate(self, dim):
        if not 0 <= self.s < dim / 2:
            raise DomainError("embedding needs 0 <= s < d/2")

    def sides(self, f, g=None):
        d = f.grid.dim
        q = 2.0 * d / (d - 2.0 * self.s)
        return lp_norm(f.values, f.grid, q), _lambda_l2(f, self.s)


@dataclass(frozen=True)
class GagliardoNirenberg(InequalityCase):
    """``||nabla^alpha f||_p <= c ||nabla^m f||_q^{1-theta} ||nabla^l f||_r^theta``."""

    alpha: float
    m: float
    l: float
    p: float
    q: float
    r: float
    theta: float
    kind = "gagliardo_nirenberg"

    def validate(self, dim):
        if not (0 <= self.m <= self.l and 0 <= self.alpha <= self.l):
            raise DomainError("need 0 <= m, alpha <= l")
        if not 0 <= self.theta <= 1:
            raise DomainError("theta must lie in [0, 1]")
        if math.isinf(self.p) and not 0 < self.theta < 1:
            raise DomainError("p = inf requires 0 < theta < 1")
        for e in (self.p, self.q, self.r):
            if e < 1:
                raise DomainError("exponents must be >= 1")
        lhs = self.alpha / dim - _inv(self.p)
        rhs = (self.m / dim - _inv(self.q)) * (1 - self.theta) + (self.l / dim - _inv(self.r)) * self.theta
        if not _close(lhs, rhs):
            raise DomainError(f"Gagliardo-Nirenberg balance violated: {lhs} != {rhs}")

    def sides(self, f, g=None):
        grid = f.grid
        lhs = lp_norm(derivative_magnitude(f, self.alpha), grid, self.p)
        a = lp_norm(derivative_magnitude(f, self.m), grid, self.q)
        b = lp_norm(derivative_magnitude(f, self.l), grid, self.r)
        return lhs, a ** (1 - self.theta) * b**self.theta


@dataclass(frozen=True)
class KatoPonce(InequalityCase):
    """Product (``variant="product"``) or commutator (``"commutator"``) estimate.

    product:    ``||Lambda^s(fg)||_p <= C(||f||_{p1}||Lambda^s g||_{p2} + ||Lambda^s f||_{q1}||g||_{q2})``
    commutator: ``||Lambda^s(fg) - f Lambda^s g||_p <= C(||grad f||_{p1}||Lambda^{s-1} g||_{p2}
    + ||Lambda^s f||_{q1}||g||_{q2})``

    Norms are taken on the grid refined by two so the product ``fg`` is
    represented without aliasing.
    """

    s: float
    p: float
    p1: float
    p2: float
    q1: float
    q2: float
    variant: str = "product"
    kind = "kato_ponce"

    def validate(self, dim):
        if self.variant not in ("product", "commutator"):
            raise DomainError(f"unknown Kato-Ponce variant {self.variant!r}")
        if not (1 < self.p < math.inf and self.s > 0):
            raise DomainError("Kato-Ponce needs 1 < p < inf and s > 0")
        for e in (self.p2, self.q2):
            if not 1 < e < math.inf:
                raise DomainError("p2 and q2 must lie in (1, inf)")
        if not (_close(1 / self.p, _inv(self.p1) + 1 / self.p2) and _close(1 / self.p, _inv(self.q1) + 1 / self.q2)):
            raise DomainError("Kato-Ponce Hoelder balance 1/p = 1/p1 + 1/p2 = 1/q1 + 1/q2 violated")
        if self.variant == "commutator" and (self.s != int(self.s) or self.s < 1):
            raise NotImplementedError("commutator form is implemented for integer s >= 1 only")

    def sides(self, f, g=None):
        if g is None:
            raise DomainError("Kato-Ponce needs two fields")
        f2, g2 = upsample(f), upsample(g)
        grid = f2.grid
        fg = RealField(grid, f2.values * g2.values)
        lam_fg = grid.irfft(power_symbol(grid.kmag_half, self.s) * grid.rfft(fg.values))
        lam_g = grid.irfft(power_symbol(grid.kmag_half, self.s) * grid.rfft(g2.values))
        second = _lambda_lp(f2, self.s, self.q1) * lp_norm(g2.values, grid, self.q2)
        if self.variant == "product":
            lhs = lp_norm(lam_fg, grid, self.p)
            first = lp_norm(f2.values, grid, self.p1) * lp_norm(lam_g, grid, self.p2)
        else:
            lhs = lp_norm(lam_fg - f2.values * lam_g, grid, self.p)
            first = lp_norm(derivative_magnitude(f2, 1), grid, self.p1) * _lambda_lp(g2, self.s - 1, self.p2)
        return lhs, first + second


def check(case, f, g=None):
    """Ratio ``LHS / RHS`` of ``case`` evaluated on ``f`` (and ``g`` where needed)."""
    case.validate(f.grid.dim)
    lhs, rhs = case.sides(f, g)
    if lhs == 0:
        return 0.0
    if rhs == 0:
        return math.inf
    return lhs / rhs


@dataclass
class CalibrationReport:
    case: InequalityCase
    seed: int
    n: int
    ratios: np.ndarray
    histogram: tuple

    @property
    def max_ratio(self):
        return float(np.max(self.ratios))

    @property
    def mean_ratio(self):
        return float(np.mean(self.ratios))

    def summary(self):
        return (
            f"{self.case.kind} {self.case!r}: n={self.n} samples={self.ratios.size} seed={self.seed} "
            f"max_ratio={self.max_ratio:.6g} mean_ratio={self.mean_ratio:.6g}"
        )


def calibrate(case, n_samples, seed, grid, k_max=None, slope=-1.0, bins=10):
    """Empirical constant of ``case`` over random mean-free band-limited fields.

    Samples are reproducible from ``seed`` and, for a fixed ``k_max``,
    identical as functions across grid resolutions.
    """
    if n_samples < 10:
        raise DomainError("calibrate needs at least 10 samples")
    case.validate(grid.dim)
    streams = np.random.SeedSequence(seed).spawn(2 * n_samples)
    ratios = []
    for i in range(n_samples):
        f = band_limited_random(grid, k_max, slope, streams[2 * i])
        g = band_limited_random(grid, k_max, slope, streams[2 * i + 1]) if case.kind == "kato_ponce" else None
        ratios.append(check(case, f, g))
    ratios = np.array(ratios)
    return CalibrationReport(case, seed, grid.n, ratios, np.histogram(ratios, bins=bins))


def write_calibration_csv(path, reports):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "param_hash", "seed", "max_ratio", "mean_ratio"])
        for r in reports:
            w.writerow([r.case.kind, r.case.param_hash, r.seed, format(r.max_ratio, ".17g"), format(r.mean_ratio, ".17g")])

"""Constitutive laws, chemical potential, free energy and the two right-hand sides.

Two algebraically identical ways of writing the evolution are provided:

``mu`` form
    ``u_t = M Lap(mu)`` with
    ``mu = delta Lap^2 u - a(u) Lap u - a'(u)|grad u|^2 / 2 + f(u)``.

``kappa`` form (Gompper-Schick only, ``M = 1``)
    ``u_t = delta Lap^3 u - kappa0 Lap^2 u + N(u)`` with
    ``N(u) = -Lap[kappa1 (u + kappa2)(u - kappa2) Lap u + kappa1 u |grad u|^2
    - (u - 1)^2 (u + 1)^2 (u^2 + h0)]``.

``f`` enters the chemical potential directly, so the energy that decreases
along the flow uses the primitive ``W`` of ``f`` (``W' = f``, ``W(0) = 0``).

Pointwise products are formed in physical space.  ``dealias`` selects how:
``"two_thirds"`` truncates inputs and the product at ``n // 3``; ``"pad"``
forms products on a grid refined by 2; ``"off"`` uses the raw grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .spectral import RealField, pad_half, truncate_half

GOMPPER_SCHICK = "gompper_schick"
PAWLOW_QUARTIC = "pawlow_quartic"
DEALIAS_MODES = ("two_thirds", "pad", "off")


@dataclass(frozen=True)
class PotentialSpec:
    """Bulk density ``f`` together with its derivative and primitive."""

    variant: str = GOMPPER_SCHICK
    h0: float = 0.2
    alpha: float = 0.0

    def __post_init__(self):
        if self.variant not in (GOMPPER_SCHICK, PAWLOW_QUARTIC):
            raise ConfigurationError(f"unknown potential variant {self.variant!r}")

    def f(self, s):
        if self.variant == GOMPPER_SCHICK:
            return (s + 1) ** 2 * (s * s + self.h0) * (s - 1) ** 2
        return (1 - self.alpha) * s * s / 2 + s**4 / 4

    def df(self, s):
        if self.variant == GOMPPER_SCHICK:
            # f = s^6 + (h0 - 2) s^4 + (1 - 2 h0) s^2 + h0
            return 6 * s**5 + 4 * (self.h0 - 2) * s**3 + 2 * (1 - 2 * self.h0) * s
        return (1 - self.alpha) * s + s**3

    def primitive(self, s):
        """``W(s) = int_0^s f``."""
        if self.variant == GOMPPER_SCHICK:
            h0 = self.h0
            return s**7 / 7 + (h0 - 2) * s**5 / 5 + (1 - 2 * h0) * s**3 / 3 + h0 * s
        return (1 - self.alpha) * s**3 / 6 + s**5 / 20


def map_parameters(g0, g2):
    """Raw gradient coefficients ``a(s) = g0 + g2 s^2`` -> ``(kappa0, kappa1, kappa2)``."""
    if not g2 > 0:
        raise DomainError(f"g2 must be positive, got {g2}")
    if g0 > 0:
        return float(g0), float(g2), 0.0
    return 1.0 - g0, float(g2), math.sqrt((1.0 - 2.0 * g0) / g2)


@dataclass(frozen=True)
class PhysicalParams:
    """Model coefficients; ``kappa*`` are derived from ``(g0, g2)``."""

    delta: float = 1.0
    g0: float = 1.0
    g2: float = 1.0
    M: float = 1.0
    potential: PotentialSpec = field(default_factory=PotentialSpec)

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError(f"delta must be positive, got {self.delta}")
        if not self.M >= 0:
            raise ConfigurationError(f"mobility M must be nonnegative, got {self.M}")
        if self.potential.variant == GOMPPER_SCHICK and not self.g2 > 0:
            raise ConfigurationError(f"g2 must be positive, got {self.g2}")

    @classmethod
    def from_kappa(cls, delta, kappa0, kappa1, kappa2, h0, M=1.0):
        """Build raw parameters from a kappa triple; it must be one the mapping produces."""
        if not kappa0 > 0:
            raise ConfigurationError(f"kappa0 must be positive, got {kappa0}")
        if kappa2 == 0:
            g0 = kappa0
        else:
            g0 = 1.0 - kappa0
            if g0 > 0 or not math.isclose(kappa2, math.sqrt((1 - 2 * g0) / kappa1), rel_tol=1e-12):
                raise ConfigurationError(
                    "kappa triple is not the image of any (g0, g2) under the parameter mapping"
                )
        return cls(delta=delta, g0=g0, g2=kappa1, M=M, potential=PotentialSpec(GOMPPER_SCHICK, h0=h0))

    @property
    def h0(self):
        return self.potential.h0

    @property
    def kappa(self):
        return map_parameters(self.g0, self.g2)

    @property
    def kappa0(self):
        return self.kappa[0]

    @property
    def kappa1(self):
        return self.kappa[1]

    @property
    def kappa2(self):
        return self.kappa[2]

    def a(self, s):
        if self.potential.variant == PAWLOW_QUARTIC:
            return np.full_like(np.asarray(s, dtype=float), -2.0)
        return self.g0 + self.g2 * s * s

    def da(self, s):
        if self.potential.variant == PAWLOW_QUARTIC:
            return np.zeros_like(np.asarray(s, dtype=float))
        return 2.0 * self.g2 * s

    @property
    def a0(self):
        return float(self.a(np.zeros(())))


def constitutive_eval(u, which, params):
    """Pointwise ``f``, ``f'``, ``a``, ``a'`` (or the primitive ``W``) of ``u``."""
    s = u.values
    table = {
        "f": params.potential.f,
        "f'": params.potential.df,
        "df": params.potential.df,
        "a": params.a,
        "a'": params.da,
        "da": params.da,
        "W": params.potential.primitive,
    }
    if which not in table:
        raise ConfigurationError(f"unknown constitutive quantity {which!r}")
    return RealField(u.grid, np.broadcast_to(table[which](s), u.grid.shape).copy())


class ProductSpace:
    """Moves half spectra to the physical grid used for products and back."""

    def __init__(self, grid, dealias="two_thirds"):
        if dealias not in DEALIAS_MODES:
            raise ConfigurationError(f"dealias must be one of {DEALIAS_MODES}, got {dealias!r}")
        self.grid = grid
        self.mode = dealias
        self.work = grid.refined(2) if dealias == "pad" else grid

    def physical(self, coeffs):
        g = self.grid
        if self.mode == "two_thirds":
            return g.irfft(coeffs * g.mask_half)
        if self.mode == "pad":
            return self.work.irfft(pad_half(coeffs, g))
        return g.irfft(coeffs)

    def spectral(self, values):
        vh = self.work.rfft(values)
        if self.mode == "two_thirds":
            return vh * self.grid.mask_half
        if self.mode == "pad":
            return truncate_half(vh, self.grid)
        return vh

    def fields(self, uh):
        """``u``, ``Lap u`` and ``|grad u|^2`` on the product grid."""
        g = self.grid
        u = self.physical(uh)
        lap = self.physical(-g.ksq_half * uh)
        grad_sq = np.zeros_like(u)
        for k in g.k_half_odd:
            d = self.physical(1j * k * uh)
            grad_sq += d * d
        return u, lap, grad_sq


def mu_hat(uh, grid, params, space):
    """Half spectrum of the chemical potential."""
    u, lap, grad_sq = space.fields(uh)
    rest = -params.a(u) * lap - 0.5 * params.da(u) * grad_sq + params.potential.f(u)
    return params.delta * grid.ksq_half**2 * uh + space.spectral(rest)


def kappa_nonlinear_hat(uh, grid, params, space):
    """Half spectrum of ``N(u)`` in the kappa form."""
    k0, k1, k2 = params.kappa
    u, lap, grad_sq = space.fields(uh)
    bracket = k1 * (u + k2) * (u - k2) * lap + k1 * u * grad_sq - params.potential.f(u)
    return grid.ksq_half * space.spectral(bracket)


def kappa_linear_symbol(grid, params):
    """``-(delta |k|^6 + kappa0 |k|^4)`` on the half layout."""
    k2 = grid.ksq_half
    return -(params.delta * k2**3 + params.kappa0 * k2**2)


def mu_linear_symbol(grid, params):
    """Stiff linear part of ``M Lap mu`` linearised about ``u = 0``."""
    k2 = grid.ksq_half
    df0 = float(params.potential.df(0.0))
    return -params.M * (params.delta * k2**3 + params.a0 * k2**2 + df0 * k2)


def mu_explicit_hat(uh, grid, params, space):
    """``M Lap mu`` minus its :func:`mu_linear_symbol` part."""
    u, lap, grad_sq = space.fields(uh)
    df0 = float(params.potential.df(0.0))
    rest = (
        -(params.a(u) - params.a0) * lap
        - 0.5 * params.da(u) * grad_sq
        + params.potential.f(u)
        - df0 * u
    )
    return -params.M * grid.ksq_half * space.spectral(rest)


def _require_gompper_schick(params, what):
    if params.potential.variant != GOMPPER_SCHICK:
        raise ConfigurationError(
            f"{what} is only defined for the Gompper-Schick potential; use the mu form "
            "(chemical_potential / mass_flux) for other variants"
        )


def chemical_potential(u, params, dealias="two_thirds"):
    g = u.grid
    space = ProductSpace(g, dealias)
    return RealField(g, g.irfft(mu_hat(g.rfft(u.values), g, params, space)))


def mass_flux(u, params, dealias="two_thirds"):
    """Components of ``j = -M grad mu``."""
    g = u.grid
    space = ProductSpace(g, dealias)
    mh = mu_hat(g.rfft(u.values), g, params, space)
    return [RealField(g, g.irfft(-params.M * 1j * k * mh)) for k in g.k_half_odd]


def divergence(components):
    """Spectral divergence of a list of component fields."""
    g = components[0].grid
    total = np.zeros(g.half_shape, dtype=complex)
    for k, c in zip(g.k_half_odd, components):
        total += 1j * k * g.rfft(c.values)
    return RealField(g, g.irfft(total))


def free_energy(u, params, parts=False):
    """Quadrature of ``W(u) + a(u)|grad u|^2 / 2 + delta (Lap u)^2 / 2``.

    With ``parts=True`` the three contributions are returned separately as a
    dict with keys ``potential``, ``gradient`` and ``curvature``.
    """
    g = u.grid
    uh = g.rfft(u.values)
    lap = g.irfft(-g.ksq_half * uh)
    grad_sq = np.zeros(g.shape)
    for k in g.k_half_odd:
        d = g.irfft(1j * k * uh)
        grad_sq += d * d
    s = u.values
    out = {
        "potential": float(np.sum(params.potential.primitive(s))) * g.cell_volume,
        "gradient": float(np.sum(0.5 * params.a(s) * grad_sq)) * g.cell_volume,
        "curvature": float(np.sum(0.5 * params.delta * lap * lap)) * g.cell_volume,
    }
    if parts:
        return out
    return out["potential"] + out["gradient"] + out["curvature"]


def nonlinear_rhs(u, params, dealias="two_thirds"):
    _require_gompper_schick(params, "the kappa-form nonlinearity")
    g = u.grid
    nh = kappa_nonlinear_hat(g.rfft(u.values), g, params, ProductSpace(g, dealias))
    return RealField(g, g.irfft(nh))


def formulation_residual(u, params, dealias="two_thirds"):
    """Relative L2 gap between the kappa-form right-hand side and ``Lap mu``.

    Both sides use unit mobility.  Returns the absolute gap when ``Lap mu``
    vanishes identically.
    """
    _require_gompper_schick(params, "the formulation residual")
    g = u.grid
    space = ProductSpace(g, dealias)
    uh = g.rfft(u.values)
    kappa_side = kappa_linear_symbol(g, params) * uh + kappa_nonlinear_hat(uh, g, params, space)
    mu_side = -g.ksq_half * mu_hat(uh, g, params, space)
    denom = np.sqrt(g.half_sq_sum(mu_side))
    gap = np.sqrt(g.half_sq_sum(kappa_side - mu_side))
    return float(gap / denom) if denom > 0 else float(gap)

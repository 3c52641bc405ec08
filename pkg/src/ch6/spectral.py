"""Periodic-grid Fourier machinery.

Fields live on the torus ``[0, L)^dim`` sampled with ``n`` points per axis.
Two coefficient layouts are used:

* ``SpectralField`` holds the full ``fftn`` spectrum normalised as Fourier
  series coefficients, ``u(x) = sum_m c_m exp(i k_m . x)`` with
  ``k_m = 2 pi m / L``.  This is the public, layout-agnostic representation.
* The solver kernels work on unnormalised ``rfftn`` half spectra through
  :meth:`GridSpec.rfft` / :meth:`GridSpec.irfft` and the ``*_half`` wavenumber
  tables.  Those are about twice as fast and are what the integrator carries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, DomainError

SNAPSHOT_MAGIC = b"CH6F"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIId")


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``n`` points per axis on a box of side ``box_length``."""

    dim: int
    n: int
    box_length: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigurationError(f"grid.dim must be 1, 2 or 3, got {self.dim}")
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise ConfigurationError(f"grid.n must be an even integer >= 4, got {self.n}")
        if not self.box_length > 0:
            raise ConfigurationError(f"grid.box_length must be positive, got {self.box_length}")

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def half_shape(self):
        return (self.n,) * (self.dim - 1) + (self.n // 2 + 1,)

    @property
    def size(self):
        return self.n**self.dim

    @property
    def spacing(self):
        return self.box_length / self.n

    @property
    def cell_volume(self):
        return self.spacing**self.dim

    @property
    def volume(self):
        return self.box_length**self.dim

    @property
    def k_fundamental(self):
        return 2 * np.pi / self.box_length

    @property
    def cutoff(self):
        """Largest integer mode index kept by the 2/3 rule."""
        return self.n // 3

    def coordinates(self):
        """Sparse coordinate arrays (``indexing='ij'``), one per axis."""
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(*([x] * self.dim), indexing="ij", sparse=True)

    def mesh(self):
        return [np.broadcast_to(c, self.shape) for c in self.coordinates()]

    # -- full (fftn) layout -------------------------------------------------

    @cached_property
    def modes(self):
        """Integer mode indices per axis, broadcastable to ``shape``."""
        m = np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(int)
        return tuple(_axis_view(m, j, self.dim) for j in range(self.dim))

    @cached_property
    def wavenumbers(self):
        return tuple(self.k_fundamental * m for m in self.modes)

    @cached_property
    def ksq(self):
        return sum(k**2 for k in self.wavenumbers) + np.zeros(self.shape)

    @cached_property
    def dealias_mask(self):
        keep = np.ones(self.shape, dtype=bool)
        for m in self.modes:
            keep = keep & (np.abs(m) <= self.cutoff)
        return keep

    # -- half (rfftn) layout ------------------------------------------------

    @cached_property
    def modes_half(self):
        full = np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(int)
        last = np.arange(self.n // 2 + 1)
        axes = [full] * (self.dim - 1) + [last]
        return tuple(_axis_view(a, j, self.dim) for j, a in enumerate(axes))

    @cached_property
    def k_half(self):
        return tuple(self.k_fundamental * m for m in self.modes_half)

    @cached_property
    def k_half_odd(self):
        """Wavenumbers with the Nyquist entry zeroed, for odd-order derivatives."""
        out = []
        for m in self.modes_half:
            k = self.k_fundamental * m.astype(float)
            k[np.abs(m) == self.n // 2] = 0.0
            out.append(k)
        return tuple(out)

    @cached_property
    def ksq_half(self):
        return sum(k**2 for k in self.k_half) + np.zeros(self.half_shape)

    @cached_property
    def kmag_half(self):
        return np.sqrt(self.ksq_half)

    @cached_property
    def mask_half(self):
        keep = np.ones(self.half_shape, dtype=bool)
        for m in self.modes_half:
            keep = keep & (np.abs(m) <= self.cutoff)
        return keep

    @cached_property
    def half_weights(self):
        """Multiplicity of each half-spectrum entry in the full spectrum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return np.broadcast_to(_axis_view(w, self.dim - 1, self.dim), self.half_shape)

    def rfft(self, values):
        return sfft.rfftn(values, axes=tuple(range(self.dim)))

    def irfft(self, coeffs):
        return sfft.irfftn(coeffs, s=self.shape, axes=tuple(range(self.dim)))

    def half_sq_sum(self, coeffs, weight=None):
        """``L^dim * sum |c_m|^2 * weight`` over the full spectrum, from a half spectrum.

        ``coeffs`` are unnormalised ``rfftn`` outputs; the result is the
        squared L2 norm of the field when ``weight`` is ``None``.
        """
        a = np.abs(coeffs) ** 2 * self.half_weights
        if weight is not None:
            a = a * weight
        return float(a.sum()) * self.volume / self.size**2

    def refined(self, factor=2):
        return GridSpec(self.dim, self.n * factor, self.box_length)


def _axis_view(a, axis, dim):
    shape = [1] * dim
    shape[axis] = a.size
    return a.reshape(shape)


@dataclass
class RealField:
    """Real order-parameter samples on a :class:`GridSpec`."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid shape {self.grid.shape}"
            )

    def mean(self):
        return float(self.values.mean())

    def mass(self):
        return float(self.values.sum()) * self.grid.cell_volume

    def copy(self):
        return RealField(self.grid, self.values.copy())


@dataclass
class SpectralField:
    """Fourier-series coefficients on the full ``fftn`` lattice."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != self.grid.shape:
            raise ConfigurationError(
                f"coefficient shape {self.coeffs.shape} does not match grid shape {self.grid.shape}"
            )

    def coefficient(self, mode):
        """Coefficient of integer mode tuple ``mode`` (negative indices allowed)."""
        idx = tuple(int(m) % self.grid.n for m in mode)
        return self.coeffs[idx]

    def hermitian_defect(self):
        """max |c(-m) - conj(c(m))|; zero for spectra of real fields."""
        flipped = np.conj(self.coeffs)
        for ax in range(self.grid.dim):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        return float(np.max(np.abs(self.coeffs - flipped)))


def transform(field):
    """Forward transform of a :class:`RealField` to Fourier-series coefficients."""
    if not isinstance(field, RealField):
        raise ConfigurationError("transform expects a RealField")
    g = field.grid
    return SpectralField(g, sfft.fftn(field.values) / g.size)


def synthesize(field):
    """Complex physical-space values of a spectral field."""
    return sfft.ifftn(field.coeffs * field.grid.size)


def inverse(field):
    """Inverse transform; the (round-off) imaginary part is discarded."""
    return RealField(field.grid, synthesize(field).real)


def imaginary_residue(field):
    """Largest imaginary part of the synthesized field relative to its magnitude."""
    z = synthesize(field)
    scale = np.max(np.abs(z))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(z.imag)) / scale)


@dataclass(frozen=True)
class FractionalPower:
    """Fourier multiplier ``|k|^alpha`` (``Lambda^alpha``; ``alpha = 2`` is ``-Laplacian``)."""

    alpha: float


@dataclass(frozen=True)
class Derivative:
    """Directional derivative ``d^order / dx_axis^order`` as multiplier ``(i k_axis)^order``."""

    axis: int
    order: int = 1


ZERO_MODE_POLICIES = ("project", "strict")


def _check_policy(policy):
    if policy not in ZERO_MODE_POLICIES:
        raise ConfigurationError(f"zero-mode policy must be one of {ZERO_MODE_POLICIES}, got {policy!r}")


def power_symbol(kmag, alpha):
    """``|k|^alpha`` with the zero mode mapped to 0 for negative ``alpha`` (1 for ``alpha = 0``)."""
    if alpha == 0:
        return np.ones_like(kmag)
    out = np.zeros_like(kmag)
    nz = kmag > 0
    out[nz] = kmag[nz] ** alpha
    return out


def apply_symbol(field, symbol, policy="project"):
    """Multiply the spectrum by ``symbol`` (a :class:`FractionalPower` or :class:`Derivative`)."""
    _check_policy(policy)
    g = field.grid
    if isinstance(symbol, FractionalPower):
        alpha = float(symbol.alpha)
        if alpha < 0 and policy == "strict" and abs(field.coeffs.flat[0]) > 0:
            raise DomainError("negative fractional power applied to a field with nonzero mean")
        mult = power_symbol(np.sqrt(g.ksq), alpha)
    elif isinstance(symbol, Derivative):
        if not 0 <= symbol.axis < g.dim:
            raise ConfigurationError(f"derivative axis {symbol.axis} out of range for dim {g.dim}")
        if symbol.order < 0:
            raise DomainError("derivative order must be nonnegative")
        k = g.wavenumbers[symbol.axis].astype(float)
        if symbol.order % 2:
            k = np.where(np.abs(g.modes[symbol.axis]) == g.n // 2, 0.0, k)
        mult = (1j * k) ** symbol.order
    else:
        raise ConfigurationError(f"unknown symbol {symbol!r}")
    return SpectralField(g, field.coeffs * mult)


def dealias(field):
    """2/3 rule: zero every coefficient with some ``|m_j| > n // 3``."""
    return SpectralField(field.grid, np.where(field.grid.dealias_mask, field.coeffs, 0))


@dataclass(frozen=True)
class NormSpec:
    """Which norm to take.

    ``kind`` is ``"lp"`` (uses ``p``), ``"sobolev"`` (uses ``s`` and
    ``homogeneous``) or ``"derivative"`` (``||nabla^l u||_{L^2}``, uses ``l``).
    """

    kind: str
    p: float = 2.0
    s: float = 0.0
    homogeneous: bool = True
    l: int = 0

    @classmethod
    def lp(cls, p):
        return cls("lp", p=float(p))

    @classmethod
    def sobolev(cls, s, homogeneous=True):
        return cls("sobolev", s=float(s), homogeneous=bool(homogeneous))

    @classmethod
    def derivative(cls, l):
        return cls("derivative", l=int(l))


def lp_norm(values, grid, p):
    """Trapezoidal-on-torus L^p norm of grid values (max norm for ``p = inf``)."""
    if not p >= 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    a = np.abs(values)
    if np.isinf(p):
        return float(a.max())
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * grid.cell_volume))
    return float((np.sum(a**p) * grid.cell_volume) ** (1.0 / p))


def sobolev_weight(grid, s, homogeneous=True):
    """Squared multiplier for the (in)homogeneous H^s norm on the half layout."""
    if homogeneous:
        return power_symbol(grid.kmag_half, 2 * s)
    return (1.0 + grid.ksq_half) ** s


def norm(field, spec, policy="project"):
    """Norm of a :class:`RealField` according to ``spec``.

    Sobolev and derivative norms are evaluated on the spectral side through
    Parseval; negative homogeneous orders act on the mean-free part (policy
    ``"project"``) or reject fields with nonzero mean (``"strict"``).
    """
    _check_policy(policy)
    g = field.grid
    if spec.kind == "lp":
        return lp_norm(field.values, g, spec.p)
    if spec.kind == "sobolev":
        uh = g.rfft(field.values)
        if spec.homogeneous and spec.s < 0 and policy == "strict":
            if abs(uh.flat[0]) > 1e-14 * max(1.0, np.abs(uh).max()):
                raise DomainError("negative-order homogeneous norm of a field with nonzero mean")
        return float(np.sqrt(g.half_sq_sum(uh, sobolev_weight(g, spec.s, spec.homogeneous))))
    if spec.kind == "derivative":
        if spec.l < 0:
            raise DomainError("derivative order must be nonnegative")
        uh = g.rfft(field.values)
        return float(np.sqrt(g.half_sq_sum(uh, g.ksq_half**spec.l)))
    raise ConfigurationError(f"unknown norm kind {spec.kind!r}")


def pad_half(coeffs, grid, factor=2):
    """Zero-pad a half spectrum to the grid refined by ``factor``.

    The Nyquist planes are dropped; the returned coefficients are scaled so
    that ``fine.irfft`` reproduces the same trigonometric polynomial.
    """
    fine = grid.refined(factor)
    out = np.zeros(fine.half_shape, dtype=complex)
    out[_pad_index(grid, fine)] = coeffs[_pad_index(grid, grid)]
    return out * (fine.size / grid.size)


def truncate_half(coeffs, grid, factor=2):
    """Inverse of :func:`pad_half`: keep the coarse-grid modes of a fine half spectrum."""
    fine = grid.refined(factor)
    out = np.zeros(grid.half_shape, dtype=complex)
    out[_pad_index(grid, grid)] = coeffs[_pad_index(grid, fine)]
    return out * (grid.size / fine.size)


def _pad_index(coarse, target):
    n, m = coarse.n, target.n
    pos = np.arange(n // 2)
    neg = np.arange(n // 2 + 1, n) + (m - n)
    full = np.concatenate([pos, neg])
    axes = [full] * (coarse.dim - 1) + [pos]
    return np.ix_(*axes)


def upsample(field, factor=2):
    """Exact band-limited interpolation of ``field`` onto a refined grid."""
    g = field.grid
    fine = g.refined(factor)
    return RealField(fine, fine.irfft(pad_half(g.rfft(field.values), g, factor)))


def band_limited_random(grid, k_max=None, slope=0.0, seed=0, mean_free=True):
    """Random real trigonometric polynomial with Gaussian coefficients.

    Coefficients are drawn for every integer mode with ``|m_j| <= k_max`` and
    scaled by ``|m|^slope``.  The draw depends only on ``(k_max, slope, seed,
    dim)``, not on ``grid.n``, so the same seed gives the same function on
    any grid that resolves it.
    """
    if k_max is None:
        k_max = grid.cutoff
    k_max = int(k_max)
    if not 0 <= k_max < grid.n // 2:
        raise ConfigurationError(f"k_max={k_max} not resolvable on n={grid.n}")
    rng = np.random.default_rng(seed)
    box = (2 * k_max + 1,) * grid.dim
    c = rng.standard_normal(box) + 1j * rng.standard_normal(box)
    m = np.meshgrid(*([np.arange(-k_max, k_max + 1)] * grid.dim), indexing="ij")
    mag = np.sqrt(sum(mj.astype(float) ** 2 for mj in m))
    c = c * power_symbol(mag, slope)
    if mean_free:
        c[(k_max,) * grid.dim] = 0.0
    full = np.zeros(grid.shape, dtype=complex)
    full[tuple(mj % grid.n for mj in m)] = c
    values = sfft.ifftn(full * grid.size).real
    return RealField(grid, values)


def write_snapshot(path, field):
    """Write ``field`` in the binary snapshot format (little-endian, row-major)."""
    g = field.grid
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.dim, g.n, float(g.box_length))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C"))


def read_snapshot(path):
    """Read a snapshot written by :func:`write_snapshot`."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ConfigurationError(f"{path}: file too short for a snapshot header")
    magic, version, dim, n, length = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ConfigurationError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ConfigurationError(f"{path}: unsupported snapshot version {version}")
    grid = GridSpec(dim, n, length)
    body = data[_HEADER.size:]
    if len(body) != 8 * grid.size:
        raise ConfigurationError(f"{path}: expected {grid.size} values, found {len(body) // 8}")
    values = np.frombuffer(body, dtype="<f8").reshape(grid.shape).astype(float)
    return RealField(grid, values)

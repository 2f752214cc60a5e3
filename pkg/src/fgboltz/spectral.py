"""Fourier grids, transforms and norms on the periodic velocity box [-L, L]^d.

Conventions used throughout the package:

* Modes run over k in {-N/2, ..., N/2}^d, i.e. N+1 values per axis.  A
  coefficient array has shape ``(N+1,)*d`` and ``coeffs[i_1, ..., i_d]`` holds
  the mode ``k_j = i_j - N/2``; axis j of the array is velocity component j.
* Basis functions are ``exp(i*pi*k.v/L)`` with inner product
  ``<f, g> = (2L)^-d * int f conj(g) dv``, hence
  ``||f||_2^2 = (2L)^d * sum_k |f_k|^2``.
* Physical grids are uniform and periodic with ``M = oversample*(N+1)`` points
  per axis, ``v_p = -L + p*2L/M`` for p = 0..M-1 (``indexing="ij"``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigMismatch, DomainError, SymmetryError

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class SpectralConfig:
    """Dimension, mode count and truncation parameters shared by every module."""

    d: int
    N: int
    L: float
    R: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.d}")
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise DomainError(f"N must be an even integer >= 2, got {self.N}")
        if not (self.R > 0):
            raise DomainError(f"R must be positive, got {self.R}")
        if not (self.L >= self.R):
            raise DomainError(f"need L >= R > 0, got L={self.L}, R={self.R}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "R", float(self.R))

    @property
    def n_per_axis(self) -> int:
        return self.N + 1

    @property
    def shape(self) -> tuple:
        return (self.N + 1,) * self.d

    @property
    def n_modes(self) -> int:
        return (self.N + 1) ** self.d

    @property
    def volume(self) -> float:
        """Measure of the box, (2L)^d."""
        return (2.0 * self.L) ** self.d

    def modes(self) -> np.ndarray:
        """Integer mode numbers -N/2..N/2 along one axis."""
        return np.arange(-(self.N // 2), self.N // 2 + 1)

    def mode_grid(self) -> np.ndarray:
        """Array of shape ``(d, N+1, ..., N+1)`` with the multi-index components."""
        return np.stack(np.meshgrid(*([self.modes()] * self.d), indexing="ij"))

    def flat_index(self, k) -> int:
        """Row-major position of multi-index ``k`` in a flattened coefficient array."""
        k = tuple(int(x) for x in k)
        if len(k) != self.d or any(abs(x) > self.N // 2 for x in k):
            raise DomainError(f"mode {k} outside -N/2..N/2 for N={self.N}")
        return int(np.ravel_multi_index(tuple(x + self.N // 2 for x in k), self.shape))


def make_config(d: int, N: int, L: float, R: float) -> SpectralConfig:
    """Validated :class:`SpectralConfig`; raises DomainError on L < R or bad N."""
    return SpectralConfig(d=d, N=N, L=L, R=R)


def truncation_from_support(S: float) -> tuple[float, float]:
    """Anti-aliasing choice for data supported in the ball of radius ``S``.

    Returns ``(R, L)`` with ``R = 2S`` and the smallest admissible
    ``L = (3 + sqrt(2))/2 * S``.
    """
    if not (S > 0):
        raise DomainError(f"support radius must be positive, got {S}")
    return 2.0 * S, (3.0 + math.sqrt(2.0)) / 2.0 * S


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a trigonometric polynomial in P_N."""

    config: SpectralConfig
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if c.shape != self.config.shape:
            raise ConfigMismatch(f"coefficient shape {c.shape} != {self.config.shape}")
        object.__setattr__(self, "coeffs", _freeze(c))

    @classmethod
    def zeros(cls, config: SpectralConfig) -> "SpectralField":
        return cls(config, np.zeros(config.shape, dtype=np.complex128))

    def coeff(self, k) -> complex:
        h = self.config.N // 2
        return complex(self.coeffs[tuple(int(x) + h for x in k)])

    def flat(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    @property
    def mass(self) -> float:
        """Integral over the box, (2L)^d * f_0 (real part)."""
        return self.config.volume * float(self.coeffs[(self.config.N // 2,) * self.config.d].real)

    def with_coeffs(self, coeffs) -> "SpectralField":
        return SpectralField(self.config, coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self.config, other.config)
        return SpectralField(self.config, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self.config, other.config)
        return SpectralField(self.config, self.coeffs - other.coeffs)

    def __mul__(self, alpha) -> "SpectralField":
        return SpectralField(self.config, self.coeffs * alpha)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PhysicalField:
    """Real point values on the uniform periodic grid of ``oversample*(N+1)`` points per axis."""

    config: SpectralConfig
    oversample: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if int(self.oversample) != self.oversample or self.oversample < 1:
            raise DomainError(f"oversample must be a positive integer, got {self.oversample}")
        v = np.array(self.values, dtype=np.float64, copy=True)
        expected = (self.grid_size,) * self.config.d
        if v.shape != expected:
            raise ConfigMismatch(f"value shape {v.shape} != {expected}")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def grid_size(self) -> int:
        return int(self.oversample) * (self.config.N + 1)

    @property
    def spacing(self) -> float:
        return 2.0 * self.config.L / self.grid_size

    def axis(self) -> np.ndarray:
        return grid_axis(self.config, self.oversample)

    def integral(self) -> float:
        return float(self.values.sum()) * self.spacing ** self.config.d


def _check_same(a: SpectralConfig, b: SpectralConfig):
    if a != b:
        raise ConfigMismatch(f"configs differ: {a} vs {b}")


def grid_axis(config: SpectralConfig, oversample: int) -> np.ndarray:
    M = oversample * (config.N + 1)
    return -config.L + 2.0 * config.L * np.arange(M) / M


def grid_points(config: SpectralConfig, oversample: int) -> np.ndarray:
    """Grid coordinates, shape ``(d, M, ..., M)``."""
    ax = grid_axis(config, oversample)
    return np.stack(np.meshgrid(*([ax] * config.d), indexing="ij"))


def sample(config: SpectralConfig, func: Callable, oversample: int = 2) -> PhysicalField:
    """Sample ``func(v)`` on the grid; ``v`` is passed with shape ``(d, M, ..., M)``."""
    return PhysicalField(config, oversample, func(grid_points(config, oversample)))


def _mode_slots(config: SpectralConfig, M: int):
    k = config.modes()
    idx = np.mod(k, M)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    return idx, sign


def _sign_tensor(sign: np.ndarray, d: int) -> np.ndarray:
    out = sign
    for _ in range(d - 1):
        out = np.multiply.outer(out, sign)
    return out


def forward_transform(p: PhysicalField) -> SpectralField:
    """Trapezoid-rule projection of grid values onto P_N.

    Exact to round-off for band-limited data with modes inside the grid's
    alias-free range.
    """
    cfg = p.config
    M = p.grid_size
    spec = np.fft.fftn(p.values) / M ** cfg.d
    idx, sign = _mode_slots(cfg, M)
    coeffs = spec[np.ix_(*([idx] * cfg.d))] * _sign_tensor(sign, cfg.d)
    return SpectralField(cfg, coeffs)


def inverse_complex(f: SpectralField, oversample: int) -> np.ndarray:
    """Complex point values of ``sum_k f_k exp(i*pi*k.v/L)`` on the grid."""
    if int(oversample) != oversample or oversample < 1:
        raise DomainError(f"oversample must be a positive integer, got {oversample}")
    cfg = f.config
    M = oversample * (cfg.N + 1)
    idx, sign = _mode_slots(cfg, M)
    full = np.zeros((M,) * cfg.d, dtype=np.complex128)
    full[np.ix_(*([idx] * cfg.d))] = f.coeffs * _sign_tensor(sign, cfg.d)
    return np.fft.ifftn(full) * M ** cfg.d


def inverse_transform(f: SpectralField, oversample: int = 1) -> PhysicalField:
    """Evaluate the trigonometric polynomial on the oversampled grid.

    Raises:
        SymmetryError: if the imaginary residue exceeds ``1e-10 * max|f_k|``,
            which means the coefficients are not Hermitian.
    """
    vals = inverse_complex(f, oversample)
    scale = float(np.max(np.abs(f.coeffs))) if f.coeffs.size else 0.0
    resid = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if resid > IMAG_TOL * scale:
        raise SymmetryError(
            f"imaginary residue {resid:.3e} exceeds {IMAG_TOL:g} * max|f_k| = {IMAG_TOL * scale:.3e}"
        )
    return PhysicalField(f.config, oversample, vals.real)


def hermitian_residual(f: SpectralField) -> float:
    """max_k |f(-k) - conj(f(k))| relative to max|f_k| (0 for the zero field)."""
    c = f.coeffs
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        return 0.0
    flipped = c[(slice(None, None, -1),) * c.ndim]
    return float(np.max(np.abs(flipped - np.conj(c)))) / scale


def hermitian_part(f: SpectralField) -> SpectralField:
    c = f.coeffs
    flipped = c[(slice(None, None, -1),) * c.ndim]
    return SpectralField(f.config, 0.5 * (c + np.conj(flipped)))


def lp_norm(p: PhysicalField, p_exp: float = 2.0) -> float:
    """L^p norm over the box by the periodic trapezoid rule (grid max for p = inf)."""
    if p_exp == np.inf:
        return float(np.max(np.abs(p.values)))
    if not (p_exp >= 1):
        raise DomainError(f"p must lie in [1, inf], got {p_exp}")
    w = p.spacing ** p.config.d
    return float((w * np.sum(np.abs(p.values) ** p_exp)) ** (1.0 / p_exp))


def _sobolev_weight(wavenumbers: list[np.ndarray], k: int) -> np.ndarray:
    """sum over |nu| <= k of prod_j xi_j^(2 nu_j) on the tensor grid of ``wavenumbers``."""
    d = len(wavenumbers)
    grids = np.meshgrid(*[w ** 2 for w in wavenumbers], indexing="ij")
    out = np.zeros(grids[0].shape)
    for nu in itertools.product(range(k + 1), repeat=d):
        if sum(nu) > k:
            continue
        term = np.ones_like(out)
        for g, e in zip(grids, nu):
            if e:
                term = term * g ** e
        out += term
    return out


def sobolev_weights(config: SpectralConfig, k: int) -> np.ndarray:
    xi = np.pi * config.modes() / config.L
    return _sobolev_weight([xi] * config.d, k)


def hk_norm(f: SpectralField, k: int = 0) -> float:
    """H^k norm via Parseval: (2L)^d * sum_k w_k |f_k|^2 with derivative weights (pi k_j / L)."""
    if int(k) != k or k < 0:
        raise DomainError(f"Sobolev order must be a non-negative integer, got {k}")
    w = sobolev_weights(f.config, int(k))
    return float(np.sqrt(f.config.volume * np.sum(w * np.abs(f.coeffs) ** 2)))


def grid_hk_norm(p: PhysicalField, k: int = 0) -> float:
    """H^k norm of the trigonometric interpolant of grid data.

    For k = 0 this coincides with ``lp_norm(p, 2)`` (discrete Parseval).
    """
    cfg = p.config
    M = p.grid_size
    c = np.fft.fftn(p.values) / M ** cfg.d
    n = np.fft.fftfreq(M, 1.0 / M)
    w = _sobolev_weight([np.pi * n / cfg.L] * cfg.d, int(k))
    return float(np.sqrt(cfg.volume * np.sum(w * np.abs(c) ** 2)))


def split_parts(f: SpectralField, oversample: int = 4) -> tuple[PhysicalField, PhysicalField]:
    """Pointwise positive and negative parts of f on the oversampled grid."""
    if oversample < 2:
        raise DomainError(f"split_parts needs oversample >= 2, got {oversample}")
    vals = inverse_transform(f, oversample).values
    plus = PhysicalField(f.config, oversample, np.maximum(vals, 0.0))
    minus = PhysicalField(f.config, oversample, np.maximum(-vals, 0.0))
    return plus, minus


def evaluate_at(f: SpectralField, points: np.ndarray) -> np.ndarray:
    """Direct trigonometric summation of f at arbitrary points of shape ``(P, d)``."""
    cfg = f.config
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    k = cfg.modes()
    n = k.size
    rest = f.coeffs.reshape(n, -1)
    e = np.exp(1j * np.pi / cfg.L * np.multiply.outer(pts[:, 0], k))
    out = e @ rest  # (P, n^(d-1))
    for j in range(1, cfg.d):
        e = np.exp(1j * np.pi / cfg.L * np.multiply.outer(pts[:, j], k))
        out = np.einsum("pk,pkr->pr", e, out.reshape(pts.shape[0], n, -1))
    return out.reshape(-1)


def random_hermitian_field(config: SpectralConfig, rng: np.random.Generator, decay: float = 1.0) -> SpectralField:
    """Complex Gaussian coefficients with variance ``exp(-decay |k|)``, made Hermitian.

    The result is a real-valued trigonometric polynomial.  Averaging with the
    conjugate partner halves the variance, which the sqrt(2) restores.
    """
    kk = config.mode_grid().astype(np.float64)
    std = np.exp(-0.5 * decay * np.sqrt(np.sum(kk ** 2, axis=0)))
    z = (rng.standard_normal(config.shape) + 1j * rng.standard_normal(config.shape)) / np.sqrt(2.0)
    return hermitian_part(SpectralField(config, z * std * np.sqrt(2.0)))

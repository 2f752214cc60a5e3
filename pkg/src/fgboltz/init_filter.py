"""Initial data: analytic profiles, projection onto P_N, spectral filters, and
the four admissibility conditions on the discrete initial datum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DomainError
from .spectral import (
    PhysicalField,
    SpectralConfig,
    SpectralField,
    forward_transform,
    grid_hk_norm,
    hk_norm,
    inverse_transform,
    lp_norm,
    sample,
    split_parts,
)

MASS_TOL = 1e-10
NORM_TOL = 1e-10
L1_CONSTANT = 2.0


# --- analytic profiles --------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Named closed-form initial datum, evaluated on arrays of shape ``(d, ...)``."""

    name: str
    params: dict = field(default_factory=dict)
    func: Callable = field(default=None, compare=False, repr=False)

    def __call__(self, v):
        return self.func(np.asarray(v, dtype=np.float64))


def _periodize(func, L: float, d: int):
    """Sum ``func`` over the lattice images with shifts in {-1, 0, 1}^d * 2L."""

    def wrapped(v):
        out = np.zeros(v.shape[1:])
        for shift in itertools.product((-1, 0, 1), repeat=d):
            s = np.asarray(shift, dtype=np.float64).reshape((d,) + (1,) * (v.ndim - 1)) * 2.0 * L
            out += func(v - s)
        return out

    return wrapped


def _gaussian(center, T, mass, d):
    c = np.asarray(center, dtype=np.float64)
    norm = mass / (2.0 * math.pi * T) ** (d / 2.0)

    def g(v):
        cc = c.reshape((d,) + (1,) * (v.ndim - 1))
        return norm * np.exp(-np.sum((v - cc) ** 2, axis=0) / (2.0 * T))

    return g


def gaussian_bump(L: float, d: int = 2, T: float = 0.1, mass: float = 1.0, center=None) -> Profile:
    """Periodized Gaussian ``mass * (2 pi T)^{-d/2} exp(-|v - c|^2 / 2T)``."""
    center = tuple(center) if center is not None else (0.0,) * d
    return Profile(
        "gaussian",
        {"T": T, "mass": mass, "center": center},
        _periodize(_gaussian(center, T, mass, d), L, d),
    )


def double_bump(L: float, d: int = 2, T: float = 0.1, mass: float = 1.0, shift: float = 0.5) -> Profile:
    """Two periodized Gaussians of equal mass centred at +-shift along v_1."""
    c1 = (shift,) + (0.0,) * (d - 1)
    c2 = (-shift,) + (0.0,) * (d - 1)
    g1 = _gaussian(c1, T, 0.5 * mass, d)
    g2 = _gaussian(c2, T, 0.5 * mass, d)
    return Profile(
        "double_bump",
        {"T": T, "mass": mass, "shift": shift},
        _periodize(lambda v: g1(v) + g2(v), L, d),
    )


def ball_indicator(radius: float = 1.0, height: float = 1.0, d: int = 2) -> Profile:
    """``height * 1{|v| <= radius}``; radius < L, so no periodization is needed."""
    return Profile(
        "ball",
        {"radius": radius, "height": height},
        lambda v: np.where(np.sum(v ** 2, axis=0) <= radius ** 2, height, 0.0),
    )


# --- projection and filters ---------------------------------------------------


def project_initial(
    f0: Union[PhysicalField, Callable], config: SpectralConfig = None, oversample: int = 2
) -> SpectralField:
    """P_N f0 from grid samples (trapezoid rule) or from a closed-form sampler."""
    if isinstance(f0, PhysicalField):
        return forward_transform(f0)
    if config is None:
        raise DomainError("a config is required to sample a closed-form profile")
    return forward_transform(sample(config, f0, oversample))


@dataclass(frozen=True)
class FilterSpec:
    """Spectral filter sigma_N applied mode by mode (product over axes).

    ``"fejer"``: prod_j (1 - |k_j| / (N/2 + 1)).
    ``"exponential"``: prod_j exp(-alpha (|k_j| / (N/2))^(2 order)).
    """

    kind: str = "none"
    alpha: float = 36.0
    order: int = 4

    def __post_init__(self):
        if self.kind not in ("none", "fejer", "exponential"):
            raise DomainError(f"unknown filter {self.kind!r}")
        if self.kind == "exponential" and (self.alpha < 0 or self.order < 1):
            raise DomainError("exponential filter needs alpha >= 0 and order >= 1")

    def axis_factor(self, N: int) -> np.ndarray:
        k = np.abs(np.arange(-(N // 2), N // 2 + 1)).astype(np.float64)
        if self.kind == "fejer":
            return 1.0 - k / (N // 2 + 1)
        if self.kind == "exponential":
            return np.exp(-self.alpha * (k / (N // 2)) ** (2 * self.order))
        return np.ones_like(k)

    def sigma(self, config: SpectralConfig) -> np.ndarray:
        a = self.axis_factor(config.N)
        out = a
        for _ in range(config.d - 1):
            out = np.multiply.outer(out, a)
        return out


def apply_filter(f: SpectralField, filt: FilterSpec) -> SpectralField:
    if filt.kind == "none":
        return f
    return SpectralField(f.config, f.coeffs * filt.sigma(f.config))


# --- admissibility conditions -------------------------------------------------


@dataclass
class InitReport:
    cond_a_massgap: float
    cond_b_l2_ratio: float
    cond_b_h1_ratio: float
    cond_c_l1_ratio: float
    cond_d_negpart_l2: float
    eps: float
    pass_a: bool
    pass_b: bool
    pass_c: bool
    pass_d: bool

    @property
    def all_pass(self) -> bool:
        return self.pass_a and self.pass_b and self.pass_c and self.pass_d

    def to_text(self) -> str:
        """Flat ``key=value`` block, one entry per line."""
        lines = []
        for key, val in asdict(self).items():
            if isinstance(val, bool):
                lines.append(f"{key}={'true' if val else 'false'}")
            else:
                lines.append(f"{key}={val:.17g}")
        return "\n".join(lines) + "\n"


def check_conditions(fN0: SpectralField, f0: PhysicalField, eps: float, oversample: int = 4) -> InitReport:
    """Measure conditions (a)-(d) for the discrete initial datum ``fN0``.

    All norms of ``f0`` are grid norms of its samples (H^1 through the
    trigonometric interpolant), which is what the projection actually sees.
    """
    mass0 = f0.integral()
    gap = abs(fN0.mass - mass0) / abs(mass0) if mass0 != 0 else abs(fN0.mass)
    l2_ratio = hk_norm(fN0, 0) / lp_norm(f0, 2)
    h1_ratio = hk_norm(fN0, 1) / grid_hk_norm(f0, 1)
    l1_ratio = lp_norm(inverse_transform(fN0, oversample), 1) / lp_norm(f0, 1)
    _, minus = split_parts(fN0, oversample)
    neg = lp_norm(minus, 2)
    return InitReport(
        cond_a_massgap=gap,
        cond_b_l2_ratio=l2_ratio,
        cond_b_h1_ratio=h1_ratio,
        cond_c_l1_ratio=l1_ratio,
        cond_d_negpart_l2=neg,
        eps=eps,
        pass_a=gap <= MASS_TOL,
        pass_b=l2_ratio <= 1 + NORM_TOL and h1_ratio <= 1 + NORM_TOL,
        pass_c=l1_ratio <= L1_CONSTANT,
        pass_d=neg < eps,
    )


def smallest_passing_N(profile: Callable, N_values, L: float, R: float, eps: float,
                       filt: FilterSpec = FilterSpec(), d: int = 2, oversample: int = 4) -> dict:
    """For each condition, the smallest tested N from which every larger tested N passes.

    ``None`` means the condition fails at the largest tested N.
    """
    N_values = sorted(N_values)
    flags = []
    for N in N_values:
        cfg = SpectralConfig(d, N, L, R)
        f0 = sample(cfg, profile, oversample)
        fN0 = apply_filter(forward_transform(f0), filt)
        rep = check_conditions(fN0, f0, eps)
        flags.append((rep.pass_a, rep.pass_b, rep.pass_c, rep.pass_d))
    out = {}
    for j, name in enumerate("abcd"):
        best = None
        for N, fl in zip(reversed(N_values), reversed(flags)):
            if not fl[j]:
                break
            best = N
        out[name] = best
    return out

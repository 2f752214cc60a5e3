import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgboltz import DomainError, SpectralConfig, SpectralField, SymmetryError
from fgboltz.errors import ConfigMismatch
from fgboltz.spectral import (
    PhysicalField,
    evaluate_at,
    forward_transform,
    grid_hk_norm,
    grid_points,
    hermitian_part,
    hermitian_residual,
    hk_norm,
    inverse_transform,
    lp_norm,
    random_hermitian_field,
    sample,
    split_parts,
    truncation_from_support,
)
from oracles import direct_synthesis

CFG = SpectralConfig(2, 8, 2.5, 2.0)


def field_from_seed(cfg, seed):
    return random_hermitian_field(cfg, np.random.default_rng(seed))


# --- config -----------------------------------------------------------------


def test_config_validation():
    with pytest.raises(DomainError):
        SpectralConfig(2, 7, 3.0, 2.0)  # odd N
    with pytest.raises(DomainError):
        SpectralConfig(2, 8, 1.0, 2.0)  # L < R
    with pytest.raises(DomainError):
        SpectralConfig(1, 8, 3.0, 2.0)
    with pytest.raises(DomainError):
        SpectralConfig(2, 8, 3.0, 0.0)


def test_config_shape_and_flat_index():
    cfg = SpectralConfig(2, 4, 3.0, 2.0)
    assert cfg.shape == (5, 5) and cfg.n_modes == 25
    assert cfg.flat_index((-2, -2)) == 0
    assert cfg.flat_index((2, 2)) == 24
    assert cfg.flat_index((0, 0)) == 12
    # flat(-k) = n - 1 - flat(k)
    for k in [(1, -2), (0, 1), (-2, 2)]:
        assert cfg.flat_index(tuple(-x for x in k)) == cfg.n_modes - 1 - cfg.flat_index(k)
    with pytest.raises(DomainError):
        cfg.flat_index((3, 0))


def test_truncation_rule():
    R, L = truncation_from_support(1.0)
    assert R == 2.0
    assert L == pytest.approx((3 + math.sqrt(2)) / 2, rel=1e-15)
    with pytest.raises(DomainError):
        truncation_from_support(0.0)


# --- transforms -------------------------------------------------------------


@pytest.mark.parametrize("oversample", [1, 2, 3, 4])
def test_round_trip(oversample):
    f = field_from_seed(CFG, 1)
    back = forward_transform(inverse_transform(f, oversample))
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12 * np.max(np.abs(f.coeffs))


def test_inverse_matches_direct_synthesis():
    f = field_from_seed(CFG, 2)
    p = inverse_transform(f, 2)
    pts = grid_points(CFG, 2).reshape(2, -1).T
    ref = direct_synthesis(f.coeffs, CFG.L, pts)
    assert np.max(np.abs(p.values.reshape(-1) - ref.real)) < 1e-12
    assert np.max(np.abs(ref.imag)) < 1e-12


def test_evaluate_at_matches_direct_synthesis(rng):
    f = field_from_seed(CFG, 3)
    pts = rng.uniform(-CFG.L, CFG.L, size=(17, 2))
    assert np.allclose(evaluate_at(f, pts), direct_synthesis(f.coeffs, CFG.L, pts), atol=1e-12)


def test_mode_zero_is_mean():
    # constant-plus-cosine sampled exactly: zero mode = (2L)^-d * integral
    cfg = SpectralConfig(2, 4, 3.0, 2.0)
    func = lambda v: 2.0 + np.cos(np.pi * v[0] / cfg.L) * np.cos(2 * np.pi * v[1] / cfg.L)
    f = forward_transform(sample(cfg, func, 2))
    assert f.coeff((0, 0)) == pytest.approx(2.0, abs=1e-14)
    assert f.coeff((1, 2)) == pytest.approx(0.25, abs=1e-14)
    assert f.coeff((-1, -2)) == pytest.approx(0.25, abs=1e-14)
    assert f.mass == pytest.approx(2.0 * cfg.volume, rel=1e-14)


def test_symmetry_error_on_non_hermitian():
    c = np.zeros(CFG.shape, dtype=complex)
    c[5, 4] = 1.0  # single mode without its conjugate partner
    with pytest.raises(SymmetryError):
        inverse_transform(SpectralField(CFG, c))


def test_hermitian_helpers():
    c = np.zeros(CFG.shape, dtype=complex)
    c[5, 4] = 1.0 + 1.0j
    f = SpectralField(CFG, c)
    assert hermitian_residual(f) > 0.5
    h = hermitian_part(f)
    assert hermitian_residual(h) == 0.0
    assert hermitian_residual(SpectralField.zeros(CFG)) == 0.0


def test_field_is_immutable_and_checked():
    f = field_from_seed(CFG, 4)
    with pytest.raises(ValueError):
        f.coeffs[0, 0] = 1.0
    with pytest.raises(ConfigMismatch):
        SpectralField(CFG, np.zeros((3, 3)))
    with pytest.raises(ConfigMismatch):
        f + SpectralField.zeros(SpectralConfig(2, 4, 2.5, 2.0))


# --- norms ------------------------------------------------------------------


def test_single_mode_norms():
    # |e^{i pi k.v/L}|_{H^1}^2 = (2L)^d (1 + |pi k / L|^2), split over the mode and its conjugate
    cfg = SpectralConfig(2, 8, 2.0, 2.0)
    c = np.zeros(cfg.shape, dtype=complex)
    c[4 + 1, 4 + 2] = 0.5
    c[4 - 1, 4 - 2] = 0.5  # cos(pi (v1 + 2 v2) / L)
    f = SpectralField(cfg, c)
    xi2 = (math.pi / cfg.L) ** 2 * (1 + 4)
    assert hk_norm(f, 0) == pytest.approx(math.sqrt(cfg.volume * 0.5), rel=1e-14)
    assert hk_norm(f, 1) == pytest.approx(math.sqrt(cfg.volume * 0.5 * (1 + xi2)), rel=1e-14)
    # H^2 adds nu = (2,0), (1,1), (0,2): xi1^4 + xi1^2 xi2^2 + xi2^4
    x1, x2 = (math.pi / cfg.L) ** 2, 4 * (math.pi / cfg.L) ** 2
    w2 = 1 + x1 + x2 + x1 ** 2 + x1 * x2 + x2 ** 2
    assert hk_norm(f, 2) == pytest.approx(math.sqrt(cfg.volume * 0.5 * w2), rel=1e-14)
    with pytest.raises(DomainError):
        hk_norm(f, -1)


@pytest.mark.parametrize("oversample", [2, 3, 4])
def test_parseval(oversample):
    f = field_from_seed(CFG, 5)
    p = inverse_transform(f, oversample)
    assert lp_norm(p, 2) == pytest.approx(hk_norm(f, 0), rel=1e-10)
    assert grid_hk_norm(p, 1) == pytest.approx(hk_norm(f, 1), rel=1e-10)


def test_lp_norm_values():
    cfg = SpectralConfig(2, 4, 1.0, 1.0)
    p = PhysicalField(cfg, 2, np.full((10, 10), -3.0))
    assert lp_norm(p, 1) == pytest.approx(12.0)
    assert lp_norm(p, 2) == pytest.approx(6.0)
    assert lp_norm(p, np.inf) == 3.0
    with pytest.raises(DomainError):
        lp_norm(p, 0.5)


def test_split_parts_mass_identity():
    f = field_from_seed(CFG, 6)
    plus, minus = split_parts(f, 4)
    assert lp_norm(plus, 1) - lp_norm(minus, 1) == pytest.approx(f.mass, abs=1e-10)
    assert np.all(plus.values >= 0) and np.all(minus.values >= 0)
    with pytest.raises(DomainError):
        split_parts(f, 1)


def test_random_field_statistics():
    cfg = SpectralConfig(2, 16, 2.5, 2.0)
    fields = [field_from_seed(cfg, s).coeffs for s in range(400)]
    var = np.mean(np.abs(np.array(fields)) ** 2, axis=0)
    # off-axis modes: variance exp(-|k|) (Hermitian averaging keeps it for k != 0)
    assert var[8 + 2, 8] == pytest.approx(math.exp(-2), rel=0.2)
    assert var[8 + 4, 8 + 3] == pytest.approx(math.exp(-5), rel=0.2)
    assert hermitian_residual(field_from_seed(cfg, 0)) == 0.0


# --- properties -------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.sampled_from([2, 4, 6, 8]), oversample=st.integers(1, 4))
def test_property_round_trip_and_hermitian(seed, N, oversample):
    cfg = SpectralConfig(2, N, 2.5, 2.0)
    f = field_from_seed(cfg, seed)
    p = inverse_transform(f, oversample)  # raises if not Hermitian
    back = forward_transform(p)
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12 * max(1.0, np.max(np.abs(f.coeffs)))
    assert hermitian_residual(back) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-2.0, 2.0))
def test_property_split_parts(seed, shift):
    f = field_from_seed(CFG, seed)
    c = f.coeffs.copy()
    c[4, 4] += shift
    f = SpectralField(CFG, c)
    plus, minus = split_parts(f, 4)
    assert lp_norm(plus, 1) - lp_norm(minus, 1) == pytest.approx(f.mass, abs=1e-10)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgboltz import DomainError, SpectralConfig, SpectralField
from fgboltz.diagnostics import (
    MONITOR_COLUMNS,
    ConstantEstimates,
    InitialData,
    constant_ratios,
    envelopes,
    estimate_constants,
    initial_data,
    monitor,
    record,
)
from fgboltz.init_filter import double_bump
from fgboltz.integrator import RunConfig, run
from fgboltz.spectral import forward_transform, random_hermitian_field, sample
from conftest import KERNELS, L_STD, cached_table


def constant_field(cfg, c):
    coeffs = np.zeros(cfg.shape, dtype=complex)
    coeffs[(cfg.N // 2,) * cfg.d] = c
    return SpectralField(cfg, coeffs)


def test_record_of_constant_field():
    cfg = SpectralConfig(2, 4, 1.0, 1.0)
    r = record(constant_field(cfg, 0.7), 0.5)
    assert r.t == 0.5
    assert r.mass == pytest.approx(4 * 0.7, rel=1e-15)
    assert r.l1 == pytest.approx(4 * 0.7, rel=1e-14)
    assert r.l2 == pytest.approx(2 * 0.7, rel=1e-14)
    assert r.h1 == pytest.approx(2 * 0.7, rel=1e-14)
    assert r.negpart_l2 == 0.0
    neg = record(constant_field(cfg, -1.0), 0.0)
    assert neg.negpart_l2 == pytest.approx(2.0, rel=1e-14)  # (2L)^{d/2}


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31), a=st.floats(0.01, 100.0), b=st.floats(0.01, 100.0))
def test_property_ratios_scale_invariant(seed, a, b):
    t = cached_table(4, KERNELS["hard1_linear"])
    rng = np.random.default_rng(seed)
    f, g = random_hermitian_field(t.config, rng), random_hermitian_field(t.config, rng)
    r0 = constant_ratios(f, g, t)
    r1 = constant_ratios(f * a, g * b, t)
    for key in r0:
        assert r1[key] == pytest.approx(r0[key], rel=1e-9)


def test_ratios_skip_zero_fields():
    t = cached_table(4)
    f = random_hermitian_field(t.config, np.random.default_rng(0))
    zero = SpectralField.zeros(t.config)
    assert constant_ratios(zero, zero, t) == {}
    r = constant_ratios(f, zero, t)
    assert set(r) == {"D0", "D1", "C2"} and all(np.isfinite(v) for v in r.values())


def test_estimate_constants_structure():
    t = cached_table(8)
    c = estimate_constants(t, samples=100, seed=3)
    assert c.sample_count == 100
    assert c.kernel_fingerprint == t.kernel.fingerprint
    box = t.config.volume ** 0.5
    assert c.D5_hat == pytest.approx(c.D6_hat * box)
    assert c.D3_hat == pytest.approx(max(c.C0_hat + c.C1_hat, c.C0_hat * box))
    assert c.D4_hat == pytest.approx(c.C2_hat / (c.C0_hat + c.C1_hat))
    assert c.D6_hat <= c.C0_hat + c.C1_hat + 1e-12
    for v in (c.D0_hat, c.D1_hat, c.C0_hat, c.C1_hat, c.C2_hat):
        assert 0.0 < v < math.inf
    assert estimate_constants(t, samples=100, seed=3) == c


def test_estimate_constants_validation():
    t = cached_table(4)
    with pytest.raises(DomainError):
        estimate_constants(t, samples=99)
    with pytest.raises(DomainError):
        estimate_constants(KERNELS["maxwell"], samples=100)


def test_D0_stable_across_seeds():
    t = cached_table(8)
    vals = [estimate_constants(t, samples=1000, seed=s).D0_hat for s in (0, 1, 2)]
    mid = float(np.median(vals))
    assert all(abs(v - mid) <= 0.1 * mid for v in vals)


# --- monitor ----------------------------------------------------------------

CONSTS = ConstantEstimates(0.5, 0.4, 1.2, 0.8, 3.0, 1.0, 1.0, 0.3, 0.9, 100, "x")
INIT = InitialData(1.0, 0.8, 0.7, 1.5, 0.01, 16)


def test_envelopes_at_zero():
    env = envelopes(0.0, CONSTS, INIT, safety=2.0)
    assert env["M"] == 2.0
    assert env["K0"] == INIT.fN0_l2 and env["K1"] == INIT.fN0_h1
    assert env["bound_l2"] == pytest.approx(2.0 * 0.8)
    assert env["bound_negpart"] == pytest.approx(2.0 * (0.01 + 0.8 * 1.5 ** 2 / (2.0 * 16)))


def test_envelopes_grow_in_time():
    a, b = envelopes(0.1, CONSTS, INIT), envelopes(0.2, CONSTS, INIT)
    for key in ("K0", "K1", "bound_l2", "bound_negpart"):
        assert b[key] > a[key]
    K0 = math.exp(0.2 * 0.5 * 2.0) * 0.7
    assert b["K0"] == pytest.approx(K0)
    assert b["K1"] == pytest.approx(math.exp(0.2 * 0.4 * (2.0 + K0)) * 1.5)


@pytest.fixture(scope="module")
def monitored():
    t = cached_table(16)
    cfg = t.config
    prof = double_bump(L_STD, T=0.09, shift=0.45)
    f0 = sample(cfg, prof, 4)
    fN0 = forward_transform(f0)
    traj = run(fN0, t, RunConfig(0.2, 0.01, diag_every=5))
    consts = estimate_constants(t, samples=100)
    return monitor(traj, consts, initial_data(fN0, f0)), traj


def test_monitor_passes_for_smooth_data(monitored):
    rep, traj = monitored
    assert len(rep.rows) == len(traj.diagnostics) == 5
    assert rep.exact_pass and rep.heuristic_pass
    assert all(r.within_bounds == (True, True, True) for r in rep.records)
    assert rep.records[0].bound_l2 == rep.rows[0]["bound_l2"]


def test_monitor_summary_labels(monitored):
    rep, _ = monitored
    text = rep.summary()
    assert text.count("[exact]") == 1 and text.count("[heuristic]") == 2
    assert "lower bounds" in text


def test_monitor_csv(monitored):
    rep, _ = monitored
    lines = rep.to_csv().splitlines()
    assert lines[0].split(",") == list(MONITOR_COLUMNS)
    row = lines[1].split(",")
    assert row[MONITOR_COLUMNS.index("pass_mass")] == "1"
    bound = row[MONITOR_COLUMNS.index("bound_l2")]
    assert float(bound) == rep.rows[0]["bound_l2"]  # 17 significant digits round-trip


def test_monitor_flags_violation():
    tiny = InitialData(1.0, 1e-6, 0.7, 1.5, 0.0, 16)
    t = cached_table(8)
    f = random_hermitian_field(t.config, np.random.default_rng(0))
    traj = run(f * 0.01, t, RunConfig(0.0, 0.01))
    rep = monitor(traj, CONSTS, tiny)
    assert rep.exact_pass and not rep.heuristic_pass
    assert "FAIL" in rep.summary()

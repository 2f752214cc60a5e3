"""Per-step diagnostics, empirical stability constants, and the stability monitor.

The monitor has one exact check (mass is conserved by construction) and two
envelope checks whose constants are empirical maxima over random fields.
Those maxima are lower bounds on the true constants, so the envelopes are
labelled heuristic: a failure is a warning sign, not a disproof.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .collision import eval_collision_extended
from .errors import DomainError
from .kernel import KernelSpec, WeightTable, build_weight_table
from .spectral import (
    PhysicalField,
    SpectralConfig,
    SpectralField,
    hk_norm,
    inverse_transform,
    lp_norm,
    random_hermitian_field,
    split_parts,
)

MASS_DRIFT_TOL = 1e-12
DEFAULT_SAFETY = 2.0


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    l1: float
    l2: float
    h1: float
    negpart_l2: float
    bound_l2: float = math.nan
    bound_negpart: float = math.nan
    within_bounds: Optional[tuple] = None  # (mass, l2, negpart) once monitored


def record(f: SpectralField, t: float, oversample: int = 4) -> DiagnosticsRecord:
    """Mass from mode 0, L^1/L^2 on the oversampled grid, H^1 by Parseval."""
    vals = inverse_transform(f, oversample)
    _, minus = split_parts(f, oversample)
    return DiagnosticsRecord(
        t=float(t),
        mass=f.mass,
        l1=lp_norm(vals, 1),
        l2=lp_norm(vals, 2),
        h1=hk_norm(f, 1),
        negpart_l2=lp_norm(minus, 2),
    )


# --- empirical constants --------------------------------------------------------


@dataclass(frozen=True)
class ConstantEstimates:
    """Empirical maxima of the ratios that define the stability constants.

    D0: |Q(f,f)|_2 / (|f|_1 |f|_2).
    D1: |Q(f,f)|_H1 / ((|f|_1 + |f|_2) |f|_H1).
    D6: |Q(g,f)|_2 / (|g|_1 |f|_2), both argument orders; D5 = D6 (2L)^{d/2}.
    C0, C1: the same bilinear ratio for the gain and loss parts alone.
    C2: max of the direct ratio N |P_N Q(f,f) - Q(f,f)|_2 / |f|_H1^2 and of
        (2L / pi) |Q(f,f)|_H1 / |f|_H1^2, the second coming from the projection
        bound |(I - P_N) u|_2 <= (2L / (pi N)) |u|_H1.  Random fields carry
        little energy near mode N/2, so the direct ratio alone shrinks with N.
    D3 = max(C0 + C1, C0 (2L)^{d/2}); D4 = C2 / (C0 + C1).
    """

    D0_hat: float
    D1_hat: float
    D3_hat: float
    D4_hat: float
    D5_hat: float
    D6_hat: float
    C0_hat: float
    C1_hat: float
    C2_hat: float
    sample_count: int
    kernel_fingerprint: str
    config: SpectralConfig = field(repr=False, default=None)


def _l1(f: SpectralField, oversample: int = 4) -> float:
    return lp_norm(inverse_transform(f, oversample), 1)


def _restrict_error(q_ext: SpectralField, N: int) -> float:
    """L^2 norm of the modes of ``q_ext`` lying outside -N/2..N/2 (that is, |E_N|_2)."""
    c = q_ext.coeffs.copy()
    h, H = N // 2, q_ext.config.N // 2
    inner = (slice(H - h, H + h + 1),) * c.ndim
    c[inner] = 0.0
    return float(np.sqrt(q_ext.config.volume * np.sum(np.abs(c) ** 2)))


def constant_ratios(f: SpectralField, g: SpectralField, table: WeightTable, oversample: int = 4) -> dict:
    """All ratios entering :class:`ConstantEstimates` for one pair of fields.

    Diagonal ratios use ``f`` alone; bilinear ratios use ``(g, f)`` and ``(f, g)``.
    Ratios whose denominator vanishes (a zero field) are left out.
    """
    N = f.config.N
    f1, f2, fh = _l1(f, oversample), hk_norm(f, 0), hk_norm(f, 1)
    g1, g2 = _l1(g, oversample), hk_norm(g, 0)
    out = {}
    if f1 * f2 > 0.0:
        qff = eval_collision_extended(f, table)
        out["D0"] = hk_norm(qff, 0) / (f1 * f2)
        out["D1"] = hk_norm(qff, 1) / ((f1 + f2) * fh)
        out["C2"] = max(N * _restrict_error(qff, N), 2.0 * f.config.L / np.pi * hk_norm(qff, 1)) / fh ** 2
    d6 = c0 = c1 = 0.0
    for a, b, a1, b2 in ((g, f, g1, f2), (f, g, f1, g2)):
        den = a1 * b2
        if den == 0.0:
            continue
        # Q(a, b): ``a`` is the partner slot, ``b`` the slot that the loss multiplies
        gain = eval_collision_extended(b, table, g=a, part="gain")
        loss = eval_collision_extended(b, table, g=a, part="loss")
        d6 = max(d6, hk_norm(gain - loss, 0) / den)
        c0 = max(c0, hk_norm(gain, 0) / den)
        c1 = max(c1, hk_norm(loss, 0) / den)
    if d6 > 0.0 or c0 > 0.0:
        out.update({"D6": d6, "C0": c0, "C1": c1})
    return out


def estimate_constants(
    kernel: Union[KernelSpec, WeightTable],
    config: Optional[SpectralConfig] = None,
    samples: int = 100,
    seed: int = 0,
    oversample: int = 4,
) -> ConstantEstimates:
    """Maxima of the defining ratios over ``samples`` random Hermitian field pairs."""
    if samples < 100:
        raise DomainError(f"samples must be >= 100, got {samples}")
    if isinstance(kernel, WeightTable):
        table = kernel
    else:
        if config is None:
            raise DomainError("a config is required when passing a KernelSpec")
        table = build_weight_table(config, kernel)
    cfg = table.config
    rng = np.random.default_rng(seed)
    best = {}
    for _ in range(samples):
        f = random_hermitian_field(cfg, rng)
        g = random_hermitian_field(cfg, rng)
        for key, val in constant_ratios(f, g, table, oversample).items():
            best[key] = max(best.get(key, 0.0), val)
    missing = {"D0", "D1", "C2", "D6", "C0", "C1"} - set(best)
    if missing:
        raise DomainError(f"no admissible samples for {sorted(missing)}")
    box = cfg.volume ** 0.5
    C0, C1 = best["C0"], best["C1"]
    return ConstantEstimates(
        D0_hat=best["D0"],
        D1_hat=best["D1"],
        D3_hat=max(C0 + C1, C0 * box),
        D4_hat=best["C2"] / (C0 + C1),
        D5_hat=best["D6"] * box,
        D6_hat=best["D6"],
        C0_hat=C0,
        C1_hat=C1,
        C2_hat=best["C2"],
        sample_count=samples,
        kernel_fingerprint=table.kernel.fingerprint,
        config=cfg,
    )


# --- monitor ----------------------------------------------------------------


@dataclass(frozen=True)
class InitialData:
    """Norms of the continuous and discrete initial data used by the envelopes."""

    M_f0_1: float  # |f0|_1
    M_f0_2: float  # |f0|_2
    fN0_l2: float
    fN0_h1: float
    fN0_negpart: float
    N: int


def initial_data(fN0: SpectralField, f0: Optional[PhysicalField] = None, oversample: int = 4) -> InitialData:
    """Collect the initial norms; without ``f0`` the discrete datum stands in for it."""
    if f0 is None:
        f0 = inverse_transform(fN0, oversample)
    _, minus = split_parts(fN0, oversample)
    return InitialData(
        M_f0_1=lp_norm(f0, 1),
        M_f0_2=lp_norm(f0, 2),
        fN0_l2=hk_norm(fN0, 0),
        fN0_h1=hk_norm(fN0, 1),
        fN0_negpart=lp_norm(minus, 2),
        N=fN0.config.N,
    )


MONITOR_COLUMNS = (
    "t", "mass_drift", "pass_mass", "l1", "bound_l1", "l2", "bound_l2", "pass_l2",
    "negpart_l2", "bound_negpart", "pass_negpart", "K0", "K1",
)


@dataclass
class MonitorReport:
    rows: list
    consts: ConstantEstimates
    init: InitialData
    safety: float
    records: list = field(default_factory=list)

    @property
    def exact_pass(self) -> bool:
        return all(r["pass_mass"] for r in self.rows)

    @property
    def heuristic_pass(self) -> bool:
        return all(r["pass_l2"] and r["pass_negpart"] for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(MONITOR_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in MONITOR_COLUMNS])
        return buf.getvalue()

    def summary(self) -> str:
        c, i = self.consts, self.init
        worst_mass = max((r["mass_drift"] for r in self.rows), default=0.0)
        worst_l2 = max((r["l2"] / r["bound_l2"] for r in self.rows), default=0.0)
        worst_neg = max((r["negpart_l2"] / r["bound_negpart"] for r in self.rows), default=0.0)
        lines = [
            f"[exact]     mass drift <= {MASS_DRIFT_TOL:g} relative: {'PASS' if self.exact_pass else 'FAIL'}"
            f" (worst {worst_mass:.3e})",
            f"[heuristic] L2 envelope, safety {self.safety:g}: "
            f"{'PASS' if all(r['pass_l2'] for r in self.rows) else 'FAIL'} (worst ratio {worst_l2:.3e})",
            f"[heuristic] negative-part envelope, safety {self.safety:g}: "
            f"{'PASS' if all(r['pass_negpart'] for r in self.rows) else 'FAIL'} (worst ratio {worst_neg:.3e})",
            f"inputs: D0={c.D0_hat:.6g} D1={c.D1_hat:.6g} D3={c.D3_hat:.6g} D4={c.D4_hat:.6g} "
            f"samples={c.sample_count}",
            f"inputs: |f0|_1={i.M_f0_1:.6g} |f0|_2={i.M_f0_2:.6g} |fN0|_H1={i.fN0_h1:.6g} "
            f"|fN0^-|_2={i.fN0_negpart:.6g} N={i.N}",
            "heuristic envelopes use empirical constants (lower bounds on the true ones); "
            "a failure flags a problem but does not refute the estimate",
        ]
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return f"{float(x):.17g}"


def envelopes(t: float, consts: ConstantEstimates, init: InitialData, safety: float = DEFAULT_SAFETY) -> dict:
    """L^1, L^2 and negative-part envelopes at time ``t`` (safety applied to the last two)."""
    M = 2.0 * init.M_f0_1
    K0 = math.exp(t * consts.D0_hat * M) * init.fN0_l2
    K1 = math.exp(t * consts.D1_hat * (M + K0)) * init.fN0_h1
    bound_l2 = math.exp(2.0 * consts.D0_hat * init.M_f0_1 * t) * init.M_f0_2 * safety
    growth = math.exp(t * consts.D3_hat * (M + K0))
    bound_neg = growth * (init.fN0_negpart + consts.D4_hat * K1 ** 2 / (M * init.N)) * safety
    return {"M": M, "K0": K0, "K1": K1, "bound_l2": bound_l2, "bound_negpart": bound_neg}


def monitor(traj, consts: ConstantEstimates, init: InitialData, safety: float = DEFAULT_SAFETY) -> MonitorReport:
    """Check every diagnostics record of ``traj`` against the exact and heuristic bounds."""
    recs = list(traj.diagnostics)
    if not recs:
        raise DomainError("trajectory has no diagnostics records")
    mass0 = recs[0].mass
    rows, updated = [], []
    for r in recs:
        env = envelopes(r.t, consts, init, safety)
        drift = abs(r.mass - mass0) / abs(mass0) if mass0 != 0 else abs(r.mass)
        row = {
            "t": r.t,
            "mass_drift": drift,
            "pass_mass": drift <= MASS_DRIFT_TOL,
            "l1": r.l1,
            "bound_l1": env["M"],
            "l2": r.l2,
            "bound_l2": env["bound_l2"],
            "pass_l2": r.l2 <= env["bound_l2"],
            "negpart_l2": r.negpart_l2,
            "bound_negpart": env["bound_negpart"],
            "pass_negpart": r.negpart_l2 <= env["bound_negpart"],
            "K0": env["K0"],
            "K1": env["K1"],
        }
        rows.append(row)
        updated.append(
            DiagnosticsRecord(
                **{k: v for k, v in asdict(r).items() if k not in ("bound_l2", "bound_negpart", "within_bounds")},
                bound_l2=env["bound_l2"],
                bound_negpart=env["bound_negpart"],
                within_bounds=(row["pass_mass"], row["pass_l2"], row["pass_negpart"]),
            )
        )
    return MonitorReport(rows, consts, init, safety, updated)

"""Numerical exercise of the bilinear collision estimates and of spectral accuracy.

The bound study samples random band-limited fields and records the largest
observed ratio for each estimate.  The collision output is taken from
``eval_collision_extended``, which keeps every mode of Q^R(g, f) (nothing is
projected away), so grid norms of the output are norms of the full operator.

The convergence study is a self-convergence test: every run uses the same
code, the reference is the finest N, and the time step is refined until the
reference itself stops moving.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .collision import eval_collision_extended
from .errors import DomainError, ResourceError
from .integrator import RunConfig, run
from .kernel import KernelSpec, QuadratureSpec, WeightTable, build_weight_table
from .spectral import (
    SpectralConfig,
    SpectralField,
    forward_transform,
    hk_norm,
    inverse_transform,
    lp_norm,
    random_hermitian_field,
    sample,
)

__all__ = [
    "BoundReport",
    "ConvergenceTable",
    "check_bilinear_bounds",
    "convergence_study",
    "random_hermitian_field",
]

BOUND_COLUMNS = ("p", "n_samples", "max_ratio_gain", "max_ratio_loss", "max_ratio_full", "max_ratio_hk",
                 "last_decile_growth", "scale_residual", "bounded")
CONVERGENCE_COLUMNS = ("N", "error_l2", "ratio", "local_slope")
STABILIZE_TOL = 0.05
SCALE_FACTORS = (3.7, 0.21)


# --- bilinear bounds ------------------------------------------------------------


@dataclass
class BoundReport:
    p: float
    n_samples: int
    max_ratio_gain: float
    max_ratio_loss: float
    max_ratio_full: float
    max_ratio_hk: float
    last_decile_growth: dict  # ratio name -> relative growth of the running max over the last 10 %
    scale_residual: float  # largest relative change of any ratio under g -> a g, f -> b f
    history: dict = field(default_factory=dict, repr=False)  # ratio name -> per-sample values

    @property
    def bounded(self) -> bool:
        return all(v < STABILIZE_TOL for v in self.last_decile_growth.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BOUND_COLUMNS)
        w.writerow([
            _fmt(self.p), self.n_samples, _fmt(self.max_ratio_gain), _fmt(self.max_ratio_loss),
            _fmt(self.max_ratio_full), _fmt(self.max_ratio_hk),
            _fmt(max(self.last_decile_growth.values())), _fmt(self.scale_residual),
            "1" if self.bounded else "0",
        ])
        return buf.getvalue()


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _parse_p(p) -> float:
    if isinstance(p, str) and p.lower() in ("inf", "infinity"):
        return math.inf
    p = float(p)
    if p not in (1.0, 2.0, math.inf):
        raise DomainError(f"p must be 1, 2 or inf, got {p}")
    return p


def bound_ratios(g: SpectralField, f: SpectralField, table: WeightTable, p: float, oversample: int = 4) -> dict:
    """Ratios |Q+(g,f)|_p, |Q-(g,f)|_p, |Q(g,f)|_p over |g|_1 |f|_p, and the H^1 ratio."""
    gain = eval_collision_extended(f, table, g=g, part="gain")
    loss = eval_collision_extended(f, table, g=g, part="loss")
    full = gain - loss
    # the output has degree N, twice the input; oversample/2 keeps the same grid spacing
    out_os = max(2, oversample // 2)
    den = lp_norm(inverse_transform(g, oversample), 1) * lp_norm(inverse_transform(f, oversample), p)
    return {
        "gain": lp_norm(inverse_transform(gain, out_os), p) / den,
        "loss": lp_norm(inverse_transform(loss, out_os), p) / den,
        "full": lp_norm(inverse_transform(full, out_os), p) / den,
        "hk": hk_norm(full, 1) / (hk_norm(g, 1) * hk_norm(f, 1)),
    }


def _table_for(kernel, config):
    if isinstance(kernel, WeightTable):
        return kernel
    if config is None:
        raise DomainError("a config is required when passing a KernelSpec")
    return build_weight_table(config, kernel)


def check_bilinear_bounds(
    kernel: Union[KernelSpec, WeightTable],
    config: Optional[SpectralConfig] = None,
    p=2,
    samples: int = 1000,
    seed: int = 0,
    oversample: int = 4,
) -> BoundReport:
    """Running maxima of the bilinear ratios over random Hermitian pairs (g, f).

    Each pair is also evaluated after rescaling g and f, which must leave every
    ratio unchanged; the largest relative change is ``scale_residual``.
    """
    p = _parse_p(p)
    if samples < 100:
        raise DomainError(f"samples must be >= 100, got {samples}")
    table = _table_for(kernel, config)
    cfg = table.config
    rng = np.random.default_rng(seed)
    names = ("gain", "loss", "full", "hk")
    hist = {k: np.empty(samples) for k in names}
    a, b = SCALE_FACTORS
    scale_res = 0.0
    for i in range(samples):
        g = random_hermitian_field(cfg, rng)
        f = random_hermitian_field(cfg, rng)
        r = bound_ratios(g, f, table, p, oversample)
        rs = bound_ratios(g * a, f * b, table, p, oversample)
        for k in names:
            hist[k][i] = r[k]
            scale_res = max(scale_res, abs(rs[k] - r[k]) / r[k])
    cut = samples - max(1, samples // 10)
    growth = {}
    for k in names:
        head = float(np.max(hist[k][:cut]))
        growth[k] = (float(np.max(hist[k])) - head) / head
    return BoundReport(
        p=p,
        n_samples=samples,
        max_ratio_gain=float(hist["gain"].max()),
        max_ratio_loss=float(hist["loss"].max()),
        max_ratio_full=float(hist["full"].max()),
        max_ratio_hk=float(hist["hk"].max()),
        last_decile_growth=growth,
        scale_residual=scale_res,
        history=hist,
    )


# --- convergence study ------------------------------------------------------------


@dataclass
class ConvergenceTable:
    N_values: list
    errors: list  # |P_N f_ref(t_end) - f_N(t_end)|_2
    N_ref: int
    dt: float
    dt_change: float  # relative change of the reference under the last dt halving
    t_end: float

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.N_values, self.N_values[1:])):
            raise DomainError("N values must be strictly increasing")
        if self.N_ref <= max(self.N_values):
            raise DomainError("N_ref must exceed every tested N")

    @property
    def ratios(self) -> list:
        """error(N_{i+1}) / error(N_i)."""
        return [b / a if a > 0 else math.nan for a, b in zip(self.errors, self.errors[1:])]

    @property
    def local_slopes(self) -> list:
        """Exponents k with error ~ N^-k fitted between consecutive N."""
        out = []
        for (n1, e1), (n2, e2) in zip(zip(self.N_values, self.errors), zip(self.N_values[1:], self.errors[1:])):
            out.append(math.log(e1 / e2) / math.log(n2 / n1) if e1 > 0 and e2 > 0 else math.nan)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CONVERGENCE_COLUMNS)
        ratios = [math.nan] + self.ratios
        slopes = [math.nan] + self.local_slopes
        for row in zip(self.N_values, self.errors, ratios, slopes):
            w.writerow([row[0]] + [_fmt(x) for x in row[1:]])
        w.writerow([self.N_ref, _fmt(0.0), _fmt(math.nan), _fmt(math.nan)])
        return buf.getvalue()


def restrict(f: SpectralField, config: SpectralConfig) -> SpectralField:
    """Keep the modes of ``f`` that exist in the smaller ``config`` (the projection P_N)."""
    H, h = f.config.N // 2, config.N // 2
    sl = (slice(H - h, H + h + 1),) * config.d
    return SpectralField(config, f.coeffs[sl])


def _rhs_cost(N: int, d: int, rc: RunConfig) -> float:
    evals = {"euler": 1, "rk4": 4}[rc.scheme] * rc.n_steps
    return float(evals) * float(N + 1) ** (2 * d)


def convergence_study(
    f0: Callable,
    kernel: KernelSpec,
    N_list: Sequence[int],
    N_ref: int,
    t_end: float,
    rc: RunConfig,
    L: float,
    R: float,
    d: int = 2,
    dt_tol: float = 1e-10,
    max_halvings: int = 6,
    max_work: float = 1e13,
    init_oversample: int = 4,
    tables: Optional[dict] = None,
    threads: int = 1,
    log: Optional[Callable[[str], None]] = None,
) -> ConvergenceTable:
    """Self-convergence errors |P_N f_ref(t_end) - f_N(t_end)|_2 for each N in ``N_list``.

    ``rc`` supplies the scheme and the starting dt; dt is halved until the
    reference solution changes by less than ``dt_tol`` (relative L^2), and
    every N is then run with that dt.  ``tables`` may map N to prebuilt tables.

    Raises:
        DomainError: if N_ref < 2 max(N_list).
        ResourceError: if the estimated number of weight multiplications exceeds ``max_work``.
    """
    N_list = sorted(int(n) for n in N_list)
    if not N_list or N_ref < 2 * N_list[-1]:
        raise DomainError(f"N_ref must be >= 2 * max(N_list), got N_ref={N_ref}, N_list={N_list}")
    tables = dict(tables or {})
    say = log or (lambda msg: None)

    def table(N):
        if N not in tables:
            cfg = SpectralConfig(d, N, L, R)
            tables[N] = build_weight_table(cfg, kernel, QuadratureSpec.default_for(cfg), threads=threads)
        return tables[N]

    def solve(N, dt):
        cfg = SpectralConfig(d, N, L, R)
        fN0 = forward_transform(sample(cfg, f0, init_oversample))
        r = RunConfig(t_end, dt, rc.scheme, diag_every=max(1, RunConfig(t_end, dt).n_steps), oversample=rc.oversample)
        work = _rhs_cost(N, d, r)
        if work > max_work:
            raise ResourceError(f"run at N={N}, dt={dt:g} needs {work:.2e} > {max_work:.2e} operations")
        return run(fN0, table(N), r, diagnostics=False).final

    dt = rc.dt
    ref = solve(N_ref, dt)
    change = math.inf
    for _ in range(max_halvings):
        finer = solve(N_ref, dt / 2)
        change = hk_norm(finer - ref, 0) / hk_norm(finer, 0)
        dt, ref = dt / 2, finer
        say(f"N_ref={N_ref} dt={dt:g} relative change {change:.3e}")
        if change < dt_tol:
            break
    else:
        raise ResourceError(f"reference did not settle to {dt_tol:g} after {max_halvings} halvings (last {change:.3e})")
    errors = []
    for N in N_list:
        fN = solve(N, dt)
        e = hk_norm(restrict(ref, fN.config) - fN, 0)
        say(f"N={N} error {e:.6e}")
        errors.append(e)
    return ConvergenceTable(N_list, errors, N_ref, dt, change, t_end)

"""Explicit time stepping of the Galerkin system d f_k / dt = Q_k(f, f)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .collision import eval_collision
from .diagnostics import DiagnosticsRecord, record
from .errors import BlowupError, ConfigMismatch, DomainError
from .kernel import WeightTable
from .spectral import SpectralField

BLOWUP_THRESHOLD = 1e12
SCHEMES = ("euler", "rk4")


@dataclass(frozen=True)
class RunConfig:
    t_end: float
    dt: float
    scheme: str = "rk4"
    diag_every: int = 1
    oversample: int = 4
    snapshot_every: Optional[int] = None  # steps between stored snapshots (None: first and last only)

    def __post_init__(self):
        if not (self.dt > 0) or not math.isfinite(self.dt):
            raise DomainError(f"dt must be positive, got {self.dt}")
        if not (self.t_end >= 0) or not math.isfinite(self.t_end):
            raise DomainError(f"t_end must be >= 0, got {self.t_end}")
        if self.diag_every < 1:
            raise DomainError(f"diag_every must be >= 1, got {self.diag_every}")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.oversample < 2:
            raise DomainError(f"oversample must be >= 2, got {self.oversample}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise DomainError("snapshot_every must be >= 1")

    @property
    def n_steps(self) -> int:
        if self.t_end == 0:
            return 0
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass
class Trajectory:
    times: list = field(default_factory=list)  # times of the diagnostics records
    snapshots: list = field(default_factory=list)  # (t, SpectralField) pairs
    diagnostics: list = field(default_factory=list)

    @property
    def final(self) -> SpectralField:
        return self.snapshots[-1][1]


def _rhs(f: SpectralField, table: WeightTable) -> np.ndarray:
    return eval_collision(f, table).qhat.coeffs


def step(f: SpectralField, table: WeightTable, dt: float, scheme: str = "rk4") -> SpectralField:
    """One explicit step; mode 0 is untouched because the right-hand side has Q_0 = 0 exactly.

    Raises:
        BlowupError: if any coefficient exceeds 1e12 in magnitude or is not finite.
    """
    if f.config != table.config:
        raise ConfigMismatch(f"field config {f.config} does not match table config {table.config}")
    c = f.coeffs
    if scheme == "euler":
        new = c + dt * _rhs(f, table)
    elif scheme == "rk4":
        k1 = _rhs(f, table)
        k2 = _rhs(f.with_coeffs(c + 0.5 * dt * k1), table)
        k3 = _rhs(f.with_coeffs(c + 0.5 * dt * k2), table)
        k4 = _rhs(f.with_coeffs(c + dt * k3), table)
        new = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise DomainError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    peak = float(np.max(np.abs(new)))
    if not np.isfinite(peak) or peak > BLOWUP_THRESHOLD:
        raise BlowupError(f"coefficient magnitude {peak:.3e} exceeds {BLOWUP_THRESHOLD:g}")
    return f.with_coeffs(new)


def run(
    f0: SpectralField,
    table: WeightTable,
    rc: RunConfig,
    diagnostics: bool = True,
    callback: Optional[Callable[[float, SpectralField], None]] = None,
) -> Trajectory:
    """Integrate from t = 0 to ``rc.t_end``; the last step is shortened to land on t_end.

    Records diagnostics at t = 0, every ``diag_every`` steps and at the end.

    Raises:
        BlowupError: with ``.t`` set to the time of the failed step.
    """
    if f0.config != table.config:
        raise ConfigMismatch(f"field config {f0.config} does not match table config {table.config}")
    traj = Trajectory()
    n = rc.n_steps

    def log(t, f):
        if diagnostics:
            traj.diagnostics.append(record(f, t, rc.oversample))
        traj.times.append(t)

    f = f0
    log(0.0, f)
    traj.snapshots.append((0.0, f))
    for i in range(1, n + 1):
        t_prev = (i - 1) * rc.dt
        t = rc.t_end if i == n else i * rc.dt
        try:
            f = step(f, table, t - t_prev, rc.scheme)
        except BlowupError as exc:
            raise BlowupError(str(exc), t=t) from None
        if callback is not None:
            callback(t, f)
        if i % rc.diag_every == 0 or i == n:
            log(t, f)
        if i == n or (rc.snapshot_every and i % rc.snapshot_every == 0):
            traj.snapshots.append((t, f))
    return traj


def suggest_tau(M1: float, M2: float, D5: float, D6: float) -> float:
    """Local existence time 1 / (2 (D5 M2 + D6 M1))."""
    for name, val in (("M1", M1), ("M2", M2), ("D5", D5), ("D6", D6)):
        if not (val > 0) or not math.isfinite(val):
            raise DomainError(f"{name} must be positive and finite, got {val}")
    return 1.0 / (2.0 * (D5 * M2 + D6 * M1))


def tau_from_data(consts, M_f0_1: float, M_f0_2: float, T: float) -> float:
    """tau with M1 = 4 |f0|_1 and M2 = 2 exp(2 D0 |f0|_1 T) |f0|_2."""
    M1 = 4.0 * M_f0_1
    M2 = 2.0 * math.exp(2.0 * consts.D0_hat * M_f0_1 * T) * M_f0_2
    return suggest_tau(M1, M2, consts.D5_hat, consts.D6_hat)


def default_dt(tau: float) -> float:
    return min(tau / 10.0, 1e-2)

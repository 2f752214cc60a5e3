"""Projected collision operator: direct weighted convolution and a quadrature oracle.

``eval_collision`` computes ``Q_k = sum_{l+m=k} G(l, m) f_l g_m`` for every
output mode with the k-outer loop; the inner sum over l is a single
``np.sum`` along a contiguous axis, which numpy reduces pairwise.

``quadrature_oracle`` never touches the weight table.  It evaluates
Q^R(g, f)(v) from the collision integral itself on a physical grid, with the
trigonometric polynomials summed directly at the displaced points v', v*' and
v - q, then projects the result onto P_N.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigMismatch, DomainError, ResourceError
from .kernel import KernelSpec, WeightTable
from .spectral import SpectralConfig, SpectralField, grid_points

_CHUNK_ELEMS = 1 << 21
DEFAULT_MAX_WORK = 2e10


@dataclass(frozen=True)
class CollisionOutput:
    """Coefficients Q_k^R, optionally with the gain and loss parts (Q = gain - loss)."""

    qhat: SpectralField
    gain_hat: Optional[SpectralField] = None
    loss_hat: Optional[SpectralField] = None


def _check_table(f: SpectralField, table: WeightTable):
    if f.config != table.config:
        raise ConfigMismatch(f"field config {f.config} does not match table config {table.config}")


def _weighted_sum(weights_k: np.ndarray, m_index: np.ndarray, fl: np.ndarray, gm_pad: np.ndarray) -> np.ndarray:
    """out[k] = sum_l weights_k[k, l] * fl[l] * gm_pad[m_index[k, l]], chunked over k."""
    n = fl.size
    out = np.empty(n, dtype=np.complex128)
    step = max(1, _CHUNK_ELEMS // n)
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        prod = weights_k[lo:hi] * (fl[None, :] * gm_pad[m_index[lo:hi]])
        out[lo:hi] = np.sum(prod, axis=1)
    return out


def _loss_sum(table: WeightTable, fl: np.ndarray, gm_pad: np.ndarray) -> np.ndarray:
    _, m_index = table.convolution_layout
    loss_pad = np.append(table.loss, 0.0)
    n = fl.size
    out = np.empty(n, dtype=np.complex128)
    step = max(1, _CHUNK_ELEMS // n)
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        mi = m_index[lo:hi]
        out[lo:hi] = np.sum(loss_pad[mi] * (fl[None, :] * gm_pad[mi]), axis=1)
    return out


def _gain_sum(table: WeightTable, fl: np.ndarray, gm_pad: np.ndarray) -> np.ndarray:
    _, m_index = table.convolution_layout
    n = fl.size
    gain_pad = np.concatenate([table.gain, np.zeros((n, 1), dtype=np.complex128)], axis=1)
    out = np.empty(n, dtype=np.complex128)
    rows = np.arange(n)[None, :]
    step = max(1, _CHUNK_ELEMS // n)
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        mi = m_index[lo:hi]
        out[lo:hi] = np.sum(gain_pad[rows, mi] * (fl[None, :] * gm_pad[mi]), axis=1)
    return out


def eval_collision(
    f: SpectralField, table: WeightTable, g: Optional[SpectralField] = None, split: bool = False
) -> CollisionOutput:
    """P_N Q^R(g, f) by the direct O(N^{2d}) weighted sum (g defaults to f).

    The mass mode is exactly zero because the table stores G(l, -l) = 0.
    With ``split`` the gain-only and loss-only sums are returned as well.
    """
    _check_table(f, table)
    g = f if g is None else g
    _check_table(g, table)
    Gk, m_index = table.convolution_layout
    fl = f.flat()
    gm_pad = np.append(g.flat(), 0.0)
    q = _weighted_sum(Gk, m_index, fl, gm_pad)
    cfg = table.config
    out = SpectralField(cfg, q.reshape(cfg.shape))
    if not split:
        return CollisionOutput(out)
    gain = SpectralField(cfg, _gain_sum(table, fl, gm_pad).reshape(cfg.shape))
    loss = SpectralField(cfg, _loss_sum(table, fl, gm_pad).reshape(cfg.shape))
    return CollisionOutput(out, gain, loss)


def eval_loss_convolution(f: SpectralField, table: WeightTable) -> SpectralField:
    """P_N [L^R(f) f] as ``sum_{l+m=k} loss(m) f_l f_m``."""
    _check_table(f, table)
    fl = f.flat()
    q = _loss_sum(table, fl, np.append(fl, 0.0))
    return SpectralField(table.config, q.reshape(table.config.shape))


def extended_config(config: SpectralConfig) -> SpectralConfig:
    """Config whose modes -N..N hold the full (unprojected) Q^R(f_N, g_N)."""
    return SpectralConfig(config.d, 2 * config.N, config.L, config.R)


def eval_collision_extended(
    f: SpectralField, table: WeightTable, g: Optional[SpectralField] = None, part: str = "full"
) -> SpectralField:
    """All Fourier modes of Q^R(g_N, f_N) (modes -N..N, nothing projected away).

    For band-limited inputs the output of the collision integral is itself a
    trigonometric polynomial of degree N, so this is exact up to the weights.
    ``part`` selects ``"full"``, ``"gain"`` or ``"loss"``.
    """
    _check_table(f, table)
    g = f if g is None else g
    _check_table(g, table)
    cfg = table.config
    if part not in ("full", "gain", "loss"):
        raise DomainError(f"part must be 'full', 'gain' or 'loss', got {part!r}")
    ext = extended_config(cfg)
    out = np.zeros(ext.shape, dtype=np.complex128)
    n1 = cfg.N + 1
    fl = f.flat()
    gm = g.coeffs
    for li, lidx in enumerate(np.ndindex(*cfg.shape)):
        if fl[li] == 0:
            continue
        # l + m with m offset -N/2 lands at (l_idx - N/2) + (m_idx - N/2) + N = l_idx + m_idx
        sl = tuple(slice(i, i + n1) for i in lidx)
        if part == "full":
            w = table.gain[li] - table.loss
        elif part == "gain":
            w = table.gain[li]
        else:
            w = table.loss
        out[sl] += fl[li] * w.reshape(cfg.shape) * gm
    return SpectralField(ext, out)


# --- quadrature oracle --------------------------------------------------------


def default_oracle_resolution(N: int) -> int:
    return max(16, 2 * N + 8)


def _mode_phase(cfg: SpectralConfig, points: np.ndarray, sign: float) -> np.ndarray:
    """exp(sign * i pi k.x / L) for points (P, d) against all flat modes -> (P, n_modes)."""
    k = cfg.mode_grid().reshape(cfg.d, -1)
    return np.exp(sign * 1j * np.pi / cfg.L * (points @ k))


def oracle_values(
    f: SpectralField,
    spec: KernelSpec,
    resolution: Optional[int] = None,
    g: Optional[SpectralField] = None,
    points: Optional[np.ndarray] = None,
    oversample: int = 2,
    max_work: float = DEFAULT_MAX_WORK,
):
    """Pointwise gain and loss parts of Q^R(g, f) from the collision integral.

    Returns ``(points, gain, loss)``; ``points`` defaults to the oversampled grid
    flattened to shape ``(P, d)``.  q uses Gauss-Legendre nodes in |q| and
    uniform angles offset by half a step; sigma uses its own uniform angles
    (offset by a quarter step), so the node set differs from the table's.
    """
    cfg = f.config
    if cfg.d != 2:
        raise NotImplementedError("quadrature oracle is implemented for d = 2 only")
    g = f if g is None else g
    if g.config != cfg:
        raise ConfigMismatch("f and g must share a config")
    n_r = int(resolution or default_oracle_resolution(cfg.N))
    if n_r < 2:
        raise DomainError(f"resolution must be >= 2, got {n_r}")
    n_t = n_s = 2 * n_r
    if points is None:
        points = grid_points(cfg, oversample).reshape(cfg.d, -1).T
    points = np.asarray(points, dtype=np.float64)
    P = points.shape[0]
    work = float(P) * cfg.n_modes * n_r * n_t * n_s
    if work > max_work:
        raise ResourceError(f"oracle work {work:.2e} exceeds bound {max_work:.2e}")

    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * cfg.R * (x + 1.0)
    wr = 0.5 * cfg.R * w * r * spec.phi(r) * (2.0 * np.pi / n_t)
    theta = 2.0 * np.pi * (np.arange(n_t) + 0.5) / n_t
    phi = 2.0 * np.pi * (np.arange(n_s) + 0.25) / n_s
    ws = 2.0 * np.pi / n_s
    qhat = np.stack([np.cos(theta), np.sin(theta)], axis=1)  # (n_t, 2)
    sig = np.stack([np.cos(phi), np.sin(phi)], axis=1)  # (n_s, 2)
    bq = spec.b(qhat @ sig.T)  # b(sigma . q^), (n_t, n_s)

    Ev = _mode_phase(cfg, points, +1.0)  # (P, n)
    fv = Ev * f.flat()[None, :]
    gv = Ev * g.flat()[None, :]
    gain = np.zeros(P, dtype=np.complex128)
    loss_conv = np.zeros(P, dtype=np.complex128)
    for ri, wi in zip(r, wr):
        q = ri * qhat  # (n_t, 2)
        dprime = 0.5 * (q[:, None, :] - ri * sig[None, :, :]).reshape(-1, 2)  # v' = v - dprime
        dstar = 0.5 * (q[:, None, :] + ri * sig[None, :, :]).reshape(-1, 2)  # v*' = v - dstar
        f_vp = fv @ _mode_phase(cfg, dprime, -1.0).T  # (P, n_t*n_s)
        g_vs = gv @ _mode_phase(cfg, dstar, -1.0).T
        gain += wi * ws * (f_vp * g_vs) @ bq.reshape(-1)
        g_vq = gv @ _mode_phase(cfg, q, -1.0).T  # g(v - q), (P, n_t)
        loss_conv += wi * ws * g_vq @ bq.sum(axis=1)
    f_v = fv.sum(axis=1)
    return points, gain, loss_conv * f_v


def quadrature_oracle(
    f: SpectralField,
    spec: KernelSpec,
    resolution: Optional[int] = None,
    g: Optional[SpectralField] = None,
    max_work: float = DEFAULT_MAX_WORK,
) -> CollisionOutput:
    """Reference P_N Q^R(g, f) computed from the integral definition (no weight table).

    The physical grid has 2(N+1) points per axis, enough for the trapezoid
    projection to be exact on the degree-N output.  The mass mode is not
    forced to zero.

    Raises:
        ResourceError: if the estimated work exceeds ``max_work``.
    """
    cfg = f.config
    pts, gain, loss = oracle_values(f, spec, resolution, g=g, oversample=2, max_work=max_work)
    Eh = _mode_phase(cfg, pts, -1.0)  # conj basis
    P = pts.shape[0]

    def project(vals):
        return SpectralField(cfg, (vals @ Eh / P).reshape(cfg.shape))

    return CollisionOutput(project(gain - loss), project(gain), project(loss))

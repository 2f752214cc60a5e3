"""Collision kernels and the precomputed weight table G(l, m).

The weight coupling modes l and m into mode l + m is

    G(l, m) = gain(l, m) - loss(m)

    gain(l, m) = int_{|q|<=R} Phi(|q|) exp(i pi (l-m).q / 2L)
                     int_{S^1} b(sigma.q^) exp(-i pi |q| (l+m).sigma / 2L) dsigma dq
    loss(m)    = |b|_{L1} int_{|q|<=R} Phi(|q|) exp(-i pi m.q / L) dq

In the Galerkin sum ``Q_k = sum_{l+m=k} G(l, m) f_l g_m`` the index ``l``
belongs to the post-collision slot f(v') / f(v) and ``m`` to the partner slot
g(v*') / g(v - q).

For d = 2 both q and sigma are integrated with Gauss-Legendre nodes in |q|
and uniform angles.  The table builder evaluates exactly that discrete sum,
reorganised through a DFT in the angle so the cost per (l, m) pair is
O(n_radial) instead of O(n_radial * n_angular^2).
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DomainError, FormatError, QuadratureError
from .spectral import SpectralConfig

TABLE_MAGIC = b"KSWT"
TABLE_VERSION = 1
_KIND_TAGS = {"hard": 0, "modified_soft": 1, "custom": 2}
_HARMONIC_CUTOFF = 1e-15


@dataclass(frozen=True)
class AngularKernel:
    """Angular part b(cos theta) of the collision kernel.

    ``family`` and ``params`` identify closed-form kernels so a weight table can
    be matched (and rebuilt) from its file header; ``func`` is the evaluator.
    """

    family: str
    params: tuple
    func: Callable = field(compare=False, repr=False)

    def __call__(self, cos_theta):
        return np.asarray(self.func(np.asarray(cos_theta, dtype=np.float64)), dtype=np.float64) * np.ones_like(
            cos_theta, dtype=np.float64
        )

    @classmethod
    def constant(cls, value: float = 1.0 / (2.0 * math.pi)) -> "AngularKernel":
        """Isotropic scattering; the default integrates to 1 over S^1."""
        value = float(value)
        return cls("constant", (value,), lambda c: np.full_like(c, value))

    @classmethod
    def linear(cls, b0: float, b1: float) -> "AngularKernel":
        """b(cos theta) = b0 + b1 cos theta (forward/backward anisotropic)."""
        b0, b1 = float(b0), float(b1)
        return cls("linear", (b0, b1), lambda c: b0 + b1 * c)

    @classmethod
    def polynomial(cls, coeffs) -> "AngularKernel":
        """b(cos theta) = sum_j coeffs[j] * cos(theta)**j."""
        coeffs = tuple(float(c) for c in coeffs)
        return cls("polynomial", coeffs, lambda c: np.polynomial.polynomial.polyval(c, coeffs))

    @classmethod
    def from_callable(cls, name: str, func: Callable) -> "AngularKernel":
        # fingerprint on sampled values so equal callables compare equal
        probe = np.asarray(func(np.linspace(-1.0, 1.0, 257)), dtype=np.float64)
        digest = hashlib.sha256(probe.tobytes()).hexdigest()[:16]
        return cls("custom:" + name, (digest,), func)

    @property
    def fingerprint(self) -> str:
        return f"{self.family}{list(self.params)}"


def symmetrize_angular(b: AngularKernel) -> AngularKernel:
    """Fold b onto the half sphere: ``[b(cos t) + b(cos(pi - t))] * 1{t <= pi/2}``.

    The total integral over the sphere is unchanged, and so is the collision
    operator Q(f, f).
    """

    def folded(c):
        c = np.asarray(c, dtype=np.float64)
        return np.where(c >= 0.0, b(c) + b(-c), 0.0)

    return AngularKernel("symmetrized:" + b.family, b.params, folded)


@dataclass(frozen=True)
class KernelSpec:
    """B(|q|, cos theta) = Phi(|q|) * b(cos theta).

    kind:
        ``"hard"``: Phi = |q|^gamma, 0 <= gamma <= 1.
        ``"modified_soft"``: Phi = (1 + |q|)^gamma, -d < gamma < 0.
        ``"custom"``: Phi tabulated on ``phi_nodes`` (linear interpolation).
    """

    kind: str = "hard"
    gamma: float = 0.0
    angular: AngularKernel = field(default_factory=AngularKernel.constant)
    phi_nodes: Optional[tuple] = None
    phi_values: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in _KIND_TAGS:
            raise DomainError(f"unknown kernel kind {self.kind!r}")
        g = float(self.gamma)
        if self.kind == "hard" and not (0.0 <= g <= 1.0):
            raise DomainError(f"hard potential needs gamma in [0, 1], got {g}")
        if self.kind == "modified_soft" and not (-3.0 < g < 0.0):
            raise DomainError(f"modified soft potential needs gamma < 0, got {g}")
        if self.kind == "custom":
            if self.phi_nodes is None or self.phi_values is None:
                raise DomainError("custom kernel needs phi_nodes and phi_values")
            if len(self.phi_nodes) != len(self.phi_values) or len(self.phi_nodes) < 2:
                raise DomainError("phi_nodes and phi_values must have equal length >= 2")
            if np.any(np.diff(self.phi_nodes) <= 0):
                raise DomainError("phi_nodes must be strictly increasing")
            object.__setattr__(self, "phi_nodes", tuple(float(x) for x in self.phi_nodes))
            object.__setattr__(self, "phi_values", tuple(float(x) for x in self.phi_values))
        object.__setattr__(self, "gamma", g)

    def phi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "hard":
            return np.ones_like(r) if self.gamma == 0.0 else r ** self.gamma
        if self.kind == "modified_soft":
            return (1.0 + r) ** self.gamma
        return np.interp(r, self.phi_nodes, self.phi_values)

    def b(self, cos_theta) -> np.ndarray:
        return self.angular(cos_theta)

    @cached_property
    def b_l1(self) -> float:
        """Integral of b over S^1 (the d = 2 sphere)."""
        return b_sphere_integral(self.angular, 2)

    def kinetic_sup(self, R: float, n: int = 4097) -> float:
        """sup of Phi on [0, R] sampled on a fine radial grid; must be finite."""
        val = float(np.max(np.abs(self.phi(np.linspace(0.0, R, n)))))
        if not np.isfinite(val):
            raise DomainError(f"kinetic part unbounded on |v| <= {R}")
        return val

    @property
    def fingerprint(self) -> str:
        meta = {"kind": self.kind, "gamma": self.gamma, "angular": self.angular.fingerprint}
        if self.kind == "custom":
            meta["phi"] = hashlib.sha256(
                np.asarray(self.phi_nodes + self.phi_values, dtype="<f8").tobytes()
            ).hexdigest()[:16]
        return json.dumps(meta, sort_keys=True)


def maxwell_kernel(b0: float = 1.0 / (2.0 * math.pi)) -> KernelSpec:
    """Maxwell molecules: Phi = 1, isotropic b."""
    return KernelSpec("hard", 0.0, AngularKernel.constant(b0))


def b_sphere_integral(b: AngularKernel, d: int) -> float:
    """int_{S^{d-1}} b(sigma.e) dsigma by adaptive quadrature in theta."""
    if d == 2:
        val, _ = integrate.quad(lambda t: float(b(np.cos(t))), 0.0, 2.0 * math.pi, limit=200, points=[math.pi / 2, 3 * math.pi / 2])
        return float(val)
    if d == 3:
        val, _ = integrate.quad(lambda t: float(b(np.cos(t))) * math.sin(t), 0.0, math.pi, limit=200, points=[math.pi / 2])
        return 2.0 * math.pi * float(val)
    raise DomainError(f"sphere integral implemented for d in (2, 3), got {d}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre points on [0, R] and uniform points on S^1 (shared by q and sigma)."""

    n_radial: int
    n_angular: int

    def __post_init__(self):
        if self.n_radial < 2:
            raise DomainError(f"n_radial must be >= 2, got {self.n_radial}")
        if self.n_angular < 4 or self.n_angular % 2:
            raise DomainError(f"n_angular must be even and >= 4, got {self.n_angular}")

    @classmethod
    def default_for(cls, config: SpectralConfig) -> "QuadratureSpec":
        return cls(max(32, 2 * config.N), max(64, 4 * config.N))

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.n_radial, 2 * self.n_angular)


def radial_rule(spec: KernelSpec, R: float, n_radial: int):
    """Gauss-Legendre nodes on [0, R] and the polar weights ``w_i * r_i * Phi(r_i)``."""
    x, w = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * R * (x + 1.0)
    return r, 0.5 * R * w * r * spec.phi(r)


def angular_nodes(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def _require_2d(config: SpectralConfig):
    if config.d != 2:
        raise NotImplementedError("weight tables are implemented for d = 2 only")


def _check_kernel(config: SpectralConfig, spec: KernelSpec):
    if spec.kind == "modified_soft" and not (-config.d < spec.gamma < 0.0):
        raise DomainError(f"modified soft potential needs -d < gamma < 0, got {spec.gamma}")
    spec.kinetic_sup(config.R)


def loss_weight(m, spec: KernelSpec, quad: QuadratureSpec, config: SpectralConfig) -> complex:
    """|b|_1 * int_{B_R} Phi(|q|) exp(-i pi m.q / L) dq by the polar rule."""
    _require_2d(config)
    m = np.asarray(m, dtype=np.float64)
    r, W = radial_rule(spec, config.R, quad.n_radial)
    th = angular_nodes(quad.n_angular)
    delta = 2.0 * np.pi / quad.n_angular
    b_l1 = delta * float(np.sum(spec.b(np.cos(th))))
    proj = m[0] * np.cos(th) + m[1] * np.sin(th)
    val = b_l1 * delta * np.sum(W[:, None] * np.exp(-1j * np.pi / config.L * np.outer(r, proj)))
    if abs(val.imag) > 1e-12 * max(1.0, abs(val)):
        raise QuadratureError(f"loss weight for m={m} has imaginary part {val.imag:.3e}")
    return complex(val)


def compute_weight(l, m, spec: KernelSpec, quad: QuadratureSpec, config: SpectralConfig) -> complex:
    """Single G(l, m) by the literal nested sum over radial, q-angle and sigma-angle nodes."""
    _require_2d(config)
    l = np.asarray(l, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if np.all(l + m == 0):
        return 0j
    a, s = l - m, l + m
    r, W = radial_rule(spec, config.R, quad.n_radial)
    th = angular_nodes(quad.n_angular)
    delta = 2.0 * np.pi / quad.n_angular
    bmat = spec.b(np.cos(th[None, :] - th[:, None]))  # [q-angle j, sigma-angle p]
    pa = a[0] * np.cos(th) + a[1] * np.sin(th)
    ps = s[0] * np.cos(th) + s[1] * np.sin(th)
    c = np.pi / (2.0 * config.L)
    total = 0j
    for ri, wi in zip(r, W):
        A = np.exp(1j * c * ri * pa)
        S = np.exp(-1j * c * ri * ps)
        total += wi * (A @ bmat @ S)
    gain = delta * delta * total
    return complex(gain - loss_weight(m, spec, quad, config))


def _angular_harmonics(spec: KernelSpec, n: int):
    """DFT of b on the uniform angle grid, truncated where it falls below round-off."""
    bvals = spec.b(np.cos(angular_nodes(n)))
    bhat = np.fft.fft(bvals).real
    scale = max(float(np.max(np.abs(bhat))), np.finfo(float).tiny)
    ks = np.fft.fftfreq(n, 1.0 / n).astype(int)
    keep = np.abs(bhat) > _HARMONIC_CUTOFF * scale
    K = int(np.max(np.abs(ks[keep]))) if np.any(keep) else 0
    K = min(K, n // 2 - 1)
    harm = np.arange(-K, K + 1)
    return harm, bhat[np.mod(harm, n)]


def _exp_harmonics(config: SpectralConfig, r: np.ndarray, n: int, harm: np.ndarray) -> np.ndarray:
    """F[x1, x2, i, h] = sum_j exp(i pi r_i x.q^_j / 2L) exp(-2 pi i j harm_h / n), x in [-N, N]^2."""
    N = config.N
    x = np.arange(-N, N + 1)
    th = angular_nodes(n)
    c = np.pi / (2.0 * config.L)
    out = np.empty((x.size, x.size, r.size, harm.size), dtype=np.complex128)
    for i, ri in enumerate(r):
        e1 = np.exp(1j * c * ri * np.outer(x, np.cos(th)))  # (nx, n)
        e2 = np.exp(1j * c * ri * np.outer(x, np.sin(th)))
        E = e1[:, None, :] * e2[None, :, :]
        if harm.size == 1 and harm[0] == 0:
            out[:, :, i, 0] = E.sum(axis=-1)
        else:
            out[:, :, i, :] = np.fft.fft(E, axis=-1)[..., np.mod(harm, n)]
    return out


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Precomputed gain(l, m) and loss(m) for one configuration and kernel.

    ``gain`` has shape ``(n_modes, n_modes)`` indexed by flat (row-major) l then
    m; ``loss`` has shape ``(n_modes,)`` indexed by flat m.
    """

    config: SpectralConfig
    kernel: KernelSpec
    quad: QuadratureSpec
    gain: np.ndarray = field(repr=False)
    loss: np.ndarray = field(repr=False)
    build_hash: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = self.config.n_modes
        gain = np.ascontiguousarray(self.gain, dtype=np.complex128)
        loss = np.ascontiguousarray(self.loss, dtype=np.complex128)
        if gain.shape != (n, n) or loss.shape != (n,):
            raise FormatError(f"table arrays have shapes {gain.shape}, {loss.shape}; expected ({n},{n}), ({n},)")
        gain.flags.writeable = False
        loss.flags.writeable = False
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "loss", loss)
        if not self.build_hash:
            object.__setattr__(self, "build_hash", _content_hash(self))

    @property
    def G(self) -> np.ndarray:
        """Full weights gain - loss, shape ``(n_modes, n_modes)``."""
        return self.gain - self.loss[None, :]

    def weight(self, l, m) -> complex:
        i, j = self.config.flat_index(l), self.config.flat_index(m)
        return complex(self.gain[i, j] - self.loss[j])

    @cached_property
    def convolution_layout(self):
        """Weights rearranged output-major: ``Gk[k, l] = G(l, k - l)``.

        Returns ``(Gk, m_index)`` where ``m_index[k, l]`` is the flat index of
        ``k - l`` or ``n_modes`` (a zero sentinel slot) when out of range.
        """
        cfg = self.config
        n = cfg.n_modes
        modes = cfg.mode_grid().reshape(cfg.d, -1)  # (d, n)
        h = cfg.N // 2
        Gk = np.zeros((n, n), dtype=np.complex128)
        m_index = np.full((n, n), n, dtype=np.int32 if n < 2**31 - 1 else np.int64)
        lsel = np.arange(n)
        for k in range(n):
            diff = modes[:, k : k + 1] - modes  # k - l for every l
            ok = np.all(np.abs(diff) <= h, axis=0)
            mflat = np.ravel_multi_index(tuple(diff[:, ok] + h), cfg.shape)
            m_index[k, ok] = mflat
            Gk[k, ok] = self.gain[lsel[ok], mflat] - self.loss[mflat]
        Gk.flags.writeable = False
        m_index.flags.writeable = False
        return Gk, m_index

    def conjugation_residual(self) -> float:
        """max |conj(G(l, m)) - G(-l, -m)| relative to max |G|."""
        G = self.G
        scale = float(np.max(np.abs(G))) or 1.0
        return float(np.max(np.abs(np.conj(G) - G[::-1, ::-1]))) / scale

    def antidiagonal_max(self) -> float:
        """max |G(l, -l)|; zero for a correctly built table."""
        n = self.config.n_modes
        idx = np.arange(n)
        return float(np.max(np.abs(self.gain[idx, n - 1 - idx] - self.loss[n - 1 - idx])))


def build_weight_table(
    config: SpectralConfig,
    spec: KernelSpec,
    quad: Optional[QuadratureSpec] = None,
    threads: int = 1,
    self_check: bool = False,
    check_tol: float = 1e-8,
) -> WeightTable:
    """Fill gain over all (l, m) pairs and loss over all m.

    Rows are computed in independent blocks (optionally on a thread pool), so
    the result does not depend on scheduling.  The antidiagonal
    ``gain(l, -l)`` is overwritten with ``loss(-l)`` so that G(l, -l) = 0
    exactly.  With ``self_check`` the table is rebuilt at doubled resolution
    and QuadratureError is raised if the residual exceeds ``check_tol``.
    """
    _require_2d(config)
    _check_kernel(config, spec)
    quad = quad or QuadratureSpec.default_for(config)
    t0 = time.perf_counter()
    gain, loss = _assemble(config, spec, quad, threads)
    table = WeightTable(config, spec, quad, gain, loss)
    table.metadata["build_seconds"] = time.perf_counter() - t0
    if self_check:
        resid = richardson_residual(table, threads=threads)
        table.metadata["richardson_residual"] = resid
        if resid > check_tol:
            raise QuadratureError(f"quadrature self-check residual {resid:.3e} > {check_tol:g}")
    return table


def _assemble(config: SpectralConfig, spec: KernelSpec, quad: QuadratureSpec, threads: int):
    N, h, n = config.N, config.N // 2, quad.n_angular
    npa = N + 1
    nm = config.n_modes
    r, W = radial_rule(spec, config.R, quad.n_radial)
    harm, bhat = _angular_harmonics(spec, n)
    delta = 2.0 * np.pi / n
    F = _exp_harmonics(config, r, n, harm)  # (2N+1, 2N+1, nr, nh)
    nf = r.size * harm.size
    F = F.reshape(2 * N + 1, 2 * N + 1, nf)
    wfeat = (delta * delta / n) * np.outer(W, bhat).reshape(nf)
    Fw = np.conj(F) * wfeat  # weighted conj for the l + m slot

    # loss(m) = delta^2 * bhat_0 * sum_i W_i F[-2m, i, 0]
    k0 = int(np.nonzero(harm == 0)[0][0])
    F0 = F.reshape(2 * N + 1, 2 * N + 1, r.size, harm.size)[..., k0] @ W
    mm = np.arange(-h, h + 1)
    loss = (delta * delta * bhat[k0]) * F0[np.ix_(N - 2 * mm, N - 2 * mm)].reshape(nm)

    gain = np.empty((nm, nm), dtype=np.complex128)
    lmodes = np.stack(np.meshgrid(mm, mm, indexing="ij")).reshape(2, -1)
    half = nm // 2 + 1  # rows up to and including l = 0; the rest by conjugation

    def rows(lo, hi):
        for li in range(lo, hi):
            l1, l2 = lmodes[:, li]
            a = np.ix_(l1 - mm + N, l2 - mm + N)
            s = np.ix_(l1 + mm + N, l2 + mm + N)
            gain[li] = np.einsum("ijf,ijf->ij", F[a], Fw[s]).reshape(nm)

    blocks = [(lo, min(lo + 64, half)) for lo in range(0, half, 64)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: rows(*b), blocks))
    else:
        for b in blocks:
            rows(*b)
    # gain(-l, -m) = conj(gain(l, m)); flat(-k) = nm - 1 - flat(k)
    gain[half:] = np.conj(gain[: nm - half][::-1, ::-1])
    idx = np.arange(nm)
    gain[idx, nm - 1 - idx] = loss[nm - 1 - idx]
    return gain, loss


def richardson_residual(table: WeightTable, threads: int = 1) -> float:
    """max |G_refined - G| / max |G| after doubling both radial and angular resolution."""
    cfg = table.config
    g2, l2 = _assemble(cfg, table.kernel, table.quad.refined(), threads)
    G1 = table.G
    G2 = g2 - l2[None, :]
    scale = float(np.max(np.abs(G1))) or 1.0
    return float(np.max(np.abs(G2 - G1))) / scale


# --- binary file format ------------------------------------------------------
#
# little-endian:
#   4s magic "KSWT" | u32 version | u32 d | u32 N | f64 L | f64 R
#   u32 kernel tag | f64 gamma | u32 n_radial | u32 n_angular
#   u32 len + utf8 kernel fingerprint (JSON) | 32 bytes sha256 build hash
#   loss: n_modes complex128 | gain: n_modes^2 complex128 (l-major, m-minor)

_HEAD = struct.Struct("<4sIIIddIdII")


def _header_bytes(cfg: SpectralConfig, kernel: KernelSpec, quad: QuadratureSpec) -> bytes:
    fp = kernel.fingerprint.encode("utf-8")
    head = _HEAD.pack(
        TABLE_MAGIC, TABLE_VERSION, cfg.d, cfg.N, cfg.L, cfg.R,
        _KIND_TAGS[kernel.kind], kernel.gamma, quad.n_radial, quad.n_angular,
    )
    return head + struct.pack("<I", len(fp)) + fp


def _content_hash(table: WeightTable) -> str:
    h = hashlib.sha256()
    h.update(_header_bytes(table.config, table.kernel, table.quad))
    h.update(table.loss.astype("<c16").tobytes())
    h.update(table.gain.astype("<c16").tobytes())
    return h.hexdigest()


def save_table(table: WeightTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_header_bytes(table.config, table.kernel, table.quad))
        fh.write(bytes.fromhex(table.build_hash))
        fh.write(table.loss.astype("<c16").tobytes())
        fh.write(table.gain.astype("<c16").tobytes())


def _kernel_from_fingerprint(fp: str, kind: str, gamma: float) -> KernelSpec:
    meta = json.loads(fp)
    ang = meta["angular"]
    family, _, plist = ang.partition("[")
    params = json.loads("[" + plist) if plist else []
    if family == "constant":
        b = AngularKernel.constant(*params)
    elif family == "linear":
        b = AngularKernel.linear(*params)
    elif family == "polynomial":
        b = AngularKernel.polynomial(params)
    else:
        raise FormatError(f"angular kernel {family!r} cannot be rebuilt from the file; pass kernel=")
    if kind == "custom":
        raise FormatError("custom kinetic kernel cannot be rebuilt from the file; pass kernel=")
    return KernelSpec(kind, gamma, b)


def load_table(path, config: Optional[SpectralConfig] = None, kernel: Optional[KernelSpec] = None) -> WeightTable:
    """Read a table written by :func:`save_table`.

    Raises:
        FormatError: bad magic/version, truncated data, hash mismatch, or a
            config/kernel different from the expected ones.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEAD.size + 4:
        raise FormatError("file too short for a weight-table header")
    magic, version, d, N, L, R, tag, gamma, n_r, n_a = _HEAD.unpack_from(raw, 0)
    if magic != TABLE_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != TABLE_VERSION:
        raise FormatError(f"unsupported table version {version}")
    pos = _HEAD.size
    (fplen,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    if len(raw) < pos + fplen + 32:
        raise FormatError("truncated header")
    try:
        fp = raw[pos : pos + fplen].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("corrupt kernel fingerprint") from exc
    pos += fplen
    stored_hash = raw[pos : pos + 32].hex()
    pos += 32
    try:
        cfg = SpectralConfig(d, N, L, R)
        quad = QuadratureSpec(n_r, n_a)
    except DomainError as exc:
        raise FormatError(f"invalid header parameters: {exc}") from exc
    n = cfg.n_modes
    need = pos + 16 * (n + n * n)
    if len(raw) != need:
        raise FormatError(f"data size {len(raw)} bytes, expected {need}")
    if config is not None and config != cfg:
        raise FormatError(f"table built for {cfg}, expected {config}")
    kinds = {v: k for k, v in _KIND_TAGS.items()}
    if tag not in kinds:
        raise FormatError(f"unknown kernel tag {tag}")
    if kernel is None:
        kernel = _kernel_from_fingerprint(fp, kinds[tag], gamma)
    elif kernel.fingerprint != fp:
        raise FormatError("kernel does not match the table's fingerprint")
    loss = np.frombuffer(raw, dtype="<c16", count=n, offset=pos).astype(np.complex128)
    gain = np.frombuffer(raw, dtype="<c16", count=n * n, offset=pos + 16 * n).astype(np.complex128).reshape(n, n)
    table = WeightTable(cfg, kernel, quad, gain, loss)
    if table.build_hash != stored_hash:
        raise FormatError("build hash mismatch: file is corrupt")
    return table

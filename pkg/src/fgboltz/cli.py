"""Command-line entry point.

Every subcommand reads an INI manifest (sections listed in ``DEFAULTS``) and
writes its outputs plus ``effective_config.ini`` (the manifest with every
default filled in) to the output directory.

Exit codes: 0 success, 1 a reported check failed, 2 invalid input,
3 quadrature self-check failure, 4 blow-up during time integration.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import os
import struct
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .diagnostics import MONITOR_COLUMNS, estimate_constants, initial_data, monitor
from .errors import BlowupError, ConfigMismatch, DomainError, FormatError, QuadratureError, ResourceError
from .init_filter import (
    FilterSpec,
    apply_filter,
    ball_indicator,
    check_conditions,
    double_bump,
    gaussian_bump,
    smallest_passing_N,
)
from .integrator import RunConfig, default_dt, run, tau_from_data
from .kernel import (
    AngularKernel,
    KernelSpec,
    QuadratureSpec,
    build_weight_table,
    load_table,
    richardson_residual,
    save_table,
)
from .spectral import SpectralConfig, SpectralField, forward_transform, lp_norm, sample
from .verify import BOUND_COLUMNS, CONVERGENCE_COLUMNS, check_bilinear_bounds, convergence_study

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_QUADRATURE, EXIT_BLOWUP = 0, 1, 2, 3, 4

DEFAULTS = {
    "general": {"output_dir": "out", "seed": "0", "threads": "1"},
    "spectral": {"d": "2", "N": "16", "support": "1.0", "L": "", "R": ""},
    "kernel": {"kind": "hard", "gamma": "0", "angular": "constant", "angular_params": ""},
    "quadrature": {"n_radial": "", "n_angular": "", "self_check": "true", "check_tol": "1e-8"},
    "initial": {
        "profile": "double_bump", "T": "0.09", "mass": "1.0", "shift": "0.45",
        "center": "", "radius": "0.5", "height": "1.0", "oversample": "4",
    },
    "filter": {"kind": "none", "alpha": "36", "order": "4"},
    "run": {"t_end": "1.0", "dt": "", "scheme": "rk4", "diag_every": "1", "oversample": "4", "snapshot_times": ""},
    "monitor": {"enabled": "true", "samples": "100", "safety": "2.0"},
    "verify": {"p": "1,2,inf", "samples": "1000"},
    "converge": {"N_list": "8,16,32", "N_ref": "64", "t_end": "0.5", "dt": "1e-2", "dt_tol": "1e-10"},
    "check_init": {"eps": "1e-3", "relative_eps": "false", "sweep": ""},
}


class ManifestError(DomainError):
    """Manifest missing, unreadable, or with an invalid value."""


@dataclass
class RunManifest:
    """Parsed manifest with every value validated."""

    parser: configparser.ConfigParser
    config: SpectralConfig
    kernel: KernelSpec
    quad: QuadratureSpec
    filt: FilterSpec
    seed: int
    output_dir: Path

    def get(self, section, key):
        return self.parser.get(section, key)

    def getfloat(self, section, key):
        return _num(self.parser, section, key, float)

    def getint(self, section, key):
        return _num(self.parser, section, key, int)

    def getbool(self, section, key):
        try:
            return self.parser.getboolean(section, key)
        except ValueError as exc:
            raise ManifestError(f"[{section}] {key}: {exc}") from None

    def effective_text(self) -> str:
        buf = io.StringIO()
        self.parser.write(buf)
        return buf.getvalue()


def _num(parser, section, key, typ):
    raw = parser.get(section, key).strip()
    try:
        return typ(raw)
    except ValueError:
        raise ManifestError(f"[{section}] {key}: cannot parse {raw!r} as {typ.__name__}") from None


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def load_manifest(path, threads: Optional[int] = None) -> RunManifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest {path} does not exist")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    cp.read_dict(DEFAULTS)
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ManifestError(f"cannot parse manifest: {exc}") from None
    unknown = set(cp.sections()) - set(DEFAULTS)
    if unknown:
        raise ManifestError(f"unknown manifest sections: {sorted(unknown)}")
    if threads is not None:
        cp.set("general", "threads", str(threads))

    # spectral: L and R default to the anti-aliasing rule for the support radius
    S = _num(cp, "spectral", "support", float)
    if not S > 0:
        raise ManifestError("[spectral] support must be positive")
    if not cp.get("spectral", "R").strip():
        cp.set("spectral", "R", repr(2.0 * S))
    if not cp.get("spectral", "L").strip():
        cp.set("spectral", "L", repr((3.0 + math.sqrt(2.0)) / 2.0 * S))
    config = SpectralConfig(
        _num(cp, "spectral", "d", int), _num(cp, "spectral", "N", int),
        _num(cp, "spectral", "L", float), _num(cp, "spectral", "R", float),
    )

    ang = cp.get("kernel", "angular").strip()
    params = _floats(cp.get("kernel", "angular_params"))
    try:
        if ang == "constant":
            angular = AngularKernel.constant(*params) if params else AngularKernel.constant()
        elif ang == "linear":
            angular = AngularKernel.linear(*params)
        elif ang == "polynomial":
            angular = AngularKernel.polynomial(params)
        else:
            raise ManifestError(f"[kernel] angular must be constant, linear or polynomial, got {ang!r}")
    except TypeError:
        raise ManifestError(f"[kernel] wrong number of angular_params for {ang!r}") from None
    kernel = KernelSpec(cp.get("kernel", "kind").strip(), _num(cp, "kernel", "gamma", float), angular)

    qd = QuadratureSpec.default_for(config)
    if not cp.get("quadrature", "n_radial").strip():
        cp.set("quadrature", "n_radial", str(qd.n_radial))
    if not cp.get("quadrature", "n_angular").strip():
        cp.set("quadrature", "n_angular", str(qd.n_angular))
    quad = QuadratureSpec(_num(cp, "quadrature", "n_radial", int), _num(cp, "quadrature", "n_angular", int))

    filt = FilterSpec(cp.get("filter", "kind").strip(), _num(cp, "filter", "alpha", float), _num(cp, "filter", "order", int))
    seed = _num(cp, "general", "seed", int)
    if _num(cp, "general", "threads", int) < 1:
        raise ManifestError("[general] threads must be >= 1")
    out = Path(cp.get("general", "output_dir"))
    if not out.is_absolute():
        out = path.parent / out
    return RunManifest(cp, config, kernel, quad, filt, seed, out)


def make_profile(m: RunManifest):
    name = m.get("initial", "profile").strip()
    d, L = m.config.d, m.config.L
    if name == "gaussian":
        center = _floats(m.get("initial", "center")) or None
        if center is not None and len(center) != d:
            raise ManifestError("[initial] center needs d components")
        return gaussian_bump(L, d, m.getfloat("initial", "T"), m.getfloat("initial", "mass"), center)
    if name == "double_bump":
        return double_bump(L, d, m.getfloat("initial", "T"), m.getfloat("initial", "mass"), m.getfloat("initial", "shift"))
    if name == "ball":
        radius = m.getfloat("initial", "radius")
        if not 0 < radius < L:
            raise ManifestError("[initial] radius must lie in (0, L)")
        return ball_indicator(radius, m.getfloat("initial", "height"), d)
    raise ManifestError(f"[initial] profile must be gaussian, double_bump or ball, got {name!r}")


def initial_fields(m: RunManifest):
    os_ = m.getint("initial", "oversample")
    if os_ < 2:
        raise ManifestError("[initial] oversample must be >= 2")
    f0 = sample(m.config, make_profile(m), os_)
    return f0, apply_filter(forward_transform(f0), m.filt)


# --- output helpers ------------------------------------------------------------


def fmt(x) -> str:
    """17 significant digits, '.' decimal point."""
    return f"{float(x):.17g}"


def csv_text(kind: str, columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"# schema=fgboltz.{kind} version={SCHEMA_VERSION}"])
    w.writerow(columns)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


_SNAP = struct.Struct("<4sIIIddd")
SNAP_MAGIC = b"KSSN"


def save_snapshot(f: SpectralField, t: float, path) -> None:
    """Little-endian header (magic, version, d, N, L, R, t) then complex128 coefficients."""
    cfg = f.config
    with open(path, "wb") as fh:
        fh.write(_SNAP.pack(SNAP_MAGIC, 1, cfg.d, cfg.N, cfg.L, cfg.R, float(t)))
        fh.write(f.coeffs.astype("<c16").tobytes())


def load_snapshot(path):
    raw = Path(path).read_bytes()
    if len(raw) < _SNAP.size:
        raise FormatError("snapshot too short")
    magic, version, d, N, L, R, t = _SNAP.unpack_from(raw, 0)
    if magic != SNAP_MAGIC or version != 1:
        raise FormatError("not a snapshot file")
    cfg = SpectralConfig(d, N, L, R)
    data = raw[_SNAP.size:]
    if len(data) != 16 * cfg.n_modes:
        raise FormatError("snapshot data size mismatch")
    return SpectralField(cfg, np.frombuffer(data, dtype="<c16").reshape(cfg.shape)), t


# --- subcommands ------------------------------------------------------------------


def _threads(m: RunManifest) -> int:
    return m.getint("general", "threads")


def _table(m: RunManifest, path=None):
    if path:
        return load_table(path, config=m.config, kernel=m.kernel)
    return build_weight_table(m.config, m.kernel, m.quad, threads=_threads(m))


def cmd_precompute(m: RunManifest, out_path=None) -> int:
    t0 = time.perf_counter()
    table = build_weight_table(m.config, m.kernel, m.quad, threads=_threads(m))
    wall = time.perf_counter() - t0
    resid = richardson_residual(table, threads=_threads(m))
    path = Path(out_path) if out_path else m.output_dir / "table.kswt"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_table(table, path)
    _write(m.output_dir / "effective_config.ini", m.effective_text())
    n = m.config.n_modes
    print(f"table={path}")
    print(f"gain_entries={n * n} loss_entries={n}")
    print(f"build_seconds={wall:.3f}")
    print(f"richardson_residual={resid:.3e}")
    print(f"conjugation_residual={table.conjugation_residual():.3e} antidiagonal_max={table.antidiagonal_max():.3e}")
    tol = m.getfloat("quadrature", "check_tol")
    if m.getbool("quadrature", "self_check") and resid > tol:
        print(f"quadrature self-check residual {resid:.3e} exceeds {tol:g}", file=sys.stderr)
        return EXIT_QUADRATURE
    return EXIT_OK


DIAG_COLUMNS = ("t", "mass", "l1", "l2", "h1", "negpart_l2", "bound_l2", "bound_negpart", "flags")


def cmd_run(m: RunManifest, table_path=None) -> int:
    table = _table(m, table_path)
    f0, fN0 = initial_fields(m)
    init = initial_data(fN0, f0)
    t_end = m.getfloat("run", "t_end")
    consts = None
    tau = None
    if m.getbool("monitor", "enabled"):
        consts = estimate_constants(table, samples=m.getint("monitor", "samples"), seed=m.seed)
        tau = tau_from_data(consts, init.M_f0_1, init.M_f0_2, max(t_end, 1e-300))
        print(f"suggested_tau={tau:.6e}")
    if not m.get("run", "dt").strip():
        if tau is None:
            raise ManifestError("[run] dt is required when the monitor is disabled")
        m.parser.set("run", "dt", repr(default_dt(tau)))
    rc = RunConfig(
        t_end, m.getfloat("run", "dt"), m.get("run", "scheme").strip().lower(),
        m.getint("run", "diag_every"), m.getint("run", "oversample"),
    )
    if tau is not None and rc.dt > tau / 10:
        print(f"warning: dt={rc.dt:g} exceeds tau/10={tau / 10:.3e}", file=sys.stderr)
    snap_times = sorted(_floats(m.get("run", "snapshot_times")))
    m.output_dir.mkdir(parents=True, exist_ok=True)
    _write(m.output_dir / "effective_config.ini", m.effective_text())
    pending = list(snap_times)

    def snap(t, f):
        while pending and t >= pending[0] - 1e-12:
            save_snapshot(f, t, m.output_dir / f"snapshot_{len(snap_times) - len(pending):04d}.bin")
            pending.pop(0)

    snap(0.0, fN0)
    try:
        traj = run(fN0, table, rc, callback=snap)
    except BlowupError as exc:
        print(f"blow-up at t={exc.t!r}: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    records = traj.diagnostics
    status = EXIT_OK
    if consts is not None:
        rep = monitor(traj, consts, init, m.getfloat("monitor", "safety"))
        records = rep.records
        mon_rows = [[fmt(r[c]) if not isinstance(r[c], bool) else str(int(r[c])) for c in MONITOR_COLUMNS]
                    for r in rep.rows]
        _write(m.output_dir / "monitor.csv", csv_text("monitor", MONITOR_COLUMNS, mon_rows))
        _write(m.output_dir / "monitor_summary.txt", rep.summary())
        sys.stdout.write(rep.summary())
        if not rep.exact_pass:
            status = EXIT_CHECK_FAILED
    rows = []
    for r in records:
        flags = "".join("1" if x else "0" for x in r.within_bounds) if r.within_bounds else "---"
        rows.append([fmt(r.t), fmt(r.mass), fmt(r.l1), fmt(r.l2), fmt(r.h1), fmt(r.negpart_l2),
                     fmt(r.bound_l2), fmt(r.bound_negpart), flags])
    _write(m.output_dir / "diagnostics.csv", csv_text("diagnostics", DIAG_COLUMNS, rows))
    print(f"records={len(rows)} final_t={records[-1].t!r}")
    return status


def cmd_verify(m: RunManifest, table_path=None) -> int:
    samples = m.getint("verify", "samples")
    if samples < 100:
        raise ManifestError(f"[verify] samples must be >= 100, got {samples}")
    table = _table(m, table_path)
    rows, ok = [], True
    for p in [x for x in m.get("verify", "p").replace(" ", "").split(",") if x]:
        rep = check_bilinear_bounds(table, p=p, samples=samples, seed=m.seed)
        rows.append(rep.to_csv().splitlines()[1].split(","))
        ok &= rep.bounded
        print(f"p={p} gain={rep.max_ratio_gain:.6g} loss={rep.max_ratio_loss:.6g} full={rep.max_ratio_full:.6g} "
              f"hk={rep.max_ratio_hk:.6g} bounded={rep.bounded}")
    m.output_dir.mkdir(parents=True, exist_ok=True)
    _write(m.output_dir / "effective_config.ini", m.effective_text())
    _write(m.output_dir / "bounds.csv", csv_text("bounds", BOUND_COLUMNS, rows))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_converge(m: RunManifest) -> int:
    N_list = [int(x) for x in _floats(m.get("converge", "N_list"))]
    N_ref = m.getint("converge", "N_ref")
    if not N_list or N_ref <= max(N_list):
        raise ManifestError(f"[converge] N_ref={N_ref} must exceed max(N_list)={max(N_list, default=None)}")
    t_end = m.getfloat("converge", "t_end")
    rc = RunConfig(t_end, m.getfloat("converge", "dt"), m.get("run", "scheme").strip().lower())
    m.output_dir.mkdir(parents=True, exist_ok=True)
    _write(m.output_dir / "effective_config.ini", m.effective_text())
    ct = convergence_study(
        make_profile(m), m.kernel, N_list, N_ref, t_end, rc, m.config.L, m.config.R, m.config.d,
        dt_tol=m.getfloat("converge", "dt_tol"), init_oversample=m.getint("initial", "oversample"),
        threads=_threads(m), log=lambda s: print(s, file=sys.stderr),
    )
    rows = [ln.split(",") for ln in ct.to_csv().splitlines()[1:]]
    _write(m.output_dir / "convergence.csv", csv_text("convergence", CONVERGENCE_COLUMNS, rows))
    print(f"dt={ct.dt:g} ratios={[f'{r:.3e}' for r in ct.ratios]} slopes={[f'{s:.3f}' for s in ct.local_slopes]}")
    return EXIT_OK


def cmd_check_init(m: RunManifest) -> int:
    f0, fN0 = initial_fields(m)
    eps = m.getfloat("check_init", "eps")
    if m.getbool("check_init", "relative_eps"):
        eps *= lp_norm(f0, 2)
    rep = check_conditions(fN0, f0, eps)
    text = rep.to_text()
    sweep = [int(x) for x in _floats(m.get("check_init", "sweep"))]
    if sweep:
        best = smallest_passing_N(make_profile(m), sweep, m.config.L, m.config.R, eps, m.filt, m.config.d)
        text += "".join(f"smallest_N_{k}={'none' if v is None else v}\n" for k, v in best.items())
    m.output_dir.mkdir(parents=True, exist_ok=True)
    _write(m.output_dir / "effective_config.ini", m.effective_text())
    _write(m.output_dir / "init_report.txt", text)
    sys.stdout.write(text)
    return EXIT_OK if rep.all_pass else EXIT_CHECK_FAILED


# --- argument parsing ------------------------------------------------------------------


def _env_threads() -> Optional[int]:
    raw = os.environ.get("KS_THREADS", "").strip()
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ManifestError(f"KS_THREADS must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fgboltz", description="Fourier-Galerkin Boltzmann solver")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (fallback: KS_THREADS)")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("precompute", help="build and save the weight table")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", help="table path (default: <output_dir>/table.kswt)")
    p = sub.add_parser("run", help="integrate in time and write diagnostics")
    p.add_argument("manifest")
    p.add_argument("--table", help="precomputed table (built on the fly when omitted)")
    p = sub.add_parser("verify", help="bilinear bound study")
    p.add_argument("manifest")
    p.add_argument("--table")
    p = sub.add_parser("converge", help="self-convergence study")
    p.add_argument("manifest")
    p = sub.add_parser("check-init", help="initial-data conditions report")
    p.add_argument("manifest")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = args.threads if args.threads is not None else _env_threads()
        m = load_manifest(args.manifest, threads)
        if args.command == "precompute":
            return cmd_precompute(m, args.output)
        if args.command == "run":
            return cmd_run(m, args.table)
        if args.command == "verify":
            return cmd_verify(m, args.table)
        if args.command == "converge":
            return cmd_converge(m)
        return cmd_check_init(m)
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except (DomainError, ConfigMismatch, FormatError, ResourceError, OSError, ValueError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

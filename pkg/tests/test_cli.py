import csv
import shutil
import subprocess
import sys

import numpy as np
import pytest

from fgboltz.cli import DEFAULTS, SCHEMA_VERSION, load_manifest, load_snapshot, main, save_snapshot
from fgboltz.errors import FormatError
from fgboltz.spectral import SpectralConfig, random_hermitian_field

BASE = {
    "spectral": {"N": "8"},
    "run": {"t_end": "0.1", "dt": "0.02", "diag_every": "1"},
    "monitor": {"samples": "100"},
    "verify": {"p": "2", "samples": "100"},
}


def write_manifest(tmp_path, name="m.ini", **overrides):
    sections = {k: dict(v) for k, v in BASE.items()}
    for sec, vals in overrides.items():
        sections.setdefault(sec, {}).update(vals)
    sections.setdefault("general", {}).setdefault("output_dir", "out")
    text = "".join(f"[{s}]\n" + "".join(f"{k} = {v}\n" for k, v in kv.items()) + "\n" for s, kv in sections.items())
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0] == f"# schema=fgboltz.{path.stem} version={SCHEMA_VERSION}"
    return list(csv.reader(lines[1:]))


def test_manifest_defaults_and_derived_sizes(tmp_path):
    m = load_manifest(write_manifest(tmp_path))
    assert m.config.R == 2.0
    assert m.config.L == pytest.approx((3 + 2 ** 0.5) / 2)
    assert m.output_dir == tmp_path / "out"
    assert set(m.parser.sections()) == set(DEFAULTS)


def test_precompute_is_deterministic(tmp_path, capsys):
    path = write_manifest(tmp_path)
    assert main(["precompute", str(path), "-o", str(tmp_path / "a.kswt")]) == 0
    assert main(["precompute", str(path), "-o", str(tmp_path / "b.kswt")]) == 0
    assert (tmp_path / "a.kswt").read_bytes() == (tmp_path / "b.kswt").read_bytes()
    out = capsys.readouterr().out
    assert "richardson_residual=" in out and "gain_entries=6561" in out
    assert (tmp_path / "out" / "effective_config.ini").is_file()


def test_precompute_quadrature_failure(tmp_path):
    path = write_manifest(tmp_path, quadrature={"n_radial": "2", "n_angular": "4"},
                          kernel={"gamma": "1", "angular": "linear", "angular_params": "0.2, 0.1"})
    assert main(["precompute", str(path)]) == 3


@pytest.mark.parametrize("overrides", [
    {"spectral": {"L": "1.0", "R": "2.0"}},  # L < R
    {"spectral": {"N": "7"}},
    {"kernel": {"kind": "hard", "gamma": "2"}},
    {"filter": {"kind": "jackson"}},
    {"bogus": {"x": "1"}},
    {"run": {"dt": "abc"}},
])
def test_invalid_manifest_exit_2(tmp_path, overrides, capsys):
    assert main(["run", str(write_manifest(tmp_path, **overrides))]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_manifest_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "nope.ini")]) == 2


def test_verify_rejects_few_samples(tmp_path):
    assert main(["verify", str(write_manifest(tmp_path, verify={"samples": "0"}))]) == 2


def test_converge_requires_larger_reference(tmp_path):
    path = write_manifest(tmp_path, converge={"N_list": "4,8", "N_ref": "8"})
    assert main(["converge", str(path)]) == 2


def test_run_outputs(tmp_path, capsys):
    path = write_manifest(tmp_path, run={"snapshot_times": "0, 0.05"})
    assert main(["run", str(path)]) == 0
    out = capsys.readouterr().out
    assert "suggested_tau=" in out and "[exact]" in out
    diag = read_csv(tmp_path / "out" / "diagnostics.csv")
    assert diag[0][:3] == ["t", "mass", "l1"]
    assert [float(r[0]) for r in diag[1:]] == pytest.approx([0.0, 0.02, 0.04, 0.06, 0.08, 0.1])
    assert all(r[-1] == "111" for r in diag[1:])
    assert len(diag[1][1].replace("-", "").replace(".", "").split("e")[0].lstrip("0")) >= 15
    mon = read_csv(tmp_path / "out" / "monitor.csv")
    assert len(mon) == 7
    assert "[heuristic]" in (tmp_path / "out" / "monitor_summary.txt").read_text()
    f, t = load_snapshot(tmp_path / "out" / "snapshot_0001.bin")
    assert t == pytest.approx(0.06) and f.config.N == 8


def test_run_is_deterministic(tmp_path):
    p1 = write_manifest(tmp_path, "a.ini", general={"output_dir": "a"})
    p2 = write_manifest(tmp_path, "b.ini", general={"output_dir": "b"})
    assert main(["run", str(p1)]) == 0 and main(["run", str(p2)]) == 0
    for name in ("diagnostics.csv", "monitor.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_with_precomputed_table(tmp_path):
    path = write_manifest(tmp_path, monitor={"enabled": "false"})
    table = tmp_path / "t.kswt"
    assert main(["precompute", str(path), "-o", str(table)]) == 0
    assert main(["run", str(path), "--table", str(table)]) == 0
    diag = read_csv(tmp_path / "out" / "diagnostics.csv")
    assert diag[1][-1] == "---"
    other = write_manifest(tmp_path, "o.ini", spectral={"N": "4"}, monitor={"enabled": "false"})
    assert main(["run", str(other), "--table", str(table)]) == 2


def test_run_t_end_zero(tmp_path):
    path = write_manifest(tmp_path, run={"t_end": "0"})
    assert main(["run", str(path)]) == 0
    assert len(read_csv(tmp_path / "out" / "diagnostics.csv")) == 2


def test_run_blowup_exit_4(tmp_path, capsys):
    path = write_manifest(tmp_path, run={"t_end": "1e7", "dt": "1e6", "scheme": "euler"},
                          monitor={"enabled": "false"})
    assert main(["run", str(path)]) == 4
    assert "blow-up at t=" in capsys.readouterr().err


def test_verify_writes_bounds(tmp_path):
    path = write_manifest(tmp_path, spectral={"N": "4"}, verify={"p": "1,inf"})
    assert main(["verify", str(path)]) in (0, 1)
    rows = read_csv(tmp_path / "out" / "bounds.csv")
    assert rows[0][0] == "p" and [r[0] for r in rows[1:]] == ["1", "inf"]


def test_converge_writes_table(tmp_path):
    path = write_manifest(tmp_path, spectral={"N": "4"},
                          converge={"N_list": "2,4", "N_ref": "8", "t_end": "0.05", "dt": "0.025", "dt_tol": "1e-9"})
    assert main(["converge", str(path)]) == 0
    rows = read_csv(tmp_path / "out" / "convergence.csv")
    assert [r[0] for r in rows[1:]] == ["2", "4", "8"]
    assert float(rows[2][1]) < float(rows[1][1])


def test_check_init(tmp_path, capsys):
    smooth = write_manifest(tmp_path, "s.ini", spectral={"N": "32"})
    assert main(["check-init", str(smooth)]) == 0
    ball = write_manifest(tmp_path, "b.ini", spectral={"N": "32"}, initial={"profile": "ball"},
                          check_init={"sweep": "8,16"})
    assert main(["check-init", str(ball)]) == 1
    text = (tmp_path / "out" / "init_report.txt").read_text()
    assert "pass_d=false" in text and "smallest_N_d=none" in text
    fejer = write_manifest(tmp_path, "f.ini", spectral={"N": "32"}, initial={"profile": "ball"},
                           filter={"kind": "fejer"}, check_init={"eps": "1e-12"})
    capsys.readouterr()
    main(["check-init", str(fejer)])
    assert "pass_d=true" in capsys.readouterr().out


def test_threads_flag_and_environment(tmp_path, monkeypatch):
    path = write_manifest(tmp_path)
    monkeypatch.setenv("KS_THREADS", "3")
    assert main(["precompute", str(path), "-o", str(tmp_path / "env.kswt")]) == 0
    assert "threads = 3" in (tmp_path / "out" / "effective_config.ini").read_text()
    assert main(["--threads", "2", "precompute", str(path), "-o", str(tmp_path / "flag.kswt")]) == 0
    assert "threads = 2" in (tmp_path / "out" / "effective_config.ini").read_text()
    assert (tmp_path / "env.kswt").read_bytes() == (tmp_path / "flag.kswt").read_bytes()
    monkeypatch.setenv("KS_THREADS", "many")
    assert main(["precompute", str(path)]) == 2


def test_snapshot_round_trip(tmp_path):
    f = random_hermitian_field(SpectralConfig(2, 6, 2.5, 2.0), np.random.default_rng(0))
    save_snapshot(f, 0.125, tmp_path / "s.bin")
    g, t = load_snapshot(tmp_path / "s.bin")
    assert t == 0.125 and g.config == f.config and np.array_equal(g.coeffs, f.coeffs)
    (tmp_path / "bad.bin").write_bytes(b"KSSN")
    with pytest.raises(FormatError):
        load_snapshot(tmp_path / "bad.bin")


def test_console_script(tmp_path):
    exe = shutil.which("fgboltz")
    cmd = [exe] if exe else [sys.executable, "-m", "fgboltz.cli"]
    res = subprocess.run(cmd + ["check-init", str(write_manifest(tmp_path, spectral={"N": "32"}))],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "pass_a=true" in res.stdout
    res = subprocess.run(cmd + ["--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "precompute" in res.stdout


def test_manifest_inline_comments(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[spectral]\nN = 8   ; modes per axis\n[run]\ndt =   ; from tau\n")
    m = load_manifest(path)
    assert m.config.N == 8 and m.get("run", "dt").strip() == ""

import json
import math

import pytest

from bhquench.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, EXIT_REGIME, main
from bhquench.config import parse_config
from bhquench.errors import ConfigurationError

BASE = """
lattice.dimension = 2
lattice.extent = 64
lattice.pattern = range
lattice.range = 2
quench.U = 1.0
quench.epsilon = 0.1
time.t_max = 19.3
time.samples = 40
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_resolves_epsilon():
    cfg = parse_config(BASE)
    assert cfg.J == pytest.approx((3 - math.sqrt(8)) * 1.1)
    assert cfg.pattern == "range" and cfg.range == 2


def test_parse_reports_every_violation():
    text = "lattice.extent = 2\nquench.U = -1\nquench.J = 0.1\nquench.epsilon = 0.1\ntime.samples = 3\nbogus = 1\n"
    with pytest.raises(ConfigurationError) as err:
        parse_config(text)
    v = err.value.violations
    assert len(v) >= 5
    joined = "\n".join(v)
    for needle in ("bogus", "time.t_max", "exactly one", "quench.U", "extent", "samples"):
        assert needle in joined


def test_hash_ignores_directory_but_tracks_physics():
    a = parse_config(BASE + "output.directory = x\n")
    b = parse_config(BASE + "output.directory = y\n")
    c = parse_config(BASE.replace("19.3", "19.4"))
    assert a.config_hash() == b.config_hash() != c.config_hash()


@pytest.mark.parametrize("scenario", ["dispersion", "quench", "lightcone", "patches", "phase", "validate"])
def test_scenarios_run(tmp_path, scenario):
    cfg = write(tmp_path, BASE + ("patches.sides = 2,4\n" if scenario == "patches" else ""))
    out = tmp_path / "out"
    assert main([scenario, "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"] == scenario
    for entry in manifest["outputs"]:
        lines = (out / entry["file"]).read_text().splitlines()
        assert len(lines) == entry["rows"] + 1


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, BASE)
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert main(["lightcone", "--config", str(cfg), "--out", str(o)]) == EXIT_OK
    files = sorted(p.name for p in outs[0].iterdir())
    assert files == sorted(p.name for p in outs[1].iterdir())
    for f in files:
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()


def test_json_format(tmp_path):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "j"
    assert main(["dispersion", "--config", str(cfg), "--out", str(out), "--format", "json"]) == EXIT_OK
    doc = json.loads((out / "dispersion.json").read_text())
    assert doc["columns"][:2] == ["kabs", "kx"]
    assert len(doc["rows"]) == 64 * 64


def test_spectroscopy_reads_quench_output(tmp_path):
    text = BASE.replace("quench.epsilon = 0.1", "quench.J = 0.1").replace("19.3", "30").replace("= 40", "= 64")
    text = text.replace("lattice.extent = 64", "lattice.extent = 8")
    cfg = write(tmp_path, text)
    q = tmp_path / "q"
    assert main(["quench", "--config", str(cfg), "--out", str(q)]) == EXIT_OK
    s = tmp_path / "s"
    assert main(["spectroscopy", "--config", str(cfg), "--out", str(s), "--input", str(q)]) == EXIT_OK
    summary = json.loads((s / "manifest.json").read_text())["summary"]
    assert summary["modes"]["ok"] > 0
    assert summary["max_relative_omega_error"] < 1e-6


def test_exit_code_for_bad_config(tmp_path, capsys):
    cfg = write(tmp_path, BASE.replace("lattice.extent = 64", "lattice.extent = 2"))
    assert main(["quench", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "extent" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_missing_config_file(tmp_path):
    assert main(["quench", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG


def test_exit_code_for_regime_error(tmp_path):
    # Mott side has no growing modes, so no front and no Bessel pattern
    cfg = write(tmp_path, BASE.replace("epsilon = 0.1", "epsilon = -0.5"))
    assert main(["lightcone", "--config", str(cfg), "--out", str(tmp_path / "l")]) == EXIT_REGIME
    assert main(["bessel", "--config", str(cfg), "--out", str(tmp_path / "b")]) == EXIT_REGIME


def test_scenario_mismatch(tmp_path):
    cfg = write(tmp_path, BASE + "scenario = quench\n")
    assert main(["dispersion", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_failed_run_leaves_previous_output(tmp_path):
    out = tmp_path / "keep"
    good = write(tmp_path, BASE, "good.cfg")
    assert main(["dispersion", "--config", str(good), "--out", str(out)]) == EXIT_OK
    before = (out / "manifest.json").read_bytes()
    bad = write(tmp_path, BASE.replace("epsilon = 0.1", "epsilon = -0.5"), "bad.cfg")
    assert main(["lightcone", "--config", str(bad), "--out", str(out)]) == EXIT_REGIME
    assert (out / "manifest.json").read_bytes() == before
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".")] == []


def test_validate_passes(tmp_path):
    cfg = write(tmp_path, BASE)
    assert main(["validate", "--config", str(cfg), "--out", str(tmp_path / "v")]) == EXIT_OK
    assert EXIT_FAILED == 1


def test_csv_header_and_17_digits(tmp_path):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "d"
    assert main(["dispersion", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    lines = (out / "dispersion.csv").read_text().splitlines()
    assert lines[0] == "kabs,kx,ky,T_k,omega_sq,gamma"
    # round trip is exact with 17 significant digits
    for cell in lines[5].split(","):
        assert float(format(float(cell), ".17g")) == float(cell)
    assert any(len(c.replace("-", "").replace(".", "").lstrip("0").split("e")[0]) >= 15 for c in lines[5].split(","))


@pytest.mark.parametrize(
    "line",
    [
        "lattice.range = 1",
        "quench.U = 1.5",
        "quench.epsilon = 0.2",
        "time.samples = 41",
        "output.format = json",
        "lightcone.threshold = 0.001",
        "patches.sides = 2,4",
        "phase.side = 2",
    ],
)
def test_hash_changes_with_each_semantic_key(line):
    key = line.split("=")[0].strip()
    lines = [l for l in BASE.strip().splitlines() if not l.startswith(key)]
    changed = parse_config("\n".join(lines + [line]))
    assert changed.config_hash() != parse_config(BASE).config_hash()


def test_minimal_config_resolves_J():
    text = (
        "lattice.dimension = 2\nlattice.extent = 32\nlattice.pattern = nn\nquench.U = 1\n"
        "quench.epsilon = 0.1\ntime.t_max = 10\ntime.samples = 64\nscenario = quench\n"
    )
    assert parse_config(text).J == pytest.approx(0.188730, abs=1e-6)


def test_dispersion_example_square_lattice(tmp_path):
    text = "lattice.extent = 64\nquench.U = 1\nquench.J = 1\ntime.t_max = 10\ntime.samples = 8\n"
    cfg = write(tmp_path, text)
    out = tmp_path / "d"
    assert main(["dispersion", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    lines = (out / "dispersion.csv").read_text().splitlines()
    rows = [list(map(float, l.split(","))) for l in lines[1:]]
    assert len(rows) == 4096
    best = max(rows, key=lambda r: r[-1])
    assert best[-1] == pytest.approx(2.0) and best[0] == 0.0

"""End-to-end command-line checks: schemas, determinism, exit codes."""

import json
import os
import subprocess
import sys

import pytest

from vortexladder import cli
from vortexladder.errors import ConvergenceError

HOMOG = {"preset": "homogeneous-xyz", "jx": 1.1, "jy": 0.7, "jz": 1.3}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "vortexladder", *argv],
        capture_output=True,
        text=True,
    )


def test_spectrum_spin_dense_csv_roundtrip(tmp_path):
    cfg = write_config(
        tmp_path,
        {"ladder": {"cells": 2, "boundary": "open"}, "couplings": HOMOG,
         "method": "spin-dense"},
    )
    out = tmp_path / "artifacts" / "spec.csv"
    proc = run_cli("spectrum", "--config", cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    assert not [p for p in out.parent.iterdir() if p.name.startswith(".tmp-")]
    text = out.read_text()
    assert text.endswith("\n") and "\r" not in text
    lines = text.splitlines()
    assert lines[0] == "eigenvalue" and len(lines) == 1 + 256
    values = [float(s) for s in lines[1:]]
    assert values == sorted(values)
    assert values[0] == pytest.approx(-6.7452749199784563, abs=1e-9)
    # 17 significant digits: every printed value round-trips exactly
    assert all(format(float(s), ".17g") == s for s in lines[1:])


def test_spectrum_fermion_sector_json(tmp_path):
    cfg = write_config(
        tmp_path,
        {"ladder": {"cells": 2, "boundary": "open"}, "couplings": HOMOG,
         "method": "fermion", "sector": "p1"},
    )
    out = tmp_path / "spec.json"
    proc = run_cli("spectrum", "--config", cfg, "--format", "json", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["method"] == "fermion"
    assert doc["sector"] == {"p1": -1, "p2": 1, "p3": 1}
    assert len(doc["eigenvalues"]) == 16  # 2^(4 modes)

    del doc  # union over all sectors when no sector is given
    cfg2 = write_config(
        tmp_path,
        {"ladder": {"cells": 2, "boundary": "open"}, "couplings": HOMOG,
         "method": "fermion"},
        name="union.json",
    )
    proc = run_cli("spectrum", "--config", cfg2, "--format", "json", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["sector"] is None
    assert len(doc["eigenvalues"]) == 8 * 16
    assert doc["eigenvalues"] == sorted(doc["eigenvalues"])


def test_spectrum_spin_iterative_json(tmp_path):
    cfg = write_config(
        tmp_path,
        {"ladder": {"cells": 2, "boundary": "open"}, "couplings": HOMOG,
         "method": "spin-iterative", "k": 4, "seed": 5},
    )
    out = tmp_path / "it.json"
    proc = run_cli("spectrum", "--config", cfg, "--format", "json", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["method"] == "spin-iterative" and len(doc["eigenvalues"]) == 4
    assert doc["eigenvalues"][0] == pytest.approx(-6.7452749199784563, abs=1e-7)


def test_sweep_json_and_csv(tmp_path):
    conf = {
        "ladder": {"cells": 2, "boundary": "open"},
        "couplings": {"preset": "homogeneous-xyz", "jx": 0.9, "jy": 0.9, "jz": 1.3},
    }
    cfg = write_config(tmp_path, conf)
    out = tmp_path / "sweep.json"
    proc = run_cli("sweep", "--config", cfg, "--format", "json", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["cycles"] == ["p1", "p2", "p3"]
    assert len(doc["rows"]) == 8
    assert doc["argmin_sector"] == 0
    assert doc["tie_sector_ids"] == [0]
    # |J| is mirror symmetric both ways when jx == jy
    assert doc["reflection_symmetric_cases"] == ["horizontal", "vertical-open"]
    energies = [r["ground_energy"] for r in doc["rows"]]
    assert energies == sorted(energies)
    assert doc["rows"][0]["values"] == {"p1": 1, "p2": 1, "p3": 1}

    csv_out = tmp_path / "sweep.csv"
    proc = run_cli("sweep", "--config", cfg, "--out", str(csv_out))
    assert proc.returncode == 0, proc.stderr
    lines = csv_out.read_text().splitlines()
    assert lines[0] == "sector_id,p1,p2,p3,ground_energy,is_argmin"
    data = [l.split(",") for l in lines[1:9]]
    assert [row[-1] for row in data].count("1") == 1 and data[0][-1] == "1"
    assert data[0][:4] == ["0", "1", "1", "1"]
    assert lines[9] == "# argmin_sector,0"
    assert lines[10] == "# tie_count,1"
    assert lines[11] == "# reflection_symmetric_cases,horizontal|vertical-open"


def test_gap_scan_summary(tmp_path):
    conf = {
        "ladder": {"boundary": "closed"},
        "cells_range": [4, 8],
        "couplings": {"preset": "decaying-top-closed", "jx": 1.0, "jy": 0.2, "jz": 2.0},
    }
    cfg = write_config(tmp_path, conf)
    out = tmp_path / "scan.json"
    proc = run_cli("gap-scan", "--config", cfg, "--format", "json", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["cells"] == [4, 5, 6, 7, 8]
    gaps = [r["gap"] for r in doc["rows"] if r["pattern"] == "BL"]
    assert len(gaps) == 5 and all(g > 0 for g in gaps)
    assert doc["bl_summary"]["strictly_decreasing"] is True
    assert doc["bl_summary"]["log_slope"] < 0

    csv_out = tmp_path / "scan.csv"
    proc = run_cli("gap-scan", "--config", cfg, "--out", str(csv_out))
    assert proc.returncode == 0, proc.stderr
    lines = csv_out.read_text().splitlines()
    assert lines[0] == "cells,pattern,gap"
    assert "# bl_strictly_decreasing,true" in lines
    assert any(l.startswith("# bl_log_slope,") for l in lines)
    assert any(l.startswith("# bl_log_r2,") for l in lines)


def test_compare_dense_both_boundaries(tmp_path):
    open_cfg = write_config(
        tmp_path,
        {"ladder": {"cells": 2, "boundary": "open"}, "couplings": HOMOG},
        name="open.json",
    )
    out = tmp_path / "cmp.json"
    proc = run_cli("compare", "--config", open_cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["method"] == "dense"
    assert doc["spectra_equal"] is True and doc["ground_equal"] is True

    closed_cfg = write_config(
        tmp_path,
        {"ladder": {"cells": 2, "boundary": "closed"}, "couplings": HOMOG},
        name="closed.json",
    )
    proc = run_cli("compare", "--config", closed_cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["spectra_equal"] is False and doc["ground_equal"] is True
    assert len(doc["comparison"]["only_b"]) == 70


def test_compare_ground_only_path(tmp_path):
    cfg = write_config(
        tmp_path,
        {"ladder": {"cells": 4, "boundary": "open"}, "couplings": HOMOG, "seed": 3},
    )
    out = tmp_path / "cmp4.json"
    proc = run_cli("compare", "--config", cfg, "--threads", "2", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["method"] == "ground-only"
    assert doc["spectra_equal"] is None
    assert doc["ground_equal"] is True
    assert abs(doc["spin_ground"] - doc["fermion_ground"]) <= 1e-8


def test_perturb_row_schema(tmp_path):
    cfg = write_config(
        tmp_path,
        {"ladder": {"cells": 2, "boundary": "open"}, "jx": 1.0, "t": 0.04, "seed": 7},
    )
    out = tmp_path / "pert.json"
    proc = run_cli("perturb", "--config", cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert set(doc) == {"boundary", "cells", "e0_formula", "e2_formula",
                        "e_free_exact", "rows"}
    assert doc["e0_formula"] == -3.0
    assert [r["plaquette"] for r in doc["rows"]] == ["p1", "p2", "p3"]
    for row in doc["rows"]:
        assert set(row) == {"plaquette", "delta_e_formula", "delta_e_exact",
                            "abs_err", "rel_err", "scale"}
        assert row["scale"] == pytest.approx(0.04)
        assert row["delta_e_exact"] > 0


def test_perturb_csv_blank_cells_for_missing_formula(tmp_path):
    cfg = write_config(
        tmp_path,
        {"ladder": {"cells": 3, "boundary": "closed"}, "jx": 1.0, "t": 0.05, "seed": 7},
    )
    out = tmp_path / "pert.csv"
    proc = run_cli("perturb", "--config", cfg, "--format", "csv", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "plaquette,delta_e_formula,delta_e_exact,abs_err,rel_err,scale"
    assert len(lines) == 1 + 6
    p6 = lines[6].split(",")
    # no printed formula for the plaquette that the expansion does not cover
    assert p6[0] == "p6" and p6[1] == "" and p6[3] == "" and p6[4] == ""
    assert float(p6[2]) > 0 and float(p6[5]) == 0.05


def test_rp_verify_modes(tmp_path):
    verify_cfg = write_config(
        tmp_path,
        {"majoranas": 8, "samples": 25, "mode": "verify", "seed": 13},
        name="verify.json",
    )
    out = tmp_path / "rp.json"
    proc = run_cli("rp-verify", "--config", verify_cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert set(doc) == {"samples", "min_functional", "trace_margin",
                        "energy_gap", "verdict"}
    assert doc["verdict"] == "pass"
    assert doc["min_functional"] >= -1e-10
    assert doc["energy_gap"] == 0.0  # symmetric bulk saturates the bound

    violate_cfg = write_config(
        tmp_path,
        {"majoranas": 8, "samples": 50, "mode": "violate", "seed": 13},
        name="violate.json",
    )
    proc = run_cli("rp-verify", "--config", violate_cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    assert doc["verdict"] == "pass" and doc["min_functional"] < -1e-6


def test_byte_identical_reruns(tmp_path):
    cfg = write_config(tmp_path, {"majoranas": 8, "samples": 10, "seed": 11})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run_cli("rp-verify", "--config", cfg, "--out", str(a)).returncode == 0
    assert run_cli("rp-verify", "--config", cfg, "--out", str(b)).returncode == 0
    assert a.read_bytes() == b.read_bytes()

    sweep_cfg = write_config(
        tmp_path,
        {"ladder": {"cells": 3, "boundary": "closed"}, "couplings": HOMOG},
        name="sweep.json",
    )
    assert run_cli("sweep", "--config", sweep_cfg, "--threads", "1",
                   "--out", str(a)).returncode == 0
    assert run_cli("sweep", "--config", sweep_cfg, "--threads", "2",
                   "--out", str(b)).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_exit_codes(tmp_path, capsys, monkeypatch):
    assert cli.main(["spectrum"]) == 2  # --config required
    assert "config error" in capsys.readouterr().err

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["spectrum", "--config", str(bad)]) == 2

    wrong_type = write_config(
        tmp_path,
        {"ladder": {"cells": "two"}, "couplings": HOMOG, "method": "spin-dense"},
        name="type.json",
    )
    assert cli.main(["spectrum", "--config", wrong_type]) == 2

    no_seed = write_config(
        tmp_path,
        {"ladder": {"cells": 2}, "couplings": HOMOG, "method": "spin-iterative", "k": 2},
        name="noseed.json",
    )
    assert cli.main(["spectrum", "--config", no_seed]) == 2

    too_big = write_config(
        tmp_path,
        {"ladder": {"cells": 4}, "couplings": HOMOG, "method": "spin-dense"},
        name="big.json",
    )
    out = tmp_path / "never" / "out.csv"
    assert cli.main(["spectrum", "--config", too_big, "--out", str(out)]) == 3
    assert "guard exceeded" in capsys.readouterr().err
    assert not out.exists()  # failure leaves no artifact behind

    scan = write_config(
        tmp_path,
        {"ladder": {"boundary": "closed"}, "cells_range": [4, 101],
         "couplings": {"preset": "decaying-top-closed"}},
        name="scan.json",
    )
    assert cli.main(["gap-scan", "--config", scan]) == 3

    def boom(conf, args):
        raise ConvergenceError("iteration stalled")

    monkeypatch.setitem(cli._COMMANDS, "compare", (boom, "json"))
    ok = write_config(tmp_path, {"ladder": {"cells": 2}}, name="ok.json")
    assert cli.main(["compare", "--config", ok]) == 4
    assert "convergence failure" in capsys.readouterr().err

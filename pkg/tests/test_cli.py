import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from pauli_sep import cli
from pauli_sep.grid import thread_count
from pauli_sep.cli import ScenarioFile, load_scenario_file, main, shipped_scenarios


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr().out


def shipped_doc(name):
    return json.loads(cli.resolve_scenario_path(name))


def test_list_systems(capsys):
    code, out = run(["list-systems"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 11
    assert "prolate spheroidal II" in lines[5]
    assert "params: a, k" in lines[9] and "params: k" in lines[10]


def test_shipped_files_round_trip():
    names = shipped_scenarios()
    assert {"proposition.json", "free_particle.json", "rotating_cylindrical.json",
            "corrupted_stackel.json"} <= set(names)
    for name in names:
        doc = shipped_doc(name)
        again = ScenarioFile.from_dict(doc).to_dict()
        assert json.loads(json.dumps(again)) == doc


def test_verify_proposition(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out = run(["verify", "proposition", "--json", str(report)], capsys)
    assert code == 0
    summary = json.loads(report.read_text())
    assert summary["status"] == "pass"
    assert summary["residual"]["max_rel"] < 1e-4
    assert summary["numerics"] == {"ode_step": 1e-3, "fd_step": 1e-3, "tolerance": 1e-4}


def test_verify_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["verify", "free_particle.json", "--json", str(a)])
    main(["verify", "free_particle.json", "--json", str(b)])
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_verify_corrupted_stackel(capsys):
    code, out = run(["verify", "corrupted_stackel"], capsys)
    assert code == 3
    assert "rank_check failed" in out


def test_verify_tolerance_failure(tmp_path, capsys):
    doc = shipped_doc("free_particle")
    doc["numerics"]["tolerance"] = 1e-12
    path = tmp_path / "tight.json"
    path.write_text(json.dumps(doc))
    code, out = run(["verify", str(path)], capsys)
    assert code == 3 and "FAIL" in out


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["numerics"].update(rtol=1),
    lambda d: d["system"].update(family="toroidal"),
    lambda d: d["frame"].update(alpha={"form": "cubic"}),
    lambda d: d.pop("grid"),
    lambda d: d.update(chi=[[1, 0, 0], [0, 0]]),
])
def test_schema_errors(mutate, tmp_path, capsys):
    doc = shipped_doc("free_particle")
    mutate(doc)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out = run(["verify", str(path)], capsys)
    assert code == 2 and "schema error" in out


def test_unreadable_inputs(tmp_path, capsys):
    assert run(["verify", str(tmp_path / "missing.json")], capsys)[0] == 2
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert run(["verify", str(bad)], capsys)[0] == 2


def test_dump_psi(tmp_path, capsys):
    out_csv = tmp_path / "psi.csv"
    code, _ = run(["verify", "free_particle", "--dump-psi", str(out_csv)], capsys)
    assert code == 0
    with open(out_csv) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == ("t", "x1", "x2", "x3", "re_psi1", "im_psi1", "re_psi2", "im_psi2")
    s = load_scenario_file("free_particle").scenario
    assert len(rows) - 1 == len(s.grid.points()) * len(s.grid.times)
    assert all(np.isfinite(float(v)) for v in rows[1])


def test_maxwell_commands(capsys, tmp_path):
    code, out = run(["maxwell", "s2", "--k", "1", "--a", "1"], capsys)
    assert code == 0 and "PASS" in out
    assert run(["maxwell", "s1"], capsys)[0] == 0
    path = tmp_path / "s7.json"
    code, out = run(["maxwell", "s7", "--verbatim", "--json", str(path)], capsys)
    assert code == 0
    assert json.loads(path.read_text())["unverified"] is True
    assert run(["maxwell", "s1", "--a", "2"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["maxwell", "s8"])
    assert exc.value.code == 2


def read_frame_csv(text):
    rows = list(csv.reader(text.strip().splitlines()))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return header, data


def test_frame_from_constant_field(capsys):
    code, out = run(["frame-from-field", "0,0,1", "--t1", "2", "--n", "21"], capsys)
    assert code == 0
    header, data = read_frame_csv(out)
    assert tuple(header) == cli.FRAME_COLUMNS
    t, alpha = data[:, 0], data[:, header.index("alpha")]
    assert np.max(np.abs(alpha + t)) < 1e-9
    assert np.allclose(data[:, header.index("Omega3")], -1, atol=1e-9)


def test_frame_from_zero_field(capsys):
    code, out = run(["frame-from-field", "[0, 0, 0]", "--t1", "1", "--n", "5"], capsys)
    header, data = read_frame_csv(out)
    O = data[:, 1:10]
    assert code == 0 and np.allclose(O, np.eye(3).ravel())


def test_frame_from_linear_field(tmp_path, capsys):
    A, B = 0.6, 0.2
    spec = json.dumps([0, 0, {"form": "linear", "c0": B, "c1": A}])
    out_csv = tmp_path / "frame.csv"
    code, _ = run(["frame-from-field", spec, "--t1", "3", "--n", "31", "--out", str(out_csv)], capsys)
    assert code == 0
    header, data = read_frame_csv(out_csv.read_text())
    t = data[:, 0]
    assert np.max(np.abs(data[:, header.index("alpha")] + (A * t ** 2 / 2 + B * t))) < 1e-9


def test_frame_from_field_parse_errors(capsys):
    assert run(["frame-from-field", "0,x,1", "--t1", "1"], capsys)[0] == 2
    assert run(["frame-from-field", "0,1", "--t1", "1"], capsys)[0] == 2
    assert run(["frame-from-field", '[0, 0, {"form": "cubic"}]', "--t1", "1"], capsys)[0] == 2
    assert run(["frame-from-field", "0,0,1", "--t1", "-1"], capsys)[0] == 2


def test_thread_env(monkeypatch):
    monkeypatch.setenv("PAULI_SEP_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("PAULI_SEP_THREADS", "junk")
    assert thread_count() == 1


def test_parallel_residual_matches_serial(monkeypatch, tmp_path, capsys):
    paths = []
    for threads in ("1", "4"):
        monkeypatch.setenv("PAULI_SEP_THREADS", threads)
        p = tmp_path / f"r{threads}.json"
        main(["verify", "rotating_cylindrical", "--json", str(p)])
        paths.append(p)
    capsys.readouterr()
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pauli_sep.cli", "list-systems"], capture_output=True, text=True)
    assert proc.returncode == 0 and len(proc.stdout.strip().splitlines()) == 11

import json
import subprocess
import sys

import pytest

from atomcheck.cli import main, parse_duration
from strategies import H1, PUTALL, SIZE


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_duration():
    assert parse_duration("500ms") == 0.5
    assert parse_duration("2m") == 120
    assert parse_duration("1.5") == 1.5
    with pytest.raises(Exception):
        parse_duration("soon")


def test_outcomes(capsys):
    code, out, _ = run(capsys, "outcomes", H1, "--family", "map")
    assert code == 0
    assert "null, (), null, true" in out
    assert "1 atomic outcome(s) from 4 linearization(s)" in out
    code, out, _ = run(capsys, "outcomes", PUTALL)
    assert "3 atomic outcome(s) from 3 linearization(s)" in out


def test_outcomes_bad_harness(capsys):
    code, _, err = run(capsys, "outcomes", "[put(0,0)", "--family", "map")
    assert code == 2 and "error" in err
    code, _, err = run(capsys, "outcomes", "[frobnicate(0)]")
    assert code == 2


def test_stress_locked(capsys):
    code, out, _ = run(capsys, "stress", H1, "--sut", "locked-map", "--trials", "2000")
    assert code == 0
    assert "2,000 trials" in out and "atomic so far" in out


def test_stress_bug(capsys):
    code, out, _ = run(capsys, "stress", H1, "--sut", "map-nonatomic-clear", "--trials", "50000", "--seed", "3")
    assert code == 1
    assert "NON-ATOMIC" in out and "null, (), null, false" in out


def test_stress_validate(capsys):
    code, out, _ = run(capsys, "stress", SIZE, "--sut", "locked-map", "--trials", "3000", "--validate")
    assert code == 0
    assert "0 linearizable with a non-atomic outcome" in out


def test_enumerate_is_byte_identical(capsys):
    argv = ["enumerate", "--family", "map", "--method", "clear", "--invocations", "3", "--values", "2",
            "--sequences", "2", "--seed", "4"]
    code, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert code == 0 and a == b and len(a.splitlines()) == 204


def test_enumerate_options(capsys):
    base = ["enumerate", "--family", "map", "--method", "clear", "--invocations", "2", "--values", "2",
            "--sequences", "2"]
    _, plain, _ = run(capsys, *base)
    _, unfiltered, _ = run(capsys, *base, "--no-filters")
    _, nosym, _ = run(capsys, *base, "--no-symmetry", "--no-filters")
    assert len(plain.splitlines()) <= len(unfiltered.splitlines()) <= len(nosym.splitlines())
    code, _, err = run(capsys, *base[:3], "--method", "put", *base[5:])
    assert code == 2


def test_method_config(capsys, tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps([{"name": "size", "core": True}]))
    code, out, _ = run(capsys, "enumerate", "--family", "map", "--method", "clear", "--invocations", "3",
                       "--values", "1", "--sequences", "2", "--method-config", str(cfg))
    assert code == 0 and "size()" in out


def test_lincheck(capsys):
    code, out, _ = run(capsys, "lincheck", SIZE, "--outcome", "1, null, null", "--hb", "1<0, 1<2")
    assert code == 0 and out.strip() == "linearizable"
    code, out, _ = run(capsys, "lincheck", SIZE, "--outcome", "0, null, null", "--hb", "1<0")
    assert code == 1 and "NOT" in out


def test_lincheck_history_file(capsys, tmp_path):
    f = tmp_path / "h.json"
    f.write_text(json.dumps({"harness": SIZE, "outcome": "2, null, null", "hb": [[1, 0], [2, 0]]}))
    code, out, _ = run(capsys, "lincheck", "--history", str(f))
    assert code == 0
    code, _, _ = run(capsys, "lincheck")
    assert code == 2


def test_list_suts(capsys):
    code, out, _ = run(capsys, "list-suts")
    assert code == 0 and "map-nonatomic-clear" in out and "locked-deque" in out


def test_check_dry_run_and_run(capsys, tmp_path):
    argv = ["check", "--family", "map", "--method", "clear", "--sut", "map-nonatomic-clear",
            "--max-invocations", "4", "--trials-per-harness", "3000", "--seed", "1"]
    code, a, _ = run(capsys, *argv, "--dry-run")
    _, b, _ = run(capsys, *argv, "--dry-run")
    # the lone [clear()] at (1,1,1) is fully serialized and filtered
    assert code == 0 and a == b and a.splitlines()[0].startswith("(2,2,2)")
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, *argv, "--format", "json", "-o", str(report))
    assert code == 1
    assert "NON-ATOMIC" in out
    assert json.loads(report.read_text())["verdict"]["revalidated"] is True


def test_check_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"family": "map", "method": "clear", "sut": "locked-map", "bounds": [3, 2, 2],
                               "trials_per_harness": 20, "time_per_harness": None}))
    code, out, _ = run(capsys, "check", "--config", str(cfg))
    assert code == 0 and "EXHAUSTED" in out
    cfg.write_text(json.dumps({"family": "map", "colour": "red"}))
    code, _, err = run(capsys, "check", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_check_missing_required(capsys):
    code, _, err = run(capsys, "check", "--family", "map")
    assert code == 2


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "atomcheck", "outcomes", SIZE], capture_output=True, text=True)
    assert p.returncode == 0 and "2, null, null" in p.stdout

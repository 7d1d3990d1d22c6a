import json
import subprocess
import sys

import pytest

from shufflelab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def doc_of(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_count(capsys):
    code, doc = doc_of(capsys, "count", "--d", "2", "--k", "4")
    assert code == 0 and doc["value"] == "14"
    assert doc["schema"] == "shufflelab.count.v1" and "version" in doc


def test_count_uses_cache_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SHUFFLELAB_CACHE_DIR", str(tmp_path))
    code, doc = doc_of(capsys, "count", "--d", "3", "--k", "20")
    assert code == 0 and (tmp_path / "catalan-d3.json").exists()


def test_span_check_empty(capsys):
    code, doc = doc_of(capsys, "span-check", "--d", "2", "--k", "2", "--p", "5")
    assert code == 0 and doc["status"] == "non-member"


def test_exit_codes(capsys):
    code, doc = doc_of(capsys, "enumerate", "--d", "2", "--k", "12", "--cap", "1000")
    assert code == 2 and doc["error"]["code"] == "cap-exceeded"
    code, doc = doc_of(capsys, "chain-kernel", "--d", "2", "--k", "1", "--p", "2")
    assert code == 1 and doc["error"]["code"] == "chain-undefined"
    code, doc = doc_of(capsys, "count", "--d", "1", "--k", "3")
    assert code == 1 and doc["error"]["code"] == "invalid-parameter"
    code, doc = doc_of(capsys, "no-such-command")
    assert code == 1 and doc["error"]["code"] == "usage-error"
    code, doc = doc_of(capsys, "invert", "--table", "/nonexistent/table.json", "--alpha", "3")
    assert code == 1 and doc["error"]["code"] == "io-error"


def test_determinism_and_workers(capsys):
    argv = ["perfect-stats", "--d", "3", "--p", "2", "--k", "30", "--trials", "100000", "--seed", "7"]
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv)
    _, c = run(capsys, *argv, "--workers", "2")
    assert a == b == c
    doc = json.loads(a)
    assert doc["seed"] == 7 and set(doc["rate"]) == {"num", "den"}


def test_csv(capsys):
    code, out = run(capsys, "enumerate", "--d", "2", "--k", "2", "--format", "csv")
    assert code == 0 and out.splitlines() == ["enc", "10100", "11000"]
    code, out = run(capsys, "width-fn", "--d", "2", "--k", "3", "--p", "2", "--format", "csv")
    assert out.splitlines()[0] == "enc,psi,phi,phi_star,perfect"


def test_out_file(capsys, tmp_path):
    path = tmp_path / "k.json"
    code, out = run(capsys, "span-dim", "--d", "2", "--k", "2", "--p", "1", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["rank"] == "2"


@pytest.mark.parametrize("argv", [
    ["sample", "--d", "3", "--k", "10", "--count", "3", "--seed", "1"],
    ["shuffle-classes", "--d", "2", "--k", "3", "--p", "2"],
    ["shuffle-classes", "--d", "2", "--p", "1", "--tree", "11000", "--vertex", "1.1"],
    ["width-fn", "--d", "2", "--p", "2", "--tree", "1110000"],
    ["norms", "--d", "2", "--k", "4", "--p", "2", "--which", "phi"],
    ["norms", "--d", "2", "--k", "50", "--p", "2", "--trials", "200", "--seed", "3"],
    ["invert", "--entries", "1:0,2=2", "--n", "2", "--d", "2", "--degree", "4"],
    ["invert-oracle", "--entries", "1:2=2", "--n", "1", "--d", "2", "--degree", "5", "--compare"],
    ["nilpotent-check", "--entries", "1:0,2=2", "--n", "2", "--d", "2", "--p", "2"],
    ["fern-sum", "--entries", "1:2=1", "--n", "1", "--d", "2", "--p", "1", "--i", "1", "--j", "1", "--alpha", "1"],
    ["shuffle-lemma", "--entries", "1:0,2=2", "--n", "2", "--d", "2", "--p", "2", "--k", "3", "--i", "1", "--alpha", "2,2"],
    ["bounds", "--entries", "1:2,0=1;1:1,1=1;1:0,2=1;2:2,0=1;2:1,1=1;2:0,2=1", "--n", "2", "--d", "2",
     "--i", "1", "--alpha", "2,1", "--deficit", "1/2"],
    ["chain-kernel", "--d", "2", "--k", "3", "--p", "2"],
    ["chain-stationary", "--d", "2", "--k", "3", "--p", "2"],
    ["chain-feasible", "--d", "2", "--k", "3", "--p", "2"],
    ["gw-sample", "--masses", "1:2=1/3", "--n", "1", "--count", "4", "--seed", "2"],
    ["gw-leaflaw", "--masses", "1:2=1/3", "--n", "1", "--alpha", "3", "--trials", "5000", "--seed", "2"],
])
def test_subcommands_emit_json(capsys, argv):
    code, doc = doc_of(capsys, *argv)
    assert code == 0, doc
    assert doc["schema"].startswith("shufflelab.") and doc["version"]


def test_exact_values_are_strings(capsys):
    _, doc = doc_of(capsys, "invert-oracle", "--entries", "1:2=2", "--n", "1", "--d", "2", "--degree", "5", "--compare")
    assert doc["agrees_with_tree_sum"] is True
    terms = doc["series"]["components"][0]["terms"]
    assert [t["num"] for t in terms] == ["1", "1", "2", "5", "14"]


def test_table_file(capsys, tmp_path):
    path = tmp_path / "H.json"
    path.write_text(json.dumps({"n": 1, "d": 2, "entries": [{"i": 1, "alpha": [2], "num": "2", "den": "1"}]}))
    _, doc = doc_of(capsys, "invert", "--table", str(path), "--alpha", "4")
    assert doc["g"] == {"num": "5", "den": "1"}


def test_verify_all_subset(capsys):
    code, out = run(capsys, "verify-all", "--only", "5,11")
    assert code == 0
    assert out.count("[PASS]") == 2


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "shufflelab.cli", "count", "--d", "3", "--k", "3"],
                         capture_output=True, text=True, check=True).stdout
    assert json.loads(out)["value"] == "12"

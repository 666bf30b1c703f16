import json
import shutil
import subprocess

import pytest

from cdsynth.cli import RunConfig, main

LL = ["--builtin", "linked_list"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_synth_linked_list(capsys, tmp_path):
    code, out, _ = run(capsys, "synth", *LL, "--out", str(tmp_path))
    assert code == 0
    assert "== ins: Success" in out and "== del: Success" in out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["table"] == {"member": "Unchanged", "ins": "Success", "del": "Success"}
    assert (tmp_path / "ins.block1.ir.json").exists() and (tmp_path / "ins.txt").exists()


def test_synth_is_byte_identical(capsys, tmp_path):
    run(capsys, "synth", *LL, "--out", str(tmp_path / "a"))
    run(capsys, "synth", *LL, "--out", str(tmp_path / "b"))
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_synth_internal_bst_is_rcu(capsys):
    code, out, _ = run(capsys, "synth", "--builtin", "internal_bst", "--format", "structured")
    assert code == 2
    assert json.loads(out)["table"]["del"] == "RCU"


def test_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.dsl"
    bad.write_text("edge(X,Y) :-\n")
    code, _, err = run(capsys, "synth", "--theory", str(bad), "--knowledge", str(bad))
    assert code == 3 and "parse error" in err


def test_needs_exactly_one_source():
    with pytest.raises(ValueError):
        RunConfig()
    with pytest.raises(ValueError):
        RunConfig(builtin="linked_list", theory="t.dsl", knowledge="k.dsl")


def test_delta(capsys):
    code, out, _ = run(capsys, "delta", *LL)
    assert code == 0
    assert "edge(h,n1)." in out and "key(n1,10)." in out


def test_delta_depth_zero(capsys):
    code, _, err = run(capsys, "delta", *LL, "--depth", "0")
    assert code == 4 and "del" in err


def test_tasks_insert(capsys):
    code, out, _ = run(capsys, "tasks", *LL, "--op", "ins", "--format", "structured")
    assert code == 0
    (blk,) = json.loads(out)["ops"]["ins"]["blocks"]
    assert blk["task1"]["unfalsify"] == ["suffix(y)"]
    assert blk["task3"]["valid"] == [[2, 1]]


def test_tasks_heuristic_override(capsys):
    code, out, _ = run(capsys, "tasks", *LL, "--op", "del", "--heuristic", "x",
                       "--format", "structured")
    t2 = json.loads(out)["ops"]["del"]["blocks"][0]["task2"]
    assert not t2["adequate"] and t2["witness"]


def test_tasks_horizon_zero(capsys):
    code, out, _ = run(capsys, "tasks", *LL, "--op", "ins", "--horizon", "0",
                       "--format", "structured")
    doc = json.loads(out)
    t1 = doc["ops"]["ins"]["blocks"][0]["task1"]
    assert doc["degenerate_horizon"] and t1["degenerate"]
    assert all(c["verdict"] == "unfalsifiable" for c in t1["conjuncts"])


def test_oracle_synthesized(capsys):
    code, out, _ = run(capsys, "oracle", *LL)
    assert code == 0 and "lemma2_ok: true" in out


def test_oracle_zero_threads(capsys):
    assert run(capsys, "oracle", *LL, "--threads", "0")[0] == 0


def test_oracle_broken_ir(capsys, tmp_path):
    run(capsys, "synth", *LL, "--out", str(tmp_path))
    ir = json.loads((tmp_path / "ins.block1.ir.json").read_text())
    ir["steps"].sort(key=lambda s: s["index"])
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(ir))
    code, out, _ = run(capsys, "oracle", *LL, "--ir", str(bad),
                       str(tmp_path / "del.block1.ir.json"), "--calls", "ins:15,del:10",
                       "--out", str(tmp_path / "o"))
    assert code == 5 and "invariant_ok: false" in out
    trace = json.loads((tmp_path / "o" / "counterexample.json").read_text())
    assert trace["violation"] == "invariant_ok" and trace["events"]


def test_oracle_missing_ir(capsys, tmp_path):
    code, _, err = run(capsys, "oracle", *LL, "--ir", str(tmp_path / "none.json"))
    assert code == 4 and err


@pytest.mark.skipif(shutil.which("cds") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["cds", "delta", *LL], capture_output=True, text=True)
    assert res.returncode == 0 and "edge(n1,t)." in res.stdout

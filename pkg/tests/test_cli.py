import io
import json

import pytest

from qpatrec import cli, recognizer
from qpatrec.instance import InstanceError, load_instance, parse_instance, synthesize
from qpatrec.recognizer import RecognitionEntry, RecognitionReport
from qpatrec.selftest import SuiteResult

from .conftest import WORKED_INSTANCE


@pytest.fixture
def instance_file(tmp_path):
    def write(data=WORKED_INSTANCE, name="inst.json"):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)

    return write


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, [json.loads(line) for line in out.splitlines()]


# -- instance loading ---------------------------------------------------------


def test_load_worked_instance(instance_file):
    inst = load_instance(instance_file())
    db = inst.database
    assert (db.N, db.n, db.s, db.v) == (8, 3, 3, 2)
    assert [e.feature for e in inst.codebook] == [5, 12]
    assert inst.alpha == 0


def test_digest_is_stable(instance_file):
    assert load_instance(instance_file()).digest() == parse_instance(WORKED_INSTANCE).digest()
    changed = dict(WORKED_INSTANCE, alpha=1)
    assert parse_instance(changed).digest() != parse_instance(WORKED_INSTANCE).digest()


@pytest.mark.parametrize(
    "patch, rule",
    [
        ({"alpha": 15}, "alpha < d_max"),
        ({"patterns": [{"payload": 99, "class": "target"}]}, "payload < 2^payload_bits"),
        ({"codebook": [{"feature": 15}]}, "codebook feature not sentinel"),
        ({"patterns": [{"payload": 1, "class": "virtual"}]}, "pattern class"),
        ({"patterns": []}, "nonempty patterns"),
        ({"mode": "psychic"}, "feature mode"),
        ({"feature_bits": 1}, "feature_bits >= 2"),
        ({"alpha": "zero"}, "integer field"),
    ],
)
def test_instance_rules(patch, rule):
    with pytest.raises(InstanceError) as info:
        parse_instance({**WORKED_INSTANCE, **patch})
    assert info.value.rule == rule


def test_missing_field():
    data = dict(WORKED_INSTANCE)
    del data["payload_bits"]
    with pytest.raises(InstanceError, match="payload_bits"):
        parse_instance(data)


def test_parse_error_has_line(instance_file):
    path = instance_file('{\n  "alpha": 0,\n  oops\n}')
    with pytest.raises(InstanceError, match=r":3:") as info:
        load_instance(path)
    assert info.value.rule == "valid JSON"


def test_overflow_diagnostic_names_field():
    data = {**WORKED_INSTANCE, "patterns": [{"payload": 3, "class": "target"}, {"payload": 99, "class": "spurious"}]}
    with pytest.raises(InstanceError, match=r"patterns\[1\]\.payload"):
        parse_instance(data)


def test_synthesize_has_exact_matches():
    inst = synthesize(32, 5)
    assert inst.database.N == 32 and inst.database.n == 5
    from qpatrec.pattern_model import marked_set

    assert marked_set(inst.database, 0, 0) == set(range(5))


# -- commands -----------------------------------------------------------------


def test_simulate_worked(capsys, instance_file):
    code, records = run(capsys, "simulate", "--instance", instance_file(), "--feature", "5", "--seed", "42")
    assert code == 0 and len(records) == 1
    rec = records[0]
    assert rec["found"] and rec["index"] == 0 and rec["verified"]
    for key in ("seed", "engine", "cap", "lambda", "instance_digest"):
        assert key in rec


def test_simulate_no_match(capsys, instance_file):
    code, [rec] = run(capsys, "simulate", "--instance", instance_file(), "--feature", "2", "--alpha", "0")
    assert code == 0
    assert not rec["found"] and rec["total_gpr"] <= 23 and rec["terminated_by"] == "query_cap"


def test_simulate_alpha_override(capsys, instance_file):
    code, [rec] = run(capsys, "simulate", "--instance", instance_file(), "--feature", "9", "--alpha", "4")
    assert code == 0 and rec["alpha"] == 4 and rec["index"] in (0, 1, 2)


def test_simulate_full_engine(capsys, instance_file):
    code, [rec] = run(capsys, "simulate", "--instance", instance_file(), "--feature", "5", "--engine", "full")
    assert code == 0 and rec["engine"] == "full" and rec["index"] == 0


def test_report_is_byte_identical(tmp_path, instance_file):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.jsonl"
        args = ["simulate", "--instance", instance_file(), "--feature", "5", "--seed", "7", "--report", str(path)]
        assert cli.main(args) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] and outs[0]


def test_recognize_worked(capsys, instance_file):
    code, records = run(capsys, "recognize", "--instance", instance_file())
    assert code == 0
    summary = records[-1]
    assert summary["kind"] == "recognition"
    assert summary["results"] == [{"feature": 5, "indices": [0]}, {"feature": 12, "indices": [2]}]
    assert summary["diff"] == []
    searches = [r for r in records if r["kind"] == "search"]
    assert sum(r["total_gpr"] for r in searches) == summary["total_gpr"]


def test_recognize_empty_codebook(capsys, instance_file):
    code, records = run(capsys, "recognize", "--instance", instance_file({**WORKED_INSTANCE, "codebook": []}))
    assert code == 0 and records[-1]["results"] == [] and records[-1]["total_gpr"] == 0


def test_recognize_mismatch_exits_2(capsys, instance_file, monkeypatch):
    real = recognizer.recognize_all

    def lossy(*args, **kwargs):
        report = real(*args, **kwargs)
        first = report.entries[0]
        return RecognitionReport((RecognitionEntry(first.feature, (), first.searches),) + report.entries[1:])

    monkeypatch.setattr(recognizer, "recognize_all", lossy)
    code, records = run(capsys, "recognize", "--instance", instance_file())
    assert code == 2
    assert records[-1]["diff"] == [{"feature": 5, "kind": "missing", "index": 0}]


def test_bad_instance_exits_1(caplog, instance_file):
    code = cli.main(["simulate", "--instance", instance_file({**WORKED_INSTANCE, "alpha": 15}), "--feature", "5"])
    assert code == 1
    assert "alpha < d_max" in caplog.text


def test_missing_instance_exits_1(capsys):
    assert cli.main(["recognize"]) == 1


def test_sentinel_feature_exits_1(capsys, instance_file):
    assert cli.main(["simulate", "--instance", instance_file(), "--feature", "14"]) == 1


def test_bad_lambda_exits_1(capsys, instance_file):
    assert cli.main(["simulate", "--instance", instance_file(), "--feature", "5", "--lambda", "1.5"]) == 1


def test_sweep_command(capsys):
    code, records = run(capsys, "sweep", "--n", "16,64", "--m", "0,1", "--trials", "50", "--seed", "3")
    assert code == 0
    assert [(r["N"], r["M"]) for r in records] == [(16, 0), (16, 1), (64, 0), (64, 1)]
    zero = records[2]
    assert zero["found_rate"] == 0 and zero["mean_gpr"] == zero["cap"] == 64 and zero["ratio"] is None
    assert records[3]["found_rate"] == 1.0


def test_sweep_rejects_full_engine(capsys):
    assert cli.main(["sweep", "--n", "16", "--m", "1", "--trials", "5", "--engine", "full"]) == 1


def test_selftest_exit_codes(capsys, monkeypatch):
    ok = [SuiteResult("x", True, 0.0, 1e-12, 0.0)]
    monkeypatch.setattr(cli, "run_selftest", lambda seed: ok)
    assert cli.main(["selftest"]) == 0
    monkeypatch.setattr(cli, "run_selftest", lambda seed: [SuiteResult("x", False, 1.0, 1e-12, 0.0)])
    assert cli.main(["selftest"]) == 3


def test_output_to_stream_helper():
    buf = io.StringIO()
    from qpatrec.reports import write_records

    write_records([{"b": 1, "a": 2}], buf)
    assert buf.getvalue() == '{"a":2,"b":1}\n'

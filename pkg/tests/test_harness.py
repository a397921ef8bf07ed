"""Scenes, reports, the command line, figures and random batches."""
import json
import pickle

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whitney import cli
from whitney.curve import ExprCurve
from whitney.errors import SceneError
from whitney.harness import batch, minimize, scan_T
from whitney.plotting import render
from whitney.report import VerificationReport, read_reports
from whitney.scene import Scene, golden_names, golden_scene, load_scene, random_scene
from whitney.surface import PuncturedPlane


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, [json.loads(line) for line in out.out.splitlines() if line.startswith("{")], out.err


# scenes

@pytest.mark.parametrize("name", golden_names())
def test_golden_scene_round_trip(name):
    sc = golden_scene(name)
    assert Scene.loads(sc.dumps()) == sc


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 5), st.booleans())
def test_random_scene_round_trip(seed, attempt, based):
    sc = random_scene(seed, attempt, based=based)
    again = Scene.loads(sc.dumps())
    assert again == sc
    assert again.dumps() == sc.dumps()
    assert random_scene(seed, attempt, based=based) == sc
    # worker processes receive scenes by pickling
    assert pickle.loads(pickle.dumps(sc)) == sc


def test_unknown_scene_name(tmp_path):
    with pytest.raises(SceneError):
        golden_scene("no_such_scene")
    p = tmp_path / "mine.json"
    p.write_text(golden_scene("circle").with_(name="").dumps())
    assert load_scene(p).name == "mine"


# reports

def test_loaded_report_recomputes_equality():
    rep = cli.VerificationReport("verify-based", "x", 1.0, "1*g1", "1*g1 - 1*g2", True, "0")
    back = VerificationReport.from_json(rep.to_json())
    assert not back.equal and back.residual == "1*g2"
    fixed = VerificationReport.from_json(rep.to_json().replace('"equal":true', '"equal":false')
                                         .replace('"rhs":"1*g1 - 1*g2"', '"rhs":"1*g1"'))
    assert fixed.equal
    errored = VerificationReport.from_json(
        VerificationReport("pushoff", "x", None, "0", "0", True, error="boom").to_json())
    assert not errored.equal
    assert len(read_reports([rep.to_json(), "", rep.to_json()])) == 2


# command line

def test_cli_verify_and_exit_codes(capsys, tmp_path):
    code, lines, _ = run(capsys, "verify-based", "circle")
    assert code == 0 and len(lines) == 2 and all(r["equal"] for r in lines)
    code, lines, _ = run(capsys, "pushoff", "figure_eight_two_punctures", "--expect", "true")
    assert code == 0 and lines[0]["extra"]["obstructed"] is True
    code, _, _ = run(capsys, "pushoff", "figure_eight_two_punctures", "--expect", "false")
    assert code == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"curve":')
    code, _, err = run(capsys, "verify-based", str(bad))
    assert code == 2 and "invalid JSON" in err


def test_cli_reports_nongeneric_input_with_a_hint(capsys, monkeypatch):
    monkeypatch.setenv("WHITNEY_TOL_ANGLE", "1.4")
    code, lines, _ = run(capsys, "verify-based", "radial_double_loop", "--no-nudge", "--t", "1")
    assert code == 1
    (rep,) = lines
    assert rep["error"].startswith("tangential-crossing") and "try a slightly different T" in rep["error"]
    assert rep["genericity"]["violations"][0]["kind"] == "tangential-crossing"


def test_cli_epsilon_and_classical(capsys, tmp_path):
    out = tmp_path / "r.jsonl"
    code, _, _ = run(capsys, "verify-based", "radial_double_loop", "--epsilon", "0.01", "--out", str(out))
    assert code == 0
    reps = read_reports(out.read_text().splitlines())
    assert [r.kind for r in reps][-1].startswith("epsilon") and all(r.ok for r in reps)
    code, lines, _ = run(capsys, "classical", "limacon_inner_base")
    assert code == 0 and lines[0]["terms"]["w"] == 2


def test_cli_scan_reports_rows_and_limit(capsys):
    code, lines, _ = run(capsys, "scan-t", "radial_double_loop", "--t", "0.1,1,5")
    assert code == 0
    assert lines[-1]["extra"]["role"] == "limit" and lines[-1]["extra"]["stabilized"]
    assert all(r["extra"]["role"] == "row" for r in lines[:-1])


def test_scan_flags_the_circular_flow():
    res = scan_T(golden_scene("circular_flow"))
    assert not res.stabilized and res.note


def test_cli_figures_carry_captions(capsys, tmp_path):
    code, lines, _ = run(capsys, "verify-based", "radial_double_loop", "--t", "3", "--figures", str(tmp_path))
    assert code == 0
    svg = open(lines[0]["extra"]["figure"]).read()
    assert "&lt;gamma&gt; = -1*g1 + 1*g1^2" in svg


def test_parse_seeds():
    assert cli.parse_seeds("1..4,9") == [1, 2, 3, 4, 9]
    assert cli.parse_seeds("7") == [7]
    with pytest.raises(Exception):
        cli.parse_seeds("a..b")


# figures

def test_render_is_deterministic(tmp_path):
    sc = golden_scene("radial_double_loop")
    a, b = render(sc, tmp_path / "a.svg", 3.0), render(sc, tmp_path / "b.svg", 3.0)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    for label in ("d1", "d2", "a1", "b1.1"):
        assert f">{label}" in text or f"{label} " in text, label


def test_render_circle_has_one_curve(tmp_path):
    text = render(golden_scene("circle"), tmp_path / "c.svg").read_text()
    assert text.count('id="curve-0"') == 1


# batches

def test_minimize_shrinks_while_the_failure_persists():
    sc = Scene(PuncturedPlane(((0.0, 0.0), (2.0, 0.0), (0.0, 2.0)), (0.5, 0.0)),
               ExprCurve("0.5123*cos(2*pi*t) + 0.1*cos(4*pi*t)", "0.5123*sin(2*pi*t) + 0.1*sin(4*pi*t)"),
               golden_scene("radial_double_loop").field, T=(1.0,), name="toy")
    small = minimize(sc, still_fails=lambda s: len(s.surface.punctures) >= 1, rounds=10)
    assert len(small.surface.punctures) == 1
    assert small.name == "toy-min"
    assert minimize(sc, still_fails=lambda s: False).with_(name="toy") == sc


def test_batch_is_the_same_in_parallel():
    seeds = [3, 4, 5, 6]
    one = [[r.to_json() for r in e.reports] for e in batch(seeds, jobs=1)]
    two = [[r.to_json() for r in e.reports] for e in batch(seeds, jobs=2)]
    strip = lambda rows: [[json.loads(x) | {"seconds": 0} for x in r] for r in rows]  # noqa: E731
    assert strip(one) == strip(two)
    assert all(json.loads(x)["equal"] for r in one for x in r)


def test_batch_writes_minimized_failures(capsys, tmp_path, monkeypatch):
    from whitney import harness

    def always_wrong(seed, **kw):
        sc = random_scene(seed)
        rep = VerificationReport("verify-based", sc.name, 1.0, "1*g1", "0", False, "1*g1")
        return sc, [rep], 1

    monkeypatch.setattr(harness, "draw_generic", always_wrong)
    monkeypatch.setattr(harness, "minimize", lambda sc: sc.with_(name=sc.name + "-min"))
    out = tmp_path / "fail.jsonl"
    code, lines, _ = run(capsys, "batch", "--seeds", "1,2", "--failures", str(out))
    assert code == 1 and len(lines) == 2
    saved = [Scene.from_dict(json.loads(line)) for line in out.read_text().splitlines()]
    assert [s.name for s in saved] == ["random-1-0-min", "random-2-0-min"]

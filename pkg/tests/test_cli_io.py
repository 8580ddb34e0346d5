import json
import math
import xml.etree.ElementTree as ET

import pytest
import yaml

from itdefense.cli import main
from itdefense.engine import run
from itdefense.io import (
    CSV_HEADER,
    events_jsonl,
    parse_events_jsonl,
    parse_trajectories_csv,
    summary,
    trajectories_csv,
)
from itdefense.render import render_svg
from itdefense.scenario import with_engagement, write_scenario
from tests.helpers import base_doc, deep_update, make_cfg

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def short_result():
    cfg = with_engagement(make_cfg(), max_time=3.0)
    return cfg, run(cfg)


@pytest.fixture
def scenario_file(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(yaml.safe_dump(deep_update(base_doc(), {"engagement": {"max_time": 2.0}})))
    return p


def test_simulate_manifest_and_determinism(tmp_path, scenario_file, capsys):
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        assert main(["simulate", "--scenario", str(scenario_file), "--out", str(out)]) == 0
        assert sorted(p.name for p in out.iterdir()) == ["events.jsonl", "plot.svg", "summary.json",
                                                         "trajectories.csv"]
        outs.append(out)
    for name in ("trajectories.csv", "events.jsonl", "summary.json", "plot.svg"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    assert "outcome:" in capsys.readouterr().out


def test_simulate_overrides(tmp_path, scenario_file):
    out = tmp_path / "o"
    assert main(["simulate", "--scenario", str(scenario_file), "--out", str(out),
                 "--max-time", "1.0", "--master-step", "0.1", "--toggle-ballistic-depletion", "--no-svg"]) == 0
    rows = parse_trajectories_csv((out / "trajectories.csv").read_text())
    assert max(r.t for r in rows) == pytest.approx(1.0)
    assert not (out / "plot.svg").exists()


def test_simulate_bad_override(tmp_path, scenario_file, capsys):
    assert main(["simulate", "--scenario", str(scenario_file), "--out", str(tmp_path / "o"),
                 "--master-step", "0.3"]) == 2
    assert "grid_alignment" in capsys.readouterr().err


def test_simulate_bad_path(tmp_path, capsys):
    assert main(["simulate", "--scenario", str(tmp_path / "missing.yaml"), "--out", str(tmp_path / "o")]) == 2
    assert "not found" in capsys.readouterr().err


def test_invalid_config_lists_codes(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(yaml.safe_dump(deep_update(base_doc(), {"fields": {"psi": 1.5}, "it": {"limits": {"v_min": 0.0}}})))
    assert main(["validate", "--scenario", str(p)]) == 2
    err = capsys.readouterr().err
    assert "psi_range" in err and "it_forward_motion" in err


def test_validate_ok(scenario_file, capsys):
    assert main(["validate", "--scenario", str(scenario_file)]) == 0
    assert capsys.readouterr().out.startswith("ok")


def check(capsys, *args):
    flags = dict(zip(("--it-x", "--it-y", "--ei-x", "--ei-y", "--theta-atk", "--v-atk", "--v-itc"), args))
    argv = ["check-intercept"] + [x for kv in flags.items() for x in (kv[0], str(kv[1]))]
    code = main(argv)
    return code, capsys.readouterr()


def test_check_intercept_head_on(capsys):
    code, out = check(capsys, 1, 0, 0, 0, math.pi, 1, 2)
    assert code == 0
    rec = json.loads(out.out)
    assert rec["status"] == "feasible"
    assert rec["t_itc"] == pytest.approx(1 / 3)
    assert rec["theta_itc"] == pytest.approx(0.0, abs=1e-15)
    assert len(out.out.strip().splitlines()) == 1


def test_check_intercept_gamma(capsys):
    code, out = check(capsys, 1, 0, 0, 0, math.pi / 2, 2, 1)
    rec = json.loads(out.out)
    assert code == 0
    assert (rec["status"], rec["reason"]) == ("infeasible", "gamma")
    assert rec["gamma"] == pytest.approx(2.0)


def test_check_intercept_coincident(capsys):
    code, out = check(capsys, 1, 1, 1, 1, 0.0, 1, 1)
    assert code == 2


def test_check_intercept_missing_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check-intercept", "--it-x", "1"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_logs_round_trip(short_result):
    cfg, res = short_result
    text = trajectories_csv(res.trajectory)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    back = parse_trajectories_csv(text)
    assert len(back) == len(res.trajectory)
    for a, b in zip(res.trajectory, back):
        assert (a.t, a.agent, a.x, a.y, a.v, a.theta, a.e, a.mode) == (b.t, b.agent, b.x, b.y, b.v, b.theta, b.e,
                                                                       b.mode)
    evs = parse_events_jsonl(events_jsonl(res.events))
    assert evs == res.events
    first = json.loads(events_jsonl(res.events).splitlines()[0])
    assert list(first) == ["t", "kind", "agent", "x", "y"]


def test_log_completeness(short_result):
    cfg, res = short_result
    dt = cfg.engagement.master_step
    n_steps = round(res.outcome.time / dt)
    for a in res.agents:
        ts = [s.t for s in res.agent_samples(a)]
        assert len(ts) == n_steps + 1
        assert ts == [k * dt for k in range(n_steps + 1)]
    counts = summary(res, cfg)["event_counts"]
    assert sum(counts.values()) == len(res.events)


def test_svg_structure(short_result):
    cfg, res = short_result
    root = ET.fromstring(render_svg(res, cfg))
    paths = root.findall(f"{SVG}path")
    assert sorted(p.get("data-agent") for p in paths) == sorted(res.agents)
    classes = [c.get("class") for c in root.findall(f"{SVG}circle")]
    for cls in ("dz", "hva", "patrol", "defense", "iz"):
        assert cls in classes


def test_svg_no_eis():
    cfg = make_cfg({"engagement": {"max_time": 1.0}}, units=[])
    res = run(cfg)
    root = ET.fromstring(render_svg(res, cfg))
    paths = root.findall(f"{SVG}path")
    assert [p.get("data-agent") for p in paths] == ["it"]


def test_svg_radius_scales_with_r_dz():
    radii = []
    for r_dz in (50.0, 100.0, 200.0):
        cfg = make_cfg({"engagement": {"max_time": 0.5, "r_dz": r_dz}}, units=[])
        res = run(cfg)
        root = ET.fromstring(render_svg(res, cfg, scale=0.25))
        (dz,) = [c for c in root.findall(f"{SVG}circle") if c.get("class") == "dz"]
        radii.append(float(dz.get("r")))
    assert radii == [pytest.approx(0.25 * r) for r in (50.0, 100.0, 200.0)]


def test_written_scenario_is_loadable(tmp_path, canonical_cfg, capsys):
    p = tmp_path / "w.yaml"
    p.write_text(write_scenario(canonical_cfg))
    assert main(["validate", "--scenario", str(p)]) == 0

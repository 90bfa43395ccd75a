import io
import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactsynth.analysis import spectral_centroid
from contactsynth.errors import PipelineError, ScenarioError
from contactsynth.render import write_wav
from contactsynth.scenario import (ABLATIONS, format_scenario, parse_scenario,
                                   parse_scenario_text, run_scenario, with_overrides)

SCRAPE = """\
# reference scrape
[scenario]
event = scrape
seed = 3

[surface]
nx = 2048
ny = 64

[impulse_responses]
surface = a.mir @ 0.0, b.mir @ 1.0
object = obj.mir
eta = 0.5

[motion]
kind = back_and_forth
duration = 0.3

[render]
t0 = 0.2
"""

ROLL = """\
[scenario]
event = roll
seed = 5

[surface]
nx = 2048
ny = 64

[impulse_responses]
surface = a.mir @ 0.0, b.mir @ 1.0
object = obj.mir
eta = 0.3

[motion]
duration = 0.3

[roll]
radius = 0.02
offset = 0.0005
incline = 0.03
initial_omega = 25

[render]
t0 = 0.2
"""


def write(dirpath, text, name="s.scn"):
    p = dirpath / name
    p.write_text(text)
    return p


def render_bytes(s, tmp_path, name="out.wav"):
    buf, _ = run_scenario(s)
    write_wav(buf, tmp_path / name)
    return (tmp_path / name).read_bytes()


def test_minimal_scenario_defaults(mir_dir):
    s = parse_scenario(write(mir_dir, "[scenario]\nevent = scrape\n[impulse_responses]\n"
                                      "surface = a.mir\n[motion]\nkind = circular\n"))
    assert (s.scrape.beta1, s.scrape.beta2) == (0.05, 1.0)
    assert (s.nonlinearity.zeta, s.nonlinearity.alpha_max, s.nonlinearity.alpha_min) == \
        (0.95, 0.05, 0.01)
    assert s.roll_contact.dissipation == 0.1
    assert s.render.sample_rate == 44100
    assert s.anchors == ((0.0, mir_dir / "a.mir"),)
    assert s.seed == 0 and s.ablations == frozenset()


@pytest.mark.parametrize("text,key,line", [
    ("[scenario]\nevent = scrape\nevent = roll\n", "event", 3),
    ("[scenario]\nevent = scrape\ncolour = red\n", "colour", 3),
    ("[scenario]\nevent = scrape\nablations = no_gravity\n", "ablations", 3),
    ("[scenario]\nevent = slide\n", "event", 2),
    ("[scenario]\nseed = x\n", "seed", 2),
    ("[physics]\n", "physics", 1),
    ("[scenario]\n[scenario]\n", "scenario", 2),
    ("event = scrape\n", "event", 1),
])
def test_parse_errors_name_key_and_line(text, key, line):
    with pytest.raises(ScenarioError) as info:
        parse_scenario_text(text, check_files=False)
    assert info.value.key == key and info.value.line == line
    assert repr(key) in str(info.value) and f"line {line}" in str(info.value)


def test_duplicate_key_message():
    with pytest.raises(ScenarioError, match="duplicate.*'eta'"):
        parse_scenario_text("[impulse_responses]\neta = 1\neta = 2\n", check_files=False)


def test_unknown_ablation_is_closed_set():
    with pytest.raises(ScenarioError, match="no_gravity"):
        parse_scenario_text("[scenario]\nevent = scrape\nablations = no_gravity\n",
                            check_files=False)
    assert ABLATIONS == {"only_surface_ir", "no_normal_force_variation", "no_nonlinearity",
                         "constant_ir", "only_ball_ir"}


@pytest.mark.parametrize("text,key", [
    ("[motion]\nkind = circular\n", "event"),
    ("[scenario]\nevent = scrape\n[motion]\nkind = circular\n", "surface"),
    ("[scenario]\nevent = scrape\n[impulse_responses]\nsurface = a.mir\n", "kind"),
])
def test_missing_required_keys(text, key):
    with pytest.raises(ScenarioError) as info:
        parse_scenario_text(text, check_files=False)
    assert info.value.key == key


def test_missing_file_is_reported(mir_dir):
    text = SCRAPE.replace("object = obj.mir", "object = nowhere.mir")
    with pytest.raises(ScenarioError) as info:
        parse_scenario(write(mir_dir, text))
    assert info.value.key == "object" and info.value.line == 12


@pytest.mark.parametrize("old,new,key", [
    ("eta = 0.5", "eta = -1", "eta"),
    ("surface = a.mir @ 0.0, b.mir @ 1.0", "surface = a.mir @ 0.5, b.mir @ 0.2", "surface"),
    ("duration = 0.3", "duration = 0", "duration"),
    ("kind = back_and_forth", "kind = file", "kind"),
    ("t0 = 0.2", "t0 = nan", "t0"),
])
def test_invalid_values(mir_dir, old, new, key):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(write(mir_dir, SCRAPE.replace(old, new)))
    assert info.value.key == key


def test_comments_and_case(mir_dir):
    text = SCRAPE.replace("seed = 3", "SEED = 3   # trailing comment").replace(
        "[render]", "; note\n[RENDER]")
    assert parse_scenario(write(mir_dir, text)).seed == 3


def test_round_trip(mir_dir):
    s = parse_scenario(write(mir_dir, SCRAPE))
    s = with_overrides(s, ablations=["constant_ir", "no_nonlinearity"])
    text = format_scenario(s)
    again = parse_scenario_text(text)
    assert again == s
    assert format_scenario(again) == text


def test_round_trip_roll_and_file_motion(mir_dir):
    (mir_dir / "m.csv").write_text("0,0,0\n0.1,0.01,0\n")
    s = parse_scenario(write(mir_dir, ROLL))
    assert parse_scenario_text(format_scenario(s)) == s
    t = parse_scenario(write(mir_dir, SCRAPE.replace(
        "kind = back_and_forth", "kind = file\ntrajectory = m.csv\nnormal_force = 1.2")))
    assert parse_scenario_text(format_scenario(t)) == t


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), eta=st.floats(0, 10), speed=st.floats(0.1, 3),
       zeta=st.floats(0.1, 3), block=st.integers(1, 512), flags=st.sets(st.sampled_from(
           sorted(ABLATIONS))))
def test_round_trip_property(seed, eta, speed, zeta, block, flags):
    text = (f"[scenario]\nevent = scrape\nseed = {seed}\n"
            + (f"ablations = {', '.join(sorted(flags))}\n" if flags else "")
            + f"[impulse_responses]\nsurface = /x/a.mir @ 0.0, /x/b.mir @ 1.0\neta = {eta!r}\n"
            f"[motion]\nkind = circular\nspeed_scale = {speed!r}\n"
            f"[nonlinearity]\nzeta = {zeta!r}\n[render]\nmorph_block = {block}\n")
    s = parse_scenario_text(text, check_files=False)
    assert parse_scenario_text(format_scenario(s), check_files=False) == s


def test_overrides():
    s = parse_scenario_text("[scenario]\nevent = scrape\nseed = 1\n[impulse_responses]\n"
                            "surface = a.mir\n[motion]\nkind = circular\n", check_files=False)
    t = with_overrides(s, seed=9, ablations=["constant_ir"])
    assert t.seed == 9 and t.ablations == {"constant_ir"}
    assert with_overrides(s).seed == 1
    with pytest.raises(ScenarioError):
        with_overrides(s, ablations=["no_gravity"])


def test_determinism(mir_dir, tmp_path):
    s = parse_scenario(write(mir_dir, SCRAPE))
    assert render_bytes(s, tmp_path, "a.wav") == render_bytes(s, tmp_path, "b.wav")


def test_seed_changes_output(mir_dir):
    s = parse_scenario(write(mir_dir, SCRAPE))
    a, _ = run_scenario(s)
    b, _ = run_scenario(with_overrides(s, seed=4))
    assert not np.array_equal(a.samples, b.samples)


def test_report(mir_dir):
    s = parse_scenario(write(mir_dir, SCRAPE))
    buf, report = run_scenario(s)
    json.dumps(report)
    assert report["samples"] == len(buf) == round(0.3 * 44100) + round(0.2 * 44100)
    assert report["eta_effective"] == 0.5 and report["anchor_count"] == 2
    assert report["scenario"]["nonlinearity"]["zeta"] == 0.95
    assert report["normalization_scale"] > 0
    assert abs(np.max(np.abs(buf.samples)) - 0.5) < 1e-15
    n_min, n_max = report["normal_force_bounds"]
    assert 0 < n_min < n_max


def test_only_surface_ir_noop_when_eta_zero(mir_dir, tmp_path):
    s = parse_scenario(write(mir_dir, SCRAPE.replace("eta = 0.5", "eta = 0")))
    t = with_overrides(s, ablations=["only_surface_ir"])
    assert render_bytes(s, tmp_path, "a.wav") == render_bytes(t, tmp_path, "b.wav")


def test_constant_ir_noop_with_single_anchor(mir_dir):
    s = parse_scenario(write(mir_dir, SCRAPE.replace(", b.mir @ 1.0", "")))
    a, _ = run_scenario(s)
    b, _ = run_scenario(with_overrides(s, ablations=["constant_ir"]))
    np.testing.assert_array_equal(a.samples, b.samples)


@pytest.mark.parametrize("text", [SCRAPE, ROLL], ids=["scrape", "roll"])
@pytest.mark.parametrize("flag", sorted(ABLATIONS))
def test_every_ablation_changes_output(mir_dir, text, flag):
    s = parse_scenario(write(mir_dir, text))
    full, _ = run_scenario(s)
    ablated, report = run_scenario(with_overrides(s, ablations=[flag]))
    diff = np.linalg.norm(ablated.samples - full.samples) / np.linalg.norm(full.samples)
    assert diff > 1e-6
    if flag in ("only_surface_ir", "only_ball_ir"):
        assert report["eta_effective"] == 0.0
    if flag in ("constant_ir", "only_ball_ir"):
        assert report["anchor_count"] == 1


def test_no_nonlinearity_is_rougher(mir_dir):
    s = parse_scenario(write(mir_dir, SCRAPE))
    full, _ = run_scenario(s)
    raw, _ = run_scenario(with_overrides(s, ablations=["no_nonlinearity"]))
    assert np.linalg.norm(raw.samples - full.samples) / np.linalg.norm(full.samples) > 0.01
    assert spectral_centroid(raw.samples, 44100) > spectral_centroid(full.samples, 44100)


def test_only_ball_ir_needs_object(mir_dir):
    s = parse_scenario(write(mir_dir, SCRAPE.replace("object = obj.mir\n", "")))
    with pytest.raises(PipelineError) as info:
        run_scenario(with_overrides(s, ablations=["only_ball_ir"]))
    assert info.value.stage == "modal"


def test_pipeline_stage_annotation(mir_dir):
    s = parse_scenario(write(mir_dir, SCRAPE.replace("duration = 0.3", "duration = 0.3\n"
                                                      "speed_scale = 40")))
    with pytest.raises(PipelineError) as info:
        run_scenario(s)
    assert info.value.stage == "kinematics"


def test_surface_file(mir_dir):
    from contactsynth.surface import generate_fractal_surface, save_depth_map
    save_depth_map(generate_fractal_surface(512, 16, seed=1), mir_dir / "s.sdm")
    s = parse_scenario(write(mir_dir, SCRAPE.replace("nx = 2048", "file = s.sdm")))
    buf, _ = run_scenario(s)
    assert np.all(np.isfinite(buf.samples))
    (mir_dir / "s.sdm").write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(PipelineError) as info:
        run_scenario(s)
    assert info.value.stage == "surface"


def test_file_motion(mir_dir):
    (mir_dir / "m.csv").write_text("# t,x,y\n0,0,0\n0.1,0.01,0.002\n0.2,0.0,0.004\n")
    s = parse_scenario(write(mir_dir, SCRAPE.replace(
        "kind = back_and_forth", "kind = file\ntrajectory = m.csv")))
    buf, report = run_scenario(s)
    assert len(buf) == round(0.2 * 44100) + 1 + round(0.2 * 44100)
    assert report["normal_force_bounds"][0] < report["normal_force_bounds"][1]
    t = replace(s, motion=replace(s.motion, normal_force=1.5))
    _, report = run_scenario(t)
    assert report["normal_force_bounds"] == [1.5, 1.5]


def test_bundled_scenarios_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "scenarios"
    files = sorted(root.glob("*.scn"))
    assert len([f for f in files if f.name.startswith("scrape_")]) >= 30
    for f in files:
        s = parse_scenario(f)
        assert parse_scenario_text(format_scenario(s)) == s

"""Declarative render scenarios: parsing, serialization and execution.

A scenario is a line-oriented text file::

    # comment
    [scenario]
    event = scrape
    seed = 7

    [impulse_responses]
    surface = ir/basswood_a.mir @ 0.0, ir/basswood_b.mir @ 1.0
    object = ir/pvc.mir
    eta = 0.4

    [motion]
    kind = back_and_forth

Unknown sections or keys, duplicates and malformed values are errors that
name the key and line. See ``docs/scenario-format.md`` for every key.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import contact, force, kinematics, modal, render, surface
from .errors import ContactSynthError, ParameterError, PipelineError, ScenarioError

ABLATIONS = frozenset({
    "only_surface_ir",
    "no_normal_force_variation",
    "no_nonlinearity",
    "constant_ir",
    "only_ball_ir",
})

EVENTS = ("scrape", "roll")
MOTION_FILE = "file"


@dataclass(frozen=True)
class SurfaceSpec:
    """Either an SDM1 file or the parameters of a generated fractal surface."""

    file: Path | None = None
    nx: int = 4096
    ny: int = 256
    spacing: float = surface.DEFAULT_SPACING
    spectral_exponent: float = 2.0
    rms_height: float = 1e-5

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ParameterError("generated surfaces need nx, ny >= 4")
        if not (self.spacing > 0 and self.rms_height > 0):
            raise ParameterError("spacing and rms_height must be positive")
        if not 0 <= self.spectral_exponent <= 4:
            raise ParameterError("spectral_exponent must lie in [0, 4]")


@dataclass(frozen=True)
class MotionSpec:
    kind: str = kinematics.MotionKind.BACK_AND_FORTH.value
    trajectory: Path | None = None
    speed_scale: float = 1.0
    duration: float = 2.0
    extent: float = 0.1
    normal_force: float | None = None

    def __post_init__(self):
        if not (self.speed_scale > 0 and self.duration > 0 and self.extent > 0):
            raise ParameterError("speed_scale, duration and extent must be positive")
        if self.normal_force is not None and not self.normal_force > 0:
            raise ParameterError("normal_force must be positive")
        if self.kind == MOTION_FILE and self.trajectory is None:
            raise ParameterError("motion kind 'file' needs a trajectory")
        if self.kind != MOTION_FILE and self.trajectory is not None:
            raise ParameterError("trajectory is only valid with kind = file")


@dataclass(frozen=True)
class RollSpec:
    radius: float = 0.02
    offset: float = 5e-4
    mass: float = 0.05
    incline: float = 0.02
    initial_omega: float = 20.0

    def __post_init__(self):
        if not 0 <= self.offset < self.radius:
            raise ParameterError("need 0 <= offset < radius")
        if not self.mass > 0:
            raise ParameterError("mass must be positive")


@dataclass(frozen=True)
class RenderScenario:
    event: str
    anchors: tuple
    seed: int = 0
    ablations: frozenset = frozenset()
    surface: SurfaceSpec = SurfaceSpec()
    object_ir: Path | None = None
    eta: float = 0.5
    motion: MotionSpec = MotionSpec()
    shm: kinematics.ShmParams = kinematics.ShmParams()
    scrape: force.ScrapeParams = force.ScrapeParams()
    roll: RollSpec = RollSpec()
    roll_contact: force.RollParams = force.RollParams()
    nonlinearity: contact.NonlinearityParams = contact.NonlinearityParams()
    render: render.RenderSettings = render.RenderSettings()
    source: Path | None = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# value converters


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"{text!r} is not finite")
    return v


def _int(text):
    return int(text)


def _optional_float(text):
    return None if text.lower() == "none" else _float(text)


def _path(text, base):
    p = Path(text).expanduser()
    return p if p.is_absolute() else (base / p)


def _anchors(text, base):
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("needs at least one 'file @ position' entry")
    out = []
    for item in items:
        if "@" in item:
            name, pos = item.rsplit("@", 1)
            pos = _float(pos.strip())
        elif len(items) == 1:
            name, pos = item, 0.0
        else:
            raise ValueError(f"entry {item!r} lacks '@ position'")
        out.append((pos, _path(name.strip(), base)))
    return tuple(out)


def _ablations(text):
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [n for n in names if n not in ABLATIONS]
    if bad:
        raise ValueError(f"unknown ablation {bad[0]!r}; choose from {sorted(ABLATIONS)}")
    return frozenset(names)


def _event(text):
    if text not in EVENTS:
        raise ValueError(f"event must be one of {EVENTS}")
    return text


def _kind(text):
    valid = [k.value for k in kinematics.MotionKind] + [MOTION_FILE]
    if text not in valid:
        raise ValueError(f"kind must be one of {valid}")
    return text


# section -> key -> (attribute, converter, needs base dir)
SCHEMA = {
    "scenario": {
        "event": ("event", _event, False),
        "seed": ("seed", _int, False),
        "ablations": ("ablations", _ablations, False),
    },
    "surface": {
        "file": ("file", _path, True),
        "nx": ("nx", _int, False),
        "ny": ("ny", _int, False),
        "spacing": ("spacing", _float, False),
        "spectral_exponent": ("spectral_exponent", _float, False),
        "rms_height": ("rms_height", _float, False),
    },
    "impulse_responses": {
        "surface": ("anchors", _anchors, True),
        "object": ("object_ir", _path, True),
        "eta": ("eta", _float, False),
    },
    "motion": {
        "kind": ("kind", _kind, False),
        "trajectory": ("trajectory", _path, True),
        "speed_scale": ("speed_scale", _float, False),
        "duration": ("duration", _float, False),
        "extent": ("extent", _float, False),
        "normal_force": ("normal_force", _optional_float, False),
    },
    "shm": {
        "mass": ("m", _float, False),
        "gravity": ("g", _float, False),
        "omega": ("omega", _float, False),
        "amplitude": ("L", _float, False),
        "angle": ("theta", _float, False),
        "friction": ("mu", _float, False),
    },
    "scraper": {
        "mass": ("m_p", _float, False),
        "beta1": ("beta1", _float, False),
        "beta2": ("beta2", _float, False),
    },
    "roll": {
        "radius": ("radius", _float, False),
        "offset": ("offset", _float, False),
        "mass": ("mass", _float, False),
        "incline": ("incline", _float, False),
        "initial_omega": ("initial_omega", _float, False),
        "spring": ("k", _float, False),
        "dissipation": ("dissipation", _float, False),
        "static_offset": ("static_offset", _optional_float, False),
    },
    "nonlinearity": {
        "zeta": ("zeta", _float, False),
        "alpha_max": ("alpha_max", _float, False),
        "alpha_min": ("alpha_min", _float, False),
        "smoothing_gain": ("smoothing_gain", _float, False),
    },
    "render": {
        "sample_rate": ("sample_rate", _int, False),
        "morph_block": ("morph_block", _int, False),
        "t0": ("t0", _float, False),
        "output_peak": ("output_peak", _float, False),
    },
}

_ROLL_CONTACT_KEYS = {"spring", "dissipation", "static_offset"}


def _tokenize(text):
    """Yield ``(section, key, value, line)`` with duplicate detection."""
    section = None
    seen_sections = set()
    seen_keys = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if " #" in line:
            line = line.split(" #", 1)[0].rstrip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError("malformed section header", line=lineno)
            section = line[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ScenarioError("unknown section", key=section, line=lineno)
            if section in seen_sections:
                raise ScenarioError("duplicate section", key=section, line=lineno)
            seen_sections.add(section)
            continue
        if "=" not in line:
            raise ScenarioError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if section is None:
            raise ScenarioError("key outside any section", key=key, line=lineno)
        if key not in SCHEMA[section]:
            raise ScenarioError(f"unknown key in [{section}]", key=key, line=lineno)
        if (section, key) in seen_keys:
            raise ScenarioError(f"duplicate key in [{section}]", key=key, line=lineno)
        seen_keys.add((section, key))
        yield section, key, value, lineno


def parse_scenario_text(text, base_dir=".", check_files=True) -> RenderScenario:
    """Parse scenario text; relative paths resolve against ``base_dir``."""
    base = Path(base_dir)
    values = {name: {} for name in SCHEMA}
    lines = {}
    for section, key, value, lineno in _tokenize(text):
        attr, conv, needs_base = SCHEMA[section][key]
        try:
            values[section][attr] = conv(value, base) if needs_base else conv(value)
        except (ValueError, TypeError) as exc:
            raise ScenarioError(f"invalid value {value!r}: {exc}", key=key, line=lineno) from None
        lines[(section, attr)] = (key, lineno)

    def build(section, cls, **extra):
        kwargs = {**values[section], **extra}
        try:
            return cls(**kwargs)
        except ParameterError as exc:
            given = [a for a in kwargs if (section, a) in lines]
            key, lineno = (section, None)
            if given:
                key, lineno = lines[(section, given[0])]
            # Blame the first key that is invalid on its own, if any.
            for a in given:
                try:
                    cls(**{a: kwargs[a]})
                except ParameterError:
                    key, lineno = lines[(section, a)]
                    break
            raise ScenarioError(f"[{section}] {exc}", key=key, line=lineno) from None

    top = values["scenario"]
    if "event" not in top:
        raise ScenarioError("missing required key in [scenario]", key="event")
    irs = values["impulse_responses"]
    if "anchors" not in irs:
        raise ScenarioError("missing required key in [impulse_responses]", key="surface")
    positions = [p for p, _ in irs["anchors"]]
    if any(not 0 <= p <= 1 for p in positions) or any(np.diff(positions) <= 0):
        key, lineno = lines[("impulse_responses", "anchors")]
        raise ScenarioError("anchor positions must increase strictly within [0, 1]",
                            key=key, line=lineno)
    if irs.get("eta", 0.0) < 0:
        key, lineno = lines[("impulse_responses", "eta")]
        raise ScenarioError("eta must be non-negative", key=key, line=lineno)

    motion_vals = values["motion"]
    if top["event"] == "scrape" and "kind" not in motion_vals:
        raise ScenarioError("missing required key in [motion]", key="kind")

    roll_vals = values["roll"]
    contact_attrs = {SCHEMA["roll"][k][0] for k in _ROLL_CONTACT_KEYS}
    roll_contact = {a: v for a, v in roll_vals.items() if a in contact_attrs}
    roll_geom = {a: v for a, v in roll_vals.items() if a not in contact_attrs}
    values["roll"] = roll_geom
    values["roll_contact"] = roll_contact
    for a in contact_attrs:
        if ("roll", a) in lines:
            lines[("roll_contact", a)] = lines[("roll", a)]

    scenario = RenderScenario(
        event=top["event"],
        anchors=irs["anchors"],
        seed=top.get("seed", 0),
        ablations=top.get("ablations", frozenset()),
        surface=build("surface", SurfaceSpec),
        object_ir=irs.get("object_ir"),
        eta=irs.get("eta", RenderScenario.eta),
        motion=build("motion", MotionSpec),
        shm=build("shm", kinematics.ShmParams),
        scrape=build("scraper", force.ScrapeParams),
        roll=build("roll", RollSpec),
        roll_contact=build("roll_contact", force.RollParams),
        nonlinearity=build("nonlinearity", contact.NonlinearityParams),
        render=build("render", render.RenderSettings),
    )
    if check_files:
        _check_files(scenario, lines)
    return scenario


def _check_files(s, lines):
    refs = [(("surface", "file"), s.surface.file),
            (("impulse_responses", "object_ir"), s.object_ir),
            (("motion", "trajectory"), s.motion.trajectory)]
    refs += [(("impulse_responses", "anchors"), p) for _, p in s.anchors]
    for where, p in refs:
        if p is not None and not Path(p).is_file():
            key, lineno = lines.get(where, (where[1], None))
            raise ScenarioError(f"referenced file does not exist: {p}", key=key, line=lineno)


def parse_scenario(path, check_files=True) -> RenderScenario:
    """Read and validate a scenario file."""
    path = Path(path)
    text = path.read_text()
    return replace(parse_scenario_text(text, path.parent, check_files), source=path)


def format_scenario(s: RenderScenario) -> str:
    """Serialize with every key explicit; parsing the result gives ``s`` back."""

    def num(v):
        return "none" if v is None else repr(v)

    out = ["[scenario]", f"event = {s.event}", f"seed = {s.seed}"]
    if s.ablations:
        out.append(f"ablations = {', '.join(sorted(s.ablations))}")

    out += ["", "[surface]"]
    if s.surface.file is not None:
        out.append(f"file = {s.surface.file}")
    out += [f"nx = {s.surface.nx}", f"ny = {s.surface.ny}",
            f"spacing = {num(s.surface.spacing)}",
            f"spectral_exponent = {num(s.surface.spectral_exponent)}",
            f"rms_height = {num(s.surface.rms_height)}"]

    out += ["", "[impulse_responses]",
            "surface = " + ", ".join(f"{p} @ {pos!r}" for pos, p in s.anchors)]
    if s.object_ir is not None:
        out.append(f"object = {s.object_ir}")
    out.append(f"eta = {num(s.eta)}")

    m = s.motion
    out += ["", "[motion]", f"kind = {m.kind}"]
    if m.trajectory is not None:
        out.append(f"trajectory = {m.trajectory}")
    out += [f"speed_scale = {num(m.speed_scale)}", f"duration = {num(m.duration)}",
            f"extent = {num(m.extent)}", f"normal_force = {num(m.normal_force)}"]

    sections = [
        ("shm", s.shm), ("scraper", s.scrape), ("nonlinearity", s.nonlinearity),
        ("render", s.render),
    ]
    for name, obj in sections:
        out += ["", f"[{name}]"]
        for key, (attr, _, _) in SCHEMA[name].items():
            out.append(f"{key} = {num(getattr(obj, attr))}")

    out += ["", "[roll]"]
    for key, (attr, _, _) in SCHEMA["roll"].items():
        obj = s.roll_contact if key in _ROLL_CONTACT_KEYS else s.roll
        out.append(f"{key} = {num(getattr(obj, attr))}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# execution


class _Stage:
    """Context manager tagging package errors with the pipeline stage."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, ContactSynthError) \
                and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, exc) from exc
        return False


def with_overrides(s: RenderScenario, seed=None, ablations=()) -> RenderScenario:
    """Apply command-line seed and extra ablation flags."""
    extra = frozenset(ablations)
    bad = extra - ABLATIONS
    if bad:
        raise ScenarioError(f"unknown ablation {sorted(bad)[0]!r}", key="ablations")
    return replace(s, seed=s.seed if seed is None else int(seed),
                   ablations=s.ablations | extra)


def _load_surface(s):
    spec = s.surface
    if spec.file is not None:
        return surface.load_depth_map(spec.file)
    return surface.generate_fractal_surface(spec.nx, spec.ny, spec.spacing,
                                            spec.spectral_exponent, spec.rms_height, s.seed)


def _build_field(s, report):
    anchors = tuple((pos, modal.load_mir(p)) for pos, p in s.anchors)
    obj = modal.load_mir(s.object_ir) if s.object_ir is not None else None
    eta = s.eta if obj is not None else 0.0
    if "only_surface_ir" in s.ablations:
        eta = 0.0
    if "constant_ir" in s.ablations:
        anchors = anchors[:1]
    if "only_ball_ir" in s.ablations:
        if obj is None:
            raise ParameterError("only_ball_ir needs an object impulse response")
        anchors = ((0.0, obj),)
        eta = 0.0
    report["eta_effective"] = eta
    report["anchor_count"] = len(anchors)
    return modal.IrField(anchors, obj, eta)


def _scrape_force(s, surf, report):
    fs = s.render.sample_rate
    m = s.motion
    with _Stage("kinematics"):
        if m.kind == MOTION_FILE:
            traj = kinematics.load_trajectory(m.trajectory, fs, m.normal_force or 1.0)
            if m.normal_force is None:
                bounds = kinematics.normal_force_bounds(s.shm)
                traj = kinematics.normal_force_profile(traj, bounds)
            else:
                bounds = (m.normal_force, m.normal_force)
        else:
            traj = kinematics.make_scrape_motion(m.kind, m.speed_scale, m.duration, fs,
                                                 s.shm, m.extent)
            bounds = kinematics.normal_force_bounds(
                replace(s.shm, omega=s.shm.omega * m.speed_scale))
        if "no_normal_force_variation" in s.ablations:
            traj = traj.with_normal_force(0.5 * (bounds[0] + bounds[1]))
    report["normal_force_bounds"] = list(bounds)
    with _Stage("contact"):
        linear = "no_nonlinearity" in s.ablations
        path = contact.build_contact_path(surf, traj, bounds, s.nonlinearity,
                                          nonlinearity=not linear, smoothing=not linear)
    with _Stage("force"):
        f = force.total_scrape_force(path, traj, s.scrape)
    return f, kinematics.path_position(traj)


def _roll_force(s, surf, report):
    fs = s.render.sample_rate
    r = s.roll
    with _Stage("kinematics"):
        roll = kinematics.make_roll_motion(r.radius, r.offset, r.mass, r.incline,
                                           r.initial_omega, s.motion.duration, fs, s.shm.g)
        traj = force.roll_trajectory(roll, s.shm.g)
        bounds = (float(traj.normal_force.min()), float(traj.normal_force.max()))
        if "no_normal_force_variation" in s.ablations:
            traj = traj.with_normal_force(0.5 * (bounds[0] + bounds[1]))
    report["normal_force_bounds"] = list(bounds)
    with _Stage("contact"):
        linear = "no_nonlinearity" in s.ablations
        path = contact.build_contact_path(surf, traj, bounds, s.nonlinearity,
                                          nonlinearity=not linear, smoothing=not linear)
    with _Stage("force"):
        f = force.total_rolling_force(path, roll, s.scrape, s.roll_contact)
    return f, kinematics.path_position(traj)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (frozenset, set)):
        return sorted(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def run_scenario(s: RenderScenario):
    """Render one scenario.

    Returns:
        ``(AudioBuffer, report)`` where the buffer is normalized to
        ``render.output_peak`` and ``report`` is a JSON-ready dict with every
        resolved parameter and the normalization scale.
    """
    params = asdict(s)
    params.pop("source", None)
    report = {"scenario": _jsonable(params),
              "source": str(s.source) if s.source else None}
    with _Stage("surface"):
        surf = _load_surface(s)
    with _Stage("modal"):
        field_ = _build_field(s, report)
    if s.event == "scrape":
        f, position = _scrape_force(s, surf, report)
    else:
        f, position = _roll_force(s, surf, report)
    with _Stage("render"):
        raw = render.render_time_varying(f, field_, position, s.render)
        buf, scale = render.normalize(raw, s.render.output_peak)
    report["normalization_scale"] = scale
    report["samples"] = len(buf)
    report["force_peak"] = float(np.max(np.abs(f.f))) if len(f) else 0.0
    return buf, report

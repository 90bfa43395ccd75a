"""Command-line entry point.

Exit codes: 0 success, 2 scenario/argument error, 3 pipeline error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import analysis, kinematics, render, scenario, surface
from .errors import ContactSynthError, FormatError, PipelineError, ScenarioError

log = logging.getLogger("contactsynth")

EXIT_OK, EXIT_PARSE, EXIT_PIPELINE, EXIT_IO = 0, 2, 3, 4
WORKERS_ENV = "CONTACTSYNTH_WORKERS"
SCENARIO_SUFFIX = ".scn"


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _ablation_list(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _render_one(scenario_path, out_path, seed, ablations, report_path):
    s = scenario.parse_scenario(scenario_path)
    s = scenario.with_overrides(s, seed, ablations)
    buf, report = scenario.run_scenario(s)
    render.write_wav(buf, out_path)
    if report_path is not None:
        Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return str(out_path)


def _exit_code(exc):
    if isinstance(exc, ScenarioError):
        return EXIT_PARSE
    if isinstance(exc, PipelineError):
        if isinstance(exc.cause, FormatError):
            return EXIT_IO
        return EXIT_PIPELINE
    if isinstance(exc, (OSError, FormatError)):
        return EXIT_IO
    if isinstance(exc, ContactSynthError):
        return EXIT_PIPELINE
    raise exc


def cmd_render(args):
    _render_one(args.scenario, args.out, args.seed, _ablation_list(args.ablate), args.report)
    log.info("wrote %s", args.out)
    return EXIT_OK


def cmd_batch(args):
    src = Path(args.directory)
    files = sorted(src.glob(f"*{SCENARIO_SUFFIX}"))
    if not files:
        raise ScenarioError(f"no *{SCENARIO_SUFFIX} files in {src}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ablations = _ablation_list(args.ablate)
    jobs = [(f, out_dir / f"{f.stem}.wav", args.seed, ablations,
             out_dir / f"{f.stem}.json") for f in files]
    worst = EXIT_OK
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        futures = [(job[0], pool.submit(_render_one, *job)) for job in jobs]
        for path, fut in futures:
            try:
                log.info("wrote %s", fut.result())
            except (ContactSynthError, OSError) as exc:
                log.error("%s: %s", path.name, exc)
                worst = max(worst, _exit_code(exc))
    return worst


def cmd_similarity(args):
    a = analysis.load_confusion_csv(args.recorded)
    b = analysis.load_confusion_csv(args.synth)
    print(f"{analysis.confusion_similarity(a, b):.12g}")
    return EXIT_OK


def cmd_gen_surface(args):
    surf = surface.generate_fractal_surface(args.nx, args.ny, args.spacing, args.exponent,
                                            args.rms, args.seed)
    surface.save_depth_map(surf, args.out)
    return EXIT_OK


def cmd_gen_motion(args):
    shm = kinematics.ShmParams(omega=args.omega)
    traj = kinematics.make_scrape_motion(args.kind, args.speed_scale, args.duration,
                                         args.sample_rate, shm, args.extent)
    kinematics.save_trajectory(traj, args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="contactsynth",
                                description="Scraping and rolling contact sound synthesis.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--ablate", default="", help="comma-separated ablation flags")
        sp.add_argument("--workers", type=int, default=default_workers(),
                        help=f"parallel renders (default ${WORKERS_ENV} or 1)")

    r = sub.add_parser("render", help="render one scenario to a WAV file")
    r.add_argument("scenario")
    r.add_argument("--out", required=True)
    r.add_argument("--report", default=None, help="write a JSON report here")
    common(r)
    r.set_defaults(func=cmd_render)

    b = sub.add_parser("batch", help=f"render every *{SCENARIO_SUFFIX} file of a directory")
    b.add_argument("directory")
    b.add_argument("--out", required=True)
    common(b)
    b.set_defaults(func=cmd_batch)

    s = sub.add_parser("similarity", help="confusion-matrix similarity of two CSV grids")
    s.add_argument("recorded")
    s.add_argument("synth")
    s.set_defaults(func=cmd_similarity)

    g = sub.add_parser("gen-surface", help="write a fractal SDM1 depth map")
    g.add_argument("--out", required=True)
    g.add_argument("--nx", type=int, default=4096)
    g.add_argument("--ny", type=int, default=256)
    g.add_argument("--spacing", type=float, default=surface.DEFAULT_SPACING)
    g.add_argument("--exponent", type=float, default=2.0)
    g.add_argument("--rms", type=float, default=1e-5)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen_surface)

    m = sub.add_parser("gen-motion", help="write an analytic trajectory as t,x,y rows")
    m.add_argument("--out", required=True)
    m.add_argument("--kind", required=True, choices=[k.value for k in kinematics.MotionKind])
    m.add_argument("--duration", type=float, default=2.0)
    m.add_argument("--extent", type=float, default=0.1)
    m.add_argument("--speed-scale", type=float, default=1.0)
    m.add_argument("--omega", type=float, default=kinematics.ShmParams().omega)
    m.add_argument("--sample-rate", type=int, default=kinematics.DEFAULT_SAMPLE_RATE)
    m.set_defaults(func=cmd_gen_motion)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except (ContactSynthError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())

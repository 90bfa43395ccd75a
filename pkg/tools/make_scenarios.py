"""Regenerate the bundled example scenarios and synthetic material IRs.

    python tools/make_scenarios.py [output-dir]

Writes the full scraper x surface x motion grid, a rolling set (ball x
surface x up/down incline), one scribble trajectory scenario, and the mode
banks they reference. Output is deterministic.
"""

import sys
from pathlib import Path

import numpy as np

from contactsynth.modal import ModalIR, save_mir

# name: (lowest mode Hz, stiffness exponent, decay at 0 Hz, decay per kHz)
SURFACES = {
    "basswood": (180.0, 1.35, 18.0, 9.0),
    "poplar": (210.0, 1.3, 15.0, 8.0),
    "ceramic": (520.0, 1.2, 3.0, 1.5),
}
SCRAPERS = {
    "pvc": (900.0, 1.25, 30.0, 6.0),
    "poplar_stick": (650.0, 1.3, 22.0, 8.0),
}
BALLS = {
    "ceramic_ball": (2400.0, 1.15, 6.0, 1.0),
    "glass_ball": (2900.0, 1.1, 4.0, 0.8),
    "wood_ball": (1300.0, 1.3, 35.0, 7.0),
}

MOTIONS = {
    "slow_back_and_forth": "kind = back_and_forth\nspeed_scale = 1.0\nduration = 2.0\nextent = 0.1",
    "fast_back_and_forth": "kind = back_and_forth\nspeed_scale = 1.6\nduration = 2.0\nextent = 0.1",
    "circular": "kind = circular\nspeed_scale = 0.8\nduration = 2.0\nextent = 0.15",
    "short_single": "kind = single_line_short\nduration = 0.6\nextent = 0.05",
    "long_single": "kind = single_line_long\nduration = 1.5\nextent = 0.25",
}


def bank(spec, n_modes, seed, t0=0.5):
    f1, stiff, d0, d_khz = spec
    rng = np.random.default_rng(seed)
    # Flatten the stiffness law just enough for every mode to fit below 15 kHz.
    stiff = min(stiff, np.log(15000.0 / f1) / np.log(n_modes))
    k = np.arange(1, 4 * n_modes + 1)
    freq = f1 * k ** stiff * (1.0 + 0.01 * rng.standard_normal(k.size))
    freq = np.unique(np.round(freq[(freq > 60) & (freq < 16000)], 3))[:n_modes]
    amp = rng.uniform(0.3, 1.0, freq.size) / np.sqrt(np.arange(1, freq.size + 1))
    decay = d0 + d_khz * freq / 1000.0 * rng.uniform(0.8, 1.2, freq.size)
    return ModalIR.from_arrays(freq, amp, decay, t0)


def shifted(ir, seed, spread=0.03):
    rng = np.random.default_rng(seed)
    n = len(ir)
    return ModalIR.from_arrays(ir.frequencies * (1.0 + spread * rng.uniform(-1, 1, n)),
                               ir.amplitudes * rng.uniform(0.5, 1.5, n),
                               ir.decays * rng.uniform(0.85, 1.15, n), ir.t0)


def main(out="scenarios"):
    out = Path(out)
    ir_dir = out / "ir"
    ir_dir.mkdir(parents=True, exist_ok=True)
    (out / "motion").mkdir(exist_ok=True)

    for i, (name, spec) in enumerate(SURFACES.items()):
        base = bank(spec, 50, 100 + i)
        for j, tag in enumerate("abc"):
            save_mir(base if j == 0 else shifted(base, 200 + 10 * i + j), ir_dir / f"{name}_{tag}.mir")
    for i, (name, spec) in enumerate({**SCRAPERS, **BALLS}.items()):
        save_mir(bank(spec, 30, 300 + i), ir_dir / f"{name}.mir")

    anchors = "ir/{0}_a.mir @ 0.0, ir/{0}_b.mir @ 0.5, ir/{0}_c.mir @ 1.0"
    seed = 0
    for scraper in SCRAPERS:
        for surf in SURFACES:
            for motion, body in MOTIONS.items():
                seed += 1
                text = (f"# scrape: {scraper} on {surf}, {motion.replace('_', ' ')}\n"
                        f"[scenario]\nevent = scrape\nseed = {seed}\n\n"
                        f"[impulse_responses]\nsurface = {anchors.format(surf)}\n"
                        f"object = ir/{scraper}.mir\neta = 0.4\n\n"
                        f"[motion]\n{body}\n")
                (out / f"scrape_{scraper}_{surf}_{motion}.scn").write_text(text)

    for ball in BALLS:
        for surf in SURFACES:
            for direction, incline, omega0 in (("up", 0.03, 25.0), ("down", -0.03, 5.0)):
                seed += 1
                text = (f"# roll: {ball} {direction} an incline of {surf}\n"
                        f"[scenario]\nevent = roll\nseed = {seed}\n\n"
                        f"[impulse_responses]\nsurface = {anchors.format(surf)}\n"
                        f"object = ir/{ball}.mir\neta = 0.25\n\n"
                        f"[motion]\nduration = 1.5\n\n"
                        f"[roll]\nradius = 0.02\noffset = 0.0005\nincline = {incline}\n"
                        f"initial_omega = {omega0}\n")
                (out / f"roll_{ball}_{surf}_{direction}.scn").write_text(text)

    # Wandering path standing in for an optically tracked scribble.
    t = np.linspace(0.0, 2.5, 251)
    x = 0.04 * np.sin(2 * np.pi * 1.1 * t) + 0.015 * np.sin(2 * np.pi * 3.7 * t + 0.4)
    y = 0.03 * np.sin(2 * np.pi * 0.7 * t + 1.0) + 0.01 * np.cos(2 * np.pi * 2.9 * t)
    np.savetxt(out / "motion" / "scribble.csv", np.column_stack([t, x, y]),
               delimiter=",", fmt="%.9g", header="t,x,y")
    (out / "scrape_pvc_basswood_scribble.scn").write_text(
        "# scrape: pvc on basswood, tracked scribble\n"
        "[scenario]\nevent = scrape\nseed = 99\n\n"
        f"[impulse_responses]\nsurface = {anchors.format('basswood')}\n"
        "object = ir/pvc.mir\neta = 0.4\n\n"
        "[motion]\nkind = file\ntrajectory = motion/scribble.csv\n")


if __name__ == "__main__":
    main(*sys.argv[1:])

import numpy as np
import pytest

from contactsynth.modal import ModalIR, save_mir

FS = 44100


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_bank(rng, n_modes, t0=0.1, fmin=50.0, fmax=8000.0, dmin=1.0, dmax=60.0):
    freq = np.sort(rng.uniform(fmin, fmax, n_modes))
    amp = rng.uniform(0.05, 1.0, n_modes)
    dec = rng.uniform(dmin, dmax, n_modes)
    return ModalIR.from_arrays(freq, amp, dec, t0)


@pytest.fixture
def mir_dir(tmp_path):
    """Directory with two surface anchors and one object bank."""
    save_mir(ModalIR.from_arrays([300.0, 1200.0, 3100.0], [1.0, 0.6, 0.3],
                                 [20.0, 30.0, 45.0], 0.2), tmp_path / "a.mir")
    save_mir(ModalIR.from_arrays([330.0, 1350.0, 2900.0], [0.8, 0.7, 0.4],
                                 [25.0, 28.0, 40.0], 0.2), tmp_path / "b.mir")
    save_mir(ModalIR.from_arrays([900.0, 2500.0], [0.5, 0.25], [40.0, 60.0], 0.2),
             tmp_path / "obj.mir")
    return tmp_path


# -- acceptance reporting ----------------------------------------------------

_ACCEPTANCE = pytest.StashKey[dict]()


class CriterionReport:
    """Outcome of one acceptance criterion, printed as a PASS/FAIL line."""

    def __init__(self, config, number, title):
        self.config, self.number, self.title = config, number, title
        self.line = None

    def check(self, ok, detail):
        status = "PASS" if ok else "FAIL"
        self.line = f"[{status}] criterion {self.number:2d}: {self.title} ({detail})"
        self.config.stash.setdefault(_ACCEPTANCE, {})[self.number] = self.line
        print(self.line)
        assert ok, self.line


@pytest.fixture
def criterion(request):
    reports = []

    def make(number, title):
        reports.append(CriterionReport(request.config, number, title))
        return reports[-1]

    yield make
    for r in reports:
        if r.line is None:
            r.line = f"[FAIL] criterion {r.number:2d}: {r.title} (raised before its check)"
            request.config.stash.setdefault(_ACCEPTANCE, {})[r.number] = r.line


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])

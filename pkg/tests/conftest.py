import math
from pathlib import Path

import numpy as np
import pytest

from medial_rigidity.cli import main

FIXTURES = Path(__file__).parent / "fixtures"

THETA_A = (2 * math.pi / 3, 5 * math.pi / 9, 7 * math.pi / 9)
THETA_B = (2 * math.pi / 3, 11 * math.pi / 18, 13 * math.pi / 18)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def run_cli(capsys):
    """Run the CLI in-process; returns (exit code, stdout, stderr)."""

    def _run(*argv):
        code = main([str(a) for a in argv])
        out = capsys.readouterr()
        return code, out.out, out.err

    return _run


def parse_machine(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        key, _, value = line.partition("=")
        out[key] = value
    return out


def floats(value: str) -> list:
    return [float(x) for x in value.replace(";", ",").split(",")]


def random_triples(rng: np.random.Generator, n: int, margin: float = 1e-3) -> list:
    out = []
    while len(out) < n:
        t1, t2 = rng.uniform(margin, math.pi - margin, size=2)
        t3 = 2 * math.pi - t1 - t2
        if margin < t3 < math.pi - margin:
            out.append((t1, t2, t3))
    return out


# --- acceptance summary --------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call":
        return
    n, title = mark.args
    detail = ""
    if report.failed:
        detail = str(report.longrepr.reprcrash.message).splitlines()[0] if hasattr(
            report.longrepr, "reprcrash") else "failed"
    _CRITERIA[n] = (title, report.passed, report.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, duration, detail = _CRITERIA[n]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({duration:.3f} s) {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)

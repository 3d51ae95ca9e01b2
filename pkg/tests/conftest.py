import os
from pathlib import Path

import pytest

from regimelens.dataset import parse_csv
from regimelens.models import get_spec
from regimelens.synth import GeneratorConfig, synthesize_series


@pytest.fixture(scope="session")
def reference_data():
    """The original series, if the user points REGIMELENS_REFERENCE_DATA at it."""
    path = os.environ.get("REGIMELENS_REFERENCE_DATA")
    if not path or not Path(path).is_file():
        pytest.skip("REGIMELENS_REFERENCE_DATA not set; original series unavailable")
    return parse_csv(Path(path).read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def m2_exact():
    cfg = GeneratorConfig(spec=get_spec("m2"))
    return cfg, synthesize_series(cfg)


@pytest.fixture(scope="session")
def m6_exact():
    cfg = GeneratorConfig(spec=get_spec("m6"))
    return cfg, synthesize_series(cfg)


@pytest.fixture
def noisy_m3():
    cfg = GeneratorConfig(spec=get_spec("m3"), noise_sd=1500.0, seed=11)
    return synthesize_series(cfg)


# one summary line per acceptance criterion, printed after the run

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    label = marker.args[0]
    detail = dict(item.user_properties).get("detail", "")
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if report.outcome == "skipped" and isinstance(report.longrepr, tuple):
            detail = report.longrepr[2].removeprefix("Skipped: ")
        _ACCEPTANCE[label] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, (status, detail) in _ACCEPTANCE.items():
        terminalreporter.write_line(f"[{status}] {label}" + (f": {detail}" if detail else ""))

import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


@pytest.fixture
def mains():
    from lpcmbench.synth import SynthSpec, generate

    spec = SynthSpec(sampling_rate=12_000, duration=1.0, noise_lsb=2.0, harmonics=[(3, 0.1, 0.0)],
                     amplitude_utilization=0.8, level_schedule=[(0.5, 0.4)], seed=7)
    return generate(spec, ["voltage", "current_a", "current_b"])


# acceptance outcomes, printed as one line each at the end of the run
ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Yields a setter for the detail text; the outcome is taken from the test result."""
    number, title = request.node.get_closest_marker("criterion").args
    entry = ACCEPTANCE.setdefault(number, {"title": title, "detail": ""})
    yield lambda text: entry.__setitem__("detail", (entry["detail"] + "; " + text).lstrip("; "))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and (rep.when == "call" or rep.failed):
        entry = ACCEPTANCE.setdefault(marker.args[0], {"title": marker.args[1], "detail": ""})
        if "passed" not in entry or rep.failed:
            entry["passed"] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        e = ACCEPTANCE[n]
        status = "PASS" if e.get("passed") else "FAIL"
        terminalreporter.write_line(f"[{status}] {n:>2}. {e['title']}  {e['detail']}".rstrip())

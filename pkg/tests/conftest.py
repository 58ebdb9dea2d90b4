import re

from hypothesis import settings

# fixed example sequence so every run checks the same cases
settings.register_profile("repo", derandomize=True)
settings.load_profile("repo")

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_outcomes: dict[int, tuple[str, str, float]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    number, name = int(m.group(1)), m.group(2)
    failed = report.failed
    prev = _outcomes.get(number)
    if report.when == "call" or failed:
        duration = (prev[2] if prev else 0.0) + report.duration
        status = "FAIL" if failed or (prev and prev[0] == "FAIL") else ("SKIP" if report.skipped else "PASS")
        _outcomes[number] = (status, name, duration)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status, name, duration = _outcomes[number]
        terminalreporter.write_line(f"criterion {number} {name.replace('_', ' ')}: {status} ({duration:.1f}s)")

from collections import defaultdict

import pytest

CRITERIA = [f"A{i}" for i in range(1, 11)]
_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes[mark.args[0]].append((item.name, rep.passed, rep.skipped))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in CRITERIA:
        runs = _outcomes.get(name)
        if not runs:
            tr.write_line(f"{name}: NOT RUN")
            continue
        failed = [t for t, ok, skipped in runs if not ok and not skipped]
        status = "FAIL" if failed else "PASS"
        line = f"{name}: {status} ({len(runs) - len(failed)}/{len(runs)} tests)"
        if failed:
            line += " failing: " + ", ".join(failed)
        tr.write_line(line)

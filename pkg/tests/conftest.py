import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (title, [outcome of each test carrying that marker])
_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number = marker.args[0]
        title = marker.kwargs.get("title", item.name)
        entry = _ACCEPTANCE.setdefault(number, (title, []))
        entry[1].append((item.name, rep.passed, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, results = _ACCEPTANCE[number]
        ok = all(passed for _, passed, _ in results)
        seconds = sum(d for _, _, d in results)
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}  ({seconds:.2f} s)"
        )
        for name, passed, _ in results:
            if not passed:
                terminalreporter.write_line(f"              failed: {name}")

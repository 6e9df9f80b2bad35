import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    n, text = mark.args
    passed = call.excinfo is None
    prev = _criteria.get(n, (text, True, []))
    failed = prev[2] + ([] if passed else [item.name])
    _criteria[n] = (text, prev[1] and passed, failed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        text, ok, failed = _criteria[n]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}"
        if failed:
            line += f"  (failed: {', '.join(failed)})"
        tr.write_line(line)


@pytest.fixture
def fixtures_dir():
    return Path(__file__).parent / "fixtures"

from __future__ import annotations

import re

# outcomes and title of every acceptance criterion, printed in the terminal summary;
# parametrized cases of one criterion are folded into a single line
_OUTCOMES: dict[int, list[str]] = {}
_TITLES: dict[int, str] = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def _criterion(nodeid: str) -> int | None:
    m = _PATTERN.search(nodeid)
    return int(m.group(1)) if m else None


def pytest_collection_modifyitems(items):
    for item in items:
        doc = (getattr(item.obj, "__doc__", None) or "").strip().splitlines()
        k = _criterion(item.nodeid)
        if k is not None:
            _TITLES[k] = doc[0] if doc else ""


def pytest_runtest_logreport(report):
    k = _criterion(report.nodeid)
    if k is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _OUTCOMES.setdefault(k, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_OUTCOMES):
        mark = "PASS" if all(o == "passed" for o in _OUTCOMES[k]) else "FAIL"
        terminalreporter.write_line(f"{mark}  criterion {k}: {_TITLES.get(k, '')}")

from __future__ import annotations

import pytest

from aeconv.corpus import builtin_corpus


@pytest.fixture(scope="session")
def corpus():
    return {e.name: e for e in builtin_corpus()}


def pytest_terminal_summary(terminalreporter):
    lines = [v for key in ("passed", "failed") for rep in terminalreporter.stats.get(key, [])
             for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

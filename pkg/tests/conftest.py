from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from branchalg.exact import FieldSpec  # noqa: E402
from branchalg.selfsim import builtin_group  # noqa: E402


@pytest.fixture(scope="session")
def grig():
    return builtin_group("grigorchuk")


@pytest.fixture(scope="session")
def gf2():
    return FieldSpec(2)


@pytest.fixture(scope="session")
def gf3():
    return FieldSpec(3)


@pytest.fixture(scope="session")
def qq():
    return FieldSpec(0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.format_line(n))

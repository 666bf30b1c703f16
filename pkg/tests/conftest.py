import pytest

from cdsynth.codegen import synthesize
from cdsynth.dsl import builtin_bundle


@pytest.fixture(scope="session")
def bundles():
    return {name: builtin_bundle(name) for name in ("linked_list", "internal_bst", "external_bst")}


@pytest.fixture(scope="session")
def list_kb(bundles):
    return bundles["linked_list"][1]


@pytest.fixture(scope="session")
def list_report(list_kb):
    return synthesize(list_kb, "linked_list")


@pytest.fixture(scope="session")
def reports(bundles):
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = synthesize(bundles[name][1], name)
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

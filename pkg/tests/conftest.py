import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
REPO_ROOT = TESTS_DIR.parent
FIXTURES = REPO_ROOT / "fixtures"

sys.path.insert(0, str(TESTS_DIR))

from exploitforge.frontend import parse_package  # noqa: E402
from exploitforge.taint import analyze_taint, build_call_graph, default_taint_spec  # noqa: E402
from exploitforge.alerts import group_paths_into_alerts  # noqa: E402


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def fixture_package(name: str) -> Path:
    return FIXTURES / "packages" / name


def scan_fixture(name: str):
    """(model, analysis result, alerts) for one fixture package."""
    model = parse_package(fixture_package(name))
    result = analyze_taint(model, build_call_graph(model), default_taint_spec())
    return model, result, group_paths_into_alerts(result.paths, model)


@pytest.fixture(scope="session")
def shellq():
    return scan_fixture("shellq")


@pytest.fixture(scope="session")
def deepcmd():
    return scan_fixture("deepcmd")


@pytest.fixture(scope="session")
def deepmix():
    return scan_fixture("deepmix")

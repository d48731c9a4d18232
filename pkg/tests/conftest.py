from __future__ import annotations

import os
import stat
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES = TESTS_DIR / "fixtures"
FAKE_TLC = TESTS_DIR / "fake_tlc.py"

sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def clean_spec() -> str:
    return (FIXTURES / "CoffeeCan.tla").read_text()


@pytest.fixture(scope="session")
def buggy_spec() -> str:
    return (FIXTURES / "CoffeeCan_buggy.tla").read_text()


@pytest.fixture(scope="session")
def cfg_text() -> str:
    return (FIXTURES / "CoffeeCan.cfg").read_text()


@pytest.fixture(scope="session")
def fake_tlc_env(tmp_path_factory) -> dict:
    """Environment overrides that route checker launches to the fake launcher."""
    mode = FAKE_TLC.stat().st_mode
    FAKE_TLC.chmod(mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    jar = tmp_path_factory.mktemp("jar") / "tla2tools.jar"
    jar.write_bytes(b"fixture jar placeholder")
    return {"MW_JAVA_BIN": str(FAKE_TLC), "MW_TLC_JAR": str(jar)}


@pytest.fixture
def fake_tlc(fake_tlc_env, monkeypatch) -> dict:
    for key, value in fake_tlc_env.items():
        monkeypatch.setenv(key, value)
    return fake_tlc_env


def tlc_available() -> bool:
    """True when a real checker launcher and archive are configured."""
    import shutil

    jar = os.environ.get("MW_TLC_JAR", "")
    java = os.environ.get("MW_JAVA_BIN", "java")
    return bool(jar) and Path(jar).exists() and shutil.which(java) is not None


requires_tlc = pytest.mark.skipif(
    not tlc_available(),
    reason="needs a real checker: set MW_TLC_JAR (and optionally MW_JAVA_BIN)",
)

_criterion_results: dict[tuple[int, str], str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(n, name): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    key = (marker.args[0], marker.args[1])
    if report.when == "setup" and report.skipped:
        _criterion_results[key] = "SKIPPED (needs real checker)"
    elif report.when == "call":
        _criterion_results[key] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), status in sorted(_criterion_results.items()):
        terminalreporter.write_line(f"ACCEPTANCE {n:>2} {name}: {status}")

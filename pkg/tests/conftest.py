"""Shared fixtures plus a per-criterion summary for the acceptance suite."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

from lexc.corpus import load_corpus  # noqa: E402


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return REPO_ROOT / "corpus"


@pytest.fixture(scope="session")
def fm_catalog_path() -> Path:
    return REPO_ROOT / "paper_fm_catalog.tsv"


@pytest.fixture(scope="session")
def corpus_entries(corpus_dir):
    return load_corpus(corpus_dir)


@pytest.fixture(scope="session")
def corpus_by_id(corpus_entries):
    return {entry.id: entry for entry in corpus_entries}


# --- acceptance summary: one visible pass/fail line per criterion ------------

_CRITERIA = {
    "test_criterion_1_rainy_sky_refund": (1, "rainy sky refund"),
    "test_criterion_2_arnold_schedule": (2, "arnold service charge schedule"),
    "test_criterion_3_lloyds_floor": (3, "lloyds floor and divergence point"),
    "test_criterion_4_monsolar_guard": (4, "monsolar zero-base guard"),
    "test_criterion_5_fm_thresholds": (5, "force majeure thresholds"),
    "test_criterion_6_lint_reproduction": (6, "lint reproduction"),
    "test_criterion_7_alignment_report": (7, "alignment report"),
    "test_criterion_8_property_suites": (8, "property suites"),
}
_outcomes: dict = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1].split("[")[0]
    if name not in _CRITERIA:
        return
    if report.when == "call":
        _outcomes[name] = _outcomes.get(name, True) and report.outcome == "passed"
    elif report.failed:
        _outcomes[name] = False


def pytest_terminal_summary(terminalreporter):
    ran = sorted(
        (number, label, _outcomes[name])
        for name, (number, label) in _CRITERIA.items()
        if name in _outcomes
    )
    if not ran:
        return
    terminalreporter.write_line("")
    for number, label, passed in ran:
        terminalreporter.write_line(
            f"criterion {number} ({label}): {'PASS' if passed else 'FAIL'}"
        )

from pathlib import Path

import pytest

from mpecpen import parse_problem_file

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def lcp_param():
    return parse_problem_file(FIXTURES / "lcp-param.mpec")


@pytest.fixture(scope="session")
def bilevel():
    return parse_problem_file(FIXTURES / "bilevel.mpec")


@pytest.fixture(scope="session")
def addq1():
    return parse_problem_file(FIXTURES / "addq1.mpec")

import json
import shutil

import pytest

from piqos.data import EXAMPLE_SECRETS, example_credentials_path, example_registry_path, load_example
from piqos.registry import Registry

# (rank, score, path, cost, emission, probability %, allowed) as printed in the paper's ranking table
TABLE2 = [
    (1, 134, ("2", "4", "6"), 150, 110, 50, False),
    (2, 137, ("2", "5", "6"), 155, 110, 65, True),
    (3, 139, ("3", "5", "6"), 145, 130, 100, True),
    (4, 141, ("2", "4", "6"), 155, 120, 86, True),
    (5, 142, ("3", "4", "6"), 170, 100, 0, False),
    (6, 143, ("3", "5", "6"), 165, 110, 65, True),
    (7, 146, ("2", "5", "6"), 160, 125, 90, True),
    (8, 148, ("3", "5", "6"), 150, 145, 100, True),
    (9, 149, ("3", "4", "6"), 175, 110, 2, False),
    (10, 151, ("2", "5", "6"), 165, 130, 100, True),
    (11, 152, ("3", "5", "6"), 170, 125, 90, True),
    (12, 160, ("2", "5", "6"), 170, 145, 100, True),
    (13, 162, ("2", "4", "6"), 170, 150, 99, True),
    (14, 169, ("2", "4", "6"), 175, 160, 100, True),
    (15, 178, ("3", "4", "6"), 190, 160, 98, True),
    (16, 185, ("3", "4", "6"), 195, 170, 100, True),
]

PAPER_QUERY = "(w=3/5, w=2/5, >60%)"

_results: list[tuple[str, bool, str]] = []


@pytest.fixture
def example_snapshot():
    return load_example()


@pytest.fixture
def example_registry(example_snapshot):
    return Registry(example_snapshot, EXAMPLE_SECRETS)


@pytest.fixture
def registry_file(tmp_path):
    path = tmp_path / "registry.json"
    shutil.copy(example_registry_path(), path)
    return path


@pytest.fixture
def credentials_file(tmp_path):
    path = tmp_path / "credentials.json"
    shutil.copy(example_credentials_path(), path)
    return path


@pytest.fixture
def acceptance_record():
    """Append (criterion, passed, detail) rows shown in the terminal summary."""
    return _results


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _results:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))

import json
from pathlib import Path

import pytest

from witnessdecomp.polysys import load_system

CORPUS = Path(__file__).resolve().parents[1] / "src" / "witnessdecomp" / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def expected() -> dict:
    return json.loads((CORPUS / "expected.json").read_text())


def corpus_system(name):
    return load_system(CORPUS / f"{name}.sys")


ACCEPTANCE_LINES: dict[str, str] = {}


def record_acceptance(key: str, ok: bool, detail: str) -> bool:
    line = f"criterion {key}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (len(k), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])

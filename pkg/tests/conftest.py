import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from decnet.cli import load_model, load_problem  # noqa: E402

DATA = Path(__file__).parent / "data"

# acceptance criterion number -> extra detail printed in the summary
ACCEPTANCE_NOTES: dict[int, str] = {}


@pytest.fixture(scope="session")
def fig1():
    return load_model("fig1")


@pytest.fixture(scope="session")
def fig2():
    return load_model("fig2")


@pytest.fixture(scope="session")
def fig3():
    return load_model("fig3")


@pytest.fixture(scope="session")
def problem():
    return load_problem("fig2")


@pytest.fixture
def note():
    def record(criterion: int, text: str) -> None:
        ACCEPTANCE_NOTES[criterion] = text
    return record


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for outcome in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_ac" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            number = int(name[len("test_ac"):].split("_")[0])
            status = "PASS" if outcome == "passed" else "FAIL"
            # a failure in any phase wins over a pass in another
            if rows.get(number, ("PASS",))[0] == "PASS":
                rows[number] = (status, name)
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(rows):
        status, name = rows[number]
        extra = ACCEPTANCE_NOTES.get(number)
        line = f"criterion {number:2d}: {status}  {name}"
        terminalreporter.write_line(line + (f"  [{extra}]" if extra else ""))

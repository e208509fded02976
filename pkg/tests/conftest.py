import json
from pathlib import Path

import pytest

from equidist.seqlab import parse_spec

ROOT = Path(__file__).parent
GOLDEN = ROOT / "golden" / "acceptance.json"
SCHEMAS = ROOT.parent / "src" / "equidist" / "schemas"

# one status line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}

# a quadratic x_n = c n^2 + theta n whose first difference at n=4e10 is 1/2 - 1e-5
QUAD_SPEC = "pow:a=2,c=0.0000000000001,theta=0.4919899999999"
QUAD_N = 40_000_000_000
QUAD_EPS = 0.09

# start of the end-to-end window for n^1.5 at eps=0.05 (past n(eps) ~ 9.4e30)
POW_START = 12345678901234567890123456789012


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[criterion] = f"acceptance {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def golden():
    return json.loads(GOLDEN.read_text())


@pytest.fixture(scope="session")
def schema():
    def load(name):
        return json.loads((SCHEMAS / f"{name}.json").read_text())
    return load


@pytest.fixture(scope="session")
def quad_segment():
    from equidist.certifier import build_segment
    return build_segment(parse_spec(QUAD_SPEC), QUAD_N, QUAD_EPS, threads=4)

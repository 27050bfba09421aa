import pytest

from cagg.codes import build_arc, build_mds, build_pyramid
from cagg.erasures import ErasureMatrix

# erased helpers per row, 1-based as they appear in the worked examples
EXAMPLE_ROWS = [
    {2, 4, 7}, {2, 4, 8}, {2, 4, 8}, {1, 3, 4}, {2, 3, 4},
    {3, 4, 5}, {3, 4, 5}, {4, 7, 8}, {3, 7, 8}, {3, 4, 8},
]
AMC_ROWS = [{4}, {4}, {4}, {1}, {1}]
ARC_ROWS = [{2, 3}, {1, 6}, {1, 3}, {2, 4}]


def matrix_1based(n_h, rows):
    return ErasureMatrix.from_supports(n_h, [[j - 1 for j in r] for r in rows])


@pytest.fixture(scope="session")
def fix_a():
    """(n_e=10, n_h=8, s=3, t=2) pyramid system with its example erasure matrix."""
    return build_pyramid(None, 8, 3, 2), matrix_1based(8, EXAMPLE_ROWS)


@pytest.fixture(scope="session")
def fix_b():
    return build_pyramid(None, 16, 5, 2)


@pytest.fixture(scope="session")
def fix_c():
    return build_mds(None, 3, 1), matrix_1based(4, AMC_ROWS)


@pytest.fixture(scope="session")
def fix_d():
    return build_arc(6, 2), matrix_1based(6, ARC_ROWS)


# --- acceptance summary -------------------------------------------------
# Tests marked ``criterion(n)`` contribute to one PASS/FAIL line per criterion,
# printed at the end of the run.

_criteria: dict[int, list[tuple[str, bool, str]]] = {}
_notes: dict[int, list[str]] = {}


@pytest.fixture
def note(request):
    """Record a measured value next to the criterion's summary line."""
    n = request.node.get_closest_marker("criterion").args[0]
    return lambda text: _notes.setdefault(n, []).append(text)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        ok = call.excinfo is None
        detail = "" if ok else str(call.excinfo.value).splitlines()[0][:160]
        _criteria.setdefault(mark.args[0], []).append((item.name, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        results = _criteria[n]
        ok = all(r[1] for r in results)
        failed = [f"{name}: {detail}" for name, good, detail in results if not good]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  (" + "; ".join(failed) + ")"
        tr.write_line(line)
        for text in _notes.get(n, []):
            tr.write_line(f"              {text}")

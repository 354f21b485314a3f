import functools

import pytest

from dblrank.doublerank import PreparedWorld
from dblrank.synthgen import fig3_setup

# All sciences, 2012: percent of each region's papers in the world
# top-x percentiles (empirical), and the printed LR-calculated values.
TABLE3_PERCENTILES = (1, 5, 10, 25, 50, 100)
TABLE3 = {
    "USA": {
        "empirical": (1.94, 8.33, 15.40, 33.68, 59.29, 100.00),
        "calculated": (1.99, 8.15, 14.96, 33.39, 61.29, 112.48),
        "difference": (-0.05, 0.18, 0.44, 0.29, -2.00, -12.48),
    },
    "EU": {
        "empirical": (1.29, 6.30, 12.33, 29.37, 55.01, 100.00),
        "calculated": (1.32, 6.19, 12.05, 29.08, 56.62, 110.23),
        "difference": (-0.03, 0.11, 0.28, 0.29, -1.61, -10.23),
    },
    "China": {
        "empirical": (0.81, 4.12, 8.34, 21.92, 46.62, 100.00),
        "calculated": (0.79, 4.18, 8.57, 22.10, 45.25, 92.67),
        "difference": (0.02, -0.06, -0.23, -0.18, 1.37, 7.33),
    },
    "Japan": {
        "empirical": (0.82, 4.03, 8.18, 22.17, 47.84, 100.00),
        "calculated": (0.79, 4.18, 8.58, 22.21, 45.60, 93.63),
        "difference": (0.03, -0.15, -0.40, -0.04, 2.24, 6.37),
    },
}

FIG3_GRID = (1, 2, 4, 7, 12, 20, 35, 60)
TEN_SEEDS = tuple(range(10))


@functools.lru_cache(maxsize=16)
def fig3(seed):
    s1, s7, world = fig3_setup(seed)
    return s1, s7, world, PreparedWorld.from_set(world)


@pytest.fixture
def table3():
    return TABLE3


def table3_shares_csv(path, regions=None):
    lines = ["group,percentile,share"]
    for region, cols in TABLE3.items():
        if regions and region not in regions:
            continue
        for x, s in zip(TABLE3_PERCENTILES, cols["empirical"]):
            lines.append(f"{region},{x},{s}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# one line per acceptance criterion in the terminal summary
ACCEPTANCE: dict = {}


def record(criterion, ok, detail=""):
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        ok = ok and prev[0]
        detail = "; ".join(d for d in (prev[1], detail) if d)
    ACCEPTANCE[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")

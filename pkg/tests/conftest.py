from pathlib import Path

import numpy as np
import pytest

from collperf.profile import NetworkProfile, PLogPSample, load_profile

DATA = Path(__file__).parent / "data"
FIX1_SIZES = (1, 250, 1000, 2000, 3000, 4000)


def fix1() -> NetworkProfile:
    """Synthetic profile: g = 10 + 0.01 m, os = 8 + 0.006 m, or = 7 + 0.006 m, L = 50."""
    return load_profile(DATA / "fix1.json")


def random_profile(rng: np.random.Generator, name: str = "rand") -> NetworkProfile:
    """Monotone nondecreasing profile with a 1-byte sample and random knots up to 4 MiB."""
    extra = rng.choice(np.arange(2, 1 << 22), size=int(rng.integers(2, 9)), replace=False)
    sizes = [1] + sorted(int(x) for x in extra)
    columns = []
    for _ in range(3):
        base = float(rng.uniform(2.0, 100.0))
        slopes = rng.uniform(1e-4, 5e-2, size=len(sizes) - 1)
        vals = [base]
        for (a, b), slope in zip(zip(sizes, sizes[1:]), slopes):
            vals.append(vals[-1] + float(slope) * (b - a))
        columns.append(vals)
    samples = [PLogPSample(b, g, o, r) for b, g, o, r in zip(sizes, *columns)]
    return NetworkProfile.from_samples(name, float(rng.uniform(1.0, 200.0)), samples)


@pytest.fixture
def fix1_profile():
    return fix1()


@pytest.fixture
def fix1_json():
    return DATA / "fix1.json"


@pytest.fixture
def fix1_columns():
    return DATA / "fix1.dat"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

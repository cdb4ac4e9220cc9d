from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from rank1sdp.io import read_tensor

DATA = Path(__file__).parent / "data"

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def load(name: str):
    return read_tensor(DATA / f"{name}.tns")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def sphere_grid(n: int, count: int = 50_000) -> np.ndarray:
    """Quasi-uniform points on the unit sphere in R^2 or R^3 (half-sphere suffices
    for |f|, the full sphere is used for signed extrema)."""
    if n == 2:
        th = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        r = np.sqrt(1 - z * z)
        phi = np.pi * (3 - np.sqrt(5)) * k
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    raise ValueError("grid only for n = 2, 3")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

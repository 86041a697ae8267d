import numpy as np
import pytest

from finsler_penergy import metric as fm
from finsler_penergy import curve as fc


@pytest.fixture(scope="session")
def euclid2():
    return fm.euclidean(2)


@pytest.fixture(scope="session")
def euclid3():
    return fm.euclidean(3)


@pytest.fixture(scope="session")
def sphere1():
    return fm.sphere(1.0)


@pytest.fixture(scope="session")
def sphere4():
    return fm.sphere(4.0)


@pytest.fixture(scope="session")
def randers_half():
    return fm.randers(np.eye(2), [0.5, 0.0])


def equator_arc(length_factor: float, n: int = 200) -> fc.DiscretizedCurve:
    """Unit-sphere equator arc of length length_factor * pi on [0, 1]."""
    return fc.from_function(
        lambda t: np.stack([np.full_like(t, np.pi / 2),
                            length_factor * np.pi * t], axis=1), n)


def tilted_circle(n: int, tilt: float = 0.4, sweep: float = 2.0):
    """Great circle tilted off the equator, sampled in the chart."""
    def fn(t):
        ang = sweep * t + 0.1
        u = np.stack([np.cos(ang),
                      np.sin(ang) * np.cos(tilt),
                      np.sin(ang) * np.sin(tilt)], axis=1)
        th = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
        ph = np.unwrap(np.arctan2(u[:, 1], u[:, 0]))
        return np.stack([th, ph], axis=1)
    return fc.from_function(fn, n)


def warped_line(x0, x1, amp: float, k: int = 1, n: int = 200):
    """Straight segment traversed with a warped parameter (regular for amp < 1/(k pi))."""
    x0 = np.asarray(x0, float)
    x1 = np.asarray(x1, float)

    def fn(t):
        s = t + amp * np.sin(k * np.pi * t)
        return np.outer(1.0 - s, x0) + np.outer(s, x1)
    return fc.from_function(fn, n)


def smooth_vanishing_field(t: np.ndarray, rng, dim: int) -> np.ndarray:
    """Random smooth variation field that vanishes at both endpoints."""
    out = np.zeros((t.size, dim))
    for k in range(1, 4):
        out += np.sin(k * np.pi * t)[:, None] * rng.uniform(-1.0, 1.0, dim)
    return out

import numpy as np
import pytest

from hysharp.grids import Grid


@pytest.fixture
def grid1():
    return Grid(1, 8.0, 1024)


@pytest.fixture
def grid2():
    return Grid(2, 6.0, 256)


def gaussian(grid, a=1.0, center=0.0, freq=0.0):
    """Samples of ``exp(-pi a |x - center|^2 + 2 pi i freq.x)``."""
    return grid.sample(
        lambda *xs: np.exp(-np.pi * a * sum((x - center) ** 2 for x in xs) + 2j * np.pi * freq * xs[0])
    )

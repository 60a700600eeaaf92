import os
import random

import pytest

from facalc import levels, novikov
from facalc.filtquiver import FiltQuiver, HomElement, HomGenerator
from facalc.tcoalg import TruncWindow


def facalc_seed() -> int:
    return int(os.environ.get("FACALC_SEED", "0"))


@pytest.fixture
def rng() -> random.Random:
    return random.Random(facalc_seed())


@pytest.fixture
def window() -> TruncWindow:
    return TruncWindow(6, levels.rat(3))


def loop_quiver(name="A", sdegs=(0, 1), base=0):
    """One object X with one loop generator per listed degree."""
    gens = [
        HomGenerator(f"g{i}", "X", "X", d, levels.rat(base))
        for i, d in enumerate(sdegs)
    ]
    return FiltQuiver(name, ["X"], gens)


def two_object_quiver(name="B"):
    """X --a--> Y with loops on both ends, mixed degrees and levels."""
    gens = [
        HomGenerator("a", "X", "Y", 0, levels.rat(0)),
        HomGenerator("x", "X", "X", 1, levels.rat("1/2")),
        HomGenerator("y", "Y", "Y", -1, levels.rat(0)),
    ]
    return FiltQuiver(name, ["X", "Y"], gens)


def three_object_quiver(name="C"):
    gens = [
        HomGenerator("ab", "P", "Q", 0, levels.rat(0)),
        HomGenerator("bc", "Q", "R", 1, levels.rat(1)),
        HomGenerator("ca", "R", "P", 2, levels.rat(0)),
        HomGenerator("lp", "P", "P", -1, levels.rat(0)),
    ]
    return FiltQuiver(name, ["P", "Q", "R"], gens)


def one(variant="nov"):
    return novikov.one(variant)

import numpy as np
import pytest

from symforma.rigidity import Framework, SymmetryContext
from symforma.scenario import builtin
from symforma.symmetry import (
    Graph,
    GroupAction,
    group_closure,
    perm_from_cycles,
    standard_representation,
)

C4_EDGES = [(1, 2), (1, 3), (2, 4), (3, 4)]
PSI1 = perm_from_cycles(4, [(1, 2, 4, 3)])
PSI2 = perm_from_cycles(4, [(1, 4), (2, 3)])
PSI4 = perm_from_cycles(4, [(1, 2), (3, 4)])


def make_context(graph, generators, kind, **params):
    group = group_closure(generators, graph.n)
    rep = standard_representation(group, kind, generators, **params)
    return SymmetryContext.build(GroupAction(graph, group), rep)


def central_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float).reshape(-1)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


@pytest.fixture
def c4():
    return Graph.from_one_based(4, C4_EDGES)


@pytest.fixture(scope="session")
def example8():
    return builtin("example8").setup


@pytest.fixture(scope="session")
def c4_mirror_setup():
    return builtin("c4_mirror").setup


@pytest.fixture(scope="session")
def c4_rotation_setup():
    return builtin("c4_rotation").setup


def framework_with_targets(graph, points, targets=None):
    fw = Framework(graph, np.asarray(points, dtype=float))
    if targets is None:
        return fw.with_targets_from_points()
    return Framework(graph, fw.points, targets)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)

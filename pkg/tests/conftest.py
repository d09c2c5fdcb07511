"""
Fixtures shared by the sinkless-lb test modules.

The construction tree for delta = 3, its build trace and its implicit F(T)
are built once per session; everything else is cheap enough per test.
"""

import pytest
from click.testing import CliRunner

from sinkless_lb.ctree import ConstructionTree, build_t2
from sinkless_lb.ftransform import f_implicit, f_materialize
from sinkless_lb.marked import build_input_tree
from sinkless_lb.olocal import Instance


# =============================================================================
# TREE FIXTURES
# =============================================================================

@pytest.fixture(scope="session")
def t2():
    """T_2 for delta = 3 (54 nodes)."""
    return build_t2(3)


@pytest.fixture(scope="session")
def t2_trace(t2):
    """The build trace of G_T for T_2 with delta = 3."""
    return build_input_tree(t2)


@pytest.fixture(scope="session")
def f_t2(t2):
    """F(T_2) for delta = 3, implicit."""
    return f_implicit(t2)


@pytest.fixture(scope="session")
def f_t2_prefix(f_t2):
    """The deepest prefix of F(T_2) with at most 20,000 nodes that ends on a split layer."""
    limit = max(
        layer.index for layer in f_t2.layers
        if layer.kind.is_split and layer.offset + layer.size <= 20_000
    )
    return f_materialize(f_t2, layer_limit=limit)


@pytest.fixture
def reflect_split_tree():
    """The two-node tree R -> S, valid as a skeleton but not distance-2 correct."""
    return ConstructionTree(3, [None, 0], [[1], []], ["1", "*1"])


# =============================================================================
# INSTANCE FIXTURES
# =============================================================================

@pytest.fixture
def path5():
    """A 5-node path 0-1-2-3-4; port 1 points left, port 2 right."""
    return Instance.from_edges([(0, 1, 1, 1), (1, 2, 2, 1), (2, 2, 3, 1), (3, 2, 4, 1)])


@pytest.fixture
def star3():
    """Node 0 with leaves 1, 2, 3 behind ports 1, 2, 3."""
    return Instance.from_edges([(0, 1, 1, 1), (0, 2, 2, 1), (0, 3, 3, 1)])


# =============================================================================
# CLI FIXTURES
# =============================================================================

@pytest.fixture
def runner():
    """Click test runner."""
    return CliRunner()

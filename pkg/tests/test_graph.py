import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpdp.graph import (Graph, GraphFormatError, Instance, PathError, PathResult,
                        add_universal_endpoints, dump_graph, dump_problem, load_graph,
                        load_problem, path_weight, validate_path)

from oracles import longest_path_weight, random_connected_graph

CYCLE4 = """% unit 4-cycle
4 4 1
2 1 4 1
1 1 3 1
2 1 4 1
3 1 1 1
"""


def cycle4():
    return Graph.from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)])


def test_smallest_weighted_graph():
    g = load_graph("2 1 1\n2 5\n1 5\n")
    assert g.vertex_count == 2
    assert g.edge_count == 1
    assert g.weight(0, 1) == 5.0


def test_cycle_file_reserializes_to_same_adjacency():
    g = load_graph(CYCLE4)
    assert g.edge_count == 4
    assert {w for _, _, w in g.edges()} == {1.0}
    again = load_graph(dump_graph(g))
    assert again == g
    assert {(u, v) for u, v, _ in again.edges()} == {(0, 1), (1, 2), (2, 3), (0, 3)}


def test_unweighted_format_defaults_to_unit_weights():
    g = load_graph("3 2\n2\n1 3\n2\n")
    assert g.weight(0, 1) == g.weight(1, 2) == 1.0


def test_asymmetric_adjacency_rejected():
    with pytest.raises(GraphFormatError):
        load_graph("2 1 0\n2\n\n")


def test_asymmetric_weight_rejected():
    with pytest.raises(GraphFormatError):
        load_graph("2 1 1\n2 5\n1 4\n")


def test_parse_error_carries_line_number():
    with pytest.raises(GraphFormatError) as err:
        load_graph("% header follows\n3 2 0\n2\n1 x\n2\n")
    assert err.value.line == 4


@pytest.mark.parametrize("text", [
    "2 1 1\n2 -1\n1 -1\n",      # negative weight
    "2 1 0\n1\n\n",             # self-loop
    "2 1 0\n3\n\n",             # neighbor out of range
    "3 5 0\n2\n1 3\n2\n",       # wrong edge count
    "2 1 0\n2\n",               # missing vertex line
    "x 1 0\n",                  # bad header
])
def test_malformed_files(text):
    with pytest.raises(GraphFormatError):
        load_graph(text)


def test_parallel_edges_collapse_to_heaviest_with_warning():
    with pytest.warns(UserWarning):
        g = Graph.from_edges(2, [(0, 1, 2.0), (1, 0, 7.0)])
    assert g.edge_count == 1 and g.weight(0, 1) == 7.0


def test_graph_is_immutable_and_symmetric():
    g = cycle4()
    for u, v, w in g.edges():
        assert g.weight(v, u) == w
    with pytest.raises((AttributeError, TypeError)):
        g.adjacency[0] = ()


def test_instance_checks():
    g = cycle4()
    with pytest.raises(ValueError):
        Instance(g, 0, 0)
    with pytest.raises(ValueError):
        Instance(g, 0, 4)
    Instance(Graph.from_edges(1, []), 0, 0)


def test_problem_file_roundtrip():
    g = cycle4()
    inst = Instance(g, 0, 2)
    text = dump_problem(inst)
    assert text == "1 3\n"
    assert load_problem(io.StringIO(text), g) == inst
    with pytest.raises(GraphFormatError):
        load_problem("1 9\n", g)


@st.composite
def graphs(draw):
    n = draw(st.integers(1, 9))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([]))
    weighted = draw(st.booleans())
    ws = st.integers(0, 50) if weighted else st.just(1)
    return Graph.from_edges(n, [(a, b, float(draw(ws))) for a, b in chosen])


@given(graphs())
@settings(max_examples=150, deadline=None)
def test_serialization_roundtrip(g):
    assert load_graph(dump_graph(g)) == g
    assert load_graph(dump_graph(g, weighted=True)) == g


# --- paths -------------------------------------------------------------------

def test_validate_single_vertex_path():
    g = Graph.from_edges(1, [])
    assert validate_path(g, PathResult((0,), 0.0), 0, 0) == 0.0


def test_validate_cycle_path():
    g = cycle4()
    assert validate_path(g, PathResult((0, 3, 2, 1), 3.0), 0, 1) == 3.0
    assert longest_path_weight(g, 0, 1) == 3.0


@pytest.mark.parametrize("verts,weight,s,t", [
    ((0, 1, 0), 2.0, 0, 0),      # repeated vertex
    ((0, 2), 1.0, 0, 2),         # missing edge
    ((0, 1), 1.0, 0, 2),         # wrong end
    ((0, 1, 2), 5.0, 0, 2),      # wrong weight
    ((5,), 0.0, 5, 5),           # vertex out of range
])
def test_validate_rejects(verts, weight, s, t):
    with pytest.raises(PathError):
        validate_path(cycle4(), PathResult(verts, weight), s, t)


def test_path_weight_sums_edges():
    g = Graph.from_edges(3, [(0, 1, 2.5), (1, 2, 4.0)])
    assert path_weight(g, [0, 1, 2]) == 6.5


# --- universal endpoints -----------------------------------------------------

def test_universal_endpoints_single_vertex():
    inst = add_universal_endpoints(Graph.from_edges(1, []))
    assert inst.graph.vertex_count == 3
    assert inst.graph.edge_count == 2
    assert all(w == 0 for _, _, w in inst.graph.edges())
    assert longest_path_weight(inst.graph, inst.source, inst.target) == 0.0


def test_universal_endpoints_path_and_cycle():
    path = Graph.from_edges(3, [(0, 1, 1), (1, 2, 1)])
    inst = add_universal_endpoints(path)
    assert longest_path_weight(inst.graph, inst.source, inst.target) == 2.0
    inst = add_universal_endpoints(cycle4())
    assert longest_path_weight(inst.graph, inst.source, inst.target) == 3.0


def test_universal_endpoints_empty_graph():
    with pytest.raises(ValueError):
        add_universal_endpoints(Graph.from_edges(0, []))


def test_universal_endpoints_solve_overall_longest_path():
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(2, 9))
        g = random_connected_graph(rng, n, 0.3)
        best = max(longest_path_weight(g, u, v) or 0.0 for u in range(n) for v in range(n))
        inst = add_universal_endpoints(g)
        assert longest_path_weight(inst.graph, inst.source, inst.target) == best

import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpdp.bench import (CSV_HEADER, BenchRecord, MazeSpec, bfs_region, build_maze, emit_csv,
                        extract_subgraph, gen_maze, is_big, obstacle_count, parse_csv,
                        run_benchmark, speedup_table)
from lpdp.graph import Graph, dump_graph

from oracles import longest_path_weight, random_connected_graph


# --- mazes -------------------------------------------------------------------

def test_open_two_by_two_grid():
    inst = gen_maze(MazeSpec(2, 0.0, 0))
    assert inst.graph.vertex_count == 4 and inst.graph.edge_count == 4
    assert longest_path_weight(inst.graph, inst.source, inst.target) == 2.0


def test_generation_is_deterministic():
    a = gen_maze(MazeSpec(10, 0.3, 7))
    b = gen_maze(MazeSpec(10, 0.3, 7))
    assert dump_graph(a.graph) == dump_graph(b.graph)
    assert (a.source, a.target) == (b.source, b.target)
    assert dump_graph(gen_maze(MazeSpec(10, 0.3, 8)).graph) != dump_graph(a.graph)


@pytest.mark.parametrize("side,fill", [(10, 0.3), (16, 0.3), (13, 0.4), (7, 0.1), (5, 0.0)])
def test_obstacle_count_and_terminals(side, fill):
    for seed in range(3):
        maze = build_maze(MazeSpec(side, fill, seed))
        need = math.ceil(round(fill * side * side, 9))
        assert obstacle_count(maze.spec) == need
        assert int(maze.blocked.sum()) == need
        assert not maze.blocked[0, 0] and not maze.blocked[-1, -1]
        assert maze.instance.graph.vertex_count == side * side - need
        assert maze.cells[maze.instance.source] == (0, 0)
        assert maze.cells[maze.instance.target] == (side - 1, side - 1)


def test_maze_edges_are_grid_neighbors():
    maze = build_maze(MazeSpec(9, 0.3, 1))
    for u, v, w in maze.instance.graph.edges():
        (r1, c1), (r2, c2) = maze.cells[u], maze.cells[v]
        assert abs(r1 - r2) + abs(c1 - c2) == 1 and w == 1.0
    free = set(maze.cells)
    expected = sum(1 for r, c in free for nb in ((r + 1, c), (r, c + 1)) if nb in free)
    assert maze.instance.graph.edge_count == expected


def test_mazes_always_connect_terminals():
    retried = 0
    for seed in range(12):
        maze = build_maze(MazeSpec(7, 0.45, seed))
        inst = maze.instance
        assert longest_path_weight(inst.graph, inst.source, inst.target) is not None
        retried += maze.retries > 0
    assert retried > 0
    assert "#" in maze.render()


def test_maze_spec_validation():
    with pytest.raises(ValueError):
        MazeSpec(1)
    with pytest.raises(ValueError):
        MazeSpec(5, 1.0)


# --- subgraphs ---------------------------------------------------------------

def test_subgraph_is_induced_on_touched_vertices():
    rng = np.random.default_rng(0)
    g = random_connected_graph(rng, 40, 0.08)
    for seed in range(10):
        inst = extract_subgraph(g, 15, seed)
        root, touched = bfs_region(g, 15, np.random.default_rng(seed))
        old = sorted(touched)
        assert inst.graph.vertex_count == 15
        among = {(a, b): w for a, b, w in g.edges() if a in touched and b in touched}
        got = {(old[a], old[b]): w for a, b, w in inst.graph.edges()}
        assert got == among
        assert old[inst.source] == root and inst.target != inst.source


def test_subgraph_of_full_size_is_whole_graph():
    rng = np.random.default_rng(1)
    g = random_connected_graph(rng, 12, 0.2)
    inst = extract_subgraph(g, 12, 3)
    assert inst.graph == g


def test_subgraph_size_errors():
    g = Graph.from_edges(3, [(0, 1, 1), (1, 2, 1)])
    with pytest.raises(ValueError):
        extract_subgraph(g, 1, 0)
    inst = extract_subgraph(g, 1, 0, allow_trivial=True)
    assert inst.graph.vertex_count == 1 and inst.source == inst.target == 0
    with pytest.raises(ValueError):
        extract_subgraph(g, 4, 0)
    with pytest.raises(ValueError):
        extract_subgraph(Graph.from_edges(4, [(0, 1, 1)]), 3, 0)


# --- runner and CSV ----------------------------------------------------------

def test_one_instance_two_solvers():
    inst = gen_maze(MazeSpec(5, 0.3, 0))
    recs = list(run_benchmark([("m5", inst)], ["lpdp", "dfbnb"], [1], 10.0))
    assert [(r.solver, r.threads, r.status) for r in recs] == [("lpdp", 1, "solved"), ("dfbnb", 1, "solved")]
    assert recs[0].weight == recs[1].weight
    assert recs[0].eps == 0.1 and recs[1].eps is None


def test_baselines_only_get_serial_records():
    inst = gen_maze(MazeSpec(5, 0.3, 1))
    recs = list(run_benchmark([("m", inst)], ["lpdp", "exhdfs"], [1, 2], 10.0))
    assert sorted((r.solver, r.threads) for r in recs) == [("exhdfs", 1), ("lpdp", 1), ("lpdp", 2)]


def test_timeouts_are_recorded_not_raised():
    big = gen_maze(MazeSpec(20, 0.3, 0))
    small = gen_maze(MazeSpec(4, 0.3, 0))
    recs = list(run_benchmark([("big", big), ("small", small)], ["exhdfs"], [1], 0.2))
    assert [(r.instance, r.status, r.weight) for r in recs][0] == ("big", "timeout", None)
    assert recs[1].status == "solved"


def test_solvers_agree_across_a_suite():
    suite = [(f"m{s}_{k}", gen_maze(MazeSpec(s, 0.3, k))) for s in (5, 6, 7) for k in range(2)]
    recs = list(run_benchmark(suite, ["lpdp", "exhdfs", "dfbnb"], [1, 2], 30.0))
    by_inst = {}
    for r in recs:
        assert r.status == "solved"
        by_inst.setdefault(r.instance, set()).add(r.weight)
    assert all(len(ws) == 1 for ws in by_inst.values())


def test_record_weight_iff_solved():
    with pytest.raises(ValueError):
        BenchRecord("a", "lpdp", 1, 0.1, "bisection", 5.0, "timeout", 3.0)
    with pytest.raises(ValueError):
        BenchRecord("a", "lpdp", 1, 0.1, "bisection", 5.0, "solved", None)


def test_csv_header_only():
    assert emit_csv([]) == ",".join(CSV_HEADER) + "\n"
    assert parse_csv(emit_csv([])) == []


def test_csv_two_records_sorted():
    recs = [BenchRecord("b", "lpdp", 2, 0.1, "bisection", 12.5, "solved", 10.0),
            BenchRecord("a", "dfbnb", 1, None, "none", 60000.0, "timeout")]
    text = emit_csv(recs)
    lines = text.splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("a,dfbnb,1,,none,")
    assert lines[2] == "b,lpdp,2,0.1,bisection,12.5,solved,10.0"


records = st.builds(
    lambda inst, solver, threads, eps, ms, solved, w: BenchRecord(
        inst, solver, threads, eps if solver == "lpdp" else None,
        "bisection" if solver == "lpdp" else "none", ms,
        "solved" if solved else "timeout", w if solved else None),
    st.text("abcxyz_0123,\"", min_size=1, max_size=8), st.sampled_from(["lpdp", "exhdfs", "dfbnb"]),
    st.integers(1, 64), st.floats(0, 1, allow_nan=False), st.floats(0, 1e7, allow_nan=False),
    st.booleans(), st.floats(0, 1e6, allow_nan=False))


@given(st.lists(records, max_size=12, unique_by=lambda r: (r.instance, r.solver, r.threads)))
@settings(max_examples=150)
def test_csv_roundtrip(recs):
    assert parse_csv(emit_csv(recs)) == sorted(recs, key=BenchRecord.sort_key)


def test_bad_csv_header():
    with pytest.raises(ValueError):
        parse_csv("instance,solver\n")


# --- speedups ----------------------------------------------------------------

def rec(inst, threads, secs, status="solved"):
    return BenchRecord(inst, "lpdp", threads, 0.1, "bisection", secs * 1000.0, status,
                       1.0 if status == "solved" else None)


def test_speedup_of_two_not_big():
    (row,) = speedup_table([rec("x", 1, 10.0), rec("x", 2, 5.0)])
    assert row.threads == 2 and row.count == 1
    assert row.average == row.total == row.median == pytest.approx(2.0)
    assert not is_big(10.0, 2) and row.big_count == 0 and math.isnan(row.big_average)
    assert is_big(10.5, 2)


def test_speedup_columns_recomputed():
    rng = np.random.default_rng(5)
    recs = []
    serial = {}
    par = {2: {}, 4: {}}
    for i in range(30):
        name = f"i{i}"
        s = float(rng.uniform(1, 60))
        serial[name] = s
        recs.append(rec(name, 1, s))
        for k in (2, 4):
            if rng.random() < 0.1:
                recs.append(rec(name, k, 0.0, "timeout"))
                continue
            p = s / float(rng.uniform(0.5, k))
            par[k][name] = p
            recs.append(rec(name, k, p))
    rows = {r.threads: r for r in speedup_table(recs)}
    for k in (2, 4):
        names = sorted(par[k])
        sp = np.array([serial[n] / par[k][n] for n in names])
        assert rows[k].count == len(names)
        assert rows[k].average == pytest.approx(sp.mean())
        assert rows[k].median == pytest.approx(np.median(sp))
        assert rows[k].total == pytest.approx(sum(serial[n] for n in names) / sum(par[k][n] for n in names))
        big = [n for n in names if serial[n] > 5 * k]
        assert rows[k].big_count == len(big)
        assert rows[k].big_median == pytest.approx(statistics.median(serial[n] / par[k][n] for n in big))

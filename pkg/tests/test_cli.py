import subprocess
import sys

import pytest

from lpdp.bench import load_instance, parse_csv
from lpdp.cli import main
from lpdp.graph import load_graph

from oracles import longest_path_weight


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def field(out, name):
    for line in out.splitlines():
        if line.startswith(name + " "):
            return line.split(" ", 1)[1]
    raise KeyError(name)


@pytest.fixture
def maze(tmp_path, capsys):
    stem = tmp_path / "m7"
    code, _, _ = run(capsys, "gen", "maze", "--side", "7", "--seed", "2", "--out", str(stem))
    assert code == 0
    return stem


def optimum(stem, s=None, t=None):
    inst = load_instance(stem.with_suffix(".graph"))
    s = inst.source if s is None else s
    t = inst.target if t is None else t
    return longest_path_weight(inst.graph, s, t)


def test_gen_maze_writes_graph_and_problem(maze):
    inst = load_instance(maze.with_suffix(".graph"))
    assert inst.source == 0 and inst.graph.vertex_count == 49 - 15


@pytest.mark.parametrize("solver", ["lpdp", "exhdfs", "dfbnb"])
def test_solve_each_solver(maze, capsys, solver):
    code, out, _ = run(capsys, "solve", "--graph", str(maze.with_suffix(".graph")), "--solver", solver)
    assert code == 0 and field(out, "status") == "solved"
    assert float(field(out, "weight")) == optimum(maze)
    path = [int(x) for x in field(out, "path").split()]
    assert path[0] == 1 and len(path) == optimum(maze) + 1


def test_solve_with_explicit_terminals_and_threads(maze, capsys):
    g = str(maze.with_suffix(".graph"))
    code, out, _ = run(capsys, "solve", "--graph", g, "--source", "1", "--target", "2",
                       "--threads", "2", "--depth-limit", "2", "--no-block-parallelism")
    assert code == 0
    path = field(out, "path").split()
    assert path[0] == "1" and path[-1] == "2"
    assert float(field(out, "weight")) == optimum(maze, 0, 1)


def test_partition_then_solve_with_hierarchy(maze, tmp_path, capsys):
    g = str(maze.with_suffix(".graph"))
    hfile = tmp_path / "h.txt"
    code, _, err = run(capsys, "partition", "--graph", g, "--eps", "0.2",
                       "--target-block-size", "6", "--out", str(hfile))
    assert code == 0 and "level 0" in err
    assert len(hfile.read_text().splitlines()) >= 2
    code, out, _ = run(capsys, "solve", "--graph", g, "--hierarchy", str(hfile), "--threads", "2")
    assert code == 0 and float(field(out, "weight")) == optimum(maze)


def test_gen_subgraph(maze, tmp_path, capsys):
    code, out, _ = run(capsys, "gen", "subgraph", "--graph", str(maze.with_suffix(".graph")),
                       "--size", "10", "--seed", "1")
    assert code == 0
    graph_text = out.split("% problem:")[0]
    assert load_graph(graph_text).vertex_count == 10
    code, _, err = run(capsys, "gen", "subgraph", "--graph", str(maze.with_suffix(".graph")), "--size", "1")
    assert code == 1 and "allow_trivial" in err
    code, _, _ = run(capsys, "gen", "subgraph", "--graph", str(maze.with_suffix(".graph")),
                     "--size", "1", "--allow-trivial", "--out", str(tmp_path / "one"))
    assert code == 0 and load_instance(tmp_path / "one.graph").graph.vertex_count == 1


def test_bench_suite_to_csv(tmp_path, capsys):
    suite = tmp_path / "suite"
    assert run(capsys, "gen", "suite", "--out", str(suite), "--min-side", "5", "--max-side", "6")[0] == 0
    out_csv = tmp_path / "r.csv"
    code, _, err = run(capsys, "bench", "--suite", str(suite), "--solvers", "lpdp,dfbnb",
                       "--threads", "1,2", "--time-limit", "20", "--out", str(out_csv))
    assert code == 0
    recs = parse_csv(out_csv.read_text())
    assert len(recs) == 2 * 3
    assert all(r.status == "solved" for r in recs)
    assert "threads 2" in err


def test_errors_are_reported(tmp_path, capsys):
    bad = tmp_path / "bad.graph"
    bad.write_text("2 1 0\n2\n\n")
    code, _, err = run(capsys, "solve", "--graph", str(bad), "--source", "1", "--target", "2")
    assert code == 1 and "error" in err
    lone = tmp_path / "lone.graph"
    lone.write_text("2 1 0\n2\n1\n")
    with pytest.raises(SystemExit):
        main(["solve", "--graph", str(lone)])


def test_timeout_exit_code(tmp_path, capsys):
    stem = tmp_path / "big"
    run(capsys, "gen", "maze", "--side", "20", "--out", str(stem))
    code, out, _ = run(capsys, "solve", "--graph", str(stem.with_suffix(".graph")), "--solver", "exhdfs",
                       "--time-limit", "0.2")
    assert code == 2 and out.startswith("status timeout")


def test_module_entry_point(maze):
    res = subprocess.run([sys.executable, "-m", "lpdp", "solve", "--graph", str(maze.with_suffix(".graph"))],
                         capture_output=True, text=True, check=True)
    assert f"weight {optimum(maze):g}" in res.stdout

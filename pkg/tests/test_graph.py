import io

import numpy as np

from ttpflow.graph import build_graph

from conftest import make_flow


def _flow(i, src, dst, sample="s0"):
    return make_flow(flow_hash=f"f{i}", unique_id=i, source_ip=src, dest_ip=dst,
                     sample_hash=sample)


def test_counts_and_degrees():
    flows = [_flow(1, "a", "b"), _flow(2, "a", "b"), _flow(3, "b", "c")]
    graph = build_graph(flows)
    assert graph.node_count == 3
    assert graph.edge_count == 3
    assert graph.out_degree("a") == 2
    assert graph.in_degree("b") == 2


def test_empty_graph():
    graph = build_graph([])
    assert graph.node_count == 0
    assert graph.edge_count == 0
    assert graph.flows_of_sample("anything") == []


def test_distinct_node_count_matches_independent_union_pass():
    rng = np.random.default_rng(99)
    flows = []
    for i in range(10_000):
        src = f"10.0.{rng.integers(0, 40)}.{rng.integers(1, 200)}"
        dst = f"10.1.{rng.integers(0, 40)}.{rng.integers(1, 200)}"
        flows.append(_flow(i, src, dst, sample=f"s{i % 97}"))
    graph = build_graph(flows)
    # independent set-union pass
    seen = set()
    for f in flows:
        seen.add(f.source_ip)
        seen.add(f.dest_ip)
    assert graph.edge_count == 10_000
    assert graph.node_count == len(seen)


def test_flows_of_sample_returns_exact_members():
    flows = [_flow(i, "a", "b", sample="sX" if i < 4 else "sY") for i in range(7)]
    graph = build_graph(flows)
    got = graph.flows_of_sample("sX")
    assert [f.flow_hash for f in got] == ["f0", "f1", "f2", "f3"]
    assert graph.flows_of_sample("missing") == []


def test_per_sample_lists_partition_edges():
    rng = np.random.default_rng(5)
    flows = [
        _flow(i, f"h{rng.integers(0, 12)}", f"h{rng.integers(0, 12)}",
              sample=f"s{rng.integers(0, 9)}")
        for i in range(300)
    ]
    graph = build_graph(flows)
    collected = []
    for sample_hash in graph.sample_hashes():
        collected.extend(graph.flows_of_sample(sample_hash))
    assert sorted(f.flow_hash for f in collected) == sorted(f.flow_hash for f in flows)


def test_fan_out_counts_distinct_destinations():
    flows = [
        _flow(1, "a", "x"), _flow(2, "a", "y"), _flow(3, "a", "y"),
        _flow(4, "a", "z"), _flow(5, "a", "z"),
    ]
    graph = build_graph(flows)
    assert graph.fan_out("a", "s0") == 3
    assert graph.fan_out("absent", "s0") == 0
    assert graph.fan_out("a", "other-sample") == 0


def test_fan_out_matches_brute_force_on_random_graph():
    rng = np.random.default_rng(1234)
    flows = [
        _flow(i, f"h{rng.integers(0, 15)}", f"h{rng.integers(0, 15)}",
              sample=f"s{rng.integers(0, 6)}")
        for i in range(500)
    ]
    graph = build_graph(flows)
    for sample_hash in graph.sample_hashes():
        members = [f for f in flows if f.sample_hash == sample_hash]
        for host in {f.source_ip for f in members}:
            brute = len({f.dest_ip for f in members if f.source_ip == host})
            assert graph.fan_out(host, sample_hash) == brute


def test_repeated_queries_identical():
    flows = [_flow(i, "a", f"d{i}") for i in range(10)]
    graph = build_graph(flows)
    first = graph.flows_of_sample("s0")
    second = graph.flows_of_sample("s0")
    assert first == second
    assert graph.fan_out("a", "s0") == graph.fan_out("a", "s0")


def test_edge_list_export_format():
    flows = [_flow(1, "a", "b"), _flow(2, "b", "c")]
    graph = build_graph(flows)
    buffer = io.StringIO()
    graph.write_edge_list(buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "a\tb\tf1\ts0"
    assert lines[1] == "b\tc\tf2\ts0"

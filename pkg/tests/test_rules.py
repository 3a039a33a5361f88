import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import ttpflow.techniques as T
from ttpflow.graph import build_graph
from ttpflow.rules import (
    RuleConfig,
    TtpMatch,
    aggregate_by_sample,
    detect,
    match_egress_anomaly,
    match_nonstandard_port,
    read_match_file,
    write_match_file,
)
from ttpflow.synth import SynthConfig, generate_corpus

from conftest import make_flow


# -- non-standard port (T1571) ------------------------------------------------

def test_nonstandard_port_http_on_8080():
    flow = make_flow(applabel=80, dest_port=8080, source_port=51515)
    assert match_nonstandard_port(flow, T.PORT_PROTOCOL_TABLE)


def test_standard_port_https():
    flow = make_flow(applabel=443, dest_port=443, source_port=51515)
    assert not match_nonstandard_port(flow, T.PORT_PROTOCOL_TABLE)


def test_unknown_applabel_never_matches():
    flow = make_flow(applabel=9999, dest_port=12345, source_port=54321)
    assert not match_nonstandard_port(flow, T.PORT_PROTOCOL_TABLE)


def test_default_source_port_suppresses_match():
    # FTP data connections originate from port 20: that is still the default.
    flow = make_flow(applabel=21, source_port=20, dest_port=30000)
    assert not match_nonstandard_port(flow, T.PORT_PROTOCOL_TABLE)


# -- egress anomaly (T1071) ----------------------------------------------------

def _ratio_flows(ratios):
    flows = []
    for i, ratio in enumerate(ratios):
        flows.append(make_flow(flow_hash=f"f{i}", unique_id=i, pkt=int(ratio), rpkt=1,
                               oct=max(int(ratio) * 100, 1)))
    return flows


def test_egress_anomaly_hand_computed_mean():
    # ratios {1, 1, 1, 13}: baseline 4.0, threshold 12.0 -> only the 13 flow
    flows = _ratio_flows([1, 1, 1, 13])
    assert match_egress_anomaly(flows, 3.0) == ["f3"]


def test_equal_ratios_never_flagged_above_multiplier_one():
    flows = _ratio_flows([5, 5, 5, 5])
    for multiplier in (1.001, 1.5, 2.0, 10.0):
        assert match_egress_anomaly(flows, multiplier) == []


def test_single_flow_boundary_inclusive():
    flows = _ratio_flows([7])
    assert match_egress_anomaly(flows, 1.0) == ["f0"]


def test_empty_sample_empty_result():
    assert match_egress_anomaly([], 3.0) == []


def test_zero_rpkt_uses_max_guard():
    flow = make_flow(pkt=12, rpkt=0, oct=1200, roct=0)
    assert match_egress_anomaly([flow], 1.0) == [flow.flow_hash]


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.integers(1, 50), st.integers(1, 50)), min_size=1, max_size=12),
    st.integers(2, 7),
)
def test_egress_flags_invariant_under_uniform_scaling(counts, factor):
    # With rpkt >= 1 everywhere, scaling pkt and rpkt together preserves every
    # ratio, hence the flagged set.
    base = [
        make_flow(flow_hash=f"f{i}", unique_id=i, pkt=p, rpkt=r, oct=p * 100,
                  roct=r * 100)
        for i, (p, r) in enumerate(counts)
    ]
    scaled = [
        make_flow(flow_hash=f"f{i}", unique_id=i, pkt=p * factor, rpkt=r * factor,
                  oct=p * factor * 100, roct=r * factor * 100)
        for i, (p, r) in enumerate(counts)
    ]
    assert match_egress_anomaly(base, 3.0) == match_egress_anomaly(scaled, 3.0)


# -- full engine ---------------------------------------------------------------

def test_detect_forced_t1571_example():
    flow = make_flow(applabel=80, dest_port=8080, source_port=51515)
    matches = detect(build_graph([flow]))
    assert TtpMatch(flow.flow_hash, flow.sample_hash, T.T1571) in matches


def test_detect_empty_graph():
    assert detect(build_graph([])) == []


def test_detect_is_deterministic():
    corpus = generate_corpus(SynthConfig(n_malicious=25, n_benign=25, seed=3))
    graph = build_graph(corpus.flows)
    assert detect(graph) == detect(graph)


def test_detect_matches_planted_truth():
    corpus = generate_corpus(SynthConfig(n_malicious=40, n_benign=40, seed=8))
    found = detect(build_graph(corpus.flows))
    assert sorted(found, key=lambda m: (m.sample_hash, m.technique_id, m.flow_hash)) == \
        list(corpus.truth)


def test_matches_reference_existing_flows_and_are_unique():
    corpus = generate_corpus(SynthConfig(n_malicious=30, n_benign=30, seed=21))
    graph = build_graph(corpus.flows)
    matches = detect(graph)
    known = {f.flow_hash for f in corpus.flows}
    pairs = [(m.flow_hash, m.technique_id) for m in matches]
    assert all(m.flow_hash in known for m in matches)
    assert len(pairs) == len(set(pairs))
    assert all(m.technique_id in T.CATALOG for m in matches)


def test_disabling_a_rule_removes_exactly_its_matches():
    corpus = generate_corpus(SynthConfig(n_malicious=50, n_benign=50, seed=13))
    graph = build_graph(corpus.flows)
    baseline = set(map(tuple_of, detect(graph)))
    present = {m.technique_id for m in detect(graph)}
    for technique_id in sorted(present):
        reduced = set(map(tuple_of, detect(graph, RuleConfig().with_disabled(technique_id))))
        assert reduced == {t for t in baseline if t[2] != technique_id}


def tuple_of(match):
    return (match.flow_hash, match.sample_hash, match.technique_id)


def test_t1571_soundness_property():
    corpus = generate_corpus(SynthConfig(n_malicious=60, n_benign=60, seed=17))
    flows_by_hash = {f.flow_hash: f for f in corpus.flows}
    table = T.PORT_PROTOCOL_TABLE
    for match in detect(build_graph(corpus.flows)):
        if match.technique_id != T.T1571:
            continue
        flow = flows_by_hash[match.flow_hash]
        assert flow.applabel in table
        defaults = table[flow.applabel]
        assert flow.source_port not in defaults
        assert flow.dest_port not in defaults


def test_relational_rules_on_constructed_sample():
    base = dict(sample_hash="sR", protocol=6)
    lateral = make_flow(flow_hash="lat", unique_id=1, applabel=3389, dest_port=3389,
                        source_ip="h1", dest_ip="h2", **base)
    backflow = make_flow(flow_hash="back", unique_id=2, applabel=443, dest_port=443,
                         source_ip="h2", dest_ip="h9", **base)
    matches = detect(build_graph([lateral, backflow]))
    ids = {(m.flow_hash, m.technique_id) for m in matches}
    assert ("lat", T.T1021_001) in ids
    assert ("back", T.T1021_001) not in ids


def test_hijack_requires_time_overlap():
    common = dict(sample_hash="sH", protocol=6, applabel=22, dest_port=22)
    first = make_flow(flow_hash="a", unique_id=1, source_ip="x", dest_ip="y",
                      start_time=1000, end_time=9000, **common)
    chained = make_flow(flow_hash="b", unique_id=2, source_ip="y", dest_ip="z",
                        start_time=2000, end_time=8000, **common)
    disjoint = make_flow(flow_hash="c", unique_id=3, source_ip="y", dest_ip="w",
                         start_time=20000, end_time=30000, **common)
    ids = {(m.flow_hash, m.technique_id)
           for m in detect(build_graph([first, chained, disjoint]))}
    assert ("b", T.T1563_001) in ids
    assert ("c", T.T1563_001) not in ids


# -- aggregation ---------------------------------------------------------------

def test_aggregate_by_sample_regrouping():
    matches = [
        TtpMatch("f1", "A", T.T1571),
        TtpMatch("f2", "A", T.T1571),
        TtpMatch("f3", "B", T.T1124),
    ]
    grouped = aggregate_by_sample(matches)
    assert grouped == {"A": {T.T1571: {"f1", "f2"}}, "B": {T.T1124: {"f3"}}}


def test_aggregate_empty():
    assert aggregate_by_sample([]) == {}


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcd"), st.sampled_from("ST"),
                          st.sampled_from(sorted(T.CATALOG)[:4])), max_size=40))
def test_aggregate_conserves_pair_count(raw):
    matches = list({TtpMatch(f, s, t) for f, s, t in raw})
    grouped = aggregate_by_sample(matches)
    total = sum(len(hashes) for per in grouped.values() for hashes in per.values())
    assert total == len(matches)


# -- config and io -------------------------------------------------------------

def test_rule_config_rejects_nonpositive_threshold():
    from ttpflow.errors import ConfigError
    with pytest.raises(ConfigError):
        RuleConfig(t1071_egress_multiplier=0.0)


def test_rule_config_rejects_unknown_enable_flag():
    from ttpflow.errors import ConfigError
    with pytest.raises(ConfigError):
        RuleConfig(enabled={"T9999": True})


def test_match_file_roundtrip():
    matches = [TtpMatch("f1", "A", T.T1571), TtpMatch("f2", "B", T.T1124)]
    buffer = io.StringIO()
    write_match_file(matches, buffer)
    assert read_match_file(io.StringIO(buffer.getvalue())) == matches

from __future__ import annotations

import pytest

from ttpflow.flows import FlowRecord


FLOW_DEFAULTS = dict(
    flow_hash="f0",
    sample_hash="s0",
    unique_id=1,
    dataset="unit",
    source_port=50000,
    dest_port=80,
    start_time=1_700_000_000_000,
    end_time=1_700_000_005_000,
    duration=5.0,
    protocol=6,
    entropy=3.5,
    applabel=80,
    source_ip="10.0.0.1",
    dest_ip="10.0.0.2",
    icmp_type=None,
    icmp_code=None,
    isn=123456,
    rsn=654321,
    init_flags=2,
    union_flags=27,
    rinit_flags=18,
    runion_flags=26,
    tag=None,
    rtag=None,
    pkt=10,
    rpkt=8,
    oct=4000,
    roct=3200,
    rtt=42.0,
    end_reason="idle",
)


def make_flow(**overrides) -> FlowRecord:
    """A valid flow record with any fields overridden."""
    values = dict(FLOW_DEFAULTS)
    values.update(overrides)
    return FlowRecord(**values)


@pytest.fixture
def flow_factory():
    counter = {"n": 0}

    def factory(**overrides):
        counter["n"] += 1
        values = {"flow_hash": f"f{counter['n']}", "unique_id": counter["n"]}
        values.update(overrides)
        return make_flow(**values)

    return factory

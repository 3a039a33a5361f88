import io

import pytest
from hypothesis import given, settings, strategies as st

from ttpflow.errors import FlowParseError, MissingLabelError
from ttpflow.flows import (
    BENIGN,
    END_REASONS,
    FIELD_NAMES,
    MALICIOUS,
    FlowRecord,
    group_by_sample,
    parse_flow_file,
    parse_label_manifest,
    write_flow_file,
    write_label_manifest,
)

from conftest import FLOW_DEFAULTS, make_flow


def roundtrip(records):
    buffer = io.StringIO()
    write_flow_file(records, buffer)
    return parse_flow_file(buffer.getvalue().encode())


def test_roundtrip_identity_full_record():
    record = make_flow(pkt=10, rpkt=8)
    (parsed,) = roundtrip([record])
    assert parsed == record
    assert parsed.pkt == 10 and parsed.rpkt == 8


def test_roundtrip_preserves_absent_optionals():
    record = make_flow(icmp_type=None, isn=None, init_flags=None, tag=None)
    (parsed,) = roundtrip([record])
    assert parsed.icmp_type is None
    assert parsed.isn is None
    assert parsed.init_flags is None


def test_out_of_range_port_names_field():
    with pytest.raises(FlowParseError) as excinfo:
        make_flow(dest_port=70000)
    assert excinfo.value.field == "dest_port"


def test_out_of_range_port_in_file_carries_line_number():
    record = make_flow()
    buffer = io.StringIO()
    write_flow_file([record], buffer)
    bad = buffer.getvalue().replace("\t80\t", "\t70000\t", 1)
    with pytest.raises(FlowParseError) as excinfo:
        parse_flow_file(bad.encode())
    assert excinfo.value.line == 2
    assert excinfo.value.field == "dest_port"


def test_header_names_full_schema():
    # Hashes, ports, times, duration, protocol, entropy, applabel, IPs,
    # ICMP type/code, sequence numbers, four flag sets, VLAN tags, packet and
    # byte counters both ways, rtt, and the termination reason.
    expected = {
        "flow_hash", "sample_hash", "unique_id", "dataset",
        "source_port", "dest_port", "start_time", "end_time", "duration",
        "protocol", "entropy", "applabel", "source_ip", "dest_ip",
        "icmp_type", "icmp_code", "isn", "rsn",
        "init_flags", "union_flags", "rinit_flags", "runion_flags",
        "tag", "rtag", "pkt", "rpkt", "oct", "roct", "rtt", "end_reason",
    }
    assert set(FIELD_NAMES) == expected
    buffer = io.StringIO()
    write_flow_file([make_flow()], buffer)
    header = buffer.getvalue().splitlines()[0].split("\t")
    assert tuple(header) == FIELD_NAMES


def test_header_driven_mapping_tolerates_column_order():
    record = make_flow()
    buffer = io.StringIO()
    write_flow_file([record], buffer)
    lines = buffer.getvalue().splitlines()
    header = lines[0].split("\t")
    cells = lines[1].split("\t")
    reordered = list(zip(header, cells))[::-1]
    text = "\t".join(h for h, _ in reordered) + "\n" + "\t".join(c for _, c in reordered) + "\n"
    (parsed,) = parse_flow_file(text.encode())
    assert parsed == record


def test_empty_source_is_empty_list():
    assert parse_flow_file(b"") == []


def test_header_only_is_empty_list():
    assert parse_flow_file(("\t".join(FIELD_NAMES) + "\n").encode()) == []


def test_wrong_field_count_is_parse_error():
    text = "\t".join(FIELD_NAMES) + "\n" + "only\tthree\tcells\n"
    with pytest.raises(FlowParseError) as excinfo:
        parse_flow_file(text.encode())
    assert excinfo.value.line == 2


def test_bad_header_is_parse_error():
    with pytest.raises(FlowParseError):
        parse_flow_file(b"not\ta\tflow\theader\n")


def test_unparsable_number_names_field():
    record = make_flow()
    buffer = io.StringIO()
    write_flow_file([record], buffer)
    bad = buffer.getvalue().replace("\t3.5\t", "\tnotanumber\t")
    with pytest.raises(FlowParseError) as excinfo:
        parse_flow_file(bad.encode())
    assert excinfo.value.field == "entropy"


def test_dataset_tag_fills_empty_column_only():
    a = make_flow(flow_hash="a", dataset="")
    b = make_flow(flow_hash="b", unique_id=2, dataset="named")
    buffer = io.StringIO()
    write_flow_file([a, b], buffer)
    parsed = parse_flow_file(buffer.getvalue().encode(), dataset_tag="tagged")
    assert parsed[0].dataset == "tagged"
    assert parsed[1].dataset == "named"


@pytest.mark.parametrize(
    "field,value",
    [
        ("entropy", 8.5),
        ("entropy", -0.1),
        ("duration", -1.0),
        ("protocol", 300),
        ("pkt", -1),
        ("rtt", -0.5),
        ("end_reason", "vanished"),
    ],
)
def test_invariant_violations_rejected(field, value):
    with pytest.raises(FlowParseError) as excinfo:
        make_flow(**{field: value})
    assert excinfo.value.field == field


def test_end_before_start_rejected():
    with pytest.raises(FlowParseError):
        make_flow(start_time=10, end_time=5)


def test_pkt_without_bytes_rejected():
    with pytest.raises(FlowParseError):
        make_flow(pkt=5, oct=0)


def test_zero_pkt_zero_oct_allowed():
    record = make_flow(pkt=0, rpkt=0, oct=0, roct=0)
    assert record.pkt == 0


_optional_int = st.one_of(st.none(), st.integers(min_value=0, max_value=255))


@st.composite
def flow_records(draw):
    start = draw(st.integers(min_value=0, max_value=2**40))
    duration = draw(st.floats(min_value=0.0, max_value=1e5, allow_nan=False))
    pkt = draw(st.integers(min_value=0, max_value=10**6))
    return make_flow(
        flow_hash=draw(st.text("abcdef0123456789", min_size=1, max_size=12)),
        sample_hash=draw(st.text("abcdef0123456789", min_size=1, max_size=12)),
        unique_id=draw(st.integers(min_value=0, max_value=2**31)),
        source_port=draw(st.integers(min_value=0, max_value=65535)),
        dest_port=draw(st.integers(min_value=0, max_value=65535)),
        start_time=start,
        end_time=start + int(duration * 1000) + draw(st.integers(0, 10)),
        duration=duration,
        protocol=draw(st.integers(min_value=0, max_value=255)),
        entropy=draw(st.floats(min_value=0.0, max_value=8.0, allow_nan=False)),
        applabel=draw(st.integers(min_value=0, max_value=65535)),
        icmp_type=draw(_optional_int),
        icmp_code=draw(_optional_int),
        isn=draw(st.one_of(st.none(), st.integers(0, 2**32 - 1))),
        rsn=draw(st.one_of(st.none(), st.integers(0, 2**32 - 1))),
        init_flags=draw(_optional_int),
        union_flags=draw(_optional_int),
        rinit_flags=draw(_optional_int),
        runion_flags=draw(_optional_int),
        tag=draw(st.one_of(st.none(), st.integers(0, 4095))),
        rtag=draw(st.one_of(st.none(), st.integers(0, 4095))),
        pkt=pkt,
        rpkt=draw(st.integers(min_value=0, max_value=10**6)),
        oct=draw(st.integers(min_value=1, max_value=10**9)) if pkt > 0 else 0,
        roct=draw(st.integers(min_value=0, max_value=10**9)),
        rtt=draw(st.floats(min_value=0.0, max_value=1e5, allow_nan=False)),
        end_reason=draw(st.sampled_from(sorted(END_REASONS))),
    )


@settings(max_examples=60, deadline=None)
@given(st.lists(flow_records(), max_size=8))
def test_roundtrip_stability_property(records):
    once = roundtrip(records)
    twice = roundtrip(once)
    assert once == list(records)
    assert twice == once


# -- grouping ----------------------------------------------------------------

def _flows_for(hashes):
    return [
        make_flow(flow_hash=f"f{i}", unique_id=i, sample_hash=h)
        for i, h in enumerate(hashes)
    ]


def test_group_by_sample_partition_sizes():
    flows = _flows_for(["A", "A", "B", "B", "B"])
    samples = group_by_sample(flows, {"A": MALICIOUS, "B": BENIGN})
    assert [s.sample_hash for s in samples] == ["A", "B"]
    assert [len(s) for s in samples] == [2, 3]
    assert samples[0].label == MALICIOUS


def test_group_by_sample_empty():
    assert group_by_sample([], {}) == []


def test_group_by_sample_unknown_hash():
    flows = _flows_for(["A", "Z"])
    with pytest.raises(MissingLabelError) as excinfo:
        group_by_sample(flows, {"A": BENIGN})
    assert "Z" in str(excinfo.value)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from("ABCDE"), min_size=1, max_size=30))
def test_group_by_sample_is_partition(hashes):
    flows = _flows_for(hashes)
    labels = {h: BENIGN for h in "ABCDE"}
    samples = group_by_sample(flows, labels)
    regrouped = [f for s in samples for f in s.flows]
    assert sorted(f.flow_hash for f in regrouped) == sorted(f.flow_hash for f in flows)
    assert len({s.sample_hash for s in samples}) == len(samples)
    for sample in samples:
        assert all(f.sample_hash == sample.sample_hash for f in sample.flows)


# -- label manifest -----------------------------------------------------------

def test_label_manifest_roundtrip():
    labels = {"h2": MALICIOUS, "h1": BENIGN}
    buffer = io.StringIO()
    write_label_manifest(labels, buffer)
    assert parse_label_manifest(buffer.getvalue().encode()) == labels


def test_label_manifest_rejects_unknown_label():
    with pytest.raises(FlowParseError):
        parse_label_manifest(b"h1\tsuspicious\n")


def test_label_manifest_rejects_conflicts():
    with pytest.raises(FlowParseError):
        parse_label_manifest(b"h1\tbenign\nh1\tmalicious\n")

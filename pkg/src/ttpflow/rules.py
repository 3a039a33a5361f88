"""Technique detection rules and the engine that runs them over the host graph.

Two rules have principled, feature-level definitions: the non-standard-port
check (T1571) and the per-sample egress-ratio anomaly (T1071). The remaining
catalog entries use documented heuristics over flow metadata; each one can be
disabled independently and every threshold is configurable. No rule reads
payload content — only flow metadata.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from . import techniques as T
from .errors import ConfigError
from .flows import FlowRecord
from .graph import HostGraph

TCP = 6
UDP = 17


@dataclass(frozen=True, slots=True)
class TtpMatch:
    """One (flow, technique) detection emitted by the engine."""

    flow_hash: str
    sample_hash: str
    technique_id: str


@dataclass(frozen=True)
class RuleConfig:
    """Thresholds, the protocol port table, and per-rule enable flags.

    Defaults are engineering choices, not measured constants; tune them to the
    deployment network.
    """

    t1071_egress_multiplier: float = 3.0
    t1590_fanout_threshold: int = 10
    t1550_kerberos_bytes_threshold: int = 2048
    t1570_transfer_bytes_threshold: int = 65536
    t1105_download_bytes_threshold: int = 1048576
    port_protocol_table: Mapping[int, frozenset[int]] = field(
        default_factory=lambda: dict(T.PORT_PROTOCOL_TABLE)
    )
    enabled: Mapping[str, bool] = field(
        default_factory=lambda: {tid: True for tid in T.CATALOG}
    )

    def __post_init__(self):
        for name in (
            "t1071_egress_multiplier",
            "t1590_fanout_threshold",
            "t1550_kerberos_bytes_threshold",
            "t1570_transfer_bytes_threshold",
            "t1105_download_bytes_threshold",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")
        if not self.port_protocol_table:
            raise ConfigError("port_protocol_table must not be empty")
        unknown = set(self.enabled) - set(T.CATALOG)
        if unknown:
            raise ConfigError(f"unknown technique ids in enable flags: {sorted(unknown)}")

    def is_enabled(self, technique_id: str) -> bool:
        return self.enabled.get(technique_id, True)

    def with_disabled(self, *technique_ids: str) -> "RuleConfig":
        flags = {tid: True for tid in T.CATALOG}
        flags.update(self.enabled)
        for tid in technique_ids:
            if tid not in T.CATALOG:
                raise ConfigError(f"unknown technique id '{tid}'")
            flags[tid] = False
        return replace(self, enabled=flags)


def match_nonstandard_port(flow: FlowRecord, table: Mapping[int, frozenset[int]]) -> bool:
    """True iff the flow's identified protocol runs on none of its default ports.

    Protocols absent from the table cannot mismatch.
    """
    defaults = table.get(flow.applabel)
    if defaults is None:
        return False
    return flow.source_port not in defaults and flow.dest_port not in defaults


def match_egress_anomaly(sample_flows: Sequence[FlowRecord], multiplier: float) -> list[str]:
    """Flag flows whose packet out/in ratio is far above the sample baseline.

    Each flow's ratio is pkt / max(rpkt, 1); the baseline is the arithmetic
    mean of the ratios over the sample, and a flow is flagged when its ratio
    is >= multiplier * baseline. Empty input yields an empty result.
    """
    if not sample_flows:
        return []
    ratios = [f.pkt / max(f.rpkt, 1) for f in sample_flows]
    baseline = sum(ratios) / len(ratios)
    threshold = multiplier * baseline
    return [f.flow_hash for f, r in zip(sample_flows, ratios) if r >= threshold]


# --- heuristic rules -------------------------------------------------------
# Each rule returns the set of matching flow hashes for one sample. Rules that
# need cross-flow context receive the whole sample's flow list.

def _rule_t1571(flows, config):
    return {
        f.flow_hash for f in flows
        if match_nonstandard_port(f, config.port_protocol_table)
    }


def _rule_t1071(flows, config):
    return set(match_egress_anomaly(flows, config.t1071_egress_multiplier))


def _rule_t1124(flows, config):
    # Time-sync lookups: NTP applabel, or any UDP flow to the NTP port.
    return {
        f.flow_hash for f in flows
        if f.applabel == T.APPLABEL_NTP or (f.protocol == UDP and f.dest_port == 123)
    }


def _rule_t1135(flows, config):
    # Share enumeration rides SMB/NetBIOS session traffic.
    return {
        f.flow_hash for f in flows
        if f.protocol == TCP
        and (f.dest_port in (445, 139) or f.applabel in (T.APPLABEL_SMB, T.APPLABEL_NETBIOS))
    }


def _remote_service_flows(flows, applabel):
    return [f for f in flows if f.protocol == TCP and f.applabel == applabel]


def _rule_t1021(flows, config, applabel):
    # Lateral remote-service use: the destination is itself an active host in
    # the sample (it originates at least one flow).
    sources = {f.source_ip for f in flows}
    return {
        f.flow_hash
        for f in _remote_service_flows(flows, applabel)
        if f.source_ip != f.dest_ip and f.dest_ip in sources
    }


def _rule_t1550(flows, config):
    # Outsized Kerberos exchanges suggest ticket material in transit.
    threshold = config.t1550_kerberos_bytes_threshold
    return {
        f.flow_hash for f in flows
        if f.dest_port == 88 and f.oct > threshold
    }


def _overlaps(a: FlowRecord, b: FlowRecord) -> bool:
    return a.start_time <= b.end_time and b.start_time <= a.end_time


def _rule_t1563(flows, config, applabel):
    # Chained interactive sessions: an RDP/SSH flow whose source is, at an
    # overlapping time, the destination of another RDP/SSH flow.
    session_flows = [
        f for f in flows
        if f.protocol == TCP and f.applabel in (T.APPLABEL_RDP, T.APPLABEL_SSH)
    ]
    matched = set()
    for f in session_flows:
        if f.applabel != applabel:
            continue
        for g in session_flows:
            if g is not f and g.dest_ip == f.source_ip and _overlaps(f, g):
                matched.add(f.flow_hash)
                break
    return matched


def _rule_t1570(flows, config):
    # Bulk SMB copy between two hosts that are both active sources elsewhere.
    threshold = config.t1570_transfer_bytes_threshold
    matched = set()
    for f in flows:
        if f.protocol != TCP or f.dest_port != 445 or f.oct <= threshold:
            continue
        src_elsewhere = any(
            g is not f and g.source_ip == f.source_ip for g in flows
        )
        dst_sources = any(
            g is not f and g.source_ip == f.dest_ip for g in flows
        )
        if src_elsewhere and dst_sources:
            matched.add(f.flow_hash)
    return matched


def _rule_t1090(flows, config):
    return {
        f.flow_hash for f in flows
        if f.dest_port in T.PROXY_PORTS or f.applabel == T.APPLABEL_SOCKS
    }


def _rule_t1105(flows, config):
    # Inbound tool fetch: download-dominated transfer over HTTP/HTTPS/FTP.
    threshold = config.t1105_download_bytes_threshold
    web_labels = (T.APPLABEL_HTTP, T.APPLABEL_HTTPS, T.APPLABEL_FTP)
    return {
        f.flow_hash for f in flows
        if f.applabel in web_labels and f.roct > threshold and f.roct > 10 * f.oct
    }


def _rule_t1053(flows, config):
    # Remote task scheduling traverses the RPC endpoint mapper alongside SMB.
    smb_pairs = {
        (f.source_ip, f.dest_ip) for f in flows
        if f.protocol == TCP and f.dest_port == 445
    }
    return {
        f.flow_hash for f in flows
        if f.dest_port == 135 and (f.source_ip, f.dest_ip) in smb_pairs
    }


def _rule_t1557(flows, config):
    # A poisoning responder answers name queries from several distinct hosts.
    answered = [
        f for f in flows
        if f.protocol == UDP and f.dest_port in (5355, 137) and f.rpkt > 0
    ]
    sources_per_responder: dict[str, set[str]] = {}
    for f in answered:
        sources_per_responder.setdefault(f.dest_ip, set()).add(f.source_ip)
    return {
        f.flow_hash for f in answered
        if len(sources_per_responder[f.dest_ip]) >= 2
    }


def _rule_t1590(flows, config, graph: HostGraph, sample_hash: str):
    # Unanswered fan-out looks like scanning; flag the scanning host's flows.
    matched = set()
    for host in {f.source_ip for f in flows}:
        if graph.fan_out(host, sample_hash) < config.t1590_fanout_threshold:
            continue
        outgoing = [f for f in flows if f.source_ip == host]
        unanswered = sum(1 for f in outgoing if f.rpkt == 0)
        if 2 * unanswered >= len(outgoing):
            matched.update(f.flow_hash for f in outgoing)
    return matched


_SIMPLE_RULES: dict[str, Callable] = {
    T.T1053: _rule_t1053,
    T.T1071: _rule_t1071,
    T.T1090: _rule_t1090,
    T.T1105: _rule_t1105,
    T.T1124: _rule_t1124,
    T.T1135: _rule_t1135,
    T.T1550_003: _rule_t1550,
    T.T1557_001: _rule_t1557,
    T.T1570: _rule_t1570,
    T.T1571: _rule_t1571,
}


def _sample_matches(flows, config, graph, sample_hash) -> dict[str, set[str]]:
    """Evaluate every enabled rule on one sample; technique id -> flow hashes."""
    out: dict[str, set[str]] = {}
    for tid, rule in _SIMPLE_RULES.items():
        if config.is_enabled(tid):
            out[tid] = rule(flows, config)
    if config.is_enabled(T.T1021_001):
        out[T.T1021_001] = _rule_t1021(flows, config, T.APPLABEL_RDP)
    if config.is_enabled(T.T1021_004):
        out[T.T1021_004] = _rule_t1021(flows, config, T.APPLABEL_SSH)
    if config.is_enabled(T.T1563_001):
        out[T.T1563_001] = _rule_t1563(flows, config, T.APPLABEL_SSH)
    if config.is_enabled(T.T1563_002):
        out[T.T1563_002] = _rule_t1563(flows, config, T.APPLABEL_RDP)
    if config.is_enabled(T.T1590):
        out[T.T1590] = _rule_t1590(flows, config, graph, sample_hash)
    return out


def detect(graph: HostGraph, config: RuleConfig | None = None) -> list[TtpMatch]:
    """Run every enabled rule over every sample in the graph.

    The result is deterministic: matches are de-duplicated per
    (flow, technique) and sorted by (sample_hash, technique_id, flow_hash).
    Disabled rules contribute nothing.
    """
    if config is None:
        config = RuleConfig()
    matches: list[TtpMatch] = []
    for sample_hash in sorted(graph.sample_hashes()):
        flows = graph.flows_of_sample(sample_hash)
        per_technique = _sample_matches(flows, config, graph, sample_hash)
        for technique_id in sorted(per_technique):
            for flow_hash in sorted(per_technique[technique_id]):
                matches.append(TtpMatch(flow_hash, sample_hash, technique_id))
    matches.sort(key=lambda m: (m.sample_hash, m.technique_id, m.flow_hash))
    return matches


def aggregate_by_sample(matches: Iterable[TtpMatch]) -> dict[str, dict[str, set[str]]]:
    """Regroup matches: sample hash -> technique id -> set of flow hashes."""
    out: dict[str, dict[str, set[str]]] = {}
    for match in matches:
        out.setdefault(match.sample_hash, {}).setdefault(match.technique_id, set()).add(
            match.flow_hash
        )
    return out


def write_match_file(matches: Iterable[TtpMatch], dest) -> None:
    """Write tab-separated (sample_hash, flow_hash, technique_id) lines."""
    if isinstance(dest, (str, os.PathLike)):
        stream = open(dest, "w", encoding="utf-8", newline="")
        close = True
    else:
        stream, close = dest, False
    try:
        for m in matches:
            stream.write(f"{m.sample_hash}\t{m.flow_hash}\t{m.technique_id}\n")
    finally:
        if close:
            stream.close()


def read_match_file(source) -> list[TtpMatch]:
    if isinstance(source, (str, os.PathLike)):
        stream = open(source, encoding="utf-8", newline="")
        close = True
    else:
        stream, close = source, False
    try:
        matches = []
        for line in stream:
            line = line.rstrip("\n")
            if not line:
                continue
            sample_hash, flow_hash, technique_id = line.split("\t")
            matches.append(TtpMatch(flow_hash, sample_hash, technique_id))
        return matches
    finally:
        if close:
            stream.close()

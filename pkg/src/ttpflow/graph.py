"""In-memory host-communication graph.

Hosts (IP addresses) are nodes; every flow is one directed edge from its
source host to its destination host. The graph is built once and then only
read, so lookups are plain dict/list accesses with no locking.
"""

from __future__ import annotations

import os
from typing import Iterable, Iterator

from .flows import FlowRecord


class HostGraph:
    """Write-once directed multigraph of hosts with per-sample and per-host indexes."""

    def __init__(self, flows: Iterable[FlowRecord] = ()):
        self._edges: list[FlowRecord] = []
        self._nodes: set[str] = set()
        self._by_sample: dict[str, list[FlowRecord]] = {}
        self._out: dict[str, list[FlowRecord]] = {}
        self._in: dict[str, list[FlowRecord]] = {}
        for flow in flows:
            self._add(flow)

    def _add(self, flow: FlowRecord) -> None:
        self._edges.append(flow)
        self._nodes.add(flow.source_ip)
        self._nodes.add(flow.dest_ip)
        self._by_sample.setdefault(flow.sample_hash, []).append(flow)
        self._out.setdefault(flow.source_ip, []).append(flow)
        self._in.setdefault(flow.dest_ip, []).append(flow)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(self._nodes)

    def edges(self) -> Iterator[FlowRecord]:
        return iter(self._edges)

    def sample_hashes(self) -> list[str]:
        """Sample hashes in first-appearance order."""
        return list(self._by_sample)

    def flows_of_sample(self, sample_hash: str) -> list[FlowRecord]:
        """All edges indexed under `sample_hash`, in insertion order.

        Unknown hashes yield an empty list.
        """
        return list(self._by_sample.get(sample_hash, ()))

    def out_degree(self, host: str) -> int:
        return len(self._out.get(host, ()))

    def in_degree(self, host: str) -> int:
        return len(self._in.get(host, ()))

    def fan_out(self, host: str, sample_hash: str) -> int:
        """Number of distinct destination IPs `host` reaches within one sample."""
        flows = self._by_sample.get(sample_hash)
        if not flows:
            return 0
        return len({f.dest_ip for f in flows if f.source_ip == host})

    def write_edge_list(self, dest) -> None:
        """Export one line per edge: source_ip, dest_ip, flow_hash, sample_hash."""
        if isinstance(dest, (str, os.PathLike)):
            stream = open(dest, "w", encoding="utf-8", newline="")
            close = True
        else:
            stream, close = dest, False
        try:
            for flow in self._edges:
                stream.write(
                    f"{flow.source_ip}\t{flow.dest_ip}\t{flow.flow_hash}\t{flow.sample_hash}\n"
                )
        finally:
            if close:
                stream.close()


def build_graph(flows: Iterable[FlowRecord]) -> HostGraph:
    """Build the host graph from validated flows; edge count equals flow count."""
    return HostGraph(flows)

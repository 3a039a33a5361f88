"""Numeric feature vectors for flows.

Identifier-like fields (hashes, unique id, IPs, dataset tag) are deliberately
left out so a classifier cannot key on sample identity. Categorical fields are
encoded as ordinal integers; absent optional values become -1.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .flows import END_REASONS, FlowRecord

FEATURE_NAMES: tuple[str, ...] = (
    "source_port",
    "dest_port",
    "start_time",
    "end_time",
    "duration",
    "protocol",
    "entropy",
    "applabel",
    "icmp_type",
    "icmp_code",
    "isn",
    "rsn",
    "init_flags",
    "union_flags",
    "rinit_flags",
    "runion_flags",
    "tag",
    "rtag",
    "pkt",
    "rpkt",
    "oct",
    "roct",
    "rtt",
    "end_reason",
)

N_FEATURES = len(FEATURE_NAMES)

_OPTIONAL = ("icmp_type", "icmp_code", "isn", "rsn",
             "init_flags", "union_flags", "rinit_flags", "runion_flags", "tag", "rtag")


def encode_flow(flow: FlowRecord) -> np.ndarray:
    """Map one flow to its fixed-order float64 feature vector."""
    values = []
    for name in FEATURE_NAMES:
        if name == "end_reason":
            values.append(float(END_REASONS[flow.end_reason]))
            continue
        raw = getattr(flow, name)
        values.append(-1.0 if raw is None else float(raw))
    return np.asarray(values, dtype=np.float64)


def encode_flows(flows: Sequence[FlowRecord]) -> np.ndarray:
    """Stack feature vectors into an (n, N_FEATURES) matrix."""
    if not flows:
        return np.empty((0, N_FEATURES), dtype=np.float64)
    return np.stack([encode_flow(f) for f in flows])


def predicate_text(feature: int, op: str, threshold: float) -> str:
    """Human-readable form of one decision predicate, e.g. 'entropy <= 3.5'."""
    return f"{FEATURE_NAMES[feature]} {op} {threshold:.6g}"

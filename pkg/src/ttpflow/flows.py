"""Bidirectional flow records, labelled samples, and the tab-separated exchange formats.

A flow file is UTF-8 text: the first line is a header naming all fields, each
following line is one flow. Empty cells encode absent optional values. The
label manifest is headerless: two tab-separated columns, sample hash and label.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import IO, Iterable, Mapping

from .errors import DataError, FlowParseError, MissingLabelError

BENIGN = "benign"
MALICIOUS = "malicious"
LABELS = (BENIGN, MALICIOUS)

# Flow-termination reasons written to the end_reason column. The code value is
# what the feature encoder emits.
END_REASONS: dict[str, int] = {
    "idle": 1,
    "active": 2,
    "eof": 3,
    "forced": 4,
    "resource": 5,
}

# Column order of the flow file. The four *_flags fields carry the forward and
# reverse initial/union TCP flag sets as 0-255 bitmasks
# (FIN=1 SYN=2 RST=4 PSH=8 ACK=16 URG=32 ECE=64 CWR=128).
FIELD_NAMES: tuple[str, ...] = (
    "flow_hash",
    "sample_hash",
    "unique_id",
    "dataset",
    "source_port",
    "dest_port",
    "start_time",
    "end_time",
    "duration",
    "protocol",
    "entropy",
    "applabel",
    "source_ip",
    "dest_ip",
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

_OPTIONAL_INT_FIELDS = frozenset(
    {"icmp_type", "icmp_code", "isn", "rsn",
     "init_flags", "union_flags", "rinit_flags", "runion_flags", "tag", "rtag"}
)
_INT_FIELDS = frozenset(
    {"unique_id", "source_port", "dest_port", "start_time", "end_time",
     "protocol", "applabel", "pkt", "rpkt", "oct", "roct"}
)
_FLOAT_FIELDS = frozenset({"duration", "entropy", "rtt"})


@dataclass(frozen=True, slots=True)
class FlowRecord:
    """One validated bidirectional flow. Immutable and safe to share."""

    flow_hash: str
    sample_hash: str
    unique_id: int
    dataset: str
    source_port: int
    dest_port: int
    start_time: int  # UTC milliseconds
    end_time: int    # UTC milliseconds
    duration: float  # seconds
    protocol: int
    entropy: float   # bits/byte, 0..8
    applabel: int
    source_ip: str
    dest_ip: str
    icmp_type: int | None
    icmp_code: int | None
    isn: int | None
    rsn: int | None
    init_flags: int | None
    union_flags: int | None
    rinit_flags: int | None
    runion_flags: int | None
    tag: int | None
    rtag: int | None
    pkt: int
    rpkt: int
    oct: int
    roct: int
    rtt: float       # milliseconds
    end_reason: str

    def __post_init__(self):
        _require(0 <= self.source_port <= 65535, "source_port", "port outside [0, 65535]")
        _require(0 <= self.dest_port <= 65535, "dest_port", "port outside [0, 65535]")
        _require(0 <= self.protocol <= 255, "protocol", "protocol outside [0, 255]")
        _require(0.0 <= self.entropy <= 8.0, "entropy", "entropy outside [0, 8]")
        _require(self.duration >= 0.0, "duration", "negative duration")
        _require(self.end_time >= self.start_time, "end_time", "end before start")
        _require(self.applabel >= 0, "applabel", "negative applabel")
        for name in ("pkt", "rpkt", "oct", "roct"):
            _require(getattr(self, name) >= 0, name, "negative counter")
        _require(not (self.pkt > 0 and self.oct == 0), "oct", "pkt > 0 but oct == 0")
        _require(self.rtt >= 0.0, "rtt", "negative rtt")
        _require(self.end_reason in END_REASONS, "end_reason",
                 f"unknown end reason '{self.end_reason}'")
        for name in ("icmp_type", "icmp_code"):
            value = getattr(self, name)
            _require(value is None or 0 <= value <= 255, name, "outside [0, 255]")
        for name in ("isn", "rsn"):
            value = getattr(self, name)
            _require(value is None or 0 <= value <= 0xFFFFFFFF, name, "outside 32-bit range")
        for name in ("init_flags", "union_flags", "rinit_flags", "runion_flags"):
            value = getattr(self, name)
            _require(value is None or 0 <= value <= 255, name, "flag mask outside [0, 255]")
        for name in ("tag", "rtag"):
            value = getattr(self, name)
            _require(value is None or 0 <= value <= 4095, name, "VLAN tag outside [0, 4095]")

    def to_row(self) -> list[str]:
        """Serialize to the flow-file cell values, in FIELD_NAMES order."""
        cells = []
        for name in FIELD_NAMES:
            value = getattr(self, name)
            if value is None:
                cells.append("")
            elif isinstance(value, float):
                cells.append(repr(value))
            else:
                cells.append(str(value))
        return cells


@dataclass(frozen=True, slots=True)
class Sample:
    """All flows emitted by one executed sample, with its ground-truth label."""

    sample_hash: str
    label: str
    flows: tuple[FlowRecord, ...]
    dataset: str

    def __post_init__(self):
        if not self.flows:
            raise DataError(f"sample '{self.sample_hash}' has no flows")
        if self.label not in LABELS:
            raise DataError(f"sample '{self.sample_hash}' has unknown label '{self.label}'")
        for flow in self.flows:
            if flow.sample_hash != self.sample_hash:
                raise DataError(
                    f"flow '{flow.flow_hash}' carries sample hash '{flow.sample_hash}', "
                    f"expected '{self.sample_hash}'"
                )

    def __len__(self) -> int:
        return len(self.flows)


def _require(condition: bool, field: str, message: str) -> None:
    if not condition:
        raise FlowParseError(message, field=field)


def _open_text(source, mode: str = "r"):
    """Return (text stream, needs_close) for a path, bytes, or file object."""
    if isinstance(source, (str, os.PathLike)):
        return open(source, mode, encoding="utf-8", newline=""), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8")), False
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def _parse_cell(name: str, text: str, line_no: int):
    if name in _OPTIONAL_INT_FIELDS:
        if text == "":
            return None
        try:
            return int(text)
        except ValueError:
            raise FlowParseError(f"expected integer, got '{text}'", line=line_no, field=name) from None
    if text == "":
        if name == "dataset":  # fillable from the per-file tag
            return ""
        raise FlowParseError("required field is empty", line=line_no, field=name)
    if name in _INT_FIELDS:
        try:
            return int(text)
        except ValueError:
            raise FlowParseError(f"expected integer, got '{text}'", line=line_no, field=name) from None
    if name in _FLOAT_FIELDS:
        try:
            return float(text)
        except ValueError:
            raise FlowParseError(f"expected number, got '{text}'", line=line_no, field=name) from None
    return text


def parse_flow_file(source, dataset_tag: str = "") -> list[FlowRecord]:
    """Parse a flow file into validated records, preserving record order.

    `source` may be a filesystem path, bytes, or an open text/binary stream.
    `dataset_tag` fills the dataset column of records whose cell is empty.
    An empty source yields an empty list. Malformed lines raise
    :class:`FlowParseError` carrying the line number and field name.
    """
    stream, needs_close = _open_text(source)
    try:
        header_line = stream.readline()
        if header_line == "":
            return []
        header = header_line.rstrip("\n").split("\t")
        if set(header) != set(FIELD_NAMES):
            missing = sorted(set(FIELD_NAMES) - set(header))
            extra = sorted(set(header) - set(FIELD_NAMES))
            raise FlowParseError(
                f"header mismatch (missing: {missing}, unexpected: {extra})", line=1
            )

        records = []
        for line_no, line in enumerate(stream, start=2):
            line = line.rstrip("\n")
            if line == "":
                continue
            cells = line.split("\t")
            if len(cells) != len(header):
                raise FlowParseError(
                    f"expected {len(header)} fields, got {len(cells)}", line=line_no
                )
            values = {
                name: _parse_cell(name, cell, line_no)
                for name, cell in zip(header, cells)
            }
            if values["dataset"] == "" and dataset_tag:
                values["dataset"] = dataset_tag
            try:
                records.append(FlowRecord(**values))
            except FlowParseError as exc:
                raise FlowParseError(exc.message, line=line_no, field=exc.field) from None
        return records
    finally:
        if needs_close:
            stream.close()


def write_flow_file(records: Iterable[FlowRecord], dest) -> None:
    """Write records as a flow file (header plus one line per record)."""
    stream, needs_close = _open_stream_for_write(dest)
    try:
        stream.write("\t".join(FIELD_NAMES) + "\n")
        for record in records:
            stream.write("\t".join(record.to_row()) + "\n")
    finally:
        if needs_close:
            stream.close()


def _open_stream_for_write(dest):
    if isinstance(dest, (str, os.PathLike)):
        return open(dest, "w", encoding="utf-8", newline=""), True
    return dest, False


def parse_label_manifest(source) -> dict[str, str]:
    """Parse the two-column (sample_hash, label) manifest."""
    stream, needs_close = _open_text(source)
    try:
        labels: dict[str, str] = {}
        for line_no, line in enumerate(stream, start=1):
            line = line.rstrip("\n")
            if line == "":
                continue
            cells = line.split("\t")
            if len(cells) != 2:
                raise FlowParseError("expected 2 columns", line=line_no)
            sample_hash, label = cells
            if label not in LABELS:
                raise FlowParseError(
                    f"label must be one of {LABELS}, got '{label}'",
                    line=line_no, field="label",
                )
            if sample_hash in labels and labels[sample_hash] != label:
                raise FlowParseError(
                    f"conflicting labels for sample '{sample_hash}'",
                    line=line_no, field="sample_hash",
                )
            labels[sample_hash] = label
        return labels
    finally:
        if needs_close:
            stream.close()


def write_label_manifest(labels: Mapping[str, str], dest) -> None:
    stream, needs_close = _open_stream_for_write(dest)
    try:
        for sample_hash in sorted(labels):
            stream.write(f"{sample_hash}\t{labels[sample_hash]}\n")
    finally:
        if needs_close:
            stream.close()


def group_by_sample(flows: Iterable[FlowRecord], labels: Mapping[str, str]) -> list[Sample]:
    """Partition flows into one Sample per distinct sample hash.

    Samples are returned in order of first appearance; each sample's flows
    keep their input order. A flow whose hash is absent from `labels` raises
    :class:`MissingLabelError`.
    """
    grouped: dict[str, list[FlowRecord]] = {}
    for flow in flows:
        if flow.sample_hash not in labels:
            raise MissingLabelError(flow.sample_hash)
        grouped.setdefault(flow.sample_hash, []).append(flow)
    return [
        Sample(
            sample_hash=sample_hash,
            label=labels[sample_hash],
            flows=tuple(members),
            dataset=members[0].dataset,
        )
        for sample_hash, members in grouped.items()
    ]

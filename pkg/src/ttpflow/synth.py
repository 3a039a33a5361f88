"""Labelled synthetic flow corpora with planted technique behaviours.

Every planted behaviour is constructed to satisfy the corresponding detection
rule under the default RuleConfig, and the generator records the complete set
of (sample, flow, technique) matches its constructions will trigger, including
deliberate side matches (an SMB companion flow of a scheduled-task plant is
itself a share-discovery match, a hijack chain contains a remote-service
match). With incidental suppression on (the default), non-planted flows are
drawn from port/protocol/ratio envelopes outside every rule's trigger set, so
the recorded ground truth is exactly what detection must recover.

Benign samples also use techniques, with their own planting rates; the
`separation` parameter delta in [0, 1] controls how far malicious technique
usage drifts from benign usage in duration, entropy, round-trip time, and
forward bytes per packet. At delta=0 the two usages are identically
distributed; at delta=1 they are almost disjoint.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from . import techniques as T
from .errors import ConfigError
from .flows import BENIGN, MALICIOUS, FlowRecord
from .rules import TtpMatch

# Feature-shift spans (separation=1 moves each mean by ~6 sigma).
_DUR_SIGMA, _DUR_SPAN = 1.2, 7.2
_ENT_SIGMA, _ENT_SPAN = 0.55, 3.3
_RTT_SIGMA, _RTT_SPAN = 9.0, 54.0
_BPP_SIGMA, _BPP_SPAN = 60.0, 360.0

# (duration mean, entropy mean, rtt mean, fwd bytes/packet mean) per technique;
# identical for both labels, the separation shift is the only label signal.
_PROFILES: dict[str, tuple[float, float, float, float]] = {
    T.T1571: (4.0, 3.2, 40.0, 420.0),
    T.T1124: (1.0, 2.2, 30.0, 160.0),
    T.T1135: (2.5, 2.8, 25.0, 300.0),
    T.T1071: (6.0, 3.4, 45.0, 380.0),
    T.T1105: (8.0, 3.0, 50.0, 56.0),
    T.T1090: (5.0, 3.5, 60.0, 450.0),
    T.T1021_001: (30.0, 3.0, 35.0, 500.0),
    T.T1021_004: (25.0, 3.1, 35.0, 420.0),
    T.T1550_003: (1.5, 2.9, 25.0, 360.0),
    T.T1557_001: (0.5, 2.0, 10.0, 90.0),
    T.T1563_001: (20.0, 3.1, 35.0, 400.0),
    T.T1563_002: (22.0, 3.0, 35.0, 480.0),
    T.T1570: (12.0, 3.3, 20.0, 1100.0),
    T.T1053: (2.0, 2.6, 25.0, 220.0),
    T.T1590: (0.3, 1.5, 5.0, 80.0),
}

# Techniques whose forward bytes/packet may shift with separation; the others
# have byte-level rule constraints or no trained classifier worth feeding.
_BPP_SHIFTED = frozenset({T.T1571, T.T1124, T.T1135, T.T1071})

DEFAULT_PLANT_PROBS: dict[str, tuple[float, float]] = {
    # technique: (P(plant | malicious sample), P(plant | benign sample))
    T.T1571: (0.82, 0.78),
    T.T1124: (0.68, 0.64),
    T.T1135: (0.18, 0.10),
    T.T1071: (0.25, 0.15),
    T.T1105: (0.20, 0.14),
    T.T1090: (0.06, 0.004),
    T.T1021_001: (0.02, 0.002),
    T.T1021_004: (0.02, 0.002),
    T.T1550_003: (0.015, 0.001),
    T.T1563_001: (0.008, 0.0),
    T.T1563_002: (0.008, 0.0),
    T.T1570: (0.008, 0.0),
    T.T1053: (0.012, 0.002),
    T.T1557_001: (0.006, 0.0),
    T.T1590: (0.012, 0.001),
}

_EPOCH_MS = 1_700_000_000_000
_WINDOW_MS = 30 * 86_400 * 1000

_BACKGROUND_APPLABELS = (80, 443, 53, 25, 110)
_TCP, _UDP = 6, 17
_END_REASONS = ("idle", "active", "eof")


@dataclass(frozen=True)
class SynthConfig:
    n_malicious: int = 200
    n_benign: int = 200
    flows_per_sample: tuple[int, int] = (6, 14)
    plant_probs: Mapping[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_PLANT_PROBS)
    )
    separation: float = 0.8
    seed: int = 20240
    suppress_incidental: bool = True
    dataset: str = "synthetic"

    def __post_init__(self):
        if self.n_malicious <= 0 or self.n_benign <= 0:
            raise ConfigError("sample counts must be positive")
        lo, hi = self.flows_per_sample
        if lo < 1 or hi < lo:
            raise ConfigError("flows_per_sample must be a range with 1 <= lo <= hi")
        if not 0.0 <= self.separation <= 1.0:
            raise ConfigError("separation must lie in [0, 1]")
        for tid, (p_mal, p_ben) in self.plant_probs.items():
            if tid not in T.CATALOG:
                raise ConfigError(f"unknown technique '{tid}' in plant_probs")
            if not (0.0 <= p_mal <= 1.0 and 0.0 <= p_ben <= 1.0):
                raise ConfigError(f"plant probabilities for {tid} outside [0, 1]")


@dataclass
class SynthCorpus:
    flows: list[FlowRecord]
    labels: dict[str, str]
    truth: list[TtpMatch]
    config: SynthConfig


class _SampleBuilder:
    """Accumulates flows, fresh IPs, and planted-match truth for one sample."""

    def __init__(self, gen: "_Generator", index: int, malicious: bool):
        self.gen = gen
        self.sample_hash = _digest(f"{gen.config.seed}:sample:{index}")
        self.malicious = malicious
        self.delta = gen.config.separation if malicious else 0.0
        self._ip_counter = 0
        self._ip_prefix = f"10.{(index >> 8) % 256}.{index % 256}"
        self.origin = self.fresh_ip()
        self.flows: list[FlowRecord] = []
        self.truth: list[tuple[str, str]] = []  # (flow_hash, technique_id)

    def fresh_ip(self) -> str:
        self._ip_counter += 1
        return f"{self._ip_prefix}.{self._ip_counter}"

    def add(self, flow: FlowRecord, *techniques: str) -> FlowRecord:
        self.flows.append(flow)
        for tid in techniques:
            self.truth.append((flow.flow_hash, tid))
        return flow


def _digest(text: str) -> str:
    return hashlib.sha1(text.encode()).hexdigest()[:16]


class _Generator:
    def __init__(self, config: SynthConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self._unique_id = 0

    # -- low-level draws ----------------------------------------------------

    def _clipped_normal(self, mean: float, sigma: float, lo: float, hi: float) -> float:
        return float(np.clip(self.rng.normal(mean, sigma), lo, hi))

    def _shifted_profile(self, technique: str, delta: float) -> tuple[float, float, float, int]:
        """Draw (duration, entropy, rtt, bytes/packet) for one technique usage."""
        dur_m, ent_m, rtt_m, bpp_m = _PROFILES[technique]
        duration = self._clipped_normal(dur_m + delta * _DUR_SPAN, _DUR_SIGMA, 0.01, 1e6)
        entropy = self._clipped_normal(ent_m + delta * _ENT_SPAN, _ENT_SIGMA, 0.0, 8.0)
        rtt = self._clipped_normal(rtt_m + delta * _RTT_SPAN, _RTT_SIGMA, 0.1, 1e6)
        bpp_shift = delta * _BPP_SPAN if technique in _BPP_SHIFTED else 0.0
        bpp = int(self._clipped_normal(bpp_m + bpp_shift, _BPP_SIGMA, 40.0, 1e5))
        return duration, entropy, rtt, bpp

    def _balanced_packets(self, lo: int, hi: int) -> tuple[int, int]:
        """Forward/reverse packet counts whose ratio stays within [0.87, 2.0].

        The egress-anomaly rule flags ratios >= 3x the sample mean; keeping
        every ordinary flow inside this envelope guarantees only deliberately
        planted egress flows can cross that threshold.
        """
        pkt = int(self.rng.integers(lo, hi + 1))
        rpkt = max(1, round(pkt / self.rng.uniform(0.9, 1.5)))
        return pkt, rpkt

    def _nonstandard_port(self) -> int:
        # 20000-39999 contains no default port of any table protocol and none
        # of the heuristic rules' trigger ports.
        return int(self.rng.integers(20000, 40000))

    def _ephemeral_port(self) -> int:
        return int(self.rng.integers(49152, 65536))

    def _times(self, duration: float) -> tuple[int, int]:
        start = _EPOCH_MS + int(self.rng.integers(0, _WINDOW_MS))
        return start, start + int(duration * 1000.0)

    def _flow(self, sb: _SampleBuilder, *, src: str, dst: str, sport: int, dport: int,
              protocol: int, applabel: int, duration: float, entropy: float, rtt: float,
              pkt: int, rpkt: int, oct_: int, roct: int,
              start: int | None = None, end: int | None = None) -> FlowRecord:
        self._unique_id += 1
        if start is None:
            start, end = self._times(duration)
        tcp = protocol == _TCP
        answered = rpkt > 0
        return FlowRecord(
            flow_hash=_digest(f"{sb.sample_hash}:flow:{self._unique_id}"),
            sample_hash=sb.sample_hash,
            unique_id=self._unique_id,
            dataset=self.config.dataset,
            source_port=sport,
            dest_port=dport,
            start_time=start,
            end_time=end,
            duration=duration,
            protocol=protocol,
            entropy=entropy,
            applabel=applabel,
            source_ip=src,
            dest_ip=dst,
            icmp_type=None,
            icmp_code=None,
            isn=int(self.rng.integers(0, 2**32)) if tcp else None,
            rsn=int(self.rng.integers(0, 2**32)) if tcp and answered else None,
            init_flags=2 if tcp else None,  # SYN
            union_flags=int(self.rng.choice((26, 27, 30, 31))) if tcp else None,
            rinit_flags=18 if tcp and answered else None,  # SYN|ACK
            runion_flags=int(self.rng.choice((26, 27, 30))) if tcp and answered else None,
            tag=None,
            rtag=None,
            pkt=pkt,
            rpkt=rpkt,
            oct=oct_,
            roct=roct,
            rtt=rtt if answered else 0.0,
            end_reason=str(self.rng.choice(_END_REASONS)),
        )

    # -- background traffic --------------------------------------------------

    def _background_flow(self, sb: _SampleBuilder) -> FlowRecord:
        suppress = self.config.suppress_incidental
        applabel = int(self.rng.choice(_BACKGROUND_APPLABELS))
        if suppress:
            dport = applabel  # default port: the non-standard-port rule cannot fire
        else:
            dport = int(self.rng.integers(1, 65536))
        protocol = _UDP if applabel == 53 else _TCP
        duration = self._clipped_normal(3.0, 1.2, 0.01, 1e6)
        entropy = self._clipped_normal(3.0, 0.6, 0.0, 8.0)
        rtt = self._clipped_normal(35.0, 9.0, 0.1, 1e6)
        pkt, rpkt = self._balanced_packets(4, 40)
        if not suppress and self.rng.uniform() < 0.1:
            rpkt = 0
        bpp = int(self.rng.uniform(120, 600))
        oct_ = pkt * bpp
        roct = rpkt * int(self.rng.uniform(120, 1400))
        return self._flow(
            sb, src=sb.origin, dst=sb.fresh_ip(),
            sport=self._ephemeral_port(), dport=dport,
            protocol=protocol, applabel=applabel,
            duration=duration, entropy=entropy, rtt=rtt,
            pkt=pkt, rpkt=rpkt, oct_=oct_, roct=roct,
        )

    # -- planted behaviours ---------------------------------------------------
    # Each planter adds its flows to the builder together with every match the
    # detection rules will produce for them.

    def _plant_t1571(self, sb):
        duration, entropy, rtt, bpp = self._shifted_profile(T.T1571, sb.delta)
        applabel = int(self.rng.choice((80, 443, 25, 110, 143)))
        pkt, rpkt = self._balanced_packets(5, 30)
        sb.add(
            self._flow(
                sb, src=sb.origin, dst=sb.fresh_ip(),
                sport=self._ephemeral_port(), dport=self._nonstandard_port(),
                protocol=_TCP, applabel=applabel,
                duration=duration, entropy=entropy, rtt=rtt,
                pkt=pkt, rpkt=rpkt, oct_=pkt * bpp,
                roct=rpkt * int(self.rng.uniform(200, 700)),
            ),
            T.T1571,
        )

    def _plant_t1124(self, sb):
        duration, entropy, rtt, bpp = self._shifted_profile(T.T1124, sb.delta)
        pkt = int(self.rng.integers(1, 5))
        sb.add(
            self._flow(
                sb, src=sb.origin, dst=sb.fresh_ip(),
                sport=self._ephemeral_port(), dport=123,
                protocol=_UDP, applabel=T.APPLABEL_NTP,
                duration=duration, entropy=entropy, rtt=rtt,
                pkt=pkt, rpkt=pkt, oct_=pkt * bpp, roct=pkt * bpp,
            ),
            T.T1124,
        )

    def _smb_flow(self, sb, dst: str) -> FlowRecord:
        # Small SMB exchange: a share-discovery match, safely below the
        # lateral-transfer byte threshold.
        duration, entropy, rtt, bpp = self._shifted_profile(T.T1135, sb.delta)
        pkt, rpkt = self._balanced_packets(6, 20)
        return self._flow(
            sb, src=sb.origin, dst=dst,
            sport=self._ephemeral_port(), dport=445,
            protocol=_TCP, applabel=T.APPLABEL_SMB,
            duration=duration, entropy=entropy, rtt=rtt,
            pkt=pkt, rpkt=rpkt, oct_=min(pkt * bpp, 60000),
            roct=rpkt * int(self.rng.uniform(150, 600)),
        )

    def _plant_t1135(self, sb):
        sb.add(self._smb_flow(sb, sb.fresh_ip()), T.T1135)

    def _plant_t1071(self, sb):
        # Egress burst: ratio 60-90 against a sample envelope capped at 2.0,
        # so the flow sits far above 3x any achievable baseline.
        duration, entropy, rtt, bpp = self._shifted_profile(T.T1071, sb.delta)
        pkt = int(self.rng.integers(60, 91))
        sb.add(
            self._flow(
                sb, src=sb.origin, dst=sb.fresh_ip(),
                sport=self._ephemeral_port(), dport=80,
                protocol=_TCP, applabel=T.APPLABEL_HTTP,
                duration=duration, entropy=entropy, rtt=rtt,
                pkt=pkt, rpkt=1, oct_=pkt * bpp,
                roct=int(self.rng.uniform(200, 600)),
            ),
            T.T1071,
        )

    def _plant_t1105(self, sb):
        duration, entropy, rtt, _ = self._shifted_profile(T.T1105, sb.delta)
        rpkt = int(self.rng.integers(850, 1501))
        pkt = max(1, round(rpkt * self.rng.uniform(0.9, 1.4)))
        applabel = int(self.rng.choice((80, 443, 21)))
        sb.add(
            self._flow(
                sb, src=sb.origin, dst=sb.fresh_ip(),
                sport=self._ephemeral_port(), dport=applabel,
                protocol=_TCP, applabel=applabel,
                duration=duration, entropy=entropy, rtt=rtt,
                pkt=pkt, rpkt=rpkt, oct_=pkt * int(self.rng.uniform(52, 60)),
                roct=rpkt * 1450,
            ),
            T.T1105,
        )

    def _plant_t1090(self, sb):
        duration, entropy, rtt, bpp = self._shifted_profile(T.T1090, sb.delta)
        pkt, rpkt = self._balanced_packets(10, 60)
        sb.add(
            self._flow(
                sb, src=sb.origin, dst=sb.fresh_ip(),
                sport=self._ephemeral_port(),
                dport=int(self.rng.choice(sorted(T.PROXY_PORTS))),
                protocol=_TCP, applabel=0,
                duration=duration, entropy=entropy, rtt=rtt,
                pkt=pkt, rpkt=rpkt, oct_=pkt * bpp,
                roct=rpkt * int(self.rng.uniform(200, 900)),
            ),
            T.T1090,
        )

    def _session_flow(self, sb, technique: str, src: str, dst: str,
                      start: int | None = None, end: int | None = None) -> FlowRecord:
        applabel = T.APPLABEL_RDP if technique in (T.T1021_001, T.T1563_002) else T.APPLABEL_SSH
        duration, entropy, rtt, bpp = self._shifted_profile(technique, sb.delta)
        if start is not None:
            duration = (end - start) / 1000.0  # keep the duration field consistent
        pkt, rpkt = self._balanced_packets(40, 200)
        return self._flow(
            sb, src=src, dst=dst,
            sport=self._ephemeral_port(), dport=applabel,
            protocol=_TCP, applabel=applabel,
            duration=duration, entropy=entropy, rtt=rtt,
            pkt=pkt, rpkt=rpkt, oct_=pkt * bpp,
            roct=rpkt * int(self.rng.uniform(200, 900)),
            start=start, end=end,
        )

    def _plant_t1021(self, sb, technique: str):
        # Lateral service use: destination must originate traffic of its own.
        target = sb.fresh_ip()
        sb.add(self._session_flow(sb, technique, sb.origin, target), technique)
        companion = self._background_like(sb, src=target)
        sb.add(companion)

    def _background_like(self, sb, src: str) -> FlowRecord:
        applabel = int(self.rng.choice((80, 443)))
        duration = self._clipped_normal(2.0, 0.8, 0.01, 1e6)
        pkt, rpkt = self._balanced_packets(4, 20)
        return self._flow(
            sb, src=src, dst=sb.fresh_ip(),
            sport=self._ephemeral_port(), dport=applabel,
            protocol=_TCP, applabel=applabel,
            duration=duration,
            entropy=self._clipped_normal(3.0, 0.6, 0.0, 8.0),
            rtt=self._clipped_normal(35.0, 9.0, 0.1, 1e6),
            pkt=pkt, rpkt=rpkt, oct_=pkt * int(self.rng.uniform(120, 600)),
            roct=rpkt * int(self.rng.uniform(120, 1400)),
        )

    def _plant_t1563(self, sb, technique: str):
        # Hijack chain: origin -> pivot and, overlapping in time, pivot -> target
        # over the same service. The first hop is itself a lateral-service
        # match because the pivot originates traffic.
        entry_tech = T.T1021_001 if technique == T.T1563_002 else T.T1021_004
        pivot, target = sb.fresh_ip(), sb.fresh_ip()
        first = self._session_flow(sb, entry_tech, sb.origin, pivot)
        sb.add(first, entry_tech)
        inner_start = first.start_time + (first.end_time - first.start_time) // 4
        inner_end = max(inner_start, first.end_time - 1)
        second = self._session_flow(sb, technique, pivot, target,
                                    start=inner_start, end=inner_end)
        sb.add(second, technique)

    def _plant_t1550(self, sb):
        duration, entropy, rtt, _ = self._shifted_profile(T.T1550_003, sb.delta)
        pkt, rpkt = self._balanced_packets(8, 14)
        sb.add(
            self._flow(
                sb, src=sb.origin, dst=sb.fresh_ip(),
                sport=self._ephemeral_port(), dport=88,
                protocol=_TCP, applabel=T.APPLABEL_KERBEROS,
                duration=duration, entropy=entropy, rtt=rtt,
                pkt=pkt, rpkt=rpkt, oct_=pkt * int(self.rng.uniform(300, 450)),
                roct=rpkt * int(self.rng.uniform(200, 500)),
            ),
            T.T1550_003,
        )

    def _plant_t1570(self, sb):
        # Bulk SMB copy between two hosts that both source other traffic; the
        # transfer is simultaneously a share-discovery match.
        duration, entropy, rtt, _ = self._shifted_profile(T.T1570, sb.delta)
        peer = sb.fresh_ip()
        pkt, rpkt = self._balanced_packets(80, 140)
        transfer = self._flow(
            sb, src=sb.origin, dst=peer,
            sport=self._ephemeral_port(), dport=445,
            protocol=_TCP, applabel=T.APPLABEL_SMB,
            duration=duration, entropy=entropy, rtt=rtt,
            pkt=pkt, rpkt=rpkt, oct_=pkt * int(self.rng.uniform(900, 1300)),
            roct=rpkt * int(self.rng.uniform(100, 200)),
        )
        sb.add(transfer, T.T1570, T.T1135)
        sb.add(self._background_like(sb, src=peer))

    def _plant_t1053(self, sb):
        # RPC endpoint-mapper flow paired with SMB to the same destination;
        # the SMB companion is a share-discovery match in its own right.
        target = sb.fresh_ip()
        duration, entropy, rtt, bpp = self._shifted_profile(T.T1053, sb.delta)
        pkt, rpkt = self._balanced_packets(4, 12)
        rpc = self._flow(
            sb, src=sb.origin, dst=target,
            sport=self._ephemeral_port(), dport=135,
            protocol=_TCP, applabel=135,
            duration=duration, entropy=entropy, rtt=rtt,
            pkt=pkt, rpkt=rpkt, oct_=pkt * bpp,
            roct=rpkt * int(self.rng.uniform(150, 500)),
        )
        sb.add(rpc, T.T1053)
        sb.add(self._smb_flow(sb, target), T.T1135)

    def _plant_t1557(self, sb):
        # A responder answering LLMNR queries from two distinct hosts.
        responder = sb.fresh_ip()
        duration, entropy, rtt, bpp = self._shifted_profile(T.T1557_001, sb.delta)
        for _ in range(2):
            pkt = int(self.rng.integers(2, 6))
            sb.add(
                self._flow(
                    sb, src=sb.fresh_ip(), dst=responder,
                    sport=self._ephemeral_port(), dport=5355,
                    protocol=_UDP, applabel=0,
                    duration=duration, entropy=entropy, rtt=rtt,
                    pkt=pkt, rpkt=pkt, oct_=pkt * bpp, roct=pkt * bpp,
                ),
                T.T1557_001,
            )

    def _plant_t1590(self, sb, fanout_threshold: int = 10):
        # Scan burst from a dedicated host: wide fan-out, mostly unanswered.
        scanner = sb.fresh_ip()
        n_targets = fanout_threshold + int(self.rng.integers(0, 4))
        n_answered = n_targets - max(int(round(0.7 * n_targets)), (n_targets + 1) // 2)
        for i in range(n_targets):
            duration, entropy, rtt, bpp = self._shifted_profile(T.T1590, sb.delta)
            answered = i < n_answered
            pkt = int(self.rng.integers(1, 3))
            sb.add(
                self._flow(
                    sb, src=scanner, dst=sb.fresh_ip(),
                    sport=self._ephemeral_port(), dport=self._nonstandard_port(),
                    protocol=_TCP, applabel=0,
                    duration=duration, entropy=entropy, rtt=rtt,
                    pkt=pkt, rpkt=1 if answered else 0,
                    oct_=pkt * bpp, roct=int(self.rng.uniform(60, 120)) if answered else 0,
                ),
                T.T1590,
            )

    # -- corpus assembly -----------------------------------------------------

    _PLANTERS = {
        T.T1571: "_plant_t1571",
        T.T1124: "_plant_t1124",
        T.T1135: "_plant_t1135",
        T.T1071: "_plant_t1071",
        T.T1105: "_plant_t1105",
        T.T1090: "_plant_t1090",
        T.T1550_003: "_plant_t1550",
        T.T1570: "_plant_t1570",
        T.T1053: "_plant_t1053",
        T.T1557_001: "_plant_t1557",
        T.T1590: "_plant_t1590",
    }

    def build_sample(self, index: int, malicious: bool) -> _SampleBuilder:
        sb = _SampleBuilder(self, index, malicious)
        lo, hi = self.config.flows_per_sample
        for _ in range(int(self.rng.integers(lo, hi + 1))):
            sb.add(self._background_flow(sb))
        column = 0 if malicious else 1
        for technique in T.CATALOG:  # fixed order keeps generation deterministic
            probs = self.config.plant_probs.get(technique)
            if probs is None or self.rng.uniform() >= probs[column]:
                continue
            if technique == T.T1021_001 or technique == T.T1021_004:
                self._plant_t1021(sb, technique)
            elif technique == T.T1563_001 or technique == T.T1563_002:
                self._plant_t1563(sb, technique)
            else:
                getattr(self, self._PLANTERS[technique])(sb)
        return sb


def generate_corpus(config: SynthConfig | None = None) -> SynthCorpus:
    """Generate a labelled corpus; deterministic given the config seed."""
    if config is None:
        config = SynthConfig()
    gen = _Generator(config)
    flows: list[FlowRecord] = []
    labels: dict[str, str] = {}
    truth: list[TtpMatch] = []
    for index in range(config.n_malicious + config.n_benign):
        malicious = index < config.n_malicious
        sb = gen.build_sample(index, malicious)
        flows.extend(sb.flows)
        labels[sb.sample_hash] = MALICIOUS if malicious else BENIGN
        truth.extend(
            TtpMatch(flow_hash, sb.sample_hash, technique_id)
            for flow_hash, technique_id in sb.truth
        )
    truth.sort(key=lambda m: (m.sample_hash, m.technique_id, m.flow_hash))
    return SynthCorpus(flows, labels, truth, config)

"""Per-flow verdicts and the three sample-level aggregation policies.

A flow counts as malicious when *any* of the classifiers attached to its
matched techniques flags it (OR-aggregation). The three policies threshold,
respectively, the count of unique flagged techniques (P1, theta_t), the count
of flagged flows (P2, theta_f), and the percentage of flagged flows over the
whole sample (P3, theta_p); all comparisons are inclusive.

Two modes exist: the full pipeline ("radar"), where trainable techniques
consult their decision tree and untrainable ones always flag, and the
rules-only baseline ("rb-radar"), where every matched flow is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import techniques as T
from .errors import ConfigError
from .evaluation import SampleStats, decide
from .features import encode_flow
from .flows import BENIGN, MALICIOUS, Sample
from .training import AlwaysMalicious, TechniqueModel
from .tree import LABEL_MALICIOUS, DecisionTree

MODE_RADAR = "radar"
MODE_RB_RADAR = "rb-radar"
MODES = (MODE_RADAR, MODE_RB_RADAR)

POLICIES = ("p1", "p2", "p3")


@dataclass(frozen=True)
class PolicyConfig:
    policy: str = "p1"
    theta_t: int = 1
    theta_f: int = 1
    theta_p: float = 50.0
    mode: str = MODE_RADAR

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}, got '{self.policy}'")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got '{self.mode}'")
        if self.theta_t < 1 or self.theta_f < 1:
            raise ConfigError("theta_t and theta_f must be positive integers")
        if not 0.0 <= self.theta_p <= 100.0:
            raise ConfigError("theta_p must be a percentage in [0, 100]")

    @property
    def active_threshold(self) -> float:
        return {"p1": self.theta_t, "p2": self.theta_f, "p3": self.theta_p}[self.policy]


@dataclass(frozen=True)
class SampleVerdict:
    """Aggregated decision for one sample plus its per-flow evidence."""

    sample_hash: str
    n_t: int
    n_f: int
    p: float
    decision: str  # benign | malicious
    flow_techniques: Mapping[str, frozenset[str]]  # flow hash -> flagged techniques

    @property
    def stats(self) -> SampleStats:
        return SampleStats(self.n_t, self.n_f, self.p)


def flow_verdicts(sample: Sample,
                  sample_matches: Mapping[str, set[str]],
                  models: Mapping[str, TechniqueModel],
                  mode: str = MODE_RADAR) -> dict[str, set[str]]:
    """Per-flow malicious technique sets for one sample.

    `sample_matches` maps technique id -> matched flow hashes for this sample.
    In rb-radar mode every match is malicious. In radar mode a match is
    malicious when its technique is untrainable (always-malicious fallback) or
    when the technique's tree predicts malicious on the flow's feature vector;
    a trainable technique without a model is a configuration error.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got '{mode}'")
    verdicts: dict[str, set[str]] = {}
    if mode == MODE_RB_RADAR:
        for technique_id, flow_hashes in sample_matches.items():
            for flow_hash in flow_hashes:
                verdicts.setdefault(flow_hash, set()).add(technique_id)
        return verdicts

    flows_by_hash = {f.flow_hash: f for f in sample.flows}
    vectors: dict[str, object] = {}
    for technique_id, flow_hashes in sample_matches.items():
        trainable = T.is_trainable(technique_id)
        model = models.get(technique_id)
        if trainable and model is None:
            raise ConfigError(f"no model available for trainable technique {technique_id}")
        for flow_hash in flow_hashes:
            if trainable and isinstance(model, DecisionTree):
                if flow_hash not in vectors:
                    vectors[flow_hash] = encode_flow(flows_by_hash[flow_hash])
                label = model.predict_label(vectors[flow_hash])
                if label != LABEL_MALICIOUS:
                    continue
            # untrainable technique or AlwaysMalicious fallback: always flag
            verdicts.setdefault(flow_hash, set()).add(technique_id)
    return verdicts


def apply_policy(verdicts: Mapping[str, set[str]], sample: Sample,
                 config: PolicyConfig) -> SampleVerdict:
    """Reduce per-flow verdicts to the sample decision under the active policy.

    n_t counts distinct techniques across flagged flows, n_f counts flagged
    flows, and p is 100 * n_f over the sample's total flow count (matched or
    not). All three are populated regardless of the chosen policy.
    """
    flagged = {fh: techs for fh, techs in verdicts.items() if techs}
    n_f = len(flagged)
    techniques_hit: set[str] = set()
    for techs in flagged.values():
        techniques_hit.update(techs)
    n_t = len(techniques_hit)
    p = 100.0 * n_f / len(sample.flows)
    stats = SampleStats(n_t, n_f, p)
    positive = decide(config.policy, stats, config.active_threshold)
    return SampleVerdict(
        sample_hash=sample.sample_hash,
        n_t=n_t,
        n_f=n_f,
        p=p,
        decision=MALICIOUS if positive else BENIGN,
        flow_techniques={fh: frozenset(techs) for fh, techs in sorted(flagged.items())},
    )


def classify_samples(samples, aggregated, models, config: PolicyConfig) -> list[SampleVerdict]:
    """Run flow verdicts + policy aggregation over many samples."""
    out = []
    for sample in samples:
        matches = aggregated.get(sample.sample_hash, {})
        verdicts = flow_verdicts(sample, matches, models, config.mode)
        out.append(apply_policy(verdicts, sample, config))
    return out

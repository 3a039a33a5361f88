"""Technique-based network-flow analysis and interpretable malware classification.

The pipeline: parse bidirectional flow records, build a host graph, run the
ATT&CK technique rule catalog over it, train one weighted decision tree per
trainable technique, aggregate per-flow verdicts into per-sample decisions
under the P1/P2/P3 policies, and evaluate with threshold sweeps, ROC curves,
and cross-seed confidence intervals. A synthetic corpus generator with planted
behaviours makes the whole pipeline testable at desk scale.
"""

from .errors import (
    ConfigError,
    DataError,
    FlowParseError,
    MissingLabelError,
    SingleClassError,
    ToolkitError,
)
from .evaluation import (
    ConfusionCounts,
    Metrics,
    RocCurve,
    SampleStats,
    SeedAggregate,
    aggregate_seeds,
    metrics,
    roc_auc,
    sweep,
    trapezoid_auc,
)
from .features import FEATURE_NAMES, encode_flow, encode_flows
from .flows import (
    BENIGN,
    FIELD_NAMES,
    MALICIOUS,
    FlowRecord,
    Sample,
    group_by_sample,
    parse_flow_file,
    parse_label_manifest,
    write_flow_file,
    write_label_manifest,
)
from .graph import HostGraph, build_graph
from .policy import (
    MODE_RADAR,
    MODE_RB_RADAR,
    PolicyConfig,
    SampleVerdict,
    apply_policy,
    classify_samples,
    flow_verdicts,
)
from .rules import (
    RuleConfig,
    TtpMatch,
    aggregate_by_sample,
    detect,
    match_egress_anomaly,
    match_nonstandard_port,
)
from .synth import SynthConfig, SynthCorpus, generate_corpus
from .techniques import CATALOG, PORT_PROTOCOL_TABLE, TRAINABLE
from .training import (
    AlwaysMalicious,
    SplitAssignment,
    TtpDataset,
    build_ttp_datasets,
    class_weights,
    hyperparam_search,
    load_models,
    save_models,
    split_samples,
)
from .tree import DecisionTree, train_tree

__version__ = "0.1.0"

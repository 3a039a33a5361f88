"""Sample-level split protocol, per-technique datasets, and hyperparameter search.

Splitting happens at sample granularity so flows from one sample can never
leak across train/validation/test, and a flow matching several techniques
lands in the same split for every per-technique dataset by construction.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import techniques as T
from .errors import ConfigError, DataError, SingleClassError
from .evaluation import ConfusionCounts, metrics
from .features import FEATURE_NAMES, N_FEATURES, encode_flows
from .flows import BENIGN, MALICIOUS, FlowRecord, Sample
from .tree import LABEL_MALICIOUS, DecisionTree, train_tree

TRAIN = "train"
VALIDATION = "validation"
TEST = "test"
SPLIT_NAMES = (TRAIN, VALIDATION, TEST)

DEFAULT_FRACTIONS = (0.6, 0.1, 0.3)
DEFAULT_MIN_LEAF_GRID = (1, 100, 1000)
DEFAULT_MAX_DEPTH_GRID = 50


@dataclass(frozen=True)
class SplitAssignment:
    """Deterministic sample_hash -> split-name partition."""

    assignment: Mapping[str, str]
    fractions: tuple[float, float, float]
    seed: int

    def split_of(self, sample_hash: str) -> str:
        return self.assignment[sample_hash]

    def hashes_in(self, split: str) -> list[str]:
        return sorted(h for h, s in self.assignment.items() if s == split)

    def write(self, dest) -> None:
        """Audit export: tab-separated sample_hash, split-name."""
        with _open_w(dest) as stream:
            for sample_hash in sorted(self.assignment):
                stream.write(f"{sample_hash}\t{self.assignment[sample_hash]}\n")


def _open_w(dest):
    if isinstance(dest, (str, os.PathLike)):
        return open(dest, "w", encoding="utf-8", newline="")
    import contextlib

    return contextlib.nullcontext(dest)


def split_samples(samples: Sequence[Sample], fractions=DEFAULT_FRACTIONS,
                  seed: int = 0) -> SplitAssignment:
    """Shuffle samples with `seed` and slice into train/validation/test.

    Split sizes are floor(fraction * n) with the rounding remainder assigned
    to train. Fractions must sum to 1.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")
    if not samples:
        raise DataError("cannot split an empty sample list")
    hashes = sorted(s.sample_hash for s in samples)
    order = np.random.default_rng(seed).permutation(len(hashes))
    shuffled = [hashes[i] for i in order]

    n = len(shuffled)
    n_val = int(fractions[1] * n)
    n_test = int(fractions[2] * n)
    n_train = n - n_val - n_test  # floor remainder goes to train
    assignment = {}
    for i, sample_hash in enumerate(shuffled):
        if i < n_train:
            assignment[sample_hash] = TRAIN
        elif i < n_train + n_val:
            assignment[sample_hash] = VALIDATION
        else:
            assignment[sample_hash] = TEST
    return SplitAssignment(assignment, tuple(fractions), seed)


@dataclass
class SplitPart:
    """Feature matrix, labels, and flow hashes for one split of one technique."""

    X: np.ndarray
    y: np.ndarray
    flow_hashes: list[str]

    @property
    def size(self) -> int:
        return len(self.flow_hashes)


@dataclass
class TtpDataset:
    technique_id: str
    splits: dict[str, SplitPart]

    def part(self, name: str) -> SplitPart:
        return self.splits[name]


def _empty_part() -> SplitPart:
    return SplitPart(np.empty((0, N_FEATURES)), np.empty(0, dtype=np.int64), [])


def build_ttp_datasets(assignment: SplitAssignment,
                       aggregated: Mapping[str, Mapping[str, set[str]]],
                       flows: Iterable[FlowRecord],
                       labels: Mapping[str, str]) -> dict[str, TtpDataset]:
    """One dataset per catalog technique from the aggregated detection matches.

    A flow inherits its sample's label and its sample's split. Techniques
    without matches still get a dataset whose splits are all empty.
    """
    flows_by_hash = {f.flow_hash: f for f in flows}
    collected: dict[str, dict[str, list[FlowRecord]]] = {
        tid: {name: [] for name in SPLIT_NAMES} for tid in T.CATALOG
    }
    flow_labels: dict[str, dict[str, list[int]]] = {
        tid: {name: [] for name in SPLIT_NAMES} for tid in T.CATALOG
    }
    for sample_hash in sorted(aggregated):
        if sample_hash not in assignment.assignment:
            raise DataError(f"sample '{sample_hash}' has matches but no split assignment")
        split = assignment.split_of(sample_hash)
        label = 1 if labels[sample_hash] == MALICIOUS else 0
        per_technique = aggregated[sample_hash]
        for technique_id in sorted(per_technique):
            for flow_hash in sorted(per_technique[technique_id]):
                flow = flows_by_hash.get(flow_hash)
                if flow is None:
                    raise DataError(f"match references unknown flow '{flow_hash}'")
                collected[technique_id][split].append(flow)
                flow_labels[technique_id][split].append(label)

    datasets = {}
    for technique_id in T.CATALOG:
        parts = {}
        for name in SPLIT_NAMES:
            members = collected[technique_id][name]
            if members:
                parts[name] = SplitPart(
                    X=encode_flows(members),
                    y=np.asarray(flow_labels[technique_id][name], dtype=np.int64),
                    flow_hashes=[f.flow_hash for f in members],
                )
            else:
                parts[name] = _empty_part()
        datasets[technique_id] = TtpDataset(technique_id, parts)
    return datasets


def class_weights(train_labels) -> tuple[float, float]:
    """Balanced inverse-frequency weights: w_c = N / (2 * n_c).

    With these weights the total weighted mass of each class is equal. Raises
    :class:`SingleClassError` when a class is absent, which callers treat as
    the signal to fall back to the always-malicious rule for that technique.
    """
    y = np.asarray(train_labels)
    n = y.size
    n_malicious = int((y == LABEL_MALICIOUS).sum())
    n_benign = n - n_malicious
    if n_benign == 0 or n_malicious == 0:
        raise SingleClassError("both classes are required to compute class weights")
    return n / (2.0 * n_benign), n / (2.0 * n_malicious)


@dataclass(frozen=True)
class AlwaysMalicious:
    """Fallback classifier for techniques without a trainable population."""

    technique_id: str
    reason: str = "untrainable"


TechniqueModel = DecisionTree | AlwaysMalicious


def validation_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """F1 of the malicious class; degenerate denominators score 0."""
    if y_true.size == 0:
        return 0.0
    tp = int(((y_pred == 1) & (y_true == 1)).sum())
    fp = int(((y_pred == 1) & (y_true == 0)).sum())
    fn = int(((y_pred == 0) & (y_true == 1)).sum())
    tn = int(((y_pred == 0) & (y_true == 0)).sum())
    return metrics(ConfusionCounts(tp, fp, tn, fn)).f1


@dataclass
class SearchResult:
    technique_id: str
    best_max_depth: int | None
    best_min_leaf: int
    trees: dict[int, DecisionTree]           # seed -> tree at the chosen cell
    cell_scores: dict[tuple[int | None, int], float]  # (max_depth, min_leaf) -> mean F1
    best_score: float


def _depth_grid(max_depth_grid: int) -> list[int | None]:
    return list(range(1, max_depth_grid + 1)) + [None]


def _scores_by_depth(tree: DecisionTree, X_val: np.ndarray, y_val: np.ndarray,
                     depths: list[int | None]) -> dict[int | None, float]:
    """Validation F1 of one unbounded tree evaluated at every depth cutoff.

    Cutting an unbounded greedy tree at depth d reproduces exactly the tree
    trained with max_depth=d, so one training per (min_leaf, seed) covers the
    whole depth axis.
    """
    bounded = sorted(d for d in depths if d is not None)
    preds: dict[int | None, np.ndarray] = {
        d: np.empty(len(X_val), dtype=np.int64) for d in depths
    }
    for i, x in enumerate(X_val):
        path_preds = []
        node = tree.root
        while True:
            path_preds.append(node.prediction)
            if node.is_leaf:
                break
            node = node.left if x[node.feature] <= node.threshold else node.right
        leaf_level = len(path_preds) - 1
        for d in bounded:
            preds[d][i] = path_preds[min(d, leaf_level)]
        if None in preds:
            preds[None][i] = path_preds[leaf_level]
    return {d: validation_f1(y_val, preds[d]) for d in depths}


def hyperparam_search(dataset: TtpDataset, seeds: Sequence[int],
                      max_depth_grid: int = DEFAULT_MAX_DEPTH_GRID,
                      min_leaf_grid: Sequence[int] = DEFAULT_MIN_LEAF_GRID) -> SearchResult:
    """Grid search ({1..max} + unbounded) x min-leaf values, averaged over seeds.

    Every cell is scored by mean validation F1 across the seeds; the best cell
    wins with ties broken by smaller depth (unbounded counts as largest), then
    smaller min leaf. Raises :class:`SingleClassError` when the training split
    does not contain both classes.
    """
    train = dataset.part(TRAIN)
    if train.size == 0:
        raise SingleClassError(f"{dataset.technique_id}: empty training split")
    weights = class_weights(train.y)  # raises SingleClassError on one class
    val = dataset.part(VALIDATION)

    depths = _depth_grid(max_depth_grid)
    cell_scores: dict[tuple[int | None, int], list[float]] = {
        (d, ml): [] for d in depths for ml in min_leaf_grid
    }
    full_trees: dict[tuple[int, int], DecisionTree] = {}
    for min_leaf in min_leaf_grid:
        for seed in seeds:
            full = train_tree(train.X, train.y, weights, max_depth=None,
                              min_leaf=min_leaf, seed=seed)
            full_trees[(min_leaf, seed)] = full
            by_depth = _scores_by_depth(full, val.X, val.y, depths)
            for d in depths:
                cell_scores[(d, min_leaf)].append(by_depth[d])

    means = {cell: float(np.mean(scores)) for cell, scores in cell_scores.items()}
    best_cell = None
    best_score = -1.0
    for d in depths:  # ordered 1..max then None; min_leaf ascending inside
        for ml in sorted(min_leaf_grid):
            if means[(d, ml)] > best_score:
                best_cell = (d, ml)
                best_score = means[(d, ml)]

    best_depth, best_min_leaf = best_cell
    trees = {}
    for seed in seeds:
        full = full_trees[(best_min_leaf, seed)]
        trees[seed] = full if best_depth is None else full.truncated(best_depth)
    return SearchResult(dataset.technique_id, best_depth, best_min_leaf, trees,
                        means, best_score)


# -- model registry ---------------------------------------------------------

def _model_filename(technique_id: str, seed: int) -> str:
    return f"{technique_id.replace('.', '_').lower()}_seed{seed}.json"


def save_models(models: Mapping[str, Mapping[int, TechniqueModel]], model_dir) -> list[str]:
    """Persist one JSON file per (technique, seed); returns written names."""
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for technique_id in sorted(models):
        for seed in sorted(models[technique_id]):
            model = models[technique_id][seed]
            name = _model_filename(technique_id, seed)
            payload: dict = {"technique_id": technique_id, "train_seed": seed}
            if isinstance(model, AlwaysMalicious):
                payload["kind"] = "always_malicious"
                payload["reason"] = model.reason
            else:
                payload.update(model.to_dict())
            with open(model_dir / name, "w", encoding="utf-8") as stream:
                json.dump(payload, stream, indent=1, sort_keys=True)
                stream.write("\n")
            written.append(name)
    return written


def load_models(model_dir) -> dict[str, dict[int, TechniqueModel]]:
    model_dir = Path(model_dir)
    models: dict[str, dict[int, TechniqueModel]] = {}
    for path in sorted(model_dir.glob("*.json")):
        with open(path, encoding="utf-8") as stream:
            payload = json.load(stream)
        technique_id = payload["technique_id"]
        seed = payload["train_seed"]
        if payload["kind"] == "always_malicious":
            model: TechniqueModel = AlwaysMalicious(technique_id, payload["reason"])
        else:
            model = DecisionTree.from_dict(payload)
        models.setdefault(technique_id, {})[seed] = model
    return models

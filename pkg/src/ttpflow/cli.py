"""Command-line pipeline: synth, ingest, detect, train, evaluate, classify, explain.

Commands are composable stages sharing on-disk formats: `detect` writes the
match file that `train`, `evaluate`, `classify`, and `explain` consume, and
`train` writes the model files the latter three load. Exit codes: 0 success,
2 parse error, 3 configuration error, 4 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import techniques as T
from .config import RunConfig, load_run_config
from .errors import DataError, ToolkitError
from .evaluation import (
    aggregate_seeds,
    default_thresholds,
    metrics,
    roc_auc,
    sweep,
    write_roc,
    write_sweep_table,
    Metrics,
    RocCurve,
)
from .features import predicate_text
from .flows import (
    BENIGN,
    MALICIOUS,
    group_by_sample,
    parse_flow_file,
    parse_label_manifest,
    write_flow_file,
    write_label_manifest,
)
from .graph import build_graph
from .policy import (
    MODE_RADAR,
    MODE_RB_RADAR,
    MODES,
    PolicyConfig,
    apply_policy,
    flow_verdicts,
)
from .rules import aggregate_by_sample, detect, read_match_file, write_match_file
from .synth import generate_corpus
from .training import (
    AlwaysMalicious,
    TEST,
    build_ttp_datasets,
    hyperparam_search,
    load_models,
    save_models,
    split_samples,
)
from .tree import DecisionTree
from .errors import SingleClassError


def _load_corpus(cfg: RunConfig):
    if not cfg.flow_file.exists():
        raise DataError(f"flow file not found: {cfg.flow_file}")
    if not cfg.label_manifest.exists():
        raise DataError(f"label manifest not found: {cfg.label_manifest}")
    flows = parse_flow_file(cfg.flow_file)
    labels = parse_label_manifest(cfg.label_manifest)
    samples = group_by_sample(flows, labels)
    return flows, labels, samples


def _load_matches(cfg: RunConfig):
    match_path = cfg.output_dir / "matches.tsv"
    if not match_path.exists():
        raise DataError(f"match file not found: {match_path} (run `detect` first)")
    return read_match_file(match_path)


def _policy_override(cfg: RunConfig, args) -> PolicyConfig:
    changes = {}
    if getattr(args, "mode", None):
        mode = args.mode.replace("_", "-")
        changes["mode"] = mode
    if getattr(args, "policy", None):
        changes["policy"] = args.policy
    if getattr(args, "threshold", None) is not None:
        policy = changes.get("policy", cfg.policy.policy)
        key = {"p1": "theta_t", "p2": "theta_f", "p3": "theta_p"}[policy]
        value = args.threshold
        changes[key] = float(value) if key == "theta_p" else int(value)
    return dataclasses.replace(cfg.policy, **changes) if changes else cfg.policy


def cmd_synth(cfg: RunConfig, args) -> int:
    synth_cfg = cfg.synth
    if args.seed is not None:
        synth_cfg = dataclasses.replace(synth_cfg, seed=args.seed)
    corpus = generate_corpus(synth_cfg)
    cfg.flow_file.parent.mkdir(parents=True, exist_ok=True)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_flow_file(corpus.flows, cfg.flow_file)
    write_label_manifest(corpus.labels, cfg.label_manifest)
    write_match_file(corpus.truth, cfg.output_dir / "ground_truth.tsv")
    print(
        f"generated {len(corpus.labels)} samples "
        f"({synth_cfg.n_malicious} malicious, {synth_cfg.n_benign} benign), "
        f"{len(corpus.flows)} flows, {len(corpus.truth)} planted matches"
    )
    return 0


def cmd_ingest(cfg: RunConfig, args) -> int:
    flows, labels, samples = _load_corpus(cfg)
    graph = build_graph(flows)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    graph.write_edge_list(cfg.output_dir / "graph_edges.tsv")
    print(
        f"{len(samples)} samples, {len(flows)} flows, "
        f"{graph.node_count} hosts, {graph.edge_count} edges"
    )
    return 0


def cmd_detect(cfg: RunConfig, args) -> int:
    flows, labels, samples = _load_corpus(cfg)
    graph = build_graph(flows)
    matches = detect(graph, cfg.rules)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_match_file(matches, cfg.output_dir / "matches.tsv")

    per_technique: dict[str, set[str]] = {}
    for match in matches:
        per_technique.setdefault(match.technique_id, set()).add(match.sample_hash)
    print(f"{'Technique':<12} {'Tactic':<20} {'Malicious':>10} {'Benign':>8} {'Class.':>7}")
    for technique_id in T.CATALOG:
        hit = per_technique.get(technique_id, set())
        n_mal = sum(1 for h in hit if labels[h] == MALICIOUS)
        n_ben = len(hit) - n_mal
        mark = "yes" if T.is_trainable(technique_id) else "no"
        print(
            f"{technique_id:<12} {T.TACTICS[technique_id]:<20} "
            f"{n_mal:>10} {n_ben:>8} {mark:>7}"
        )
    print(f"total: {len(matches)} matches across {len(per_technique)} techniques")
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    flows, labels, samples = _load_corpus(cfg)
    matches = _load_matches(cfg)
    split_seed = args.seed if args.seed is not None else cfg.split_seed
    assignment = split_samples(samples, cfg.split_fractions, split_seed)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    assignment.write(cfg.output_dir / "splits.tsv")

    datasets = build_ttp_datasets(assignment, aggregate_by_sample(matches), flows, labels)
    models: dict[str, dict[int, object]] = {}
    report: dict[str, dict] = {}
    for technique_id in sorted(T.TRAINABLE):
        dataset = datasets[technique_id]
        try:
            result = hyperparam_search(
                dataset, cfg.train_seeds, cfg.max_depth_grid, cfg.min_leaf_grid
            )
        except SingleClassError as exc:
            models[technique_id] = {
                seed: AlwaysMalicious(technique_id, str(exc)) for seed in cfg.train_seeds
            }
            report[technique_id] = {"fallback": str(exc)}
            print(f"{technique_id}: fallback to always-malicious ({exc})")
            continue
        models[technique_id] = dict(result.trees)
        depth_key = "none" if result.best_max_depth is None else result.best_max_depth
        report[technique_id] = {
            "best_max_depth": depth_key,
            "best_min_leaf": result.best_min_leaf,
            "mean_validation_f1": result.best_score,
            "cells": {
                f"{'none' if d is None else d}/{ml}": round(score, 6)
                for (d, ml), score in sorted(
                    result.cell_scores.items(),
                    key=lambda kv: (kv[0][0] is None, kv[0][0] or 0, kv[0][1]),
                )
            },
        }
        print(
            f"{technique_id}: max_depth={depth_key} min_leaf={result.best_min_leaf} "
            f"validation_f1={result.best_score:.4f} "
            f"(train={dataset.part('train').size}, "
            f"validation={dataset.part('validation').size}, "
            f"test={dataset.part('test').size})"
        )
    written = save_models(models, cfg.model_dir)
    with open(cfg.output_dir / "selection_report.json", "w", encoding="utf-8") as stream:
        json.dump(report, stream, indent=1, sort_keys=True)
        stream.write("\n")
    print(f"wrote {len(written)} model files to {cfg.model_dir}")
    return 0


def _mode_models(all_models, technique_id: str, seed: int):
    per_seed = all_models.get(technique_id)
    if not per_seed:
        return None
    if seed in per_seed:
        return per_seed[seed]
    raise DataError(f"no model for technique {technique_id} at seed {seed}")


def _sample_stats_for_seed(samples, aggregated, all_models, seed, mode):
    """Per-sample verdict statistics for one model seed in one mode."""
    stats = {}
    verdict_maps = {}
    for sample in samples:
        sample_matches = aggregated.get(sample.sample_hash, {})
        models = {
            tid: _mode_models(all_models, tid, seed)
            for tid in sample_matches
            if T.is_trainable(tid)
        }
        verdicts = flow_verdicts(sample, sample_matches, models, mode)
        verdict_maps[sample.sample_hash] = verdicts
        result = apply_policy(verdicts, sample, PolicyConfig(mode=mode))
        stats[sample.sample_hash] = result.stats
    return stats, verdict_maps


def cmd_evaluate(cfg: RunConfig, args) -> int:
    flows, labels, samples = _load_corpus(cfg)
    matches = _load_matches(cfg)
    all_models = load_models(cfg.model_dir)
    split_seed = args.seed if args.seed is not None else cfg.split_seed
    assignment = split_samples(samples, cfg.split_fractions, split_seed)
    test_samples = [s for s in samples if assignment.split_of(s.sample_hash) == TEST]
    if not test_samples:
        raise DataError("test split is empty")
    test_labels = {s.sample_hash: s.label for s in test_samples}
    if len(set(test_labels.values())) < 2:
        raise DataError("test split labels are degenerate (single class)")
    aggregated = aggregate_by_sample(matches)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    summary: dict[str, dict] = {}
    for mode in MODES:
        per_seed_stats = {
            seed: _sample_stats_for_seed(test_samples, aggregated, all_models, seed, mode)[0]
            for seed in cfg.train_seeds
        }
        mode_tag = mode.replace("-", "_")
        for policy in ("p1", "p2", "p3"):
            thresholds = sorted(
                {t for stats in per_seed_stats.values()
                 for t in default_thresholds(policy, stats)}
            )
            per_seed_rows = {}
            per_seed_auc = {}
            for seed, stats in per_seed_stats.items():
                rows = sweep(policy, thresholds, stats, test_labels)
                per_seed_rows[seed] = rows
                per_seed_auc[seed] = roc_auc(rows, test_labels).auc

            mean_rows: list[tuple[float, Metrics]] = []
            mean_points = []
            positives = sum(1 for v in test_labels.values() if v == MALICIOUS)
            negatives = len(test_labels) - positives
            for i, threshold in enumerate(thresholds):
                per_metric = {name: [] for name in
                              ("accuracy", "precision", "tpr", "fpr", "f1")}
                degenerate = False
                for seed in cfg.train_seeds:
                    m = metrics(per_seed_rows[seed][i][1])
                    for name in per_metric:
                        per_metric[name].append(getattr(m, name))
                    degenerate = degenerate or m.degenerate
                averaged = Metrics(
                    *(sum(per_metric[n]) / len(cfg.train_seeds) for n in
                      ("accuracy", "precision", "tpr", "fpr", "f1")),
                    degenerate=degenerate,
                )
                mean_rows.append((threshold, averaged))
                mean_points.append((averaged.fpr, averaged.tpr))

            auc_values = [per_seed_auc[seed] for seed in cfg.train_seeds]
            mean_auc = sum(auc_values) / len(auc_values)
            curve_points = tuple(sorted(set(mean_points) | {(0.0, 0.0), (1.0, 1.0)}))
            write_sweep_table(mean_rows, cfg.output_dir / f"sweep_{policy}_{mode_tag}.tsv")
            write_roc(RocCurve(curve_points, mean_auc),
                      cfg.output_dir / f"roc_{policy}_{mode_tag}.tsv")

            entry = {"auc_mean": mean_auc}
            if len(auc_values) >= 2:
                agg = aggregate_seeds(auc_values)
                entry["auc_ci95"] = agg.ci95
                entry["auc_stddev"] = agg.stddev
            summary[f"{policy}_{mode_tag}"] = entry
            print(f"{mode:<9} {policy}: auc={mean_auc:.4f} over {len(thresholds)} thresholds")

    with open(cfg.output_dir / "evaluation_summary.json", "w", encoding="utf-8") as stream:
        json.dump(summary, stream, indent=1, sort_keys=True)
        stream.write("\n")
    return 0


def _verdict_payload(sample, verdicts, all_models, seed, mode):
    flow_entries = []
    flows_by_hash = {f.flow_hash: f for f in sample.flows}
    from .features import encode_flow

    for flow_hash in sorted(verdicts):
        for technique_id in sorted(verdicts[flow_hash]):
            model = all_models.get(technique_id, {}).get(seed)
            if mode == MODE_RADAR and isinstance(model, DecisionTree):
                _, path = model.predict(encode_flow(flows_by_hash[flow_hash]))
                explanation = [predicate_text(f, op, thr) for f, op, thr in path]
            else:
                explanation = "rule-matched (no model)"
            flow_entries.append(
                {"flow_hash": flow_hash, "technique_id": technique_id,
                 "explanation": explanation}
            )
    return flow_entries


def cmd_classify(cfg: RunConfig, args) -> int:
    flows, labels, samples = _load_corpus(cfg)
    matches = _load_matches(cfg)
    all_models = load_models(cfg.model_dir)
    policy_cfg = _policy_override(cfg, args)
    seed = args.seed if args.seed is not None else cfg.train_seeds[0]
    aggregated = aggregate_by_sample(matches)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    n_malicious = 0
    with open(cfg.output_dir / "verdicts.jsonl", "w", encoding="utf-8") as stream:
        for sample in sorted(samples, key=lambda s: s.sample_hash):
            sample_matches = aggregated.get(sample.sample_hash, {})
            models = {
                tid: _mode_models(all_models, tid, seed)
                for tid in sample_matches if T.is_trainable(tid)
            }
            verdicts = flow_verdicts(sample, sample_matches, models, policy_cfg.mode)
            verdict = apply_policy(verdicts, sample, policy_cfg)
            n_malicious += verdict.decision == MALICIOUS
            payload = {
                "sample_hash": verdict.sample_hash,
                "decision": verdict.decision,
                "n_t": verdict.n_t,
                "n_f": verdict.n_f,
                "p": round(verdict.p, 6),
                "flows": _verdict_payload(sample, verdicts, all_models, seed,
                                          policy_cfg.mode),
            }
            stream.write(json.dumps(payload, sort_keys=True) + "\n")
    print(
        f"classified {len(samples)} samples under {policy_cfg.policy}"
        f"(threshold={policy_cfg.active_threshold:g}, mode={policy_cfg.mode}): "
        f"{n_malicious} malicious, {len(samples) - n_malicious} benign"
    )
    return 0


def cmd_explain(cfg: RunConfig, args) -> int:
    flows, labels, samples = _load_corpus(cfg)
    matches = _load_matches(cfg)
    all_models = load_models(cfg.model_dir)
    policy_cfg = _policy_override(cfg, args)
    seed = args.seed if args.seed is not None else cfg.train_seeds[0]

    by_hash = {s.sample_hash: s for s in samples}
    sample = by_hash.get(args.sample_hash)
    if sample is None:
        raise DataError(f"unknown sample hash '{args.sample_hash}'")
    aggregated = aggregate_by_sample(matches)
    sample_matches = aggregated.get(sample.sample_hash, {})
    models = {
        tid: _mode_models(all_models, tid, seed)
        for tid in sample_matches if T.is_trainable(tid)
    }
    verdicts = flow_verdicts(sample, sample_matches, models, policy_cfg.mode)
    verdict = apply_policy(verdicts, sample, policy_cfg)

    print(f"sample {sample.sample_hash}: {verdict.decision}")
    print(f"  policy {policy_cfg.policy} threshold {policy_cfg.active_threshold:g} "
          f"mode {policy_cfg.mode}")
    print(f"  n_t={verdict.n_t} n_f={verdict.n_f} p={verdict.p:.2f}%")
    entries = _verdict_payload(sample, verdicts, all_models, seed, policy_cfg.mode)
    if not entries:
        print("  no malicious flows")
        return 0
    for entry in entries:
        print(f"  flow {entry['flow_hash']} — {entry['technique_id']} "
              f"({T.TECHNIQUE_NAMES[entry['technique_id']]})")
        explanation = entry["explanation"]
        if isinstance(explanation, str):
            print(f"    {explanation}")
        elif not explanation:
            print("    (single-leaf tree: every matched flow is classified alike)")
        else:
            for predicate in explanation:
                print(f"    {predicate}")
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "detect": cmd_detect,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "classify": cmd_classify,
    "explain": cmd_explain,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttpflow",
        description="Technique detection and interpretable malware classification "
                    "over network-flow metadata.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("synth", "generate a labelled synthetic corpus"),
        ("ingest", "parse flows and build the host graph"),
        ("detect", "run technique detection rules over the graph"),
        ("train", "train per-technique decision trees"),
        ("evaluate", "sweep policies and emit metric/ROC tables"),
        ("classify", "emit per-sample verdicts"),
        ("explain", "print decision paths for one sample"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", "-c", required=True, help="run configuration file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the relevant seed for this command")
        if name in ("classify", "explain"):
            p.add_argument("--mode", choices=("radar", "rb-radar", "rb_radar"),
                           default=None, help="verdict mode override")
            p.add_argument("--policy", choices=("p1", "p2", "p3"), default=None,
                           help="aggregation policy override")
            p.add_argument("--threshold", default=None,
                           help="threshold for the active policy")
        if name == "explain":
            p.add_argument("sample_hash", help="sample to explain")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

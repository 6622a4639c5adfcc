"""Command-line pipeline: generate -> run -> analyze / pies / report."""

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, datagen, experiment, pie
from .nn import TrainConfig
from .presets import PRESETS
from .pruning import SparsityGrid, paper_grid
from .stats import kruskal_wallis


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def parse_grid(spec):
    """Grid spec 'start:stop:step' (inclusive) or comma list of ratios."""
    try:
        if ":" in spec:
            start, stop, step = (float(v) for v in spec.split(":"))
            if start != 0.0:
                raise ValueError("grid must start at 0")
            n = int(round((stop - start) / step))
            return SparsityGrid(tuple(round(start + i * step, 10) for i in range(n + 1)))
        return SparsityGrid(tuple(float(v) for v in spec.split(",")))
    except ValueError as exc:
        raise CliError("E_GRID", f"bad grid spec {spec!r}: {exc}") from exc


def _config_from_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    raw["target_frequencies"] = tuple(raw["target_frequencies"])
    raw["cooccurrence_coupling"] = np.asarray(raw["cooccurrence_coupling"], dtype=np.float64)
    return datagen.GeneratorConfig(**raw)


def cmd_generate(args):
    if bool(args.config) == bool(args.preset):
        raise CliError("E_ARGS", "pass exactly one of --config or --preset")
    if args.preset:
        if args.preset not in PRESETS:
            raise CliError("E_PRESET", f"unknown preset {args.preset!r}; have {sorted(PRESETS)}")
        config = PRESETS[args.preset](seed=args.seed)
    else:
        config = _config_from_file(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = datagen.generate(config)
    ds_path = out / "dataset.csv"
    datagen.save_dataset(ds, ds_path)
    experiment.write_manifest(
        out / "manifest_generate.json",
        {"generator": experiment.config_hash(config)},
        [config.seed],
        {"dataset.csv": ds_path},
    )
    print(f"wrote {ds_path} ({ds.labels.shape[0]} rows, {ds.labels.shape[1]} classes)")


def cmd_run(args):
    grid = parse_grid(args.grid)
    ds = datagen.load_dataset(args.dataset)
    hidden = [int(h) for h in args.hidden.split(",") if h]
    layer_sizes = [ds.features.shape[1]] + hidden + [ds.labels.shape[1]]
    cfg = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        weight_decay=args.weight_decay,
        seed=0,
    )
    seeds = list(range(args.seed, args.seed + args.runs))
    store, _ = experiment.run_population(ds, layer_sizes, cfg, grid, seeds, args.parallel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store_path = out / "store.bin"
    analysis.save_store(store, store_path)
    experiment.write_manifest(
        out / "manifest_run.json",
        {
            "training": experiment.config_hash(cfg),
            "grid": experiment.config_hash(list(grid.ratios)),
            "layer_sizes": experiment.config_hash(layer_sizes),
        },
        seeds,
        {"store.bin": store_path},
    )
    if store.failed_seeds:
        print(f"warning: diverged seeds omitted: {store.failed_seeds}", file=sys.stderr)
    print(f"wrote {store_path} (probs shape {store.probs.shape})")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_analyze(args):
    store = analysis.load_store(args.store)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = {}

    ap, excluded_ap = analysis.ap_tensor(store)
    curves, excluded_base = analysis.forgettability_curves(ap, store.grid, store.class_names)
    excluded = sorted(set(excluded_ap) | set(excluded_base))
    if excluded:
        side = out / "excluded_classes.txt"
        side.write_text("\n".join(excluded) + "\n", encoding="utf-8")
        outputs["excluded_classes.txt"] = side
        print(f"warning: excluded classes: {excluded}", file=sys.stderr)

    _write_csv(
        out / "curves.csv",
        ["class", "k", "value"],
        [
            (c.class_name, repr(k), repr(float(v)))
            for c in curves
            for k, v in zip(c.grid.ratios, c.values)
        ],
    )
    outputs["curves.csv"] = out / "curves.csv"

    overall, first_sig = analysis.overall_drop_analysis(ap, store.grid)
    _write_csv(
        out / "overall.csv",
        ["k", "median_mean_ap", "welch_p"],
        [(repr(r["k"]), repr(r["median_mean_ap"]), repr(r["welch_p"])) for r in overall],
    )
    outputs["overall.csv"] = out / "overall.csv"

    name_to_idx = {n: i for i, n in enumerate(store.class_names)}
    kept = [name_to_idx[c.class_name] for c in curves]
    test_counts = store.labels.sum(axis=0).astype(np.float64)
    inter = store.labels.T.astype(np.float64) @ store.labels.astype(np.float64)
    union = test_counts[:, None] + test_counts[None, :] - inter
    iou_full = np.where(union == 0, 0.0, inter / np.where(union == 0, 1.0, union))
    pairs = analysis.pair_table(curves, test_counts[kept], iou_full[np.ix_(kept, kept)])
    _write_csv(
        out / "pairs.csv",
        ["class_a", "class_b", "fcd", "abs_log_freq_diff", "iou_quarter"],
        [
            (p.class_a, p.class_b, repr(p.fcd), repr(p.abs_log_freq_diff), repr(p.iou_quarter))
            for p in pairs
        ],
    )
    outputs["pairs.csv"] = out / "pairs.csv"

    summary = {"first_significant_k": first_sig}
    try:
        reg = analysis.pair_regression(pairs)
        fit = reg["fit"]
        reg_out = {
            "coefficients": fit.coefficients.tolist(),
            "standard_errors": fit.standard_errors.tolist(),
            "t_values": fit.t_values.tolist(),
            "p_values": fit.p_values.tolist(),
            "residual_variance": fit.residual_variance,
            "n": fit.n,
            "p": fit.p,
            "terms": ["intercept", "abs_log_freq_diff", "iou_quarter", "interaction"],
            "rho_fcd_logfreqdiff": reg["rho_fcd_logfreqdiff"],
            "p_fcd_logfreqdiff": reg["p_fcd_logfreqdiff"],
            "rho_fcd_iou_quarter": reg["rho_fcd_iou_quarter"],
            "p_fcd_iou_quarter": reg["p_fcd_iou_quarter"],
        }
    except ValueError as exc:
        reg_out = {"error": str(exc)}
        print(f"warning: regression skipped: {exc}", file=sys.stderr)
    with open(out / "regression.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(reg_out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs["regression.json"] = out / "regression.json"

    tail_k = 0.95
    has_tail = any(abs(k - tail_k) < 1e-12 for k in store.grid.ratios)
    if store.train_frequencies is not None and len(curves) >= 5:
        if has_tail:
            freqs = store.train_frequencies[kept]
            summary["frequency_correlations"] = analysis.frequency_correlations(curves, freqs)
        else:
            print("warning: grid lacks 0.95; tail-impact columns omitted", file=sys.stderr)
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs["summary.json"] = out / "summary.json"

    if store.weight_hist_counts is not None:
        edges = store.weight_hist_edges
        rows = [
            (repr(float(edges[i])), repr(float(edges[i + 1])), int(store.weight_hist_counts[i]))
            for i in range(edges.size - 1)
        ]
        rows.append((repr(float(edges[-1])), "inf", int(store.weight_hist_counts[-1])))
        _write_csv(out / "histogram.csv", ["bin_low", "bin_high", "count"], rows)
        outputs["histogram.csv"] = out / "histogram.csv"

    experiment.write_manifest(out / "manifest_analyze.json", {}, store.seeds, outputs)
    print(f"wrote analysis tables to {out}")


def cmd_pies(args):
    store = analysis.load_store(args.store)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = pie.build_report(store, k_base=0.0, k_sparse=args.sparse_k, fraction=args.fraction)
    _write_csv(
        out / "pies.csv",
        ["image_id", "agreement", "flag"],
        [
            (store.image_ids[i], repr(float(report.agreement[i])), int(report.pie_flags[i]))
            for i in range(len(store.image_ids))
        ],
    )
    payload = {
        "class_ratio": report.class_ratio,
        "count_ratio": report.count_ratio,
        "threshold_rho": report.threshold_rho,
        "degenerate_count": report.degenerate_count,
        "distinct_agreement_values": report.distinct_agreement_values,
        "infinite_ratio_classes": report.infinite_ratio_classes,
        "n_flagged": int(report.pie_flags.sum()),
    }
    with open(out / "pie_characterization.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    experiment.write_manifest(
        out / "manifest_pies.json",
        {},
        store.seeds,
        {"pies.csv": out / "pies.csv", "pie_characterization.json": out / "pie_characterization.json"},
    )
    print(f"wrote PIE outputs to {out} ({int(report.pie_flags.sum())} flagged)")


def cmd_survey_analyze(args):
    by_question = {}
    with open(args.csv, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or ())
        if not {"group", "score"} <= cols:
            raise CliError("E_SURVEY", "survey CSV needs 'group' and 'score' columns")
        has_q = "question_id" in cols
        for row in reader:
            q = row["question_id"] if has_q else "all"
            by_question.setdefault(q, {}).setdefault(row["group"], []).append(
                float(row["score"])
            )
    results = {}
    for q, groups in sorted(by_question.items()):
        if len(groups) < 2:
            raise CliError("E_SURVEY", f"question {q!r} has a single group")
        res = kruskal_wallis(list(groups.values()))
        results[q] = {
            "groups": sorted(groups),
            "statistic": res.statistic,
            "degrees_of_freedom": res.degrees_of_freedom,
            "p_value": res.p_value,
        }
    text = json.dumps(results, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)


def cmd_report(args):
    ns = argparse.Namespace(store=args.store, out=args.out)
    cmd_analyze(ns)
    ns_p = argparse.Namespace(store=args.store, out=args.out, sparse_k=0.9, fraction=0.05)
    cmd_pies(ns_p)
    out = Path(args.out)
    bundle = {
        name: experiment.file_digest(out / name)
        for name in sorted(p.name for p in out.iterdir() if p.is_file())
        if not name.startswith("manifest")
    }
    with open(out / "manifest_report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"outputs": bundle}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"report bundle in {out}")


def build_parser():
    parser = argparse.ArgumentParser(prog="prunelab")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic dataset")
    g.add_argument("--config", help="generator config JSON file")
    g.add_argument("--preset", help=f"one of {sorted(PRESETS)}")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="train the seed population and sweep sparsities")
    r.add_argument("--dataset", required=True)
    r.add_argument("--runs", type=int, default=10)
    r.add_argument("--grid", default="0:0.95:0.05")
    r.add_argument("--hidden", default="128")
    r.add_argument("--lr", type=float, default=1e-4)
    r.add_argument("--batch-size", type=int, default=128)
    r.add_argument("--max-epochs", type=int, default=200)
    r.add_argument("--patience", type=int, default=15)
    r.add_argument("--weight-decay", type=float, default=0.0)
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--parallel", type=int, default=1)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="forgettability, FCD and regression tables")
    a.add_argument("--store", required=True)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pies", help="pruning-identified exemplar report")
    p.add_argument("--store", required=True)
    p.add_argument("--sparse-k", type=float, default=0.9)
    p.add_argument("--fraction", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pies)

    s = sub.add_parser("survey-analyze", help="Kruskal-Wallis over grouped survey scores")
    s.add_argument("--csv", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_survey_analyze)

    rep = sub.add_parser("report", help="analyze + pies + digest manifest")
    rep.add_argument("--store", required=True)
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        print(f"error[{exc.code}] {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error[{type(exc).__name__}] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

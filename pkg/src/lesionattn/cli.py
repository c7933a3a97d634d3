"""Command-line entry point.

One binary with subcommands covering the whole pipeline: corpus synthesis,
report labelling, both trainers, the evaluation suite, heatmap rendering,
and cross-run report merging.  Every subcommand writes only under its
--out tree and drops a resolved config snapshot there, so any run can be
reproduced from its own directory.  Relative --out paths resolve under
$LESIONATTN_RUN_ROOT when that variable is set.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import runs
from .config import RunConfig, load_config, save_config
from .errors import LesionAttnError
from .manifest import read_manifest, write_manifest
from .nlplabel.lexicon import default_lexicon, default_rules, load_lexicon, load_rules
from .nlplabel.pipeline import label_manifest
from .nlplabel.validate import validate_labels, validation_rows
from .synthgen import generate_corpus, inject_label_noise

RUN_ROOT_VAR = "LESIONATTN_RUN_ROOT"


def resolve_out(path: str) -> Path:
    """Relative output paths land under $LESIONATTN_RUN_ROOT when set."""
    p = Path(path)
    root = os.environ.get(RUN_ROOT_VAR)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def snapshot_config(cfg: RunConfig, out_dir: str | Path) -> Path:
    """Write the fully resolved config so the run reproduces from it alone."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "config.yaml"
    save_config(cfg, path)
    return path


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def cmd_synth(args) -> int:
    cfg = _load_run_config(args)
    cfg.validate()
    out = resolve_out(args.out)
    snapshot_config(cfg, out)
    records = generate_corpus(cfg.gen, cfg.gen_seed, out)
    counts = {s: sum(1 for r in records if r.split == s) for s in ("train", "val", "test")}
    n_annot = sum(1 for r in records if r.annotated)
    print(f"wrote {len(records)} exams to {out} (splits {counts}, {n_annot} annotated)")
    return 0


def cmd_label(args) -> int:
    cfg = _load_run_config(args)
    out = resolve_out(args.out)
    out.mkdir(parents=True, exist_ok=True)
    snapshot_config(cfg, out)

    manifest_path = Path(args.manifest)
    records = read_manifest(manifest_path)
    if args.lexicon:
        lexicon = load_lexicon(args.lexicon)
        rules = load_rules(args.rules, lexicon) if args.rules else default_rules(lexicon)
    else:
        lexicon = default_lexicon()
        rules = default_rules(lexicon)

    labelled = label_manifest(records, lexicon, rules, cfg.nlp)
    # validation reflects the labeller itself; noise below is a training-data corruption
    report = validate_labels(labelled)

    noise_rate = cfg.nlp.noise_rate if args.noise_rate is None else args.noise_rate
    if noise_rate > 0:
        noise_seed = args.noise_seed
        if noise_seed is None:
            noise_seed = cfg.nlp.noise_seed if cfg.nlp.noise_seed is not None else cfg.seed
        labelled = inject_label_noise(labelled, noise_rate, noise_seed)

    # image paths stay valid from the new manifest's directory
    src_root = manifest_path.parent.resolve()
    rebased = [
        dataclasses.replace(r, image_path=os.path.relpath(src_root / r.image_path, out.resolve()))
        for r in labelled
    ]
    write_manifest(rebased, out / "manifest.jsonl")

    runs.write_csv(out / "validation.csv", validation_rows(report))
    (out / "validation.json").write_text(
        json.dumps({label: dataclasses.asdict(row) for label, row in report.items()}, indent=2, sort_keys=True) + "\n"
    )
    agree = sum(1 for r in labelled if r.weak_label == r.truth_label)
    print(f"labelled {len(labelled)} reports ({agree} match truth); manifest at {out / 'manifest.jsonl'}")
    return 0


def cmd_train_conaf(args) -> int:
    from .conaf.train import train_conaf

    cfg = _load_run_config(args)
    overrides = {}
    if args.lambda2 is not None:
        overrides["lambda2"] = args.lambda2
    if args.max_steps is not None:
        overrides["max_steps"] = args.max_steps
    if overrides:
        cfg = dataclasses.replace(cfg, conaf=dataclasses.replace(cfg.conaf, **overrides))
    cfg.validate()
    out = resolve_out(args.out)
    snapshot_config(cfg, out)
    summary = train_conaf(cfg, args.manifest, out)
    print(f"trained conaf for {summary['steps']} steps; best val F1 {summary['best_val_f1']}")
    return 0


def cmd_train_ramaf(args) -> int:
    from .ramaf.train import train_ramaf

    cfg = _load_run_config(args)
    overrides = {}
    if args.no_spatial_reward:
        overrides["use_spatial_reward"] = False
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if overrides:
        cfg = dataclasses.replace(cfg, ramaf=dataclasses.replace(cfg.ramaf, **overrides))
    cfg.validate()
    out = resolve_out(args.out)
    snapshot_config(cfg, out)
    summary = train_ramaf(cfg, args.manifest, out)
    print(f"trained ramaf for {summary['epochs']} epochs; best val accuracy {summary['best_val_accuracy']}")
    return 0


def cmd_eval_cls(args) -> int:
    cfg = _load_run_config(args)
    task = args.task or cfg.conaf.task
    out = resolve_out(args.out)
    result = runs.eval_classification(args.manifest, args.checkpoint, out, task)
    print(json.dumps({k: result[k] for k in ("model", "accuracy", "f1", "sensitivity", "precision")}))
    return 0


def cmd_eval_loc(args) -> int:
    cfg = _load_run_config(args)
    out = resolve_out(args.out)
    result = runs.eval_localisation(args.manifest, args.checkpoint, out, cfg.eval)
    print(json.dumps({"best_threshold": result["best_threshold"], "best_sensitivity": result["best_sensitivity"]}))
    return 0


def cmd_eval_glimpse(args) -> int:
    out = resolve_out(args.out)
    result = runs.eval_glimpse(args.manifest, args.checkpoint, out)
    print(json.dumps({"patch_hit_rate": result["patch"]["hit_rate"], "center_hit_rate": result["center"]["hit_rate"]}))
    return 0


def cmd_eval_deciles(args) -> int:
    cfg = _load_run_config(args)
    bins = args.bins or cfg.eval.decile_count
    mm = args.mm_per_pixel if args.mm_per_pixel is not None else cfg.gen.mm_per_pixel
    out = resolve_out(args.out)
    result = runs.eval_deciles(args.manifest, args.checkpoint, out, bins, mm)
    accs = [r["accuracy"] for r in result["rows"]]
    print(json.dumps({"bins": len(accs), "bottom_accuracy": accs[0], "top_accuracy": accs[-1]}))
    return 0


def cmd_heatmap(args) -> int:
    out = resolve_out(args.out)
    if out.suffix.lower() != ".png":
        out = out / f"{args.exam_id}.png"
    result = runs.render_exam_heatmap(args.manifest, args.checkpoint, args.exam_id, out, args.threshold)
    print(f"wrote {result['out']} ({result['n_predicted_boxes']} predicted boxes)")
    return 0


def cmd_report(args) -> int:
    out = resolve_out(args.out)
    merged = runs.merge_reports(args.runs, out)
    print(f"merged {len(merged)} runs into {out / 'report.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lesionattn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, manifest=True, checkpoint=False, config=True, seed=False):
        if config:
            p.add_argument("--config", help="YAML run config (defaults apply when omitted)")
        if seed:
            p.add_argument("--seed", type=int, help="override the run seed")
        if manifest:
            p.add_argument("--manifest", required=True, help="manifest.jsonl path")
        if checkpoint:
            p.add_argument("--checkpoint", required=True, help="checkpoint directory")
        p.add_argument("--out", required=True, help="output directory for this run")

    p = sub.add_parser("synth", help="render the synthetic corpus")
    p.add_argument("--config", help="YAML run config")
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("label", help="derive weak labels from the reports")
    add_common(p, seed=True)
    p.add_argument("--lexicon", help="lexicon YAML (default: built-in)")
    p.add_argument("--rules", help="rules YAML (default: built-in; needs --lexicon)")
    p.add_argument("--noise-rate", type=float, help="flip this fraction of train/val weak labels")
    p.add_argument("--noise-seed", type=int, help="seed for the label noise stream")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train-conaf", help="train the two-branch network")
    add_common(p, seed=True)
    p.add_argument("--lambda2", type=float, help="override the localisation loss weight")
    p.add_argument("--max-steps", type=int, help="override the step budget")
    p.set_defaults(func=cmd_train_conaf)

    p = sub.add_parser("train-ramaf", help="train the recurrent glimpse agent")
    add_common(p, seed=True)
    p.add_argument("--no-spatial-reward", action="store_true", help="drop the fixation reward term")
    p.add_argument("--epochs", type=int, help="override the epoch budget")
    p.set_defaults(func=cmd_train_ramaf)

    p = sub.add_parser("eval-cls", help="test-split classification metrics")
    add_common(p, checkpoint=True)
    p.add_argument("--task", choices=["lesion-vs-normal", "lesion-vs-rest"])
    p.set_defaults(func=cmd_eval_cls)

    p = sub.add_parser("eval-loc", help="scoremap localisation sweep")
    add_common(p, checkpoint=True)
    p.set_defaults(func=cmd_eval_loc)

    p = sub.add_parser("eval-glimpse", help="fixation hit statistics")
    add_common(p, checkpoint=True, config=False)
    p.set_defaults(func=cmd_eval_glimpse)

    p = sub.add_parser("eval-deciles", help="accuracy by lesion-size bin")
    add_common(p, checkpoint=True)
    p.add_argument("--bins", type=int, help="number of size bins")
    p.add_argument("--mm-per-pixel", type=float, help="report sizes in millimetres")
    p.set_defaults(func=cmd_eval_deciles)

    p = sub.add_parser("heatmap", help="render a scoremap overlay PNG")
    add_common(p, checkpoint=True, config=False)
    p.add_argument("--exam-id", required=True)
    p.add_argument("--threshold", type=float, default=0.4, help="detection threshold for predicted boxes")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("report", help="merge metric tables across runs")
    p.add_argument("--runs", nargs="+", required=True, help="run directories to merge")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LesionAttnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Reference experiment runner.

One shared corpus and weak labelling, then four training arms per seed
(soft attention with and without the localisation term; glimpse agent
with and without the spatial reward), each followed by its evaluation
suite.  Everything lands under one output root:

    <out>/corpus, <out>/labelled, <out>/s<seed>/<arm>/..., <out>/summary.json

Completed stages are skipped on rerun, so an interrupted run resumes.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from pathlib import Path

from . import runs
from .config import RunConfig, load_config, save_config
from .nlplabel.lexicon import default_lexicon, default_rules
from .nlplabel.pipeline import label_manifest
from .nlplabel.validate import validate_labels, validation_rows
from .manifest import read_manifest, write_manifest
from .synthgen import generate_corpus, inject_label_noise

REFERENCE_CONFIG = Path(__file__).resolve().parents[2] / "configs" / "reference.yaml"
REFERENCE_SEEDS = (0, 1, 2)

ARMS = ("conaf", "conaf_ablation", "ramaf", "ram")


def _arm_config(cfg: RunConfig, arm: str, seed: int) -> RunConfig:
    cfg = dataclasses.replace(cfg, seed=seed)
    if arm == "conaf_ablation":
        return dataclasses.replace(cfg, conaf=dataclasses.replace(cfg.conaf, lambda2=0.0))
    if arm == "ram":
        return dataclasses.replace(cfg, ramaf=dataclasses.replace(cfg.ramaf, use_spatial_reward=False))
    return cfg


def prepare_corpus(cfg: RunConfig, out_root: Path) -> Path:
    """Render the corpus once; later calls reuse it."""
    corpus_dir = out_root / "corpus"
    manifest = corpus_dir / "manifest.jsonl"
    if not manifest.exists():
        generate_corpus(cfg.gen, cfg.gen_seed, corpus_dir)
    return manifest


def prepare_labels(cfg: RunConfig, corpus_manifest: Path, out_root: Path) -> Path:
    """Weak labels plus label noise, shared by every arm and seed."""
    labelled_dir = out_root / "labelled"
    manifest = labelled_dir / "manifest.jsonl"
    if manifest.exists():
        return manifest
    labelled_dir.mkdir(parents=True, exist_ok=True)
    records = read_manifest(corpus_manifest)
    lexicon = default_lexicon()
    labelled = label_manifest(records, lexicon, default_rules(lexicon), cfg.nlp)
    runs.write_csv(labelled_dir / "validation.csv", validation_rows(validate_labels(labelled)))
    if cfg.nlp.noise_rate > 0:
        noise_seed = cfg.nlp.noise_seed if cfg.nlp.noise_seed is not None else cfg.seed
        labelled = inject_label_noise(labelled, cfg.nlp.noise_rate, noise_seed)
    src_root = corpus_manifest.parent.resolve()
    rebased = [
        dataclasses.replace(r, image_path=os.path.relpath(src_root / r.image_path, labelled_dir.resolve()))
        for r in labelled
    ]
    write_manifest(rebased, manifest)
    return manifest


def _train_arm(cfg: RunConfig, arm: str, manifest: Path, arm_dir: Path) -> dict:
    if (arm_dir / "summary.json").exists():
        return json.loads((arm_dir / "summary.json").read_text())
    save_config(cfg, arm_dir / "config.yaml")
    if arm.startswith("conaf"):
        from .conaf.train import train_conaf

        return train_conaf(cfg, manifest, arm_dir)
    from .ramaf.train import train_ramaf

    return train_ramaf(cfg, manifest, arm_dir)


def _eval_arm(cfg: RunConfig, arm: str, manifest: Path, arm_dir: Path) -> dict:
    eval_dir = arm_dir / "eval"
    marker = eval_dir / "done.json"
    if marker.exists():
        return json.loads(marker.read_text())
    ckpt = arm_dir / "best"
    result: dict = {}
    cls = runs.eval_classification(manifest, ckpt, eval_dir, cfg.conaf.task)
    result["f1"] = cls["f1"]
    result["accuracy"] = cls["accuracy"]
    if arm.startswith("conaf"):
        loc = runs.eval_localisation(manifest, ckpt, eval_dir, cfg.eval)
        result["loc_sensitivity"] = loc["best_sensitivity"]
        dec = runs.eval_deciles(manifest, ckpt, eval_dir, cfg.eval.decile_count, cfg.gen.mm_per_pixel)
        result["decile_bottom"] = dec["rows"][0]["accuracy"]
        result["decile_top"] = dec["rows"][-1]["accuracy"]
    else:
        gl = runs.eval_glimpse(manifest, ckpt, eval_dir)
        result["hit_rate"] = gl["patch"]["hit_rate"]
        result["box_detection_rate"] = gl["patch"]["box_detection_rate"]
        result["center_box_detection_rate"] = gl["center"]["box_detection_rate"]
    marker.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return result


def _train_accuracy_curve(arm_dir: Path) -> list[float]:
    rows = [json.loads(line) for line in (arm_dir / "metrics.jsonl").read_text().splitlines()]
    return [row["train_accuracy"] for row in rows if "train_accuracy" in row]


def first_reach(curve: list[float], target: float) -> int | None:
    """1-based index of the first epoch at or above target, None if never."""
    for i, v in enumerate(curve):
        if v >= target:
            return i + 1
    return None


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _mean_curve(curves: list[list[float]]) -> list[float]:
    length = min(len(c) for c in curves)
    return [_mean([c[i] for c in curves]) for i in range(length)]


def run_reference(
    config_path: str | Path = REFERENCE_CONFIG,
    out_root: str | Path = "reference-run",
    seeds: tuple[int, ...] = REFERENCE_SEEDS,
) -> dict:
    started = time.time()
    cfg = load_config(config_path)
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out_root / "config.yaml")

    corpus_manifest = prepare_corpus(cfg, out_root)
    manifest = prepare_labels(cfg, corpus_manifest, out_root)

    per_arm: dict[str, dict] = {arm: {"seeds": {}} for arm in ARMS}
    for seed in seeds:
        for arm in ARMS:
            arm_dir = out_root / f"s{seed}" / arm
            arm_cfg = _arm_config(cfg, arm, seed)
            _train_arm(arm_cfg, arm, manifest, arm_dir)
            entry = _eval_arm(arm_cfg, arm, manifest, arm_dir)
            if not arm.startswith("conaf"):
                curve = _train_accuracy_curve(arm_dir)
                entry["train_accuracy_curve"] = curve
                entry["final_train_accuracy"] = curve[-1]
            per_arm[arm]["seeds"][str(seed)] = entry

    def collect(arm: str, key: str) -> list[float]:
        return [per_arm[arm]["seeds"][str(s)][key] for s in seeds]

    ramaf_mean_curve = _mean_curve([per_arm["ramaf"]["seeds"][str(s)]["train_accuracy_curve"] for s in seeds])
    ram_mean_curve = _mean_curve([per_arm["ram"]["seeds"][str(s)]["train_accuracy_curve"] for s in seeds])
    ram_final = ram_mean_curve[-1]

    aggregate = {
        "conaf_f1_mean": _mean(collect("conaf", "f1")),
        "ablation_f1_mean": _mean(collect("conaf_ablation", "f1")),
        "conaf_loc_sensitivity_mean": _mean(collect("conaf", "loc_sensitivity")),
        "ablation_loc_sensitivity_mean": _mean(collect("conaf_ablation", "loc_sensitivity")),
        "decile_bottom_mean": _mean(collect("conaf", "decile_bottom")),
        "decile_top_mean": _mean(collect("conaf", "decile_top")),
        "ramaf_box_detection_rate_mean": _mean(collect("ramaf", "box_detection_rate")),
        "ram_box_detection_rate_mean": _mean(collect("ram", "box_detection_rate")),
        "ramaf_hit_rate_mean": _mean(collect("ramaf", "hit_rate")),
        "ram_hit_rate_mean": _mean(collect("ram", "hit_rate")),
        "ram_final_train_accuracy": ram_final,
        "ramaf_first_reach_epoch": first_reach(ramaf_mean_curve, ram_final),
        "ram_first_reach_epoch": first_reach(ram_mean_curve, ram_final),
        "ramaf_mean_train_curve": ramaf_mean_curve,
        "ram_mean_train_curve": ram_mean_curve,
        "runtime_seconds": round(time.time() - started, 1),
    }
    summary = {"seeds": list(seeds), "arms": per_arm, "aggregate": aggregate}
    (out_root / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary

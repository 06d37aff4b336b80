"""Command-line pipeline: generate, register, train, evaluate.

Every command reads an optional ``key = value`` config file, applies flag
overrides, echoes the resolved configuration into the output directory,
and exits 0 on success. Exit codes: 2 config error, 3 missing or invalid
data, 4 training precondition failure, 5 model/data incompatibility,
1 unexpected fault.

``evaluate`` writes ``evaluation.txt``, a machine-readable ``key = value``
document: ``dataset_digest``, ``dataset_samples``, ``modality_set``,
``models``, ``per_seed_f1`` (comma-separated), ``mean_f1``, then one
``[<weights file>]`` block per model with ``weights_digest``, the confusion
counts ``tn``/``fp``/``fn``/``tp``, ``fa_precision``/``fa_recall``/``fa_f1``,
``uav_precision``/``uav_recall``/``uav_f1``, ``weighted_precision``,
``weighted_recall``, ``weighted_f1``, ``accuracy`` and ``auc``. Training
reports use the same style plus a tab-separated per-epoch series.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_run_config
from .data import Modality, ModalitySet
from .errors import (
    CompatibilityError,
    ConfigError,
    DataError,
    TrainingError,
    UavFuseError,
)
from .metrics import (
    classification_report,
    confusion_at_threshold,
    render_confusion,
    render_report,
    roc_csv,
    roc_curve,
)
from .model import (
    Model,
    ModelSpec,
    batch_arrays,
    build_model,
    load_weights,
    save_weights,
)
from .msfr import (
    read_fused,
    read_manifest,
    read_recording,
    write_fused,
    write_manifest,
    write_recording,
)
from .registration import fuse_dataset
from .rng import Rng
from .synth import generate_synthetic_dataset
from .training import (
    evaluate_probabilities,
    train,
    validation_split_indices,
)

log = logging.getLogger("uavfuse")

_KINDS = {m: m.name.lower() for m in Modality}


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def cmd_generate(cfg: RunConfig, out_dir: Path) -> int:
    data = generate_synthetic_dataset(cfg.synth_config())
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for modality in Modality:
        for rec in data[modality]:
            name = f"{rec.recording_id}_{_KINDS[modality]}.msfr"
            write_recording(rec, out_dir / name)
            entries.append((name, _KINDS[modality], len(rec.samples)))
    entries.sort()
    write_manifest(out_dir, entries)
    cfg.write_resolved(out_dir)
    total = sum(count for _, _, count in entries)
    print(
        f"wrote {cfg.recordings_per_modality} recording(s) per modality, "
        f"{total} samples total, to {out_dir}"
    )
    return 0


def _load_recordings(data_dir: Path) -> dict[Modality, list]:
    by_kind = {kind: [] for kind in _KINDS.values()}
    for name, kind, _count in read_manifest(data_dir):
        if kind in by_kind:
            by_kind[kind].append(read_recording(data_dir / name))
    return {m: by_kind[_KINDS[m]] for m in Modality}


def _counts_line(split: str, thermal, optronic, radar, cfg: RunConfig) -> str:
    parts = []
    one = fuse_dataset(thermal, optronic, radar, ModalitySet.THERMAL, cfg.match_config())
    parts.append(f"one={len(one.samples)}")
    if optronic:
        two = fuse_dataset(
            thermal, optronic, radar, ModalitySet.THERMAL_OPTRONIC, cfg.match_config()
        )
        parts.append(f"two={len(two.samples)}")
        if radar:
            three = fuse_dataset(
                thermal, optronic, radar, ModalitySet.THERMAL_OPTRONIC_RADAR, cfg.match_config()
            )
            parts.append(f"three={len(three.samples)}")
    return f"counts[{split}]: " + " ".join(parts)


def _write_fused_split(cfg: RunConfig, split_dir: Path, thermal, optronic, radar) -> str:
    split_dir.mkdir(parents=True, exist_ok=True)
    fused = fuse_dataset(thermal, optronic, radar, cfg.modality_set, cfg.match_config())
    name = f"fused_{cfg.modalities}.msfr"
    write_fused(fused, split_dir / name)
    write_manifest(split_dir, [(name, "fused", len(fused.samples))])
    cfg.write_resolved(split_dir)
    return name


def cmd_register(cfg: RunConfig, data_dir: Path, out_dir: Path) -> int:
    recordings = _load_recordings(data_dir)
    thermal = recordings[Modality.THERMAL]
    if not thermal:
        raise DataError(f"no thermal recordings listed in {data_dir}")

    required = [Modality.THERMAL]
    if cfg.modality_set.has_optronic:
        required.append(Modality.OPTRONIC)
    if cfg.modality_set.has_radar:
        required.append(Modality.RADAR)
    for modality in required:
        if not recordings[modality]:
            ids = sorted(r.recording_id for r in thermal)
            raise DataError(
                f"no {_KINDS[modality]} recordings for modality set "
                f"'{cfg.modalities}'; unmatched recording ids: {', '.join(ids)}"
            )

    holdout = cfg.holdout_recordings
    ids = sorted({r.recording_id for r in thermal})
    if holdout >= len(ids) and holdout > 0:
        raise DataError(
            f"holdout_recordings={holdout} leaves no training recordings (have {len(ids)})"
        )

    def pick(recs, chosen):
        return [r for r in recs if r.recording_id in chosen]

    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.write_resolved(out_dir)
    if holdout == 0:
        name = _write_fused_split(cfg, out_dir, *(recordings[m] for m in Modality))
        print(_counts_line("all", *(recordings[m] for m in Modality), cfg))
        print(f"wrote {name} to {out_dir}")
    else:
        train_ids, test_ids = set(ids[:-holdout]), set(ids[-holdout:])
        for split, chosen in (("train", train_ids), ("test", test_ids)):
            parts = [pick(recordings[m], chosen) for m in Modality]
            name = _write_fused_split(cfg, out_dir / split, *parts)
            print(_counts_line(split, *parts, cfg))
            print(f"wrote {name} to {out_dir / split}")
    return 0


def _fused_path(data: Path, cfg: RunConfig) -> Path:
    if data.is_file():
        return data
    candidate = data / f"fused_{cfg.modalities}.msfr"
    if candidate.is_file():
        return candidate
    raise DataError(f"no fused dataset at {data} (looked for {candidate.name})")


def _val_weighted_f1(model: Model, dataset, train_cfg) -> float:
    x, r, y = batch_arrays(dataset.samples)
    _, val_idx = validation_split_indices(len(y), train_cfg)
    rv = None if r is None else r[val_idx]
    p = evaluate_probabilities(model, x[val_idx], rv, train_cfg.batch_size)
    return classification_report(confusion_at_threshold(y[val_idx], p)).weighted_f1


def _training_report_text(seed: int, report, val_f1: float) -> str:
    lines = [
        f"seed = {seed}",
        f"stopped_epoch = {report.stopped_epoch}",
        f"best_epoch = {report.best_epoch}",
        f"weights_digest = {report.weights_digest}",
        f"val_weighted_f1 = {_fmt(val_f1)}",
        "epoch\ttrain_loss\ttrain_accuracy\tval_loss\tval_accuracy",
    ]
    for e in range(len(report.train_loss)):
        lines.append(
            f"{e + 1}\t{_fmt(report.train_loss[e])}\t{_fmt(report.train_accuracy[e])}"
            f"\t{_fmt(report.val_loss[e])}\t{_fmt(report.val_accuracy[e])}"
        )
    return "\n".join(lines) + "\n"


def cmd_train(cfg: RunConfig, data: Path, out_dir: Path) -> int:
    dataset = read_fused(_fused_path(data, cfg))
    spec = ModelSpec(
        modality_set=dataset.modality_set,
        stacked_shape=tuple(dataset.stacked_shape),
        radar_len=dataset.radar_len,
        conv_filters=cfg.conv_filters,
        kernel=(cfg.kernel_size, cfg.kernel_size),
        dense_units=cfg.dense_units,
        dropout_rate=cfg.dropout_rate,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.write_resolved(out_dir)
    f1s = []
    for r in range(cfg.repeats):
        seed = cfg.seed + r
        train_cfg = cfg.train_config(seed)
        model = build_model(spec, Rng(seed).spawn("init"))
        trained, report = train(model, dataset, train_cfg)
        val_f1 = _val_weighted_f1(trained, dataset, train_cfg)
        f1s.append(val_f1)
        save_weights(trained, out_dir / f"model_{r:03d}.msfw")
        (out_dir / f"report_{r:03d}.txt").write_text(
            _training_report_text(seed, report, val_f1), encoding="utf-8"
        )
        print(
            f"repeat {r} (seed {seed}): stopped at epoch {report.stopped_epoch}, "
            f"best epoch {report.best_epoch}, validation weighted F1 {_fmt(val_f1)}"
        )
    print(f"mean validation weighted F1 over {cfg.repeats} run(s): {_fmt(float(np.mean(f1s)))}")
    return 0


def _check_compatible(model: Model, dataset) -> None:
    if tuple(model.spec.stacked_shape) != tuple(dataset.stacked_shape):
        raise CompatibilityError(
            f"model input {tuple(model.spec.stacked_shape)} != dataset "
            f"stacked shape {tuple(dataset.stacked_shape)}"
        )
    if model.spec.radar_len != dataset.radar_len:
        raise CompatibilityError(
            f"model radar length {model.spec.radar_len} != dataset {dataset.radar_len}"
        )


def cmd_evaluate(cfg: RunConfig, model_path: Path, data: Path, out_dir: Path) -> int:
    fused_file = _fused_path(data, cfg)
    dataset = read_fused(fused_file)
    if not dataset.samples:
        raise DataError(f"fused dataset {fused_file} is empty")
    if model_path.is_dir():
        model_files = sorted(model_path.glob("*.msfw"))
        if not model_files:
            raise DataError(f"no .msfw weights files in {model_path}")
    else:
        model_files = [model_path]

    x, r, y = batch_arrays(dataset.samples)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.write_resolved(out_dir)

    doc = [
        f"dataset_digest = {hashlib.sha256(fused_file.read_bytes()).hexdigest()}",
        f"dataset_samples = {len(dataset.samples)}",
        f"modality_set = {dataset.modality_set.value}",
        f"models = {','.join(f.name for f in model_files)}",
    ]
    blocks = []
    f1s = []
    for path in model_files:
        model = load_weights(path)
        _check_compatible(model, dataset)
        p = evaluate_probabilities(model, x, r, cfg.batch_size)
        cm = confusion_at_threshold(y, p)
        report = classification_report(cm)
        curve = roc_curve(y, p)
        f1s.append(report.weighted_f1)
        (out_dir / f"roc_{path.stem}.csv").write_text(roc_csv(curve), encoding="utf-8")
        blocks.extend(
            [
                f"[{path.name}]",
                f"weights_digest = {hashlib.sha256(path.read_bytes()).hexdigest()}",
                f"tn = {cm.tn}",
                f"fp = {cm.fp}",
                f"fn = {cm.fn}",
                f"tp = {cm.tp}",
                f"fa_precision = {_fmt(report.false_alarm.precision)}",
                f"fa_recall = {_fmt(report.false_alarm.recall)}",
                f"fa_f1 = {_fmt(report.false_alarm.f1)}",
                f"uav_precision = {_fmt(report.uav.precision)}",
                f"uav_recall = {_fmt(report.uav.recall)}",
                f"uav_f1 = {_fmt(report.uav.f1)}",
                f"weighted_precision = {_fmt(report.weighted_precision)}",
                f"weighted_recall = {_fmt(report.weighted_recall)}",
                f"weighted_f1 = {_fmt(report.weighted_f1)}",
                f"accuracy = {_fmt(report.accuracy)}",
                f"auc = {_fmt(curve.auc)}",
            ]
        )
        print(f"== {path.name} ==")
        print(render_confusion(cm))
        print(render_report(report))
        print(f"AUC: {_fmt(curve.auc)}")

    doc.append(f"per_seed_f1 = {','.join(_fmt(v) for v in f1s)}")
    doc.append(f"mean_f1 = {_fmt(float(np.mean(f1s)))}")
    doc.extend(blocks)
    (out_dir / "evaluation.txt").write_text("\n".join(doc) + "\n", encoding="utf-8")
    print(f"mean weighted F1 over {len(f1s)} model(s): {_fmt(float(np.mean(f1s)))}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavfuse",
        description="UAV vs. false-alarm late-fusion pipeline over per-sensor feature maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--profile", choices=["paper", "reduced"])
        p.add_argument("--modalities", choices=["one", "two", "three"])
        p.add_argument("--repeats", type=int)
        p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("generate", help="synthesize per-modality recordings")
    common(p)

    p = sub.add_parser("register", help="temporally register recordings into fused datasets")
    common(p)
    p.add_argument("--data", type=Path, required=True, help="directory of recordings")
    p.add_argument("--holdout", type=int, help="recordings held out as the test split")

    p = sub.add_parser("train", help="train fusion models on a fused dataset")
    common(p)
    p.add_argument("--data", type=Path, required=True, help="fused dataset file or directory")

    p = sub.add_parser("evaluate", help="evaluate weights on a fused test dataset")
    common(p)
    p.add_argument("--model", type=Path, required=True, help="weights file or directory")
    p.add_argument("--data", type=Path, required=True, help="fused dataset file or directory")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    overrides = {
        "seed": args.seed,
        "profile": args.profile,
        "modalities": args.modalities,
        "repeats": args.repeats,
    }
    if getattr(args, "holdout", None) is not None:
        overrides["holdout_recordings"] = args.holdout
    try:
        cfg = load_run_config(args.config, overrides)
        if args.command == "generate":
            return cmd_generate(cfg, args.out)
        if args.command == "register":
            return cmd_register(cfg, args.data, args.out)
        if args.command == "train":
            return cmd_train(cfg, args.data, args.out)
        return cmd_evaluate(cfg, args.model, args.data, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 4
    except CompatibilityError as exc:
        print(f"incompatible model/data: {exc}", file=sys.stderr)
        return 5
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except UavFuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

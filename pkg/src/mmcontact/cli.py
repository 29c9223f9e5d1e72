"""Command-line entry point: synth, extract, train, evaluate, detect, inspect."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import evaluation, formats
from . import forest as rf
from .config import ConfigError, PipelineConfig
from .dataset import CLASS_NAMES, DatasetError, LabeledDataset, label_frames, split
from .detect import DetectionResult, detect_stream
from .features import extract_features
from .formats import FormatError
from .signal_core import SignalError
from .synth import MotionConfig, TrialConfig, generate_configs, generate_trial

log = logging.getLogger("mmcontact")


class PipelineError(RuntimeError):
    pass


# -- library-level commands --------------------------------------------------

def cmd_synth(cfg: PipelineConfig) -> list[Path]:
    s = cfg.synth
    base = TrialConfig(
        duration=s.duration,
        audio_rate=s.audio_rate,
        wrench_rate=s.wrench_rate,
        motion=MotionConfig(torque_threshold=s.torque_threshold),
    )
    root = Path(cfg.paths.data_dir)
    root.mkdir(parents=True, exist_ok=True)
    entries, dirs = [], []
    for tc in generate_configs(s.n_trials, s.seed, base=base):
        rec = generate_trial(tc)
        d = formats.write_trial(root / rec.trial_id, rec, s.sample_format)
        entries.append((rec.trial_id, rec.trial_id, len(rec.contact_times), len(rec.exogenous_times)))
        dirs.append(d)
    formats.write_manifest(root / "manifest.csv", entries)
    log.info("wrote %d trials to %s", len(entries), root)
    return dirs


def trial_dirs(cfg: PipelineConfig) -> list[tuple[str, Path]]:
    root = Path(cfg.paths.data_dir)
    manifest = root / "manifest.csv"
    if manifest.is_file():
        return [(e["trial_id"], root / e["path"]) for e in formats.read_manifest(manifest)]
    found = sorted(p for p in root.iterdir() if p.is_dir() and (p / "annotations.csv").exists()) if root.is_dir() else []
    if not found:
        raise PipelineError(f"{root}: no manifest.csv and no trial directories")
    return [(p.name, p) for p in found]


def cmd_extract(cfg: PipelineConfig) -> tuple[dict, dict]:
    """Feature CSV per trial. Returns ({trial: rows}, {trial: error message})."""
    out_dir = cfg.paths.features()
    out_dir.mkdir(parents=True, exist_ok=True)
    done, failed = {}, {}
    for trial_id, d in trial_dirs(cfg):
        try:
            rec = formats.read_trial(d, trial_id)
            fm = extract_features(rec, cfg.audio_frames.spec(), cfg.wrench_frames.spec())
        except (FormatError, SignalError) as exc:
            failed[trial_id] = str(exc)
            log.error("%s: %s", trial_id, exc)
            continue
        formats.write_features(out_dir / f"{trial_id}.csv", fm)
        done[trial_id] = len(fm)
    log.info("extracted %d trials (%d rows), %d failed", len(done), sum(done.values()), len(failed))
    return done, failed


def load_dataset(cfg: PipelineConfig) -> LabeledDataset:
    parts = []
    for trial_id, d in trial_dirs(cfg):
        feat_path = cfg.paths.features() / f"{trial_id}.csv"
        if not feat_path.is_file():
            raise PipelineError(f"{feat_path}: missing; run extract first")
        fm = formats.read_features(feat_path)
        events = formats.read_annotations(d / "annotations.csv").get(trial_id, {"contact": []})
        parts.append(label_frames(fm, events["contact"], cfg.labels.window, trial_id, cfg.labels.offset))
    return LabeledDataset.concatenate(parts)


def cmd_train(cfg: PipelineConfig) -> evaluation.SweepResult:
    ds = load_dataset(cfg)
    train_ds, val_ds, _ = split(ds, cfg.split.spec())
    result = evaluation.sweep_n_estimators(
        train_ds, val_ds, range(cfg.sweep.n_min, cfg.sweep.n_max + 1), cfg.forest.spec()
    )
    model_path = Path(cfg.paths.model_file)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    result.model.save(model_path)
    report_dir = Path(cfg.paths.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    formats.write_csv(
        report_dir / "sweep.csv",
        ("n_estimators", "accuracy", "auc", "selected", "split_mode"),
        [(r.n_estimators, r.accuracy, r.auc, int(r.n_estimators == result.selected), cfg.split.mode) for r in result.rows],
    )
    log.info("selected n_estimators=%d (%s split); model at %s", result.selected, cfg.split.mode, model_path)
    return result


def format_report(report: dict) -> str:
    lines = [f"{'':>18}{'precision':>11}{'recall':>9}{'f1-score':>10}{'support':>9}"]
    for name in (*CLASS_NAMES, "weighted_avg"):
        m = report[name]
        label = name.replace("_", " ")
        lines.append(f"{label:>18}{m.precision:>11.2f}{m.recall:>9.2f}{m.f1:>10.2f}{m.support:>9d}")
    return "\n".join(lines)


def cmd_evaluate(cfg: PipelineConfig, model_path=None, run_cv: bool = True) -> evaluation.EvaluationReport:
    model = rf.RandomForestModel.load(model_path or cfg.paths.model_file)
    ds = load_dataset(cfg)
    _, _, test_ds = split(ds, cfg.split.spec())
    ev = evaluation.evaluate(model, test_ds)
    if run_cv:
        cv = evaluation.cross_validate(ds, model.config, cfg.cv.k, cfg.cv.seed)
        ev.cv_scores, ev.cv_mean, ev.cv_std = cv.scores, cv.mean, cv.std
    out = Path(cfg.paths.report_dir)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_csv(out / "confusion.csv", ("true\\pred", *CLASS_NAMES),
                      [(CLASS_NAMES[i], *ev.confusion[i].tolist()) for i in range(2)])
    formats.write_csv(
        out / "classification_report.csv",
        ("class", "precision", "recall", "f1-score", "support", "undefined"),
        [(n, ev.report[n].precision, ev.report[n].recall, ev.report[n].f1, ev.report[n].support,
          "|".join(ev.report[n].undefined)) for n in (*CLASS_NAMES, "weighted_avg")],
    )
    (out / "classification_report.txt").write_text(format_report(ev.report) + "\n")
    formats.write_csv(out / "roc.csv", ("fpr", "tpr"), ev.roc_points.tolist())
    formats.write_csv(out / "importances.csv", ("feature", "importance"),
                      list(zip(model.feature_names, model.feature_importances.tolist())))
    if run_cv:
        formats.write_csv(out / "cv_folds.csv", ("fold", "accuracy"), list(enumerate(ev.cv_scores)))
    formats.write_json(out / "summary.json", {
        "split_mode": cfg.split.mode,
        "n_estimators": model.config.n_estimators,
        "test_rows": int(ev.confusion.sum()),
        "accuracy": ev.accuracy,
        "auc": ev.auc,
        "contact_precision": ev.contact.precision,
        "contact_recall": ev.contact.recall,
        "cv_k": cfg.cv.k if run_cv else None,
        "cv_mean": ev.cv_mean,
        "cv_std": ev.cv_std,
    })
    return ev


def cmd_detect(cfg: PipelineConfig, trial_dir, model_path=None, out=None) -> DetectionResult:
    model = rf.RandomForestModel.load(model_path or cfg.paths.model_file)
    rec = formats.read_trial(trial_dir)
    res = detect_stream(model, rec, cfg.audio_frames.spec(), cfg.wrench_frames.spec(),
                        cfg.detect.merge_gap, cfg.detect.chunk)
    if out:
        formats.write_csv(out, ("timestamp", "probability", "end", "n_frames"),
                          [(e.timestamp, e.probability, e.end, e.n_frames) for e in res.events])
    return res


def cmd_inspect(model_path) -> str:
    model = rf.RandomForestModel.load(model_path)
    lines = ["config:"]
    lines += [f"  {k}: {v}" for k, v in model.to_dict()["config"].items()]
    lines.append("trees: " + ", ".join(f"{t.n_nodes} nodes/depth {t.depth()}" for t in model.trees))
    lines.append("feature importance:")
    order = np.argsort(-model.feature_importances, kind="stable")
    lines += [f"  {model.feature_names[i]:<12} {model.feature_importances[i]:.4f}" for i in order]
    return "\n".join(lines)


# -- argument parsing --------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="YAML pipeline config")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.FIELD=VALUE",
                        help="override one config field (repeatable)")
    common.add_argument("--data-dir")
    common.add_argument("--features-dir")
    common.add_argument("--model", help="model file")
    common.add_argument("--report-dir")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mmcontact", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic trials")
    p.add_argument("--n-trials", type=int)
    p.add_argument("--seed", type=int)

    sub.add_parser("extract", parents=[common], help="write a feature CSV per trial")

    p = sub.add_parser("train", parents=[common], help="split, sweep n_estimators, save model")
    p.add_argument("--split-mode", choices=("frame_level", "trial_level"))
    p.add_argument("--seed", type=int, help="split and forest seed")

    p = sub.add_parser("evaluate", parents=[common], help="test-set report and k-fold CV")
    p.add_argument("--split-mode", choices=("frame_level", "trial_level"))
    p.add_argument("--no-cv", action="store_true")
    p.add_argument("--seed", type=int, help="split and forest seed")

    p = sub.add_parser("detect", parents=[common], help="stream one trial and print contact events")
    p.add_argument("trial", help="trial directory (audio.wav, wrench.csv, annotations.csv)")
    p.add_argument("--out", help="write events CSV here")

    sub.add_parser("inspect", parents=[common], help="show model config and importances")

    p = sub.add_parser("config", parents=[common], help="print the effective config as YAML")
    return parser


def _resolve_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects SECTION.FIELD=VALUE, got {item!r}")
        cfg.override(key.strip(), value)
    flags = {
        "data_dir": ("paths", "data_dir"),
        "features_dir": ("paths", "features_dir"),
        "model": ("paths", "model_file"),
        "report_dir": ("paths", "report_dir"),
        "n_trials": ("synth", "n_trials"),
        "split_mode": ("split", "mode"),
    }
    for attr, (section, name) in flags.items():
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, section, replace(getattr(cfg, section), **{name: value}))
    seed = getattr(args, "seed", None)
    if seed is not None:
        sections = ("synth",) if args.command == "synth" else ("split", "forest")
        for section in sections:
            setattr(cfg, section, replace(getattr(cfg, section), seed=seed))
    return cfg.validate()


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
        if args.command == "config":
            print(cfg.dump(), end="")
        elif args.command == "synth":
            dirs = cmd_synth(cfg)
            print(f"{len(dirs)} trials written to {cfg.paths.data_dir}")
        elif args.command == "extract":
            done, failed = cmd_extract(cfg)
            for trial, n in done.items():
                print(f"{trial}\t{n} rows")
            for trial, msg in failed.items():
                print(f"{trial}\tFAILED: {msg}", file=sys.stderr)
            if failed:
                return 1
        elif args.command == "train":
            result = cmd_train(cfg)
            print(f"split mode: {cfg.split.mode}")
            print(f"{'n_estimators':>12} {'accuracy':>9} {'auc':>9}")
            for r in result.rows:
                flag = "  <- selected" if r.n_estimators == result.selected else ""
                print(f"{r.n_estimators:>12d} {r.accuracy:>9.5f} {r.auc:>9.5f}{flag}")
        elif args.command == "evaluate":
            ev = cmd_evaluate(cfg, run_cv=not args.no_cv)
            print(f"split mode: {cfg.split.mode}")
            print(f"confusion (rows true, cols predicted):\n{ev.confusion}")
            print(format_report(ev.report))
            print(f"accuracy {ev.accuracy:.5f}  AUC {ev.auc:.5f}")
            if ev.cv_mean is not None:
                print(f"{cfg.cv.k}-fold CV accuracy: mean {ev.cv_mean:.5f}, SD {ev.cv_std:.5f}")
        elif args.command == "detect":
            res = cmd_detect(cfg, args.trial, out=args.out)
            for e in res.events:
                print(f"contact at {e.timestamp:.4f} s  p={e.probability:.3f}  frames={e.n_frames}")
            if not res.events:
                print("no contact events")
            s = res.latency_summary()
            print(f"{s['frames']} frames; decision latency mean {s['mean_latency_s']:.3f} s, "
                  f"max {s['max_latency_s']:.3f} s; compute {s['compute_us_per_frame']:.1f} us/frame")
        elif args.command == "inspect":
            print(cmd_inspect(cfg.paths.model_file))
    except (ConfigError, DatasetError, FormatError, SignalError, PipelineError,
            rf.ForestError, evaluation.EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {getattr(exc, 'filename', '') or ''} {exc.strerror or exc}".strip(), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

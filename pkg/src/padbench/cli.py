"""The ``padbench`` command.

Subcommands: preprocess, align, split, compose, eval, det, fid.  Every
run echoes its fully resolved configuration (defaults included) to a
sidecar JSON next to the primary output, and all JSON is written with
sorted keys so identical inputs produce byte-identical outputs.

Exit codes: 0 success, 2 input validation failure, 3 processing failure.
Errors are emitted to stderr as one JSON object per error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import logging
import os
import sys

from . import dataset, fid, metrics, pipeline
from .errors import AlignmentFailed, PadbenchError, ProcessingError
from .imaging import load_image, save_image

log = logging.getLogger("padbench")


def _atomic_write_text(path: str, text: str) -> None:
    tmp = "%s.tmp%d" % (path, os.getpid())
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _dump_json(data) -> str:
    return json.dumps(data, indent=1, sort_keys=True) + "\n"


def _config_dict(args: argparse.Namespace) -> dict:
    skip = {"func"}
    return {
        k: (os.fspath(v) if isinstance(v, os.PathLike) else v)
        for k, v in sorted(vars(args).items())
        if k not in skip
    }


def _write_sidecar(args: argparse.Namespace, out_path: str) -> None:
    if os.path.isdir(out_path):
        sidecar = os.path.join(out_path, "run_config.json")
    else:
        sidecar = out_path + ".run.json"
    _atomic_write_text(sidecar, _dump_json({"config": _config_dict(args)}))


def _resolve_frame_path(manifest_path: str, frame_path: str) -> str:
    if os.path.isabs(frame_path):
        return frame_path
    return os.path.join(os.path.dirname(os.path.abspath(manifest_path)), frame_path)


def _mirror_path(out_dir: str, frame_path: str, suffix: str = ".png") -> str:
    rel = frame_path if not os.path.isabs(frame_path) else os.path.basename(frame_path)
    rel = os.path.splitext(rel)[0] + suffix
    return os.path.join(out_dir, rel)


# preprocess -----------------------------------------------------------------

def _cmd_preprocess(args) -> int:
    records = dataset.load_manifest(args.manifest)
    cfg = pipeline.PreprocessConfig(mask_margin=args.mask_margin)
    os.makedirs(args.out, exist_ok=True)
    _write_sidecar(args, args.out)

    jobs = [r for r in records if r.in_frame]

    def work(record):
        frame = load_image(_resolve_frame_path(args.manifest, record.frame_path))
        out = pipeline.preprocess_presentation(frame, record.quad, cfg)
        dest = _mirror_path(args.out, record.frame_path)
        os.makedirs(os.path.dirname(dest), exist_ok=True)
        save_image(out, dest)

    failures = 0
    with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for record, fut in [(r, pool.submit(work, r)) for r in jobs]:
            try:
                fut.result()
            except Exception as exc:
                failures += 1
                _emit_error(exc, context=record.frame_path)
    print("preprocessed %d frame(s), %d failed" % (len(jobs) - failures, failures))
    return 3 if failures else 0


# align ----------------------------------------------------------------------

def _cmd_align(args) -> int:
    records = dataset.load_manifest(args.manifest)
    pairs = pipeline.pair_presentations(records, args.task, args.seed)
    cfg = pipeline.PreprocessConfig(mask_margin=args.mask_margin)
    params = pipeline.AlignParams(seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    _write_sidecar(args, args.out)

    def work(bona_rec, attack_rec):
        bona = pipeline.preprocess_presentation(
            load_image(_resolve_frame_path(args.manifest, bona_rec.frame_path)),
            bona_rec.quad,
            cfg,
        )
        attack = pipeline.preprocess_presentation(
            load_image(_resolve_frame_path(args.manifest, attack_rec.frame_path)),
            attack_rec.quad,
            cfg,
        )
        warped, report = pipeline.align_attack_to_bonafide(bona, attack, params)
        dest = _mirror_path(args.out, bona_rec.frame_path, suffix="_attack.png")
        os.makedirs(os.path.dirname(dest), exist_ok=True)
        save_image(warped, dest)
        return report

    rows = []
    failures = 0
    with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
        futures = [(b, a, pool.submit(work, b, a)) for b, a in pairs]
        for bona_rec, attack_rec, fut in futures:
            try:
                report = fut.result()
                rows.append(
                    [
                        bona_rec.frame_path,
                        attack_rec.frame_path,
                        str(report.inliers),
                        "%.4f" % report.mean_error_px,
                        "ok",
                    ]
                )
            except AlignmentFailed as exc:
                failures += 1
                log.info("alignment failed for %s: %s", attack_rec.frame_path, exc)
                rows.append(
                    [bona_rec.frame_path, attack_rec.frame_path, "0", "", "failed"]
                )

    out_csv = os.path.join(args.out, "pairs.csv")
    lines = ["bona_path,attack_path,inliers,mean_error_px,status"]
    lines += [",".join(row) for row in rows]
    _atomic_write_text(out_csv, "\n".join(lines) + "\n")

    rate = failures / len(pairs) if pairs else 0.0
    print(
        "aligned %d pair(s), %d failed (rate %.3f)" % (len(pairs) - failures, failures, rate)
    )
    if rate > args.max_fail_rate:
        raise ProcessingError(
            "alignment failure rate %.3f above --max-fail-rate %.3f"
            % (rate, args.max_fail_rate)
        )
    return 0


# split ----------------------------------------------------------------------

def _cmd_split(args) -> int:
    records = dataset.load_manifest(args.manifest)
    if args.rules == "paper":
        rules = dataset.load_paper_rules(args.task)
    else:
        rules = dataset.load_rules(args.rules)
    assignment = dataset.build_splits(records, args.task, rules)
    assignment = dataset.partition_halves(assignment, args.seed)
    report = dataset.validate_assignment(assignment)

    _atomic_write_text(args.out, _dump_json(dataset.assignment_to_dict(assignment)))
    report_data = {
        "violations": list(report.violations),
        "balance_flags": report.balance_flags,
        "ok": report.ok,
    }
    _atomic_write_text(args.out + ".validation.json", _dump_json(report_data))
    _write_sidecar(args, args.out)

    if args.json:
        print(_dump_json(report_data), end="")
    else:
        counts = {
            split: {
                label: len(assignment.records_in(split, label))
                for label in ("bonafide", dataset.attack_class(args.task))
            }
            for split in dataset.SPLITS
        }
        print("split of %d frames for task %r:" % (len(assignment.records), args.task))
        for split, by_label in counts.items():
            print(
                "  %-10s " % split
                + "  ".join("%s=%d" % kv for kv in sorted(by_label.items()))
            )
        state = "ok" if report.ok else "VIOLATIONS"
        print("validation: %s (%d violation(s), %d balance flag(s))" % (
            state, len(report.violations), len(report.balance_flags)))
    return 0


# compose --------------------------------------------------------------------

def _cmd_compose(args) -> int:
    with open(args.assignment, "r", encoding="utf-8") as fh:
        assignment = dataset.assignment_from_dict(json.load(fh))
    mode = args.mode.replace("-", "_")
    rows = dataset.compose_training_manifest(assignment, mode, args.synth_dir)
    lines = ["path,class_label,origin"]
    lines += ["%s,%s,%s" % (r.path, r.class_label, r.origin) for r in rows]
    _atomic_write_text(args.out, "\n".join(lines) + "\n")
    _write_sidecar(args, args.out)
    print("wrote %d row(s) to %s" % (len(rows), args.out))
    return 0


# eval -----------------------------------------------------------------------

def _evaluate_scores(path: str, polarity: str) -> tuple[dict, metrics.DetCurve]:
    records = metrics.read_scores(path)
    if polarity == "attack-low":
        records = metrics.flip_polarity(records)
    curve = metrics.compute_det(records)
    eer = metrics.compute_eer(curve)

    diff = curve.apcer_max - curve.bpcer
    idx = int((diff >= 0.0).argmax())
    tau = float(curve.thresholds[idx])
    result = {
        "counts": {
            "bonafide": sum(1 for r in records if r.label == 0),
            "attacks": {str(j): sum(1 for r in records if r.label == j)
                        for j in curve.pai_labels},
        },
        "eer": eer,
        "eer_threshold": tau,
        "apcer_at_eer_threshold": {
            str(j): v for j, v in metrics.apcer_per_pai(records, tau).items()
        },
        "apcer_max_at_eer_threshold": metrics.apcer_max(records, tau),
        "bpcer_at_eer_threshold": metrics.bpcer(records, tau),
    }
    for ap in (10, 20, 100):
        res = metrics.bpcer_at_ap(curve, ap)
        result["bpcer%d" % ap] = res.value
        result["bpcer%d_saturated" % ap] = res.saturated
    return result, curve


def _cmd_eval(args) -> int:
    result, _ = _evaluate_scores(args.scores, args.score_polarity)
    result["config"] = _config_dict(args)
    if args.out:
        _atomic_write_text(args.out, _dump_json(result))
        _write_sidecar(args, args.out)
    if args.json:
        print(_dump_json(result), end="")
    else:
        print("config: %s" % json.dumps(result["config"], sort_keys=True))
        rows = [("eer", result["eer"])]
        rows += [("bpcer%d" % ap, result["bpcer%d" % ap]) for ap in (10, 20, 100)]
        rows += [
            ("apcer[%s]@eer" % j, v)
            for j, v in sorted(result["apcer_at_eer_threshold"].items())
        ]
        width = max(len(name) for name, _ in rows)
        for name, value in rows:
            print("%-*s  %8.4f" % (width, name, value))
        flags = [ap for ap in (10, 20, 100) if result["bpcer%d_saturated" % ap]]
        if flags:
            print("saturated: %s" % ", ".join("bpcer%d" % ap for ap in flags))
    return 0


# det ------------------------------------------------------------------------

def _cmd_det(args) -> int:
    named = []
    for path in args.scores:
        records = metrics.read_scores(path)
        if args.score_polarity == "attack-low":
            records = metrics.flip_polarity(records)
        name = os.path.splitext(os.path.basename(path))[0]
        named.append((name, metrics.compute_det(records)))

    base = args.out
    os.makedirs(os.path.dirname(os.path.abspath(base)), exist_ok=True)
    if len(named) == 1:
        metrics.export_det(named[0][1], base + ".csv", "csv")
    else:
        for name, curve in named:
            metrics.export_det(curve, "%s_%s.csv" % (base, name), "csv")
    metrics.export_det(named, base + ".svg", "svg")
    _write_sidecar(args, base + ".svg")
    print("wrote DET curve(s) for %d score file(s) to %s.*" % (len(named), base))
    return 0


# fid ------------------------------------------------------------------------

def _cmd_fid(args) -> int:
    stats_a = fid.gaussian_stats(fid.read_embeddings(args.a))
    stats_b = fid.gaussian_stats(fid.read_embeddings(args.b))
    value = fid.frechet_distance(stats_a, stats_b)
    if args.out:
        _atomic_write_text(
            args.out, _dump_json({"fid": value, "config": _config_dict(args)})
        )
        _write_sidecar(args, args.out)
    if args.json:
        print(_dump_json({"fid": value}), end="")
    else:
        print("%.6f" % value)
    return 0


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padbench",
        description="ID-card presentation-attack-detection benchmark toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("preprocess", help="rectify, mask, and crop manifest frames")
    p.add_argument("--manifest", required=True, help="manifest JSON path")
    p.add_argument("--out", required=True, help="output directory (mirrored tree)")
    p.add_argument("--mask-margin", type=int, default=16,
                   help="border mask width in px on the rectified image (default 16)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker threads (default: logical CPUs)")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("align", help="build pixel-aligned attack images per bona fide frame")
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", required=True, choices=["print", "screen"])
    p.add_argument("--seed", type=int, default=0, help="pairing/RANSAC seed (default 0)")
    p.add_argument("--out", required=True, help="output directory (aligned PNGs + pairs.csv)")
    p.add_argument("--mask-margin", type=int, default=16,
                   help="border mask width in px on the rectified image (default 16)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker threads (default: logical CPUs)")
    p.add_argument("--max-fail-rate", type=float, default=1.0,
                   help="exit 3 when the AlignmentFailed ratio exceeds this (default 1.0)")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("split", help="build subject-level train/validation/test splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--rules", required=True,
                   help="rules JSON path, or 'paper' for the shipped protocol")
    p.add_argument("--task", required=True, choices=["print", "screen"])
    p.add_argument("--seed", type=int, default=0, help="seed for the T_A/T_B halves (default 0)")
    p.add_argument("--out", required=True, help="assignment JSON path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("compose", help="emit a training file listing for one composition mode")
    p.add_argument("--assignment", required=True, help="assignment JSON from 'split'")
    p.add_argument("--mode", required=True,
                   choices=["real-half", "real-full", "synthetic"])
    p.add_argument("--synth-dir", default=None,
                   help="synthetic image directory (synthetic mode)")
    p.add_argument("--out", required=True, help="listing CSV path")
    p.set_defaults(func=_cmd_compose)

    p = sub.add_parser("eval", help="ISO/IEC 30107-3 metrics for one score file")
    p.add_argument("--scores", required=True, help="score CSV path")
    p.add_argument("--score-polarity", choices=["attack-high", "attack-low"],
                   default="attack-high",
                   help="attack-high: higher score means more attack-like (default)")
    p.add_argument("--out", default=None, help="write metrics JSON here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("det", help="DET curve CSV/SVG for one or more score files")
    p.add_argument("--scores", required=True, nargs="+")
    p.add_argument("--score-polarity", choices=["attack-high", "attack-low"],
                   default="attack-high",
                   help="attack-high: higher score means more attack-like (default)")
    p.add_argument("--out", required=True, help="output base path (writes .csv/.svg)")
    p.set_defaults(func=_cmd_det)

    p = sub.add_parser("fid", help="Frechet distance between two PADEMB1 files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", default=None, help="write result JSON here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_fid)

    return parser


def _emit_error(exc: Exception, context: str | None = None) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if context:
        payload["context"] = context
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("PADBENCH_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PadbenchError as exc:
        _emit_error(exc)
        return exc.exit_code
    except FileNotFoundError as exc:
        _emit_error(exc)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

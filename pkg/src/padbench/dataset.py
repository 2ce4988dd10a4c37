"""Manifest model, subject-level split construction, and training-set
composition.

A manifest is a JSON array of per-frame records.  Split rules are data,
not code: a JSON file maps ``{task: {source_dataset: {doc_type:
{subject_id: split}}}}`` where split is one of ``train``, ``validation``,
``test`` or ``exclude``.  The rules files shipped under
``padbench/rules/`` encode the reference print/screen protocols for the
MIDV-2020 + DLC-2021 corpora; ``load_paper_rules`` returns them.

Subject identity is the (doc_type, subject_id) pair: the same subject
number under one document type names the same person in both source
datasets, so split disjointness is enforced across datasets.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from importlib import resources

from .errors import (
    EmptyTrainSplit,
    ManifestError,
    MissingSyntheticFile,
    RuleCoverageGap,
    SyntheticCountMismatch,
    UnknownSubjectInRules,
)
from .imaging import Quad
from .rng import SplitMix64

DOC_TYPES = ("alb_id", "esp_id", "est_id", "fin_id", "svk_id")
SOURCES = ("midv2020", "dlc2021")
CLASSES = ("bonafide", "print", "screen")
SPLITS = ("train", "validation", "test")
TASKS = ("print", "screen")
HALVES = ("T_A", "T_B")

_MANIFEST_FIELDS = (
    "subject_id",
    "doc_type",
    "source_dataset",
    "class_label",
    "frame_path",
    "quad",
    "in_frame",
)


@dataclass(frozen=True)
class FrameRecord:
    subject_id: str
    doc_type: str
    source_dataset: str
    class_label: str
    frame_path: str
    quad: Quad
    in_frame: bool

    @property
    def subject_key(self) -> tuple[str, str]:
        return (self.doc_type, self.subject_id)


def attack_class(task: str) -> str:
    if task not in TASKS:
        raise ValueError("task must be one of %s" % (TASKS,))
    return task


def _check_record(obj: dict, index: int) -> FrameRecord:
    if not isinstance(obj, dict):
        raise ManifestError("record %d is not an object" % index)
    missing = [f for f in _MANIFEST_FIELDS if f not in obj]
    if missing:
        raise ManifestError("record %d missing fields %s" % (index, missing))
    if obj["doc_type"] not in DOC_TYPES:
        raise ManifestError("record %d: unknown doc_type %r" % (index, obj["doc_type"]))
    if obj["source_dataset"] not in SOURCES:
        raise ManifestError(
            "record %d: unknown source_dataset %r" % (index, obj["source_dataset"])
        )
    if obj["class_label"] not in CLASSES:
        raise ManifestError(
            "record %d: unknown class_label %r" % (index, obj["class_label"])
        )
    quad = obj["quad"]
    if not isinstance(quad, (list, tuple)) or len(quad) != 8:
        raise ManifestError("record %d: quad must hold 8 numbers" % index)
    return FrameRecord(
        subject_id=str(obj["subject_id"]),
        doc_type=obj["doc_type"],
        source_dataset=obj["source_dataset"],
        class_label=obj["class_label"],
        frame_path=str(obj["frame_path"]),
        quad=Quad.from_flat(quad),
        in_frame=bool(obj["in_frame"]),
    )


def load_manifest(path) -> list[FrameRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError("%s: %s" % (path, exc)) from exc
    if not isinstance(raw, list):
        raise ManifestError("%s: manifest must be a JSON array" % path)
    records = [_check_record(obj, i) for i, obj in enumerate(raw)]
    paths = [r.frame_path for r in records]
    if len(set(paths)) != len(paths):
        dupes = sorted({p for p in paths if paths.count(p) > 1})
        raise ManifestError("duplicate frame_path entries: %s" % dupes[:5])
    return records


def record_to_dict(r: FrameRecord) -> dict:
    return {
        "subject_id": r.subject_id,
        "doc_type": r.doc_type,
        "source_dataset": r.source_dataset,
        "class_label": r.class_label,
        "frame_path": r.frame_path,
        "quad": [float(v) for v in r.quad.as_array().ravel()],
        "in_frame": r.in_frame,
    }


def save_manifest(records: list[FrameRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([record_to_dict(r) for r in records], fh, indent=1, sort_keys=True)


def load_rules(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        rules = json.load(fh)
    if not isinstance(rules, dict):
        raise ManifestError("%s: rules must be a JSON object" % path)
    return rules


def load_paper_rules(task: str) -> dict:
    """The split protocol shipped with the toolkit for the given task."""
    attack_class(task)
    ref = resources.files("padbench").joinpath("rules/%s.json" % task)
    return json.loads(ref.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SplitAssignment:
    task: str
    records: tuple[FrameRecord, ...]
    split_by_path: dict[str, str]
    half_by_path: dict[str, str] = field(default_factory=dict)

    def records_in(self, split: str, class_label: str | None = None):
        out = [r for r in self.records if self.split_by_path[r.frame_path] == split]
        if class_label is not None:
            out = [r for r in out if r.class_label == class_label]
        return out

    def half_records(self, half: str, class_label: str | None = None):
        out = [r for r in self.records if self.half_by_path.get(r.frame_path) == half]
        if class_label is not None:
            out = [r for r in out if r.class_label == class_label]
        return out


def build_splits(
    manifest: list[FrameRecord], task: str, rules: dict
) -> SplitAssignment:
    """Assign every relevant in-frame record to train/validation/test.

    Relevant records are the task's two classes; bona fide frames come
    from both source datasets while attack frames are drawn exclusively
    from dlc2021.  Every relevant subject must be covered by a rule, and
    every ruled subject must appear in the manifest.
    """
    atk = attack_class(task)
    task_rules = rules.get(task)
    if task_rules is None:
        raise ManifestError("rules file has no %r task section" % task)

    classes = ("bonafide", atk)
    relevant = [
        r
        for r in manifest
        if r.in_frame
        and r.class_label in classes
        and (r.class_label == "bonafide" or r.source_dataset == "dlc2021")
    ]

    gaps = []
    assigned: dict[str, str] = {}
    kept: list[FrameRecord] = []
    seen_ruled: set[tuple[str, str, str]] = set()
    for r in relevant:
        split = (
            task_rules.get(r.source_dataset, {})
            .get(r.doc_type, {})
            .get(r.subject_id)
        )
        if split is None:
            gaps.append((r.source_dataset, r.doc_type, r.subject_id))
            continue
        if split not in SPLITS + ("exclude",):
            raise ManifestError(
                "rule %s/%s/%s has invalid split %r"
                % (r.source_dataset, r.doc_type, r.subject_id, split)
            )
        seen_ruled.add((r.source_dataset, r.doc_type, r.subject_id))
        if split == "exclude":
            continue
        assigned[r.frame_path] = split
        kept.append(r)
    if gaps:
        raise RuleCoverageGap("no rule for subjects: %s" % sorted(set(gaps))[:10])

    ruled = {
        (source, doc, subject)
        for source, docs in task_rules.items()
        for doc, subjects in docs.items()
        for subject in subjects
    }
    unknown = ruled - seen_ruled
    if unknown:
        raise UnknownSubjectInRules(
            "rules name subjects absent from the manifest: %s" % sorted(unknown)[:10]
        )

    kept.sort(key=lambda r: r.frame_path)
    return SplitAssignment(task=task, records=tuple(kept), split_by_path=assigned)


def partition_halves(assignment: SplitAssignment, seed: int) -> SplitAssignment:
    """Split the train frames of each class into halves T_A and T_B.

    Frames of each class are sorted by path, Fisher-Yates shuffled from a
    single SplitMix64(seed) stream (classes visited in sorted order), and
    cut in half; an odd count gives T_B the extra frame.
    """
    train = assignment.records_in("train")
    by_class: dict[str, list[FrameRecord]] = {}
    for r in train:
        by_class.setdefault(r.class_label, []).append(r)
    for label in ("bonafide", attack_class(assignment.task)):
        if not by_class.get(label):
            raise EmptyTrainSplit("train split has no %r frames" % label)

    rng = SplitMix64(seed)
    halves: dict[str, str] = {}
    for label in sorted(by_class):
        frames = sorted(by_class[label], key=lambda r: r.frame_path)
        rng.shuffle(frames)
        cut = len(frames) // 2
        for r in frames[:cut]:
            halves[r.frame_path] = "T_A"
        for r in frames[cut:]:
            halves[r.frame_path] = "T_B"
    return replace(assignment, half_by_path=halves)


@dataclass(frozen=True)
class ListingRow:
    path: str
    class_label: str
    origin: str  # "real" or "synthetic"


def compose_training_manifest(
    assignment: SplitAssignment, mode: str, synth_dir=None
) -> list[ListingRow]:
    """Build the labeled file listing for one training composition.

    ``real_half`` lists T_A; ``real_full`` lists T_A plus T_B; and
    ``synthetic`` lists T_A, the bona fide frames of T_B, and one
    synthetic attack image per T_B bona fide frame, matched by file name
    inside ``synth_dir`` and labeled as the task's attack class.
    """
    if mode not in ("real_half", "real_full", "synthetic"):
        raise ValueError("mode must be real_half, real_full or synthetic")
    if not assignment.half_by_path:
        raise EmptyTrainSplit("assignment has no T_A/T_B halves; partition first")

    rows = [
        ListingRow(r.frame_path, r.class_label, "real")
        for r in assignment.half_records("T_A")
    ]
    if mode == "real_full":
        rows += [
            ListingRow(r.frame_path, r.class_label, "real")
            for r in assignment.half_records("T_B")
        ]
    elif mode == "synthetic":
        if synth_dir is None:
            raise ValueError("synthetic mode needs synth_dir")
        synth_dir = os.fspath(synth_dir)
        tb_bona = assignment.half_records("T_B", "bonafide")
        n_files = sum(len(files) for _, _, files in os.walk(synth_dir))
        if n_files != len(tb_bona):
            raise SyntheticCountMismatch(
                "synthetic directory holds %d files but T_B has %d bona fide frames"
                % (n_files, len(tb_bona))
            )
        atk = attack_class(assignment.task)
        for r in tb_bona:
            # generators mirror the bona fide tree, so the synthetic image
            # lives at the same relative path under synth_dir
            rel = (
                os.path.basename(r.frame_path)
                if os.path.isabs(r.frame_path)
                else r.frame_path
            )
            synth_path = os.path.join(synth_dir, rel)
            if not os.path.isfile(synth_path):
                raise MissingSyntheticFile("no synthetic image at %r" % synth_path)
            rows.append(ListingRow(r.frame_path, "bonafide", "real"))
            rows.append(ListingRow(synth_path, atk, "synthetic"))
    rows.sort(key=lambda row: (row.path, row.origin))
    return rows


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]
    balance_flags: dict[str, float]

    @property
    def ok(self) -> bool:
        return not self.violations and not self.balance_flags


def validate_assignment(assignment: SplitAssignment) -> ValidationReport:
    """Check subject disjointness, per-cell subject coverage, and class balance.

    Violations are strings naming the offending subject or cell; a split
    whose class counts differ by more than a 1.1 ratio is flagged with
    that ratio.
    """
    violations: list[str] = []

    subjects_by_split: dict[str, set] = {s: set() for s in SPLITS}
    for r in assignment.records:
        subjects_by_split[assignment.split_by_path[r.frame_path]].add(r.subject_key)
    for i, a in enumerate(SPLITS):
        for b in SPLITS[i + 1 :]:
            for key in sorted(subjects_by_split[a] & subjects_by_split[b]):
                violations.append(
                    "subject %s/%s appears in both %s and %s" % (key[0], key[1], a, b)
                )

    classes = ("bonafide", attack_class(assignment.task))
    for split in SPLITS:
        for doc in DOC_TYPES:
            for label in classes:
                subs = {
                    r.subject_key
                    for r in assignment.records_in(split, label)
                    if r.doc_type == doc
                }
                if 0 < len(subs) < 2:
                    violations.append(
                        "%s has only %d %s subject(s) for %s"
                        % (split, len(subs), label, doc)
                    )

    balance: dict[str, float] = {}
    for split in SPLITS:
        counts = [len(assignment.records_in(split, label)) for label in classes]
        if min(counts) == 0:
            if max(counts) > 0:
                balance[split] = float("inf")
            continue
        ratio = max(counts) / min(counts)
        if ratio > 1.1:
            balance[split] = ratio

    return ValidationReport(tuple(violations), balance)


# Assignment (de)serialization used by the CLI ------------------------------

def assignment_to_dict(assignment: SplitAssignment) -> dict:
    frames = []
    for r in sorted(assignment.records, key=lambda r: r.frame_path):
        entry = record_to_dict(r)
        entry["split"] = assignment.split_by_path[r.frame_path]
        half = assignment.half_by_path.get(r.frame_path)
        if half is not None:
            entry["half"] = half
        frames.append(entry)
    return {"task": assignment.task, "frames": frames}


def assignment_from_dict(data: dict) -> SplitAssignment:
    try:
        task = data["task"]
        frames = data["frames"]
    except (KeyError, TypeError) as exc:
        raise ManifestError("assignment JSON needs task and frames") from exc
    records = []
    split_by_path = {}
    half_by_path = {}
    for i, entry in enumerate(frames):
        r = _check_record(entry, i)
        records.append(r)
        if entry.get("split") not in SPLITS:
            raise ManifestError("frame %d has invalid split %r" % (i, entry.get("split")))
        split_by_path[r.frame_path] = entry["split"]
        if "half" in entry:
            if entry["half"] not in HALVES:
                raise ManifestError("frame %d has invalid half %r" % (i, entry["half"]))
            half_by_path[r.frame_path] = entry["half"]
    return SplitAssignment(
        task=task,
        records=tuple(records),
        split_by_path=split_by_path,
        half_by_path=half_by_path,
    )

"""Build subject-level splits and training compositions from a manifest.

Uses a synthetic manifest that covers every subject named by the shipped
print-task protocol, then shows the split sizes, the T_A/T_B halves, and
the three training-set composition modes.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "tests"))
from conftest import manifest_for_rules  # synthetic-manifest builder

from padbench.dataset import (
    build_splits,
    compose_training_manifest,
    load_paper_rules,
    partition_halves,
    validate_assignment,
)

rules = load_paper_rules("print")
manifest = manifest_for_rules(rules, "print")
print("synthetic manifest: %d frame records" % len(manifest))

assignment = build_splits(manifest, "print", rules)
for split in ("train", "validation", "test"):
    bona = len(assignment.records_in(split, "bonafide"))
    atk = len(assignment.records_in(split, "print"))
    subjects = {r.subject_key for r in assignment.records_in(split)}
    print("  %-10s  bonafide=%-4d print=%-4d subjects=%d" % (split, bona, atk, len(subjects)))

report = validate_assignment(assignment)
print("validation report ok:", report.ok)

assignment = partition_halves(assignment, seed=0)
for label in ("bonafide", "print"):
    print("  halves %-9s T_A=%d T_B=%d" % (
        label,
        len(assignment.half_records("T_A", label)),
        len(assignment.half_records("T_B", label)),
    ))

half = compose_training_manifest(assignment, "real_half")
full = compose_training_manifest(assignment, "real_full")
print("composition real_half: %d files, real_full: %d files" % (len(half), len(full)))
print("identity |real_full| == |real_half| + |T_B|:",
      len(full) == len(half) + len(assignment.half_records("T_B")))

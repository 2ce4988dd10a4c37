import numpy as np
import pytest

from padbench.dataset import FrameRecord
from padbench.imaging import ImageBuffer, Quad


def random_buffer(rng, width, height, channels=3):
    return ImageBuffer(rng.integers(0, 256, (height, width, channels), dtype=np.uint8))


def shaded_checkerboard(rng, width, height, cell=32, noise=3.0):
    """Checkerboard of randomly shaded cells plus mild Gaussian noise."""
    ys, xs = np.meshgrid(np.arange(height) // cell, np.arange(width) // cell, indexing="ij")
    shades = rng.integers(20, 236, (height // cell + 2, width // cell + 2))
    img = shades[ys, xs].astype(np.float64)
    if noise:
        img += rng.normal(0.0, noise, img.shape)
    return ImageBuffer(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def make_record(subject, doc="alb_id", source="dlc2021", label="bonafide",
                path=None, in_frame=True, quad=None):
    if path is None:
        path = "frames/%s/%s/%s/%s_000.png" % (source, doc, subject, label)
    if quad is None:
        quad = Quad((10.0, 10.0), (80.0, 12.0), (78.0, 120.0), (8.0, 118.0))
    return FrameRecord(
        subject_id=subject,
        doc_type=doc,
        source_dataset=source,
        class_label=label,
        frame_path=path,
        quad=quad,
        in_frame=in_frame,
    )


def manifest_for_rules(rules, task, frames_per_subject=3):
    """Synthetic manifest covering every subject a rules file names.

    DLC subjects get bona fide and attack frames; MIDV subjects are bona
    fide only, mirroring how the source corpora are laid out.  Attack
    frame counts are scaled per (doc, split) cell so each split ends up
    approximately class balanced, the way the reference protocol balanced
    by subject selection.
    """
    task_rules = rules[task]
    bona_subjects = {}
    attack_subjects = {}
    for source in task_rules:
        for doc in task_rules[source]:
            for subject, split in task_rules[source][doc].items():
                if split == "exclude":
                    continue
                bona_subjects.setdefault((doc, split), set()).add((source, subject))
                if source == "dlc2021":
                    attack_subjects.setdefault((doc, split), set()).add((source, subject))

    records = []
    for source in sorted(task_rules):
        for doc in sorted(task_rules[source]):
            for subject in sorted(task_rules[source][doc]):
                split = task_rules[source][doc][subject]
                labels = {"bonafide": frames_per_subject}
                if source == "dlc2021" and split != "exclude":
                    cell = (doc, split)
                    n_bona = len(bona_subjects[cell]) * frames_per_subject
                    labels[task] = max(1, round(n_bona / len(attack_subjects[cell])))
                for label, count in labels.items():
                    for i in range(count):
                        records.append(
                            make_record(
                                subject,
                                doc=doc,
                                source=source,
                                label=label,
                                path="frames/%s/%s/%s/%s_%03d.png"
                                % (source, doc, subject, label, i),
                            )
                        )
    return records


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)

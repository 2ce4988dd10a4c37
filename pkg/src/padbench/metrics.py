"""Detection metrics over classifier score files.

Records carry an integer label (0 = bona fide, j >= 1 = attack type j)
and a score in [0, 1] read as the claimed probability of attack.  The
decision rule is fixed: predict attack when score >= threshold.  Under
that rule

* APCER_j(t) = 100 * |{label j, score < t}| / |{label j}|   (per PAI)
* APCER(t)   = max_j APCER_j(t)                             (worst case)
* BPCER(t)   = 100 * |{label 0, score >= t}| / |{label 0}|

All rates are exact integer counts scaled by 100, so they are invariant
to record order; floating point enters only at interpolation (EER and
BPCER at a fixed APCER operating point).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence
from xml.etree import ElementTree as ET

import numpy as np

from .errors import (
    MissingClass,
    NoAttackRecords,
    NoBonaFideRecords,
    OutOfDomain,
    ScoreFileError,
)


class ScoreRecord(NamedTuple):
    presentation_id: str
    label: int
    score: float


class BpcerAtAp(NamedTuple):
    value: float
    saturated: bool


def _validate_records(records: Sequence[ScoreRecord]) -> None:
    for r in records:
        if r.label < 0:
            raise ScoreFileError("%s: label must be >= 0" % r.presentation_id)
        if not math.isfinite(r.score) or not 0.0 <= r.score <= 1.0:
            raise ScoreFileError("%s: score %r outside [0, 1]" % (r.presentation_id, r.score))


def read_scores(path) -> list[ScoreRecord]:
    """Parse a score CSV with the exact header presentation_id,label,score."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ScoreFileError("%s: empty file" % path) from None
        if [h.strip() for h in header] != ["presentation_id", "label", "score"]:
            raise ScoreFileError(
                "%s: header must be presentation_id,label,score" % path
            )
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ScoreFileError("%s:%d: expected 3 columns" % (path, lineno))
            try:
                rec = ScoreRecord(row[0], int(row[1]), float(row[2]))
            except ValueError as exc:
                raise ScoreFileError("%s:%d: %s" % (path, lineno, exc)) from exc
            records.append(rec)
    _validate_records(records)
    if not records:
        raise ScoreFileError("%s: no records" % path)
    return records


def write_scores(records: Iterable[ScoreRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["presentation_id", "label", "score"])
        for r in records:
            writer.writerow([r.presentation_id, r.label, repr(r.score)])


def flip_polarity(records: Sequence[ScoreRecord]) -> list[ScoreRecord]:
    """Re-orient scores where high means bona fide: s -> 1 - s."""
    return [ScoreRecord(r.presentation_id, r.label, 1.0 - r.score) for r in records]


def _split_scores(records: Sequence[ScoreRecord]):
    bona = np.array([r.score for r in records if r.label == 0], dtype=np.float64)
    attacks: dict[int, np.ndarray] = {}
    for label in sorted({r.label for r in records if r.label >= 1}):
        attacks[label] = np.array(
            [r.score for r in records if r.label == label], dtype=np.float64
        )
    return bona, attacks


def apcer_per_pai(records: Sequence[ScoreRecord], tau: float) -> dict[int, float]:
    """APCER_j at threshold tau, for each attack type j present."""
    _validate_records(records)
    _, attacks = _split_scores(records)
    if not attacks:
        raise NoAttackRecords("no records with label >= 1")
    return {
        j: (100.0 * int((scores < tau).sum())) / scores.size
        for j, scores in attacks.items()
    }


def apcer_max(records: Sequence[ScoreRecord], tau: float) -> float:
    return max(apcer_per_pai(records, tau).values())


def bpcer(records: Sequence[ScoreRecord], tau: float) -> float:
    """BPCER at threshold tau."""
    _validate_records(records)
    bona, _ = _split_scores(records)
    if bona.size == 0:
        raise NoBonaFideRecords("no records with label 0")
    return (100.0 * int((bona >= tau).sum())) / bona.size


@dataclass(frozen=True)
class DetCurve:
    """Error rates sampled at every distinct score plus -inf/+inf sentinels.

    Thresholds ascend, so apcer_max ascends from 0 to 100 while bpcer
    descends from 100 to 0.  apcer_by_pai holds one row per label in
    pai_labels.
    """

    thresholds: np.ndarray
    apcer_max: np.ndarray
    bpcer: np.ndarray
    pai_labels: tuple[int, ...]
    apcer_by_pai: np.ndarray

    def __len__(self) -> int:
        return self.thresholds.size


def compute_det(records: Sequence[ScoreRecord]) -> DetCurve:
    """Sweep every informative threshold and tabulate all error rates."""
    _validate_records(records)
    bona, attacks = _split_scores(records)
    if bona.size == 0 or not attacks:
        raise MissingClass("need at least one bona fide and one attack record")

    scores = np.array([r.score for r in records], dtype=np.float64)
    thresholds = np.concatenate(([-np.inf], np.unique(scores), [np.inf]))

    bona_sorted = np.sort(bona)
    n_bona = bona_sorted.size
    below = np.searchsorted(bona_sorted, thresholds, side="left")
    bpcer_vals = (100.0 * (n_bona - below)) / n_bona

    labels = tuple(sorted(attacks))
    per_pai = np.empty((len(labels), thresholds.size), dtype=np.float64)
    for row, j in enumerate(labels):
        s = np.sort(attacks[j])
        per_pai[row] = (100.0 * np.searchsorted(s, thresholds, side="left")) / s.size

    return DetCurve(
        thresholds=thresholds,
        apcer_max=per_pai.max(axis=0),
        bpcer=bpcer_vals,
        pai_labels=labels,
        apcer_by_pai=per_pai,
    )


def compute_eer(curve: DetCurve) -> float:
    """Equal error rate of worst-case APCER and BPCER.

    Scans for the sign change of (APCER - BPCER) along ascending
    thresholds; an exactly balanced sampled point is returned as-is,
    otherwise the two piecewise-linear segments are intersected.
    """
    d = curve.apcer_max - curve.bpcer
    idx = int(np.argmax(d >= 0.0))
    if d[idx] == 0.0:
        return float(curve.apcer_max[idx])
    a1, a2 = curve.apcer_max[idx - 1], curve.apcer_max[idx]
    lam = -d[idx - 1] / (d[idx] - d[idx - 1])
    return float(a1 + lam * (a2 - a1))


def bpcer_at_ap(curve: DetCurve, ap: int) -> BpcerAtAp:
    """BPCER at the operating point where APCER is fixed at 100/ap percent.

    Anchored at the largest threshold whose APCER does not exceed the
    target, then linearly interpolated toward the next curve point.  A
    result of 100 means the target APCER is unreachable at any useful
    operating point and is flagged as saturated.
    """
    if ap <= 1:
        raise ValueError("ap must be > 1")
    target = 100.0 / ap
    idx = int(np.nonzero(curve.apcer_max <= target)[0][-1])
    if curve.apcer_max[idx] == target or idx == len(curve) - 1:
        value = float(curve.bpcer[idx])
    else:
        a1, a2 = curve.apcer_max[idx], curve.apcer_max[idx + 1]
        b1, b2 = curve.bpcer[idx], curve.bpcer[idx + 1]
        lam = (target - a1) / (a2 - a1)
        value = float(b1 + lam * (b2 - b1))
    return BpcerAtAp(value, saturated=value >= 100.0 - 1e-9)


_ACKLAM_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)


def probit(p: float) -> float:
    """Inverse standard-normal CDF, accurate to well below 1e-9.

    Acklam's rational approximation seeds two Halley refinements against
    the complementary error function, which stays relatively accurate in
    both tails.
    """
    if not 0.0 < p < 1.0:
        raise OutOfDomain("probit needs 0 < p < 1, got %r" % p)
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (
            (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5])
            * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )

    sqrt2 = math.sqrt(2.0)
    inv_sqrt2pi = 1.0 / math.sqrt(2.0 * math.pi)
    for _ in range(2):
        if x >= 0.0:
            err = (1.0 - p) - 0.5 * math.erfc(x / sqrt2)
        else:
            err = 0.5 * math.erfc(-x / sqrt2) - p
        pdf = inv_sqrt2pi * math.exp(-0.5 * x * x)
        if pdf == 0.0:
            break
        u = err / pdf
        x -= u / (1.0 + 0.5 * x * u)
    return x


# Export --------------------------------------------------------------------

_SVG_SIZE = (720, 560)
_SVG_MARGIN = {"left": 80, "right": 220, "top": 30, "bottom": 60}
_PLOT_RANGE = (0.0005, 0.995)  # probability clamp for the probit axes
_AXIS_TICKS = (0.001, 0.005, 0.01, 0.02, 0.05, 0.10, 0.20, 0.40, 0.60, 0.90)
_GUIDE_APCER = (0.10, 0.05, 0.01)
_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def det_csv_rows(curve: DetCurve) -> list[list[str]]:
    header = ["threshold", "apcer_max", "bpcer"] + [
        "apcer_%d" % j for j in curve.pai_labels
    ]
    rows = [header]
    for i in range(len(curve)):
        row = [repr(float(curve.thresholds[i])), repr(float(curve.apcer_max[i])), repr(float(curve.bpcer[i]))]
        row += [repr(float(v)) for v in curve.apcer_by_pai[:, i]]
        rows.append(row)
    return rows


def write_det_csv(curve: DetCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh).writerows(det_csv_rows(curve))


def read_det_csv(path) -> DetCurve:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    labels = tuple(int(name.split("_", 1)[1]) for name in header[3:])
    data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=np.float64)
    return DetCurve(
        thresholds=data[:, 0],
        apcer_max=data[:, 1],
        bpcer=data[:, 2],
        pai_labels=labels,
        apcer_by_pai=data[:, 3:].T.copy(),
    )


def _probit_coord(p: float) -> float:
    lo, hi = _PLOT_RANGE
    return probit(min(max(p, lo), hi))


def _svg_xy(apcer_pct: float, bpcer_pct: float) -> tuple[float, float]:
    lo, hi = (_probit_coord(_PLOT_RANGE[0]), _probit_coord(_PLOT_RANGE[1]))
    width = _SVG_SIZE[0] - _SVG_MARGIN["left"] - _SVG_MARGIN["right"]
    height = _SVG_SIZE[1] - _SVG_MARGIN["top"] - _SVG_MARGIN["bottom"]
    px = (_probit_coord(apcer_pct / 100.0) - lo) / (hi - lo)
    py = (_probit_coord(bpcer_pct / 100.0) - lo) / (hi - lo)
    return (
        _SVG_MARGIN["left"] + px * width,
        _SVG_MARGIN["top"] + (1.0 - py) * height,
    )


def render_det_svg(curves: Sequence[tuple[str, DetCurve]]) -> bytes:
    """DET plot on normal-deviate axes: one polyline per curve, red dotted
    guide lines at the APCER 10/5/1 percent operating points, EER in the
    legend."""
    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(_SVG_SIZE[0]),
        height=str(_SVG_SIZE[1]),
        viewBox="0 0 %d %d" % _SVG_SIZE,
    )
    x0, y0 = _svg_xy(100.0 * _PLOT_RANGE[0], 100.0 * _PLOT_RANGE[1])
    x1, y1 = _svg_xy(100.0 * _PLOT_RANGE[1], 100.0 * _PLOT_RANGE[0])
    ET.SubElement(
        svg, "rect", x="%.1f" % x0, y="%.1f" % y1,
        width="%.1f" % (x1 - x0), height="%.1f" % (y0 - y1),
        fill="white", stroke="black",
    )

    for tick in _AXIS_TICKS:
        tx, _ = _svg_xy(100.0 * tick, 100.0 * _PLOT_RANGE[0])
        ET.SubElement(svg, "line", x1="%.1f" % tx, y1="%.1f" % y0, x2="%.1f" % tx,
                      y2="%.1f" % (y0 + 5), stroke="black")
        label = ET.SubElement(svg, "text", x="%.1f" % tx, y="%.1f" % (y0 + 18),
                              fill="black")
        label.set("text-anchor", "middle")
        label.set("font-size", "11")
        label.text = "%g" % (100.0 * tick)
        _, ty = _svg_xy(100.0 * _PLOT_RANGE[0], 100.0 * tick)
        ET.SubElement(svg, "line", x1="%.1f" % (x0 - 5), y1="%.1f" % ty, x2="%.1f" % x0,
                      y2="%.1f" % ty, stroke="black")
        label = ET.SubElement(svg, "text", x="%.1f" % (x0 - 8), y="%.1f" % (ty + 4),
                              fill="black")
        label.set("text-anchor", "end")
        label.set("font-size", "11")
        label.text = "%g" % (100.0 * tick)

    xt = ET.SubElement(svg, "text", x="%.1f" % ((x0 + x1) / 2), y="%.1f" % (y0 + 40))
    xt.set("text-anchor", "middle")
    xt.set("font-size", "13")
    xt.text = "APCER (%)"
    yt = ET.SubElement(svg, "text", x="18", y="%.1f" % ((y0 + y1) / 2))
    yt.set("font-size", "13")
    yt.set("transform", "rotate(-90 18 %.1f)" % ((y0 + y1) / 2))
    yt.set("text-anchor", "middle")
    yt.text = "BPCER (%)"

    for ap in _GUIDE_APCER:
        gx, _ = _svg_xy(100.0 * ap, 100.0 * _PLOT_RANGE[0])
        ET.SubElement(
            svg, "line", x1="%.1f" % gx, y1="%.1f" % y1, x2="%.1f" % gx, y2="%.1f" % y0,
            stroke="red", **{"stroke-dasharray": "4 3"},
        )

    for i, (name, curve) in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(
            "%.2f,%.2f" % _svg_xy(float(a), float(b))
            for a, b in zip(curve.apcer_max, curve.bpcer)
        )
        ET.SubElement(
            svg, "polyline", points=pts, fill="none", stroke=color,
            **{"stroke-width": "1.5", "class": "det-curve"},
        )
        lx = _SVG_SIZE[0] - _SVG_MARGIN["right"] + 16
        ly = _SVG_MARGIN["top"] + 18 + 20 * i
        ET.SubElement(
            svg, "line", x1="%.1f" % lx, y1="%.1f" % (ly - 4), x2="%.1f" % (lx + 22),
            y2="%.1f" % (ly - 4), stroke=color, **{"stroke-width": "1.5"},
        )
        entry = ET.SubElement(svg, "text", x="%.1f" % (lx + 28), y="%.1f" % ly)
        entry.set("font-size", "12")
        entry.set("class", "legend")
        entry.text = "%s (%.2f%%)" % (name, compute_eer(curve))

    return ET.tostring(svg, encoding="utf-8", xml_declaration=True)


def export_det(curves, path, format: str) -> None:
    """Write a DET curve (CSV) or one-or-many curves (SVG) to ``path``.

    ``curves`` is a single DetCurve or a sequence of (name, DetCurve)
    pairs; CSV accepts exactly one curve.
    """
    if isinstance(curves, DetCurve):
        named = [(os.path.splitext(os.path.basename(os.fspath(path)))[0], curves)]
    else:
        named = list(curves)
    if format == "csv":
        if len(named) != 1:
            raise ValueError("CSV export takes exactly one curve")
        write_det_csv(named[0][1], path)
    elif format == "svg":
        payload = render_det_svg(named)
        tmp = "%s.tmp%d" % (os.fspath(path), os.getpid())
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    else:
        raise ValueError("format must be csv or svg")

"""Score two simulated detectors with the ISO/IEC 30107-3 metrics.

Generates bona fide and attack scores for a strong and a weak classifier,
sweeps the DET curves, reports EER and the BPCER operating points, and
exports an overlay SVG on normal-deviate axes plus per-curve CSVs.
"""

import os

import numpy as np

from padbench.metrics import (
    ScoreRecord,
    bpcer_at_ap,
    compute_det,
    compute_eer,
    export_det,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

rng = np.random.default_rng(1)


def simulate(n_bona, n_attack, separation):
    """Scores in [0, 1]; higher means more attack-like."""
    bona = np.clip(rng.normal(0.3, 0.15, n_bona), 0, 1)
    attack = np.clip(rng.normal(0.3 + separation, 0.15, n_attack), 0, 1)
    records = [ScoreRecord("b%d" % i, 0, float(s)) for i, s in enumerate(bona)]
    records += [ScoreRecord("a%d" % i, 1, float(s)) for i, s in enumerate(attack)]
    return records


curves = []
for name, separation in (("strong", 0.45), ("weak", 0.2)):
    records = simulate(2000, 2000, separation)
    curve = compute_det(records)
    curves.append((name, curve))
    eer = compute_eer(curve)
    print("%s detector:  EER %.2f%%" % (name, eer))
    for ap in (10, 20, 100):
        res = bpcer_at_ap(curve, ap)
        flag = "  (saturated)" if res.saturated else ""
        print("    BPCER%-3d = %6.2f%%%s" % (ap, res.value, flag))

export_det(curves, os.path.join(OUT, "det_overlay.svg"), "svg")
for name, curve in curves:
    export_det(curve, os.path.join(OUT, "det_%s.csv" % name), "csv")
print("wrote %s/det_overlay.svg and per-curve CSVs" % OUT)

"""Train a slip detector and compare it with a spectral threshold.

The LSTM sees 50-sample windows (50 ms at 1 kHz) of the collapsed signal.
The baseline sums spectral amplitude over the most significant band and
thresholds it where the class ECDFs are furthest apart.

    python3 demos/slip_detector.py          # a few minutes on one core
"""

import logging
import time

from slipcal import io
from slipcal.baseline import fit_threshold_model
from slipcal.evaluation import evaluate
from slipcal.lstm import TrainConfig, train
from slipcal.pipeline import balanced_split, spectral_report, synth_corpus
from slipcal.spectral import most_significant_band

logging.basicConfig(level=logging.INFO, format="%(message)s")
SEED = 1
W = 50

recs = synth_corpus(io.SynthSettings(), SEED)
tr, te = balanced_split(recs, W, SEED)
print(f"train {len(tr)} windows, test {len(te)} windows, classes {tr.class_counts()}")

t0 = time.perf_counter()
model, history = train(tr, TrainConfig(seed=SEED))
print(f"trained {len(history)} epochs in {time.perf_counter() - t0:.0f} s, final loss {history[-1].loss:.3f}")

lstm = evaluate(model, te)
print(f"LSTM      accuracy {100 * lstm.accuracy:.1f}%  TP {100 * lstm.tp_rate:.1f}%  TN {100 * lstm.tn_rate:.1f}%")

band = most_significant_band(spectral_report(recs, SEED))
thresh = fit_threshold_model(tr, band)
base = evaluate(thresh, te)
print(f"threshold accuracy {100 * base.accuracy:.1f}%  (band {band.low_hz:g}-{band.high_hz:g} Hz, threshold {thresh.threshold:.4g})")

print("\nper-cell LSTM accuracy:")
for (scenario, material, speed), acc in sorted(lstm.factor_breakdown.items(), key=lambda kv: kv[1])[:8]:
    print(f"  {scenario.value:9s} {material.value:9s} {speed:>3g} mm/s  {100 * acc:.1f}%")

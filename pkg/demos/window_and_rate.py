"""How much context and how many samples does slip detection need?

Sweeps the window size at 1 kHz, then decimates 200-sample windows down to
31.25 Hz. The synthetic stick-slip bursts sit near 65 Hz, so accuracy should
fall off once the effective Nyquist drops below that band.

Epoch caps are reduced to keep the run short; pass --full for the defaults.

    python3 demos/window_and_rate.py [--full] [--jobs N]
"""

import argparse

from slipcal import io
from slipcal.evaluation import sweep_sampling_rates, sweep_window_sizes
from slipcal.lstm import TrainConfig
from slipcal.pipeline import synth_corpus

ap = argparse.ArgumentParser()
ap.add_argument("--full", action="store_true")
ap.add_argument("--jobs", type=int, default=1)
args = ap.parse_args()

SEED = 2
config = TrainConfig() if args.full else TrainConfig(max_epochs_per_stage=25)
recs = synth_corpus(io.SynthSettings(), SEED)

windows = sweep_window_sizes(recs, [5, 10, 25, 50, 100, 200], config, SEED, jobs=args.jobs)
print(windows.to_table())
print()
rates = sweep_sampling_rates(recs, [2, 4, 8, 16, 32], 200, config, SEED, jobs=args.jobs)
print(rates.to_table())

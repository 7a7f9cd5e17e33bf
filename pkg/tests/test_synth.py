import numpy as np
import pytest

from slipcal.balance import build_balanced
from slipcal.errors import InvalidCombination
from slipcal.pipeline import class_pools
from slipcal.recording import Finger, Material, Scenario
from slipcal.spectral import amplitude_spectrum, significance_analysis
from slipcal.synth import MaterialProfile, SynthConfig, default_materials, generate_corpus, generate_recording

PVC = default_materials()[1]


def test_free_space_idle_peak():
    rec = generate_recording(Scenario.FREESPACE, None, 25, SynthConfig(duration_s=10.001))
    spec = amplitude_spectrum(rec.collapse().samples[:10000], 1000.0)
    peak = spec.amplitudes[np.argmin(np.abs(spec.frequencies - 200.0))]
    assert peak >= 5 * np.median(spec.amplitudes)
    assert spec.frequencies[np.argmax(spec.amplitudes[1:]) + 1] == pytest.approx(200.0, abs=0.5)


@pytest.mark.parametrize("material", default_materials(), ids=lambda m: m.name)
def test_faster_slip_is_stronger(material):
    cfg = SynthConfig(duration_s=5.0, seed=4)

    def rms(speed):
        x = generate_recording(Scenario.SLIP, material, speed, cfg).collapse().samples
        return np.sqrt(np.mean(x**2))

    assert rms(75) > rms(50) > rms(25) > rms(5)


def test_invalid_requests():
    with pytest.raises(InvalidCombination):
        generate_recording(Scenario.SLIP, PVC, 25, SynthConfig(duration_s=0.0))
    with pytest.raises(InvalidCombination):
        generate_recording(Scenario.FREESPACE, PVC, 25, SynthConfig(duration_s=1.0))
    with pytest.raises(InvalidCombination):
        generate_recording(Scenario.SLIP, PVC, 30, SynthConfig(duration_s=1.0))
    with pytest.raises(InvalidCombination):
        generate_recording(Scenario.SLIP, MaterialProfile("PVC", burst_center_hz=600.0), 25, SynthConfig(duration_s=1.0))


def test_corpus_grid_and_determinism():
    a = generate_corpus(per_cell_duration_s=0.5, seed=2, sensor_ids=("index", "middle"))
    b = generate_corpus(per_cell_duration_s=0.5, seed=2, sensor_ids=("index", "middle"))
    assert len(a) == 2 * (20 + 5 + 3)
    for x, y in zip(a, b):
        assert x.frames.tobytes() == y.frames.tobytes()
        assert x.provenance == y.provenance
    assert {r.finger for r in a} == {Finger.INDEX, Finger.MIDDLE}
    c = generate_corpus(per_cell_duration_s=0.5, seed=3)
    assert not np.array_equal(a[0].frames, c[0].frames)


def test_cells_are_independent_of_grid():
    # a cell depends only on its own coordinates, not on what else was generated
    full = generate_corpus(per_cell_duration_s=0.5, seed=2)
    alone = generate_corpus(default_materials()[:1], per_cell_duration_s=0.5, seed=2)
    first_full = [r for r in full if r.material is Material.ALUMINUM and r.scenario is Scenario.SLIP]
    first_alone = [r for r in alone if r.scenario is Scenario.SLIP]
    for x, y in zip(first_full, first_alone):
        np.testing.assert_array_equal(x.frames, y.frames)


def test_corpus_duration_precondition():
    with pytest.raises(InvalidCombination):
        generate_corpus(per_cell_duration_s=0.3)


def test_corpus_balances(small_corpus):
    ds = build_balanced(small_corpus, 200, seed=0)
    assert len(ds) > 0


def test_sensor_gain_scales_frames():
    a = generate_corpus(per_cell_duration_s=0.5, seed=2, sensor_ids=("index", "ring"), sensor_gains={"ring": 2.0})
    idx = [r for r in a if r.sensor_id == "index"]
    ring = [r for r in a if r.sensor_id == "ring"]
    assert np.std(ring[0].frames) > np.std(idx[0].frames)


def test_significance_profile():
    recs = generate_corpus(per_cell_duration_s=10.0, seed=1)
    ns, sl = class_pools(recs)
    rep = significance_analysis(ns, sl, 1000.0, seed=5)
    burst = (rep.frequencies >= 65 - 25) & (rep.frequencies <= 65 + 25)
    assert rep.significance[burst].min() >= 0.95
    far = rep.frequencies >= 480
    assert rep.significance[far].max() <= 0.2

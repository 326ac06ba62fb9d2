import numpy as np
import pytest

from twinbeam import squeezing as sq
from twinbeam.errors import CalibrationError, ValidationError

FS = 2e6


def measured_db(trace, seed):
    snl = sq.shot_noise_trace(trace.total_rate_per_s, trace.sample_rate_hz, trace.duration_s, seed=seed)
    spec = sq.difference_noise_spectrum(trace, snl)
    return spec.band_average_db(0.05 * FS, 0.45 * FS)


def test_expected_ratio_closed_form():
    assert sq.expected_ratio(1.0, 1.0) == 0.0
    assert sq.expected_ratio(0.5, 0.5) == 0.5
    assert sq.expected_ratio(0.0, 0.0) == 1.0
    # unequal arms: harmonic mean form
    assert sq.expected_ratio(0.9, 0.3) == pytest.approx(1 - 2 * 0.27 / 1.2)
    assert sq.efficiency_for_db(-10 * np.log10(1 - 0.718)) == pytest.approx(0.718)


@pytest.mark.parametrize("eta", [0.3, 0.5, 0.718, 0.9])
def test_balanced_efficiency_grid(eta):
    tr = sq.simulate_twin_traces(6e6, eta, eta, FS, 0.25, seed=int(eta * 1000))
    assert measured_db(tr, seed=7) == pytest.approx(float(sq.to_db(1 - eta)), abs=0.3)


def test_unbalanced_efficiencies():
    tr = sq.simulate_twin_traces(6e6, 0.9, 0.5, FS, 0.25, seed=3)
    snl = sq.shot_noise_trace(tr.total_rate_per_s, FS, 0.25, seed=4)
    db = sq.difference_noise_spectrum(tr, snl).band_average_db()
    assert db == pytest.approx(float(sq.to_db(sq.expected_ratio(0.9, 0.5))), abs=0.3)


def test_perfect_efficiency_clamps_to_floor():
    tr = sq.simulate_twin_traces(6e6, 1.0, 1.0, FS, 0.05, seed=1)
    snl = sq.shot_noise_trace(tr.total_rate_per_s, FS, 0.05, seed=2)
    spec = sq.difference_noise_spectrum(tr, snl)
    assert np.all(spec.power_db_rel_snl[1:] == sq.DB_FLOOR)
    assert sq.to_db(0.0) == sq.DB_FLOOR


def test_shot_noise_self_calibration():
    a = sq.shot_noise_trace(6e6, FS, 0.25, seed=11)
    assert measured_db(a, seed=12) == pytest.approx(0.0, abs=0.3)


def test_thermal_light_is_not_squeezed():
    th = sq.thermal_traces(3e6, FS, 0.25, seed=5)
    assert measured_db(th, seed=6) >= -0.3


def test_parseval_identity(rng):
    tr = sq.IntensityTrace(FS, rng.poisson(3.0, 2**16), rng.poisson(3.0, 2**16))
    nper = 256
    f, p = sq.difference_psd(tr, nper)
    d = (tr.n1 - tr.n2).astype(float)
    # one-sided density: interior bins count twice, DC and Nyquist once
    df = f[1] - f[0]
    assert np.sum(p) * df == pytest.approx(d.var(), rel=1e-6)


def test_parseval_drops_partial_segment(rng):
    tr = sq.IntensityTrace(FS, rng.poisson(3.0, 1000), rng.poisson(3.0, 1000))
    f, p = sq.difference_psd(tr, 256)
    d = (tr.n1 - tr.n2)[:768].astype(float)
    assert np.sum(p) * (f[1] - f[0]) == pytest.approx(d.var(), rel=1e-6)


def test_segment_length():
    assert sq.segment_length(2e6, 10e3) == 256
    assert sq.segment_length(2e6, 3e3) == 512
    with pytest.raises(ValidationError):
        sq.segment_length(2e6, 0)
    with pytest.raises(ValidationError):
        sq.segment_length(2e6, 2e6)


def test_rate_mismatch_is_calibration_error():
    tr = sq.simulate_twin_traces(6e6, 0.7, 0.7, FS, 0.05, seed=1)
    snl = sq.shot_noise_trace(tr.total_rate_per_s * 1.05, FS, 0.05, seed=2)
    with pytest.raises(CalibrationError, match="1%"):
        sq.difference_noise_spectrum(tr, snl)
    other = sq.shot_noise_trace(tr.total_rate_per_s, 1e6, 0.05, seed=2)
    with pytest.raises(CalibrationError):
        sq.difference_noise_spectrum(tr, other)


def test_video_bandwidth_smooths_without_bias():
    tr = sq.simulate_twin_traces(6e6, 0.718, 0.718, FS, 0.1, seed=9)
    snl = sq.shot_noise_trace(tr.total_rate_per_s, FS, 0.1, seed=10)
    raw = sq.difference_noise_spectrum(tr, snl)
    smooth = sq.difference_noise_spectrum(tr, snl, vbw_hz=300.0)
    assert np.std(smooth.power_db_rel_snl[5:-5]) < np.std(raw.power_db_rel_snl[5:-5])
    assert smooth.band_average_db() == pytest.approx(raw.band_average_db(), abs=0.05)


def test_invalid_inputs():
    with pytest.raises(ValidationError):
        sq.simulate_twin_traces(6e6, 1.2, 0.5, FS, 0.1)
    with pytest.raises(ValidationError):
        sq.simulate_twin_traces(-1, 0.5, 0.5, FS, 0.1)
    with pytest.raises(ValidationError):
        sq.IntensityTrace(0.0, np.zeros(3), np.zeros(3))
    with pytest.raises(ValidationError):
        sq.IntensityTrace(FS, np.zeros(3), np.zeros(4))


def test_trace_round_trip(tmp_path):
    tr = sq.simulate_twin_traces(1e6, 0.5, 0.5, FS, 1e-3, seed=2)
    p = tmp_path / "trace.csv"
    sq.write_trace(p, tr)
    back = sq.read_trace(p)
    assert back.sample_rate_hz == FS
    assert np.array_equal(back.n1, tr.n1) and np.array_equal(back.n2, tr.n2)


def test_trace_header_requires_rate(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("n1,n2\n1,2\n")
    (tmp_path / "t.csv.json").write_text("{}")
    with pytest.raises(ValidationError, match="sample_rate_hz"):
        sq.read_trace(p)


def test_spectrum_csv(tmp_path):
    tr = sq.simulate_twin_traces(6e6, 0.5, 0.5, FS, 0.01, seed=2)
    snl = sq.shot_noise_trace(tr.total_rate_per_s, FS, 0.01, seed=3)
    spec = sq.difference_noise_spectrum(tr, snl)
    p = tmp_path / "s.csv"
    with open(p, "w") as fh:
        spec.to_csv(fh)
    lines = p.read_text().splitlines()
    assert lines[0] == "freq_hz,db_rel_snl" and len(lines) == spec.frequencies_hz.size + 1

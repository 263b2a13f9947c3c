import numpy as np
import pytest
from scipy import stats

from micropost import source
from micropost.errors import ValidationError

BLINK = source.BlinkingModel(k_on=0.0288, k_off=0.0096)


def test_model_validation():
    with pytest.raises(ValidationError):
        source.PulseTrain(period=-1.0)
    with pytest.raises(ValidationError):
        source.PulseTrain(n_pulses=0)
    with pytest.raises(ValidationError):
        source.BlinkingModel(k_on=-1.0, k_off=1.0)
    with pytest.raises(ValidationError):
        source.BlinkingModel(k_on=0.0, k_off=0.0)  # stationary undefined
    with pytest.raises(ValidationError):
        source.EmissionModel(gamma=5.0, p1=0.8, p2=0.3)
    with pytest.raises(ValidationError):
        source.EmissionModel(gamma=0.0, p1=0.5)


def test_stationary_on_fraction():
    assert BLINK.on_fraction == pytest.approx(0.75)
    rng = np.random.default_rng(11)
    traj = source.simulate_blinking(BLINK, 2_000_000.0, rng)
    assert traj.on_fraction() == pytest.approx(0.75, abs=0.01)


def test_blinking_holding_times_are_exponential():
    rng = np.random.default_rng(5)
    traj = source.simulate_blinking(BLINK, 3_000_000.0, rng)
    ivals = traj.intervals()
    # Drop the truncated first and last intervals.
    on_holds = [b - a for a, b, s in ivals[1:-1] if s]
    off_holds = [b - a for a, b, s in ivals[1:-1] if not s]
    assert len(on_holds) > 2000
    p_on = stats.kstest(on_holds, "expon", args=(0, 1.0 / BLINK.k_off)).pvalue
    p_off = stats.kstest(off_holds, "expon", args=(0, 1.0 / BLINK.k_on)).pvalue
    assert p_on > 0.01
    assert p_off > 0.01


def test_trajectory_state_lookup_consistent():
    rng = np.random.default_rng(2)
    traj = source.simulate_blinking(BLINK, 10_000.0, rng)
    for a, b, s in traj.intervals()[:50]:
        mid = 0.5 * (a + b)
        assert bool(traj.state_at(mid)) is s


def test_always_on_trajectory():
    rng = np.random.default_rng(0)
    traj = source.simulate_blinking(source.BlinkingModel.always_on(), 100.0, rng)
    assert traj.on_fraction() == 1.0


def test_pinned_off_state():
    model = source.BlinkingModel(k_on=0.0, k_off=0.1, initial_state="on")
    rng = np.random.default_rng(1)
    traj = source.simulate_blinking(model, 1000.0, rng)
    ivals = traj.intervals()
    # One on interval, then off forever.
    assert ivals[0][2] is True
    assert all(not s for _, _, s in ivals[1:])


def test_emission_delays_are_exponential():
    train = source.PulseTrain(n_pulses=200_000)
    emission = source.EmissionModel(gamma=5.0, p1=0.8, p2=0.0)
    stream = source.run_source(train, source.BlinkingModel.always_on(),
                               emission, seed=42)
    delays = stream.time - stream.pulse_index * train.period
    assert np.all(delays >= 0)
    p = stats.kstest(delays, "expon", args=(0, 1.0 / emission.gamma)).pvalue
    assert p > 0.01
    # Emission probability per pulse.
    assert len(stream) / train.n_pulses == pytest.approx(0.8, abs=0.01)


def test_two_photon_pulses():
    train = source.PulseTrain(n_pulses=300_000)
    emission = source.EmissionModel(gamma=5.0, p1=0.5, p2=0.1)
    stream = source.run_source(train, source.BlinkingModel.always_on(),
                               emission, seed=9)
    idx, counts = np.unique(stream.pulse_index, return_counts=True)
    frac2 = np.sum(counts == 2) / train.n_pulses
    assert frac2 == pytest.approx(0.1, abs=0.005)
    assert counts.max() == 2
    # Photon pairs are time ordered within a pulse.
    order = np.lexsort((stream.time, stream.pulse_index))
    assert np.array_equal(order, np.arange(len(stream)))


def test_blinking_thins_emission():
    train = source.PulseTrain(n_pulses=500_000)
    emission = source.EmissionModel(gamma=5.0, p1=0.8, p2=0.0)
    stream = source.run_source(train, BLINK, emission, seed=77)
    expected = 0.8 * BLINK.on_fraction
    assert stream.mean_photons_per_pulse() == pytest.approx(expected, rel=0.05)


def test_iter_events_round_trip():
    train = source.PulseTrain(n_pulses=5_000)
    emission = source.EmissionModel(gamma=5.0, p1=0.6, p2=0.1)
    stream = source.run_source(train, BLINK, emission, seed=3)
    events = list(stream.iter_events())
    total = sum(len(e.times) for e in events)
    assert total == len(stream)
    for e in events[:100]:
        assert all(t >= e.pulse_index * train.period for t in e.times)


def test_determinism_and_worker_independence():
    train = source.PulseTrain(n_pulses=400_000)
    emission = source.EmissionModel(gamma=5.0, p1=0.8, p2=0.005)
    a = source.run_source(train, BLINK, emission, seed=123)
    b = source.run_source(train, BLINK, emission, seed=123)
    assert np.array_equal(a.time, b.time)
    # Different seed differs.
    c = source.run_source(train, BLINK, emission, seed=124)
    assert not np.array_equal(a.time, c.time)
    # Byte-identical regardless of worker count and block size.
    d = source.run_source(train, BLINK, emission, seed=123,
                          block_size=1 << 17, workers=4)
    e = source.run_source(train, BLINK, emission, seed=123, block_size=1 << 17)
    assert np.array_equal(d.time, e.time)
    assert np.array_equal(d.pulse_index, e.pulse_index)


def test_poisson_source_statistics():
    train = source.PulseTrain(n_pulses=300_000)
    stream = source.run_poisson_source(train, mean_photons=0.6, gamma=5.0, seed=8)
    counts = np.bincount(stream.pulse_index, minlength=train.n_pulses)
    assert counts.mean() == pytest.approx(0.6, abs=0.01)
    # Poisson: variance equals the mean.
    assert counts.var() == pytest.approx(counts.mean(), rel=0.02)


def test_sample_pulse_emission_single():
    rng = np.random.default_rng(4)
    emission = source.EmissionModel(gamma=5.0, p1=1.0, p2=0.0)
    ev = source.sample_pulse_emission(True, emission, 100.0, rng)
    assert len(ev.times) == 1
    assert ev.times[0] >= 100.0
    ev_off = source.sample_pulse_emission(False, emission, 100.0, rng)
    assert ev_off.times == ()

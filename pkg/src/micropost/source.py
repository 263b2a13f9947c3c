"""Pulse-by-pulse Monte Carlo of the quantum-dot emitter.

Blinking is an exact continuous-time two-state Markov trajectory; each pulse
that finds the dot in the bright state emits 0, 1 or 2 photons with fixed
probabilities, with exponential emission delays at the Purcell-modified rate.
Sampling is organized in fixed-size pulse blocks with counter-addressed
substreams so output is byte-identical regardless of worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from micropost.errors import ValidationError

__all__ = [
    "PulseTrain",
    "BlinkingModel",
    "EmissionModel",
    "EmissionEvent",
    "EmissionStream",
    "BlinkTrajectory",
    "simulate_blinking",
    "sample_pulse_emission",
    "run_source",
    "run_poisson_source",
]

DEFAULT_PERIOD_NS = 1000.0 / 76.0  # 76 MHz repetition rate
_BLOCK_SIZE = 1 << 20


@dataclass(frozen=True)
class PulseTrain:
    period: float = DEFAULT_PERIOD_NS
    n_pulses: int = 1

    def __post_init__(self):
        if self.period <= 0:
            raise ValidationError("period must be > 0")
        if self.n_pulses < 1:
            raise ValidationError("n_pulses must be >= 1")

    @property
    def duration(self):
        return self.period * self.n_pulses


@dataclass(frozen=True)
class BlinkingModel:
    """Two-state Markov switching: k_on is off->on, k_off is on->off (1/ns)."""

    k_on: float
    k_off: float
    initial_state: str = "stationary"  # "on" | "off" | "stationary"

    def __post_init__(self):
        if self.k_on < 0 or self.k_off < 0:
            raise ValidationError("rates must be >= 0")
        if self.k_on == 0 and self.k_off == 0 and self.initial_state == "stationary":
            raise ValidationError("stationary state undefined when both rates are 0")
        if self.initial_state not in ("on", "off", "stationary"):
            raise ValidationError(f"unknown initial_state {self.initial_state!r}")

    @property
    def on_fraction(self):
        if self.k_on == 0 and self.k_off == 0:
            return 1.0 if self.initial_state == "on" else 0.0
        return self.k_on / (self.k_on + self.k_off)

    @staticmethod
    def always_on():
        return BlinkingModel(k_on=0.0, k_off=0.0, initial_state="on")


@dataclass(frozen=True)
class EmissionModel:
    """Per-pulse emission when the dot is bright.

    p1 / p2 are the one- and two-photon probabilities; gamma (1/ns) is the
    exponential decay rate of the emission delay.
    """

    gamma: float
    p1: float
    p2: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValidationError("gamma must be > 0")
        if self.p1 < 0 or self.p2 < 0 or self.p1 + self.p2 > 1:
            raise ValidationError("need p1, p2 >= 0 and p1 + p2 <= 1")

    @property
    def mean_photons_when_on(self):
        return self.p1 + 2.0 * self.p2


@dataclass(frozen=True)
class EmissionEvent:
    """Photon timestamps (absolute ns) emitted after one pulse."""

    pulse_index: int
    times: tuple


class BlinkTrajectory:
    """Piecewise-constant on/off trajectory tiling [0, duration]."""

    def __init__(self, bounds, on_states):
        self.bounds = np.asarray(bounds, float)
        self.on_states = np.asarray(on_states, bool)
        if len(self.bounds) != len(self.on_states) + 1:
            raise ValidationError("bounds must have one more entry than states")

    @property
    def duration(self):
        return float(self.bounds[-1])

    def intervals(self):
        """List of (t_start, t_end, is_on) tuples."""
        return [
            (float(a), float(b), bool(s))
            for a, b, s in zip(self.bounds[:-1], self.bounds[1:], self.on_states)
        ]

    def state_at(self, times):
        """Vectorized on/off lookup; times must lie in [0, duration]."""
        idx = np.searchsorted(self.bounds, times, side="right") - 1
        idx = np.clip(idx, 0, len(self.on_states) - 1)
        return self.on_states[idx]

    def on_fraction(self):
        widths = np.diff(self.bounds)
        return float(widths[self.on_states].sum() / self.duration)


def _initial_on(model, rng):
    if model.initial_state == "on":
        return True
    if model.initial_state == "off":
        return False
    return bool(rng.random() < model.on_fraction)


def simulate_blinking(model, duration, rng):
    """Exact two-state Markov trajectory over [0, duration].

    Holding times are exponential with the leaving rate of the current state;
    a zero leaving rate pins the state forever.
    """
    if duration <= 0:
        raise ValidationError("duration must be > 0")
    on = _initial_on(model, rng)
    leave = {True: model.k_off, False: model.k_on}
    if leave[on] == 0:
        return BlinkTrajectory([0.0, duration], [on])

    switch_times = [0.0]
    states = []
    t = 0.0
    chunk = 4096
    while t < duration:
        # States alternate, so draw a chunk of alternating holding times.
        first = rng.exponential(1.0 / leave[on], chunk) if leave[on] > 0 else None
        other = not on
        if leave[other] == 0:
            # One more switch then pinned forever.
            t_switch = t + first[0]
            if t_switch < duration:
                switch_times.append(t_switch)
                states.append(on)
                switch_times.append(duration)
                states.append(other)
            else:
                switch_times.append(duration)
                states.append(on)
            return BlinkTrajectory(switch_times, states)
        second = rng.exponential(1.0 / leave[other], chunk)
        holds = np.empty(2 * chunk)
        holds[0::2] = first
        holds[1::2] = second
        ends = t + np.cumsum(holds)
        state_seq = np.empty(2 * chunk, bool)
        state_seq[0::2] = on
        state_seq[1::2] = other
        keep = ends < duration
        n_keep = int(keep.sum())
        switch_times.extend(ends[:n_keep].tolist())
        states.extend(state_seq[:n_keep].tolist())
        if n_keep < 2 * chunk:
            switch_times.append(duration)
            states.append(bool(state_seq[n_keep]))
            break
        t = ends[-1]
        # Parity preserved: 2*chunk holds leave the current state unchanged.
    return BlinkTrajectory(switch_times, states)


def sample_pulse_emission(is_on, emission, pulse_epoch, rng):
    """Emission from a single pulse: 0/1/2 photons with exponential delays."""
    if not is_on:
        return EmissionEvent(pulse_index=0, times=())
    u = rng.random()
    if u < emission.p2:
        n = 2
    elif u < emission.p2 + emission.p1:
        n = 1
    else:
        n = 0
    delays = np.sort(rng.exponential(1.0 / emission.gamma, n))
    return EmissionEvent(pulse_index=0, times=tuple(pulse_epoch + delays))


@dataclass(frozen=True)
class EmissionStream:
    """Flat per-photon record of a full run, time-ordered."""

    pulse_index: np.ndarray  # int64, one entry per photon
    time: np.ndarray  # float64, absolute ns
    n_pulses: int
    period: float

    def __len__(self):
        return len(self.time)

    def iter_events(self):
        """Group photons back into per-pulse EmissionEvent records."""
        idx = self.pulse_index
        starts = np.flatnonzero(np.concatenate(([True], idx[1:] != idx[:-1])))
        ends = np.concatenate((starts[1:], [len(idx)]))
        for s, e in zip(starts, ends):
            yield EmissionEvent(int(idx[s]), tuple(self.time[s:e]))

    def mean_photons_per_pulse(self):
        return len(self.time) / self.n_pulses


def _block_rng(seed, stream_id, block_index):
    # Counter-addressed substream: key depends only on (seed, ids), never on
    # execution order, so parallel merges are byte-identical to sequential.
    return np.random.default_rng(
        np.random.Philox(key=(np.uint64(seed) << np.uint64(16)) + np.uint64(stream_id))
        .jumped(block_index)
    )


def _emit_block(block_index, seed, epochs_on, emission):
    rng = _block_rng(seed, 1, block_index)
    n_on = len(epochs_on)
    u = rng.random(n_on)
    n_photons = (u < emission.p1 + emission.p2).astype(np.int64) + (u < emission.p2)
    total = int(n_photons.sum())
    delays = rng.exponential(1.0 / emission.gamma, total)
    pulse_of_photon = np.repeat(np.arange(n_on), n_photons)
    # Sort the two delays of double-photon pulses in place.
    two = np.flatnonzero(n_photons == 2)
    if two.size:
        first_pos = np.searchsorted(pulse_of_photon, two)
        a = delays[first_pos]
        b = delays[first_pos + 1]
        delays[first_pos] = np.minimum(a, b)
        delays[first_pos + 1] = np.maximum(a, b)
    return pulse_of_photon, epochs_on[pulse_of_photon] + delays


def run_source(train, blinking, emission, seed, block_size=_BLOCK_SIZE, workers=1):
    """Full seeded run: blinking trajectory + per-pulse emission sampling.

    Deterministic for a fixed seed, independent of block execution order or
    worker count.
    """
    blink_rng = _block_rng(seed, 0, 0)
    trajectory = simulate_blinking(blinking, train.duration, blink_rng)
    epochs = np.arange(train.n_pulses, dtype=np.float64) * train.period
    on = trajectory.state_at(epochs)

    n_blocks = (train.n_pulses + block_size - 1) // block_size
    jobs = []
    for b in range(n_blocks):
        sl = slice(b * block_size, min((b + 1) * block_size, train.n_pulses))
        mask = on[sl]
        jobs.append((b, np.flatnonzero(mask) + sl.start, epochs[sl][mask]))

    def run_block(job):
        b, on_indices, epochs_on = job
        local_pulse, times = _emit_block(b, seed, epochs_on, emission)
        return on_indices[local_pulse], times

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_block, jobs))
    else:
        results = [run_block(j) for j in jobs]

    pulse_index = np.concatenate([r[0] for r in results]) if results else np.empty(0, np.int64)
    time = np.concatenate([r[1] for r in results]) if results else np.empty(0)
    return EmissionStream(
        pulse_index=pulse_index.astype(np.int64),
        time=time,
        n_pulses=train.n_pulses,
        period=train.period,
    )


def run_poisson_source(train, mean_photons, gamma, seed, block_size=_BLOCK_SIZE):
    """Poisson-distributed benchmark source at a matched mean photon rate.

    Every pulse emits Poisson(mean_photons) photons with the same exponential
    delay law; used as the coherent-light reference for the g2 estimators.
    """
    if mean_photons < 0:
        raise ValidationError("mean_photons must be >= 0")
    if gamma <= 0:
        raise ValidationError("gamma must be > 0")
    n_blocks = (train.n_pulses + block_size - 1) // block_size
    parts_idx, parts_t = [], []
    for b in range(n_blocks):
        start = b * block_size
        stop = min(start + block_size, train.n_pulses)
        rng = _block_rng(seed, 2, b)
        counts = rng.poisson(mean_photons, stop - start)
        total = int(counts.sum())
        delays = rng.exponential(1.0 / gamma, total)
        pulse = np.repeat(np.arange(start, stop, dtype=np.int64), counts)
        parts_idx.append(pulse)
        parts_t.append(pulse * train.period + delays)
    pulse_index = np.concatenate(parts_idx) if parts_idx else np.empty(0, np.int64)
    time = np.concatenate(parts_t) if parts_t else np.empty(0)
    return EmissionStream(pulse_index=pulse_index, time=time,
                          n_pulses=train.n_pulses, period=train.period)

"""CSV and binary readers/writers for simulation artifacts.

Event streams and click streams share a compact binary framing: consecutive
little-endian records of (u64 index, f64 time_ns), no header.
"""

import numpy as np

from micropost.errors import ValidationError
from micropost.hbt import CorrelationHistogram
from micropost.source import EmissionStream

__all__ = [
    "write_spectrum_csv",
    "write_histogram_csv",
    "read_histogram_csv",
    "write_streak_csv",
    "write_ringdown_csv",
    "write_decay_curve_csv",
    "write_events_csv",
    "write_events_binary",
    "read_events_binary",
    "write_clicks_binary",
    "read_clicks_binary",
    "write_report",
]

_EVENT_DTYPE = np.dtype([("index", "<u8"), ("time", "<f8")])


def _write_csv(path, header, columns, config_hash=None):
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        if config_hash is not None:
            fh.write(f"# config_hash={config_hash}\n")
        fh.write(header + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) if isinstance(v, (float, np.floating))
                              else str(v) for v in row) + "\n")


def write_spectrum_csv(path, spectrum, config_hash=None):
    _write_csv(path, "wavelength_nm,reflectance",
               (spectrum.wavelengths, spectrum.reflectance), config_hash)


def write_histogram_csv(path, hist, config_hash=None):
    _write_csv(path, "tau_ns_bin_center,counts",
               (hist.bin_centers, hist.counts), config_hash)


def read_histogram_csv(path):
    """Read a delay histogram as emitted by write_histogram_csv.

    Bin centers must be uniformly spaced; counts may be fractional.
    Returns (histogram, config_hash) with config_hash None when the file
    carries no hash comment.
    """
    centers, counts = [], []
    stored_hash = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# config_hash="):
                stored_hash = line.split("=", 1)[1]
                continue
            if not line or line.startswith("#") or line[0].isalpha():
                continue
            a, b = line.split(",")
            centers.append(float(a))
            counts.append(float(b))
    centers = np.asarray(centers)
    counts = np.asarray(counts)
    if len(centers) < 2:
        raise ValidationError(f"{path}: too few histogram rows")
    widths = np.diff(centers)
    if not np.allclose(widths, widths[0], rtol=1e-6):
        raise ValidationError(f"{path}: bin centers are not uniformly spaced")
    w = widths[0]
    edges = np.concatenate((centers - w / 2, [centers[-1] + w / 2]))
    return CorrelationHistogram(bin_edges=edges, counts=counts), stored_hash


def write_streak_csv(path, hist, config_hash=None):
    _write_csv(path, "time_ns,counts", (hist.bin_centers, hist.counts), config_hash)


def write_ringdown_csv(path, record, config_hash=None):
    _write_csv(path, "time_ns,field",
               (record.probe_times, record.field_samples), config_hash)


def write_decay_curve_csv(path, points, config_hash=None):
    detunings = [p[0] for p in points]
    gammas = [p[1] for p in points]
    _write_csv(path, "detuning_nm,gamma_per_ns", (detunings, gammas), config_hash)


def write_events_csv(path, stream, config_hash=None):
    _write_csv(path, "pulse_index,time_ns", (stream.pulse_index, stream.time), config_hash)


def write_events_binary(path, stream):
    rec = np.empty(len(stream.time), dtype=_EVENT_DTYPE)
    rec["index"] = stream.pulse_index
    rec["time"] = stream.time
    rec.tofile(path)


def read_events_binary(path, n_pulses, period):
    rec = np.fromfile(path, dtype=_EVENT_DTYPE)
    return EmissionStream(
        pulse_index=rec["index"].astype(np.int64),
        time=rec["time"].astype(np.float64),
        n_pulses=n_pulses,
        period=period,
    )


def write_clicks_binary(path, clicks1, clicks2):
    n1, n2 = len(clicks1), len(clicks2)
    rec = np.empty(n1 + n2, dtype=_EVENT_DTYPE)
    rec["index"][:n1] = 1
    rec["index"][n1:] = 2
    rec["time"][:n1] = clicks1
    rec["time"][n1:] = clicks2
    rec.tofile(path)


def read_clicks_binary(path):
    rec = np.fromfile(path, dtype=_EVENT_DTYPE)
    return (
        rec["time"][rec["index"] == 1].astype(np.float64),
        rec["time"][rec["index"] == 2].astype(np.float64),
    )


def write_report(path, entries):
    """Key-value report: one 'key = value' line per entry, insertion order.

    entries may be a mapping or an iterable of preformatted lines.
    """
    if hasattr(entries, "items"):
        lines = [f"{key} = {value}" for key, value in entries.items()]
    else:
        lines = list(entries)
    with open(path, "w") as fh:
        for line in lines:
            fh.write(line + "\n")

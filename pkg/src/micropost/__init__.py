"""Simulator and analysis toolkit for a quantum-dot micropost single-photon source.

Subpackages cover the full chain: stratified-media cavity optics (``cavity``),
a 1-D time-domain cross-check solver (``fdtd``), the emitter-cavity coupling
model (``purcell``), Monte Carlo photon emission with blinking (``source``),
the simulated beamsplitter/counter/correlator chain (``hbt``), and the
peak-area estimators for g2(0), g and lifetimes (``analysis``).
"""

from micropost import (
    analysis,
    calibrate,
    cavity,
    config,
    fdtd,
    hbt,
    io_utils,
    pipeline,
    purcell,
    reproduce,
    source,
)

__all__ = [
    "analysis",
    "calibrate",
    "cavity",
    "config",
    "fdtd",
    "hbt",
    "io_utils",
    "pipeline",
    "purcell",
    "reproduce",
    "source",
]
__version__ = "0.1.0"

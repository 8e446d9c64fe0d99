"""Post-processing of scenario traces into the three performance series:
instantaneous frequency, start-time synchronization error, and relative
position error."""

from __future__ import annotations

import math

import numpy as np

from .localization import relative_position_error
from .sim import ScenarioTrace


def reference_frequency(trace: ScenarioTrace) -> float:
    """Default plot reference: host 0's anchor frequency (first recorded value)."""
    anchors = trace.hosts[0].anchor_frequency
    finite = anchors[np.isfinite(anchors)]
    return float(finite[0]) if finite.size else math.nan


def instantaneous_frequency(trace: ScenarioTrace, host: int, f_ref: float | None = None):
    """Per-pulse series (start time, 1/duration, difference to reference)."""
    if f_ref is None:
        f_ref = reference_frequency(trace)
    records = trace.hosts[host]
    freq = 1.0 / records.durations
    return records.starts, freq, freq - f_ref


def _nearest(sorted_values: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Nearest element of ``sorted_values`` per query; ties go to the lower index."""
    idx = np.searchsorted(sorted_values, queries)
    lo = np.clip(idx - 1, 0, sorted_values.size - 1)
    hi = np.clip(idx, 0, sorted_values.size - 1)
    pick_lo = np.abs(queries - sorted_values[lo]) <= np.abs(sorted_values[hi] - queries)
    return np.where(pick_lo, sorted_values[lo], sorted_values[hi])


def start_time_error(trace: ScenarioTrace, host: int):
    """Mean absolute offset of each own pulse start to the peers' nearest starts.

    Evaluated at the host's own pulse starts only; zero once all hosts
    transmit at the same instants.
    """
    own = trace.hosts[host].starts
    others = [q for q in range(len(trace.hosts)) if q != host]
    total = np.zeros_like(own)
    for q in others:
        total += np.abs(own - _nearest(trace.hosts[q].starts, own))
    return own, total / len(others)


def position_error_series(trace: ScenarioTrace, host: int, true_positions=None):
    """Relative position error at every snapshot carrying an estimate."""
    if true_positions is None:
        true_positions = trace.true_positions
    records = trace.hosts[host]
    times = []
    errors = []
    for i in range(records.starts.size):
        estimate = records.position_estimates[i]
        if np.isnan(estimate).any():
            continue
        times.append(records.starts[i])
        errors.append(relative_position_error(true_positions, estimate))
    return np.asarray(times), np.asarray(errors)

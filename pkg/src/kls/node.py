"""Per-host protocol state and the two-stage duration update.

Each host measures effective phase differences to its peers from pulse
receptions, swaps measurement columns with them, and once per transmitted
pulse derives the next pulse duration in two stages: a consensus base
frequency from estimated peer durations (with an optional anchor penalty
against joint drift), then a Kuramoto-style sinusoidal correction on the
timing part of the phase-difference matrix.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np


class ProtocolOrderError(ValueError):
    """Receptions from one peer must carry non-decreasing timestamps."""


class DivergenceError(ArithmeticError):
    """The duration update rate dropped to zero or below (coupling gain too large)."""


@dataclass
class PhaseVector:
    """One host's measured phase-difference column, broadcast to its peers."""

    sender: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("phase vector values must be 1-D")
        if not 0 <= self.sender < values.size:
            raise ValueError(f"sender {self.sender} out of range for {values.size} hosts")
        if values[self.sender] != 0.0:
            raise ValueError("a host's own phase-vector entry must be zero")
        self.values = values


_WIRE_HEADER = struct.Struct("<HH")


def encode_phase_vector(vector: PhaseVector) -> bytes:
    """Wire form: sender and host count as little-endian u16, then P little-endian float64 radians."""
    return _WIRE_HEADER.pack(vector.sender, vector.values.size) + vector.values.astype("<f8").tobytes()


def decode_phase_vector(data: bytes) -> PhaseVector:
    sender, count = _WIRE_HEADER.unpack_from(data)
    values = np.frombuffer(data, dtype="<f8", offset=_WIRE_HEADER.size)
    if values.size != count:
        raise ValueError(f"phase vector payload carries {values.size} values, header says {count}")
    return PhaseVector(sender, values.copy())


class NodeState:
    """Mutable state of one host; all operations are sequential per host."""

    def __init__(self, host: int, n_hosts: int, initial_duration: float, *,
                 coupling_gain_hz: float, gamma: float = 0.0, sampling_factor: int = 1):
        if n_hosts < 2:
            raise ValueError("need at least two hosts")
        if not 0 <= host < n_hosts:
            raise ValueError(f"host index {host} out of range")
        if initial_duration <= 0.0:
            raise ValueError("initial duration must be positive")
        if sampling_factor < 1:
            raise ValueError("sampling factor must be at least 1")
        self.host = host
        self.n_hosts = n_hosts
        self.gamma = float(gamma)
        self.coupling_gain = float(coupling_gain_hz)
        self.sampling_factor = int(sampling_factor)

        self.current_tx_index = -1  # no pulse started yet
        self.last_tx_start = math.nan
        self.current_duration = float(initial_duration)
        self.next_duration = float(initial_duration)

        self.duration_estimates = np.full(n_hosts, np.nan)
        self.first_duration_estimates = np.full(n_hosts, np.nan)
        self.last_rx_time = np.full(n_hosts, np.nan)
        self.rx_pulse_index = np.full(n_hosts, -1, dtype=np.int64)
        self.phase_matrix = np.zeros((n_hosts, n_hosts))
        self.anchor_frequency = None

        self._measured = np.zeros(n_hosts, dtype=bool)
        self._measured[host] = True
        self._vector_seen = np.zeros(n_hosts, dtype=bool)
        self._vector_seen[host] = True

    def begin_pulse(self, index: int, start: float, duration: float) -> None:
        """Mark a new own pulse as transmitting from ``start`` for ``duration``."""
        if index != self.current_tx_index + 1:
            raise ValueError(f"pulse index must advance by one, got {index} after {self.current_tx_index}")
        if duration <= 0.0:
            raise ValueError("pulse duration must be positive")
        self.current_tx_index = index
        self.last_tx_start = float(start)
        self.current_duration = float(duration)
        self.duration_estimates[self.host] = duration
        if index == 0:
            self.first_duration_estimates[self.host] = duration
            self._maybe_set_anchor()

    def on_pulse_received(self, peer: int, rx_time: float) -> None:
        """Process one pulse reception: phase entry, duration estimate, bookkeeping.

        The phase entry combines the pulse-index difference with the timing
        offset to the own pulse start, folded by the sampling factor and
        scaled by the own current duration. The duration estimate is the
        spacing of the last two receptions, so the first reception from a
        peer only primes it; receptions arriving before the own first pulse
        leave the phase entry alone (there is no own reference yet).
        """
        if peer == self.host:
            raise ValueError("a host does not receive its own pulses")
        if not 0 <= peer < self.n_hosts:
            raise ValueError(f"peer index {peer} out of range")
        previous = float(self.last_rx_time[peer])
        if not math.isnan(previous) and rx_time < previous:
            raise ProtocolOrderError(
                f"peer {peer}: rx time moved backwards ({rx_time!r} after {previous!r})")
        self.rx_pulse_index[peer] += 1
        if self.current_tx_index >= 0:
            index_diff = self.current_tx_index - int(self.rx_pulse_index[peer])
            time_diff = rx_time - self.last_tx_start
            self.phase_matrix[peer, self.host] = (
                math.tau / self.sampling_factor * (index_diff + time_diff / self.current_duration))
            self._measured[peer] = True
        if not math.isnan(previous):
            estimate = rx_time - previous
            self.duration_estimates[peer] = estimate
            if math.isnan(self.first_duration_estimates[peer]):
                self.first_duration_estimates[peer] = estimate
                self._maybe_set_anchor()
        self.last_rx_time[peer] = rx_time

    def on_phase_vector_received(self, vector: PhaseVector) -> None:
        """Adopt a peer's measured column; the sender's diagonal entry stays zero."""
        if vector.sender == self.host:
            raise ValueError("a host does not receive its own phase vector")
        if vector.values.size != self.n_hosts:
            raise ValueError(
                f"phase vector has {vector.values.size} entries, expected {self.n_hosts}")
        self.phase_matrix[:, vector.sender] = vector.values
        self.phase_matrix[vector.sender, vector.sender] = 0.0
        self._vector_seen[vector.sender] = True

    def own_phase_vector(self) -> PhaseVector:
        """Own measurement column, ready to broadcast."""
        return PhaseVector(self.host, self.phase_matrix[:, self.host].copy())

    @property
    def ready_to_sync(self) -> bool:
        """Duration estimates exist for every host (own current included)."""
        return not np.isnan(self.duration_estimates).any()

    @property
    def matrix_complete(self) -> bool:
        """Every phase-matrix column carries data, enabling localization."""
        return bool(self._measured.all() and self._vector_seen.all())

    def compute_base_frequency(self) -> float:
        """Mean inverse duration estimate, penalized against anchor drift.

        Until the anchor frequency exists the penalty is skipped: drift
        cannot be measured against an undefined anchor.
        """
        estimates = self.duration_estimates
        if np.isnan(estimates).any() or (estimates <= 0.0).any():
            raise ValueError("all duration estimates must be known and positive")
        mean_frequency = float(np.mean(1.0 / estimates))
        if self.anchor_frequency is None:
            return mean_frequency
        return mean_frequency - self.gamma * (mean_frequency - self.anchor_frequency)

    def next_pulse_duration(self) -> float:
        """Duration of the next pulse: base frequency plus sinusoidal coupling.

        Uses the own column of the skew (timing) part of the phase matrix
        with a zero diagonal. The sine bounds the correction by the
        coupling gain, so the result stays positive whenever the base
        frequency exceeds the gain.
        """
        base = self.compute_base_frequency()
        skew_column = 0.5 * (self.phase_matrix[:, self.host] - self.phase_matrix[self.host, :])
        skew_column[self.host] = 0.0
        coupling = self.coupling_gain / self.n_hosts * float(np.sin(skew_column).sum())
        rate = base - coupling
        if rate <= 0.0:
            raise DivergenceError(f"duration update rate {rate!r} Hz is not positive")
        return 1.0 / rate

    def _maybe_set_anchor(self) -> None:
        if self.anchor_frequency is None and not np.isnan(self.first_duration_estimates).any():
            self.anchor_frequency = float(np.mean(1.0 / self.first_duration_estimates))

"""Deterministic event-driven simulation of the pulse-coupled host network.

Pulse transmissions, their line-of-sight arrivals, and in-band phase-vector
deliveries are processed in (time, enqueue sequence) order, so the same
configuration always reproduces the same trace bit for bit.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .core import SamplingModel, from_ns, propagation_delay
from .localization import classical_mds, decompose, delays_from_symmetric
from .node import DivergenceError, NodeState, PhaseVector


@dataclass(frozen=True)
class HostSpec:
    """Initial pulse duration/start (seconds) and static position (metres)."""

    initial_duration: float
    initial_start: float
    position: tuple[float, float, float]


@dataclass(frozen=True)
class SimConfig:
    """Scenario inputs; every field is echoed into run manifests.

    ``quantize_tx=False`` (the default) leaves physical transmit instants
    continuous and quantizes only the timestamps receivers observe. With
    ``quantize_tx=True`` pulse starts and durations snap to the
    transmitter's sample grid as well; arrivals then keep a constant
    fractional position on each receiver grid, which freezes the
    quantization error per host pair and with it the sampled-clock noise
    the finite-rate scenarios exist to exhibit (see README).
    """

    hosts: tuple[HostSpec, ...]
    coupling_gain_hz: float
    sampling_hz: float = math.inf
    gamma: float = 0.0
    sampling_factor: int = 8
    pulse_budget: int = 2000
    vector_cadence: int = 1
    rng_seed: int = 0
    quantize_tx: bool = False

    def validate(self) -> None:
        if len(self.hosts) < 2:
            raise ValueError("at least two hosts are required")
        for i, spec in enumerate(self.hosts):
            if not spec.initial_duration > 0.0:
                raise ValueError(f"hosts[{i}]: initial duration must be positive")
            if not spec.initial_start >= 0.0:
                raise ValueError(f"hosts[{i}]: initial start must be non-negative")
            if len(spec.position) != 3 or not all(math.isfinite(x) for x in spec.position):
                raise ValueError(f"hosts[{i}]: position must be three finite coordinates")
        if not self.sampling_hz > 0.0:
            raise ValueError("sampling rate must be positive or infinite")
        if self.coupling_gain_hz < 0.0:
            raise ValueError("coupling gain must be non-negative")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.sampling_factor < 1:
            raise ValueError("sampling factor must be at least 1")
        if self.pulse_budget < 2:
            raise ValueError("pulse budget must be at least 2")
        if self.vector_cadence < 1:
            raise ValueError("vector cadence must be at least 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("seed must fit an unsigned 64-bit integer")


def default_coupling_gain(hosts) -> float:
    """Default Kuramoto gain: 2 % of the mean initial pulse frequency."""
    return 0.02 * float(np.mean([1.0 / spec.initial_duration for spec in hosts]))


_PRESET_HOSTS_NS = (
    (142.86, 64.29, (0.0, 0.0, 0.0)),
    (125.00, 6.25, (30.0, 10.0, 0.0)),
    (136.99, 22.60, (10.0, -30.0, -10.0)),
    (131.58, 32.89, (20.0, -25.0, 20.0)),
)

_PRESET_SAMPLING_HZ = 800e6
_PRESET_SAMPLING_FACTOR = 8

_PRESET_PARAMS = {
    "A": (math.inf, 0.0),  # ideal sampling
    "B": (_PRESET_SAMPLING_HZ, 0.0),  # sampled, no drift compensation
    "C": (_PRESET_SAMPLING_HZ, 0.05),  # sampled, drift compensation on
}


def scenario_preset(name: str) -> SimConfig:
    """Built-in four-host scenarios A (ideal sampling), B (sampled, no
    drift compensation), and C (sampled with drift compensation)."""
    key = str(name).upper()
    if key not in _PRESET_PARAMS:
        raise ValueError(f"unknown scenario {name!r}: expected one of A, B, C")
    sampling_hz, gamma = _PRESET_PARAMS[key]
    hosts = tuple(
        HostSpec(from_ns(duration_ns), from_ns(start_ns), position)
        for duration_ns, start_ns, position in _PRESET_HOSTS_NS)
    return SimConfig(
        hosts=hosts,
        coupling_gain_hz=default_coupling_gain(hosts),
        sampling_hz=sampling_hz,
        gamma=gamma,
        sampling_factor=_PRESET_SAMPLING_FACTOR,
    )


class EventKind(IntEnum):
    VECTOR_ARRIVAL = 0
    PULSE_ARRIVAL = 1
    PULSE_TRANSMIT = 2


def quantize_time(t: float, sampling: SamplingModel, host: int) -> float:
    """Snap ``t`` onto the host's sample grid, rounding half up.

    Identity for an infinite sample rate; otherwise the result differs
    from ``t`` by at most half a sample period.
    """
    if sampling.is_infinite:
        return t
    offset = sampling.grid_offsets[host]
    tick = math.floor((t - offset) * sampling.sample_rate + 0.5)
    return offset + tick / sampling.sample_rate


def _snap_duration(duration: float, sample_rate: float) -> float:
    """Round a commanded duration to a whole number of sample periods."""
    return math.floor(duration * sample_rate + 0.5) / sample_rate


@dataclass
class HostTrace:
    """Per-pulse records and algorithm snapshots of one host."""

    starts: np.ndarray  # (N,) physical pulse start times, seconds
    durations: np.ndarray  # (N,) realized pulse durations, seconds
    base_frequency: np.ndarray  # (N,) Hz, NaN before the first sync step
    anchor_frequency: np.ndarray  # (N,) Hz, NaN until the anchor is fixed
    delay_estimates: np.ndarray  # (N, P, P) seconds, NaN until the matrix is complete
    position_estimates: np.ndarray  # (N, 3, P) metres, NaN until the matrix is complete
    negative_delay: np.ndarray  # (N,) bool: any recovered delay was negative
    clamped_mass: np.ndarray  # (N,) clamped negative eigenvalue fraction from MDS


@dataclass
class ScenarioTrace:
    """Everything a run produced, in per-host arrays of pulse_budget length."""

    config: SimConfig
    hosts: list[HostTrace]
    true_positions: np.ndarray  # (3, P)
    sampling: SamplingModel


def _empty_trace(budget: int, n_hosts: int) -> HostTrace:
    return HostTrace(
        starts=np.full(budget, np.nan),
        durations=np.full(budget, np.nan),
        base_frequency=np.full(budget, np.nan),
        anchor_frequency=np.full(budget, np.nan),
        delay_estimates=np.full((budget, n_hosts, n_hosts), np.nan),
        position_estimates=np.full((budget, 3, n_hosts), np.nan),
        negative_delay=np.zeros(budget, dtype=bool),
        clamped_mass=np.full(budget, np.nan),
    )


def run_scenario(config: SimConfig) -> ScenarioTrace:
    """Run one scenario until every host has transmitted its pulse budget.

    Each transmit event starts the pulse whose duration was fixed at the
    previous transmit, fans out arrivals (and, per cadence, in-band phase
    vectors delivered immediately before the pulse they ride on), then runs
    the sync step to fix the following duration and snapshots the host's
    estimates. Simultaneous events process in enqueue order.
    """
    config.validate()
    hosts = config.hosts
    n = len(hosts)
    positions = np.array([spec.position for spec in hosts], dtype=float).T
    delays = np.zeros((n, n))
    for p in range(n):
        for q in range(p + 1, n):
            delays[p, q] = delays[q, p] = propagation_delay(positions[:, p], positions[:, q])

    finite = math.isfinite(config.sampling_hz)
    rng = np.random.default_rng(config.rng_seed)
    if finite:
        offsets = tuple(float(x) for x in rng.uniform(0.0, 1.0 / config.sampling_hz, n))
    else:
        offsets = (0.0,) * n
    sampling = SamplingModel(config.sampling_hz, offsets)
    snap_tx = finite and config.quantize_tx

    nodes = [
        NodeState(q, n, hosts[q].initial_duration,
                  coupling_gain_hz=config.coupling_gain_hz,
                  gamma=config.gamma,
                  sampling_factor=config.sampling_factor)
        for q in range(n)
    ]

    budget = config.pulse_budget
    trace = [_empty_trace(budget, n) for _ in range(n)]
    tx_count = [0] * n
    remaining = n

    heap: list[tuple] = []
    seq = itertools.count()
    for q in range(n):
        start = hosts[q].initial_start
        if snap_tx:
            start = quantize_time(start, sampling, q)
        heapq.heappush(heap, (start, next(seq), EventKind.PULSE_TRANSMIT, q, q, None))

    while heap and remaining:
        time, _, kind, src, dst, payload = heapq.heappop(heap)
        if kind == EventKind.PULSE_TRANSMIT:
            q = src
            node = nodes[q]
            index = tx_count[q]
            commanded = node.next_duration
            if snap_tx:
                duration = _snap_duration(commanded, config.sampling_hz)
                if duration <= 0.0:
                    raise DivergenceError(
                        f"host {q}, pulse {index}: duration {commanded!r} s "
                        "collapsed to zero on the sample grid")
            else:
                duration = commanded
            node.begin_pulse(index, time, duration)
            records = trace[q]
            records.starts[index] = time
            records.durations[index] = duration

            broadcast = node.own_phase_vector() if index % config.vector_cadence == 0 else None
            for r in range(n):
                if r == q:
                    continue
                arrival = time + delays[q, r]
                if broadcast is not None:
                    heapq.heappush(
                        heap,
                        (arrival, next(seq), EventKind.VECTOR_ARRIVAL, q, r, broadcast.values.copy()))
                heapq.heappush(heap, (arrival, next(seq), EventKind.PULSE_ARRIVAL, q, r, None))

            if node.ready_to_sync:
                records.base_frequency[index] = node.compute_base_frequency()
                try:
                    node.next_duration = node.next_pulse_duration()
                except DivergenceError as exc:
                    raise DivergenceError(f"host {q}, pulse {index}: {exc}") from exc
            else:
                node.next_duration = commanded
            if node.anchor_frequency is not None:
                records.anchor_frequency[index] = node.anchor_frequency
            if node.matrix_complete:
                parts = decompose(node.phase_matrix)
                delay_estimate = delays_from_symmetric(
                    parts.symmetric, config.sampling_factor, node.current_duration)
                embedding = classical_mds(delay_estimate, dim=3)
                records.delay_estimates[index] = delay_estimate
                records.negative_delay[index] = bool((delay_estimate < 0.0).any())
                records.position_estimates[index] = embedding.coords
                records.clamped_mass[index] = embedding.clamped_mass

            tx_count[q] += 1
            if tx_count[q] < budget:
                heapq.heappush(heap, (time + duration, next(seq), EventKind.PULSE_TRANSMIT, q, q, None))
            else:
                remaining -= 1
        elif kind == EventKind.PULSE_ARRIVAL:
            nodes[dst].on_pulse_received(src, quantize_time(time, sampling, dst))
        else:
            nodes[dst].on_phase_vector_received(PhaseVector(src, payload))

    return ScenarioTrace(config=config, hosts=trace, true_positions=positions, sampling=sampling)

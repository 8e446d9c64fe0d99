"""Time, phase, and geometry primitives shared by the whole package.

Times are 64-bit float seconds, phases are unwrapped radians, positions are
metres in (3, P) column layout, and hosts are identified by their integer
index in [0, P).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact SI value

_NS = 1e-9


def from_ns(value: float) -> float:
    """Convert nanoseconds to seconds; the one conversion used everywhere."""
    return value * _NS


def to_ns(value: float) -> float:
    """Convert seconds to nanoseconds; inverse of :func:`from_ns`."""
    return value / _NS


class ScheduleRangeError(ValueError):
    """Time instant falls outside the pulses recorded in a schedule."""


@dataclass
class PulseSchedule:
    """One host's pulse train: start times chained exactly by durations.

    Starts are accumulated left to right from ``first_start``, so
    ``start_times[n + 1] == start_times[n] + durations[n]`` holds bitwise.
    """

    first_start: float
    durations: np.ndarray
    start_times: np.ndarray = field(init=False)

    def __post_init__(self):
        durations = np.asarray(self.durations, dtype=float)
        if durations.ndim != 1 or durations.size == 0:
            raise ValueError("durations must be a non-empty 1-D sequence")
        if not (durations > 0.0).all():
            raise ValueError("pulse durations must be strictly positive")
        self.durations = durations
        chain = np.concatenate(([float(self.first_start)], durations[:-1]))
        self.start_times = np.add.accumulate(chain)

    @classmethod
    def constant(cls, first_start: float, duration: float, count: int) -> "PulseSchedule":
        """Schedule of ``count`` pulses sharing one duration."""
        return cls(first_start, np.full(count, float(duration)))

    @property
    def end_time(self) -> float:
        return float(self.start_times[-1] + self.durations[-1])

    def index_at(self, t: float) -> int:
        """Index of the pulse whose half-open support contains ``t``."""
        starts = self.start_times
        if t < starts[0]:
            raise ScheduleRangeError(f"t={t!r} precedes the first pulse at {starts[0]!r}")
        m = int(np.searchsorted(starts, t, side="right")) - 1
        if m == starts.size - 1 and t >= self.end_time:
            raise ScheduleRangeError(f"t={t!r} lies beyond the recorded schedule")
        return m


def transmit_phase(schedule: PulseSchedule, t: float) -> float:
    """Unwrapped phase of a host's own pulse train at time ``t``.

    Grows linearly from 2*pi*n to 2*pi*(n + 1) across pulse n, so the value
    at a pulse start depends only on the pulse count, never on how long the
    earlier pulses were.
    """
    m = schedule.index_at(t)
    frac = (t - schedule.start_times[m]) / schedule.durations[m]
    return math.tau * (m + frac)


def receive_phase(schedule: PulseSchedule, delay: float, t: float) -> float:
    """Phase of the delayed copy of a peer's pulse train observed at ``t``.

    For a constant propagation delay this is a pure time shift of the
    transmit phase.
    """
    return transmit_phase(schedule, t - delay)


def propagation_delay(a, b) -> float:
    """Line-of-sight delay between two static points, in seconds."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class SamplingModel:
    """Host-local timestamp grids: one shared rate, one offset per host.

    ``sample_rate`` may be ``math.inf``, which disables quantization
    entirely; offsets then carry no meaning.
    """

    sample_rate: float
    grid_offsets: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.sample_rate > 0.0:
            raise ValueError("sample rate must be positive (or infinite)")
        if self.is_infinite:
            return
        period = 1.0 / self.sample_rate
        for i, offset in enumerate(self.grid_offsets):
            if not 0.0 <= offset < period:
                raise ValueError(f"grid offset {i} must lie in [0, {period!r})")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.sample_rate)

    @property
    def period(self) -> float:
        """Sample period in seconds (only meaningful for finite rates)."""
        return 1.0 / self.sample_rate

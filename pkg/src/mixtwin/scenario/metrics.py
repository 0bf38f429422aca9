"""Post-run analysis: collision events, disturbance amplification, minimum gaps.

All functions take plain arrays so they can run on a live recording or on a
reloaded report without touching the simulation machinery.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import NoPerturbation


@dataclass(frozen=True)
class CollisionEvent:
    """One contiguous excursion of a pair gap below the threshold."""

    follower_id: str
    leader_id: str
    t_start: float  # s, first sample below threshold
    t_end: Optional[float]  # s, first sample back at/above; None if open at run end
    min_gap: float  # m
    t_min: float  # s
    virtual_involved: bool

    def to_dict(self) -> dict:
        return {
            "follower_id": self.follower_id,
            "leader_id": self.leader_id,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "min_gap": self.min_gap,
            "t_min": self.t_min,
            "virtual_involved": self.virtual_involved,
        }


def detect_collisions(
    times: np.ndarray,
    gaps: np.ndarray,
    threshold: float,
    pair_ids: Sequence[tuple[str, str]],
    pair_virtual: Sequence[bool],
) -> list[CollisionEvent]:
    """Scan per-pair gap series for excursions below ``threshold``.

    ``gaps`` has one column per adjacent (follower, leader) pair. Each
    excursion opens at the first sample strictly below the threshold and
    closes at the first sample back at or above it; its minimum is taken
    over the samples in between, so the event record agrees exactly with
    the logged series.
    """
    times = np.asarray(times, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if gaps.ndim != 2 or gaps.shape[0] != times.shape[0]:
        raise ValueError("gaps must be (n_samples, n_pairs) matching times")
    if gaps.shape[1] != len(pair_ids) or len(pair_ids) != len(pair_virtual):
        raise ValueError("pair metadata must match the gap columns")

    events = []
    for j, (follower, leader) in enumerate(pair_ids):
        below = gaps[:, j] < threshold
        edges = np.flatnonzero(np.diff(below.astype(np.int8)))
        starts = list(np.flatnonzero(below[:1])) + [int(e) + 1 for e in edges if below[e + 1]]
        ends = [int(e) + 1 for e in edges if not below[e + 1]]
        for k, s in enumerate(starts):
            e = ends[k] if k < len(ends) else None
            window = gaps[s:e if e is not None else gaps.shape[0], j]
            i_min = int(np.argmin(window)) + s
            events.append(CollisionEvent(
                follower_id=follower,
                leader_id=leader,
                t_start=float(times[s]),
                t_end=None if e is None else float(times[e]),
                min_gap=float(gaps[i_min, j]),
                t_min=float(times[i_min]),
                virtual_involved=bool(pair_virtual[j]),
            ))
    events.sort(key=lambda ev: (ev.t_start, ev.follower_id))
    return events


def amplification_ratios(
    times: np.ndarray,
    speeds: np.ndarray,
    vehicle_ids: Sequence[str],
    base_speed: float,
    trigger_time: Optional[float],
) -> dict[str, float]:
    """Peak speed deviation of each vehicle relative to the head's peak.

    Deviations are measured from ``base_speed`` over samples at or after the
    trigger. The head is ``vehicle_ids[0]``; its own ratio is 1.0 by
    construction. Raises :class:`NoPerturbation` when the run never
    triggered or the head never left the base speed.
    """
    if trigger_time is None:
        raise NoPerturbation("run has no perturbation onset to measure from")
    times = np.asarray(times, dtype=float)
    speeds = np.asarray(speeds, dtype=float)
    if speeds.ndim != 2 or speeds.shape != (times.shape[0], len(vehicle_ids)):
        raise ValueError("speeds must be (n_samples, n_vehicles) matching times")
    mask = times >= trigger_time
    if not mask.any():
        raise NoPerturbation("no samples recorded after the trigger")
    deviation = np.abs(speeds[mask] - base_speed)
    head_peak = float(deviation[:, 0].max())
    if head_peak < 1e-9:
        raise NoPerturbation("head speed never deviated from base")
    return {vid: float(deviation[:, i].max() / head_peak)
            for i, vid in enumerate(vehicle_ids)}


def min_gaps(
    gaps: np.ndarray,
    pair_ids: Sequence[tuple[str, str]],
) -> dict[str, float]:
    """Minimum gap per adjacent pair over the whole series, keyed follower->leader."""
    gaps = np.asarray(gaps, dtype=float)
    return {f"{follower}->{leader}": float(gaps[:, j].min())
            for j, (follower, leader) in enumerate(pair_ids)}

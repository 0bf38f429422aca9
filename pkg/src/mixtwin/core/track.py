"""Closed-loop track geometry in the unified frame.

A track is a closed polyline with a handful of named reference points
(letters, by arc position). Vehicles are located on it by arc position:
meters traveled along the polyline from waypoint 0, increasing in the
direction of travel.
"""

import json
import math
from typing import Optional, Sequence

import numpy as np

from ..errors import EmptyTrack, UnknownNamedPoint

_CLOSURE_TOL = 1e-9


class Track:
    """Closed polyline track with arc-position lookups and projection."""

    def __init__(
        self,
        waypoints: Sequence[tuple[float, float]],
        named_points: Optional[dict[str, float]] = None,
    ):
        pts = np.asarray(waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise EmptyTrack("waypoints must be an Nx2 sequence")
        # An explicitly closed file repeats the first point; store open form.
        if len(pts) >= 2 and float(np.hypot(*(pts[-1] - pts[0]))) <= _CLOSURE_TOL:
            pts = pts[:-1]
        if len(pts) < 3:
            raise EmptyTrack(f"need at least 3 distinct waypoints, got {len(pts)}")

        self.waypoints = pts
        self._starts = pts
        self._ends = np.roll(pts, -1, axis=0)
        seg = self._ends - self._starts
        self._seg = seg
        self._seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(self._seg_len <= 0):
            raise EmptyTrack("track contains a zero-length segment")
        self._seg_len2 = self._seg_len**2
        self._cum = np.concatenate(([0.0], np.cumsum(self._seg_len)))
        self.lap_length = float(self._cum[-1])
        self._seg_heading = np.arctan2(seg[:, 1], seg[:, 0])

        self.named_points: dict[str, float] = dict(named_points or {})
        last = -1.0
        for name in sorted(self.named_points):
            arc = float(self.named_points[name])
            if not 0.0 <= arc < self.lap_length:
                raise EmptyTrack(f"named point {name} at arc {arc} outside [0, {self.lap_length})")
            if arc <= last:
                raise EmptyTrack("named points must be strictly increasing in name order")
            last = arc

    def named_point_arc(self, name: str) -> float:
        try:
            return self.named_points[name]
        except KeyError:
            raise UnknownNamedPoint(f"track has no named point {name!r}") from None

    def _locate(self, arc: float) -> tuple[int, float]:
        """Segment index and distance into it for a (wrapped) arc position."""
        arc = arc % self.lap_length
        i = int(np.searchsorted(self._cum, arc, side="right")) - 1
        i = min(max(i, 0), len(self._seg_len) - 1)
        return i, arc - self._cum[i]

    def point_at(self, arc: float) -> tuple[float, float]:
        """(x, y) at an arc position; any real arc wraps into the lap."""
        i, into = self._locate(arc)
        t = into / self._seg_len[i]
        p = self._starts[i] + t * self._seg[i]
        return float(p[0]), float(p[1])

    def heading_at(self, arc: float) -> float:
        """Tangent direction of travel at an arc position."""
        i, _ = self._locate(arc)
        return float(self._seg_heading[i])

    def project(self, x: float, y: float) -> tuple[float, float]:
        """Nearest point on the track.

        Returns (arc_position, lateral_offset); the offset is signed
        positive to the left of the direction of travel.
        """
        p = np.array((x, y), dtype=float)
        w = p - self._starts
        t = np.clip((w * self._seg).sum(axis=1) / self._seg_len2, 0.0, 1.0)
        foot = self._starts + t[:, None] * self._seg
        d = p - foot
        dist2 = (d * d).sum(axis=1)
        i = int(np.argmin(dist2))
        arc = (self._cum[i] + t[i] * self._seg_len[i]) % self.lap_length
        # z of tangent x offset: positive when the point lies left of travel
        cross = self._seg[i, 0] * d[i, 1] - self._seg[i, 1] * d[i, 0]
        dist = math.sqrt(float(dist2[i]))
        lateral = math.copysign(dist, cross) if cross != 0.0 else 0.0
        return float(arc), lateral

    def to_json_dict(self) -> dict:
        closed = np.vstack([self.waypoints, self.waypoints[:1]])
        return {
            "waypoints": [[float(x), float(y)] for x, y in closed],
            "named_points": {k: float(v) for k, v in sorted(self.named_points.items())},
        }


def arc_gap(follower_arc: float, leader_arc: float, lap_length: float) -> float:
    """Along-track distance from follower to leader, in [0, lap_length).

    Wraps around the lap, so a leader just behind the start line is still
    'ahead' of a follower just past it.
    """
    return (leader_arc - follower_arc) % lap_length


def signed_gap(follower, leader, track: Track) -> float:
    """Centroid arc gap between two located vehicle states."""
    if follower.arc_position is None or leader.arc_position is None:
        raise ValueError("signed_gap needs states with arc_position set")
    return arc_gap(follower.arc_position, leader.arc_position, track.lap_length)


def signed_arc_delta(prev_arc: float, cur_arc: float, lap_length: float) -> float:
    """Shortest signed along-track displacement, in [-lap_length/2, lap_length/2).

    The right way to accumulate travel from noisy arc samples: a reading
    that jitters a hair backward contributes a small negative step instead
    of wrapping to almost a full lap, so zero-mean noise cancels out of the
    odometer instead of biasing it.
    """
    half = lap_length / 2.0
    return (cur_arc - prev_arc + half) % lap_length - half


def stadium_track(
    lap_length: float = 245.0,
    straight_length: float = 80.0,
    chords_per_semicircle: int = 128,
) -> Track:
    """Default loop: two straights joined by two semicircular ends.

    The semicircles are discretized into equal chords, with the radius
    chosen so the chord-wise perimeter equals lap_length exactly. Named
    points A..F sit at sixths of the lap, A on the start line. Travel is
    counterclockwise starting at (0, 0) heading +x.
    """
    if lap_length <= 2 * straight_length:
        raise EmptyTrack("lap_length must exceed the two straights")
    n = chords_per_semicircle
    # 2 semicircles x n chords, each chord 2 r sin(pi / 2n)
    r = (lap_length - 2 * straight_length) / (4 * n * math.sin(math.pi / (2 * n)))

    pts: list[tuple[float, float]] = [(0.0, 0.0), (straight_length, 0.0)]
    for k in range(1, n + 1):
        a = -math.pi / 2 + k * math.pi / n
        pts.append((straight_length + r * math.cos(a), r + r * math.sin(a)))
    pts.append((0.0, 2 * r))
    for k in range(1, n):
        a = math.pi / 2 + k * math.pi / n
        pts.append((r * math.cos(a), r + r * math.sin(a)))

    named = {chr(ord("A") + k): k * lap_length / 6.0 for k in range(6)}
    return Track(pts, named)


def load_track(path) -> Track:
    """Read a track from a JSON file with explicit closure.

    The file holds {"waypoints": [[x, y], ...], "named_points": {...}} and
    must repeat its first waypoint as the last one.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    waypoints = data.get("waypoints")
    if not waypoints:
        raise EmptyTrack(f"{path}: no waypoints")
    first, last = np.asarray(waypoints[0], float), np.asarray(waypoints[-1], float)
    if float(np.hypot(*(last - first))) > _CLOSURE_TOL:
        raise EmptyTrack(f"{path}: waypoints do not close the loop")
    return Track(waypoints, data.get("named_points"))

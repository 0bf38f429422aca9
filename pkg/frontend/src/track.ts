// Closed-loop track geometry in the unified frame: a closed polyline with
// named reference points addressed by arc position (meters traveled along
// the polyline from waypoint 0, in the direction of travel).

export class TrackError extends Error {}

const CLOSURE_TOL = 1e-9;

export type Point = readonly [number, number];

// Euclidean modulo: result in [0, n) for any real a, unlike the % operator.
export function mod(a: number, n: number): number {
  return ((a % n) + n) % n;
}

export class Track {
  readonly waypoints: Point[];
  readonly lapLength: number;
  readonly namedPoints: Record<string, number>;

  private readonly starts: Point[];
  private readonly segDx: number[];
  private readonly segDy: number[];
  private readonly segLen: number[];
  private readonly segHeading: number[];
  private readonly cum: number[];

  constructor(waypoints: readonly Point[], namedPoints: Record<string, number> = {}) {
    let pts = waypoints.map((p): Point => [p[0], p[1]]);
    if (pts.length >= 2) {
      const first = pts[0];
      const last = pts[pts.length - 1];
      if (Math.hypot(last[0] - first[0], last[1] - first[1]) <= CLOSURE_TOL) {
        pts = pts.slice(0, -1); // explicitly closed input: store open form
      }
    }
    if (pts.length < 3) {
      throw new TrackError(`need at least 3 distinct waypoints, got ${pts.length}`);
    }
    this.waypoints = pts;
    this.starts = pts;
    this.segDx = [];
    this.segDy = [];
    this.segLen = [];
    this.segHeading = [];
    this.cum = [0];
    for (let i = 0; i < pts.length; i++) {
      const a = pts[i];
      const b = pts[(i + 1) % pts.length];
      const dx = b[0] - a[0];
      const dy = b[1] - a[1];
      const len = Math.hypot(dx, dy);
      if (len <= 0) {
        throw new TrackError("track contains a zero-length segment");
      }
      this.segDx.push(dx);
      this.segDy.push(dy);
      this.segLen.push(len);
      this.segHeading.push(Math.atan2(dy, dx));
      this.cum.push(this.cum[i] + len);
    }
    this.lapLength = this.cum[this.cum.length - 1];

    this.namedPoints = { ...namedPoints };
    let lastArc = -1;
    for (const name of Object.keys(this.namedPoints).sort()) {
      const arc = this.namedPoints[name];
      if (!(arc >= 0 && arc < this.lapLength)) {
        throw new TrackError(`named point ${name} at arc ${arc} outside [0, ${this.lapLength})`);
      }
      if (arc <= lastArc) {
        throw new TrackError("named points must be strictly increasing in name order");
      }
      lastArc = arc;
    }
  }

  namedPointArc(name: string): number {
    const arc = this.namedPoints[name];
    if (arc === undefined) {
      throw new TrackError(`track has no named point ${JSON.stringify(name)}`);
    }
    return arc;
  }

  private locate(arc: number): [number, number] {
    const wrapped = mod(arc, this.lapLength);
    let i = 0;
    // cum has one entry per waypoint plus the closing total; find the
    // segment whose [cum[i], cum[i+1]) span holds the wrapped arc.
    let lo = 0;
    let hi = this.cum.length - 1;
    while (lo + 1 < hi) {
      const mid = (lo + hi) >> 1;
      if (this.cum[mid] <= wrapped) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    i = Math.min(Math.max(lo, 0), this.segLen.length - 1);
    return [i, wrapped - this.cum[i]];
  }

  pointAt(arc: number): Point {
    const [i, into] = this.locate(arc);
    const t = into / this.segLen[i];
    return [this.starts[i][0] + t * this.segDx[i], this.starts[i][1] + t * this.segDy[i]];
  }

  headingAt(arc: number): number {
    const [i] = this.locate(arc);
    return this.segHeading[i];
  }

  // Nearest point on the track: [arcPosition, lateralOffset], the offset
  // signed positive to the left of the direction of travel.
  project(x: number, y: number): [number, number] {
    let bestI = 0;
    let bestT = 0;
    let bestDist2 = Infinity;
    for (let i = 0; i < this.starts.length; i++) {
      const wx = x - this.starts[i][0];
      const wy = y - this.starts[i][1];
      const len2 = this.segLen[i] * this.segLen[i];
      let t = (wx * this.segDx[i] + wy * this.segDy[i]) / len2;
      t = Math.min(Math.max(t, 0), 1);
      const fx = this.starts[i][0] + t * this.segDx[i];
      const fy = this.starts[i][1] + t * this.segDy[i];
      const dx = x - fx;
      const dy = y - fy;
      const dist2 = dx * dx + dy * dy;
      if (dist2 < bestDist2) {
        bestDist2 = dist2;
        bestI = i;
        bestT = t;
      }
    }
    const arc = mod(this.cum[bestI] + bestT * this.segLen[bestI], this.lapLength);
    const fx = this.starts[bestI][0] + bestT * this.segDx[bestI];
    const fy = this.starts[bestI][1] + bestT * this.segDy[bestI];
    const dx = x - fx;
    const dy = y - fy;
    const cross = this.segDx[bestI] * dy - this.segDy[bestI] * dx;
    const dist = Math.sqrt(bestDist2);
    const lateral = cross === 0 ? 0 : Math.sign(cross) * dist;
    return [arc, lateral];
  }

  bounds(): { minX: number; minY: number; maxX: number; maxY: number } {
    let minX = Infinity;
    let minY = Infinity;
    let maxX = -Infinity;
    let maxY = -Infinity;
    for (const [x, y] of this.waypoints) {
      minX = Math.min(minX, x);
      minY = Math.min(minY, y);
      maxX = Math.max(maxX, x);
      maxY = Math.max(maxY, y);
    }
    return { minX, minY, maxX, maxY };
  }
}

// Along-track distance from follower to leader, wrapped into [0, lapLength).
export function arcGap(followerArc: number, leaderArc: number, lapLength: number): number {
  return mod(leaderArc - followerArc, lapLength);
}

// Shortest signed along-track displacement, in [-lapLength/2, lapLength/2).
export function signedArcDelta(prevArc: number, curArc: number, lapLength: number): number {
  const half = lapLength / 2;
  return mod(curArc - prevArc + half, lapLength) - half;
}

// Default loop: two straights joined by two semicircular ends, discretized
// into equal chords with the radius chosen so the chord-wise perimeter
// equals lapLength exactly. Named points A..F at sixths of the lap, travel
// counterclockwise from (0, 0) heading +x.
export function stadiumTrack(
  lapLength = 245,
  straightLength = 80,
  chordsPerSemicircle = 128,
): Track {
  if (lapLength <= 2 * straightLength) {
    throw new TrackError("lapLength must exceed the two straights");
  }
  const n = chordsPerSemicircle;
  const r = (lapLength - 2 * straightLength) / (4 * n * Math.sin(Math.PI / (2 * n)));

  const pts: Point[] = [
    [0, 0],
    [straightLength, 0],
  ];
  for (let k = 1; k <= n; k++) {
    const a = -Math.PI / 2 + (k * Math.PI) / n;
    pts.push([straightLength + r * Math.cos(a), r + r * Math.sin(a)]);
  }
  pts.push([0, 2 * r]);
  for (let k = 1; k < n; k++) {
    const a = Math.PI / 2 + (k * Math.PI) / n;
    pts.push([r * Math.cos(a), r + r * Math.sin(a)]);
  }

  const named: Record<string, number> = {};
  for (let k = 0; k < 6; k++) {
    named[String.fromCharCode(65 + k)] = (k * lapLength) / 6;
  }
  return new Track(pts, named);
}

// Read a track from the JSON shape used by the hub's track files:
// {"waypoints": [[x, y], ...], "named_points": {...}} with the first
// waypoint repeated as the last one.
export function trackFromJson(data: unknown): Track {
  if (typeof data !== "object" || data === null) {
    throw new TrackError("track JSON must be an object");
  }
  const obj = data as Record<string, unknown>;
  const waypoints = obj["waypoints"];
  if (!Array.isArray(waypoints) || waypoints.length === 0) {
    throw new TrackError("track JSON has no waypoints");
  }
  const pts: Point[] = waypoints.map((p, i) => {
    if (!Array.isArray(p) || p.length !== 2 || typeof p[0] !== "number" || typeof p[1] !== "number") {
      throw new TrackError(`waypoint ${i} must be [x, y]`);
    }
    return [p[0], p[1]];
  });
  const first = pts[0];
  const last = pts[pts.length - 1];
  if (Math.hypot(last[0] - first[0], last[1] - first[1]) > CLOSURE_TOL) {
    throw new TrackError("waypoints do not close the loop");
  }
  const named = (obj["named_points"] ?? {}) as Record<string, number>;
  return new Track(pts, named);
}

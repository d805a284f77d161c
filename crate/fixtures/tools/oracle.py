"""Independent reimplementation of the scoring pipeline used to build golden
fixtures: pose arithmetic, ray clearance bounds, grid geodesics and DTW.

Nothing here imports or calls the Rust code.
"""

import heapq
import json
import math
from pathlib import Path

MAX_RANGE = 10.0
SAFETY_MARGIN = 0.3
COLLISION_MARGIN = 0.2
GRID_RESOLUTION = 0.1
PANORAMIC_HALF_ANGLE = math.degrees(math.atan(63.5 / 128.0 * math.tan(math.radians(30.0))))
# CCW angle spans of the option bins relative to the heading
OPTION_BINS = {
    "A": (36.0, 60.0),
    "B": (12.0, 36.0),
    "C": (-12.0, 12.0),
    "D": (-36.0, -12.0),
    "E": (-60.0, -36.0),
}
OPTION_TURNS = {"A": 60.0, "B": 30.0, "C": 0.0, "D": -30.0, "E": -60.0}


class World:
    def __init__(self, path):
        data = json.loads(Path(path).read_text())
        self.name = data["name"]
        (self.x0, self.z0) = data["bounds"]["min"]
        (self.x1, self.z1) = data["bounds"]["max"]
        edges = [
            ((self.x0, self.z0), (self.x1, self.z0)),
            ((self.x1, self.z0), (self.x1, self.z1)),
            ((self.x1, self.z1), (self.x0, self.z1)),
            ((self.x0, self.z1), (self.x0, self.z0)),
        ]
        self.segments = [tuple(map(tuple, w)) for w in data["walls"]] + edges

    def ray(self, origin, angle_deg):
        dx, dz = math.cos(math.radians(angle_deg)), math.sin(math.radians(angle_deg))
        best = math.inf
        ox, oz = origin
        for (ax, az), (bx, bz) in self.segments:
            ex, ez = bx - ax, bz - az
            den = dx * ez - dz * ex
            if abs(den) < 1e-12:
                continue
            wx, wz = ax - ox, az - oz
            t = (wx * ez - wz * ex) / den
            u = (wx * dz - wz * dx) / den
            if t >= 0 and -1e-12 <= u <= 1 + 1e-12:
                best = min(best, t)
        return best

    def clearance_lower_bound(self, origin, heading, lo, hi, step=0.05):
        """Smallest capped ray range over CCW offsets [lo, hi]."""
        n = int(round((hi - lo) / step))
        return min(min(self.ray(origin, heading + lo + k * step), MAX_RANGE) for k in range(n + 1))

    def sweep_clearance(self, p, q):
        return min(segment_distance(p, q, a, b) for a, b in self.segments)


def point_segment_distance(p, a, b):
    ex, ez = b[0] - a[0], b[1] - a[1]
    l2 = ex * ex + ez * ez
    t = 0.0 if l2 == 0 else max(0.0, min(1.0, ((p[0] - a[0]) * ex + (p[1] - a[1]) * ez) / l2))
    return math.hypot(p[0] - a[0] - t * ex, p[1] - a[1] - t * ez)


def segment_distance(p, q, a, b):
    def orient(o, u, v):
        return (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0])

    if p != q:
        d1, d2 = orient(p, q, a), orient(p, q, b)
        d3, d4 = orient(a, b, p), orient(a, b, q)
        if d1 * d2 < 0 and d3 * d4 < 0:
            return 0.0
    return min(
        point_segment_distance(p, a, b),
        point_segment_distance(q, a, b),
        point_segment_distance(a, p, q),
        point_segment_distance(b, p, q),
    )


def geodesic(world, a, b, res=GRID_RESOLUTION, inflation=COLLISION_MARGIN):
    nx = math.ceil((world.x1 - world.x0) / res)
    nz = math.ceil((world.z1 - world.z0) / res)

    def center(ix, iz):
        return (world.x0 + (ix + 0.5) * res, world.z0 + (iz + 0.5) * res)

    def inside(c):
        return world.x0 <= c[0] <= world.x1 and world.z0 <= c[1] <= world.z1

    free = {}
    for iz in range(nz):
        for ix in range(nx):
            c = center(ix, iz)
            free[(ix, iz)] = inside(c) and all(point_segment_distance(c, s, t) >= inflation for s, t in world.segments)

    def cell(p):
        ix = min(max(math.floor((p[0] - world.x0) / res), 0), nx - 1)
        iz = min(max(math.floor((p[1] - world.z0) / res), 0), nz - 1)
        return (ix, iz)

    src, dst = cell(a), cell(b)
    assert free[src] and free[dst], "fixture endpoints must sit in free cells"
    dist = {src: 0.0}
    heap = [(0.0, src)]
    while heap:
        d, c = heapq.heappop(heap)
        if c == dst:
            return d * res
        if d > dist.get(c, math.inf):
            continue
        for dx in (-1, 0, 1):
            for dz in (-1, 0, 1):
                if dx == dz == 0:
                    continue
                n = (c[0] + dx, c[1] + dz)
                if not free.get(n, False):
                    continue
                if dx and dz and not (free[(c[0] + dx, c[1])] and free[(c[0], c[1] + dz)]):
                    continue
                nd = d + (math.sqrt(2) if dx and dz else 1.0)
                if nd < dist.get(n, math.inf):
                    dist[n] = nd
                    heapq.heappush(heap, (nd, n))
    return math.inf


def dtw(path, ref):
    n, m = len(path), len(ref)
    table = [[math.inf] * (m + 1) for _ in range(n + 1)]
    table[0][0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = math.dist(path[i - 1], ref[j - 1])
            table[i][j] = cost + min(table[i - 1][j], table[i][j - 1], table[i - 1][j - 1])
    return table[n][m]


def score(episode_id, path, goal, ref, radius, shortest):
    tl = sum(math.dist(path[i], path[i + 1]) for i in range(len(path) - 1))
    ne = math.dist(path[-1], goal)
    success = 1 if ne <= radius else 0
    spl = success * shortest / max(shortest, tl) if 0 < shortest < math.inf else float(success)
    ndtw = math.exp(-dtw(path, ref) / (len(ref) * radius))
    return {"episode": episode_id, "tl": tl, "ne": ne, "ndtw": ndtw, "success": success, "spl": spl}


def aggregate(rows):
    n = max(len(rows), 1)
    return {
        "episodes": len(rows),
        "tl": sum(r["tl"] for r in rows) / n,
        "ne": sum(r["ne"] for r in rows) / n,
        "ndtw": sum(r["ndtw"] for r in rows) / n,
        "sr": 100.0 * sum(r["success"] for r in rows) / n,
        "spl": sum(r["spl"] for r in rows) / n,
    }

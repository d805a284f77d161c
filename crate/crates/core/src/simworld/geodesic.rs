use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::WorldMap;
use crate::geom::Vec2;

/// Free-space occupancy over the world bounds.
///
/// A cell is free when its center keeps at least the inflation margin from
/// every wall and bound edge.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    pub origin: Vec2,
    pub resolution: f64,
    pub nx: usize,
    pub nz: usize,
    free: Vec<bool>,
}

impl OccupancyGrid {
    pub fn build(world: &WorldMap, resolution: f64, inflation: f64) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        let origin = world.bounds.min;
        let nx = ((world.bounds.max.x - origin.x) / resolution).ceil() as usize;
        let nz = ((world.bounds.max.z - origin.z) / resolution).ceil() as usize;
        let obstacles: Vec<_> = world.obstacles().collect();
        let mut free = Vec::with_capacity(nx * nz);
        for iz in 0..nz {
            for ix in 0..nx {
                let c = Vec2::new(
                    origin.x + (ix as f64 + 0.5) * resolution,
                    origin.z + (iz as f64 + 0.5) * resolution,
                );
                free.push(world.bounds.contains(c) && obstacles.iter().all(|w| w.distance_to(c) >= inflation));
            }
        }
        Self {
            origin,
            resolution,
            nx,
            nz,
            free,
        }
    }

    pub fn index(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    pub fn is_free(&self, ix: usize, iz: usize) -> bool {
        self.free[self.index(ix, iz)]
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let f = |v: f64, o: f64, n: usize| (((v - o) / self.resolution).floor().max(0.0) as usize).min(n - 1);
        (f(p.x, self.origin.x, self.nx), f(p.z, self.origin.z, self.nz))
    }

    /// Nearest free cell to `p` by grid steps, scanning outward from the
    /// containing cell.
    pub fn nearest_free(&self, p: Vec2) -> Option<(usize, usize)> {
        let start = self.cell_of(p);
        if self.is_free(start.0, start.1) {
            return Some(start);
        }
        let mut seen = vec![false; self.free.len()];
        let mut queue = VecDeque::from([start]);
        seen[self.index(start.0, start.1)] = true;
        while let Some((x, z)) = queue.pop_front() {
            if self.is_free(x, z) {
                return Some((x, z));
            }
            for (nx, nz, _) in self.neighbors(x, z, false) {
                let i = self.index(nx, nz);
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back((nx, nz));
                }
            }
        }
        None
    }

    /// 8-connected neighbors with step costs in cells (1 or √2). With
    /// `free_only`, diagonal steps need both adjoining orthogonal cells free.
    pub fn neighbors(&self, x: usize, z: usize, free_only: bool) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        const STEPS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        STEPS.into_iter().filter_map(move |(dx, dz)| {
            let nx = x as i64 + dx;
            let nz = z as i64 + dz;
            if nx < 0 || nz < 0 || nx >= self.nx as i64 || nz >= self.nz as i64 {
                return None;
            }
            let (nx, nz) = (nx as usize, nz as usize);
            let diagonal = dx != 0 && dz != 0;
            if free_only {
                if !self.is_free(nx, nz) {
                    return None;
                }
                if diagonal && !(self.is_free(nx, z) && self.is_free(x, nz)) {
                    return None;
                }
            }
            Some((nx, nz, if diagonal { std::f64::consts::SQRT_2 } else { 1.0 }))
        })
    }

    /// Shortest 8-connected path length in meters between two cells.
    pub fn shortest_path(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        #[derive(PartialEq)]
        struct Entry(f64, usize);
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let target = self.index(to.0, to.1);
        let mut dist = vec![f64::INFINITY; self.free.len()];
        let mut heap = BinaryHeap::new();
        let s = self.index(from.0, from.1);
        dist[s] = 0.0;
        heap.push(Entry(0.0, s));
        while let Some(Entry(d, i)) = heap.pop() {
            if i == target {
                return d * self.resolution;
            }
            if d > dist[i] {
                continue;
            }
            let (x, z) = (i % self.nx, i / self.nx);
            for (nx, nz, cost) in self.neighbors(x, z, true) {
                let j = self.index(nx, nz);
                let nd = d + cost;
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Entry(nd, j));
                }
            }
        }
        f64::INFINITY
    }
}

/// Shortest collision-free path length from `a` to `b` on an occupancy grid
/// at `resolution`, with walls inflated by `inflation`. Returns infinity when
/// `b` cannot be reached.
pub fn geodesic_distance(world: &WorldMap, a: Vec2, b: Vec2, resolution: f64, inflation: f64) -> f64 {
    let grid = OccupancyGrid::build(world, resolution, inflation);
    match (grid.nearest_free(a), grid.nearest_free(b)) {
        (Some(ca), Some(cb)) => grid.shortest_path(ca, cb),
        _ => f64::INFINITY,
    }
}

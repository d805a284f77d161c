//! Standard VLN evaluation metrics: TL, NE, SR, SPL and nDTW.

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

/// Straight-line distance from the stopping point to the goal.
pub fn navigation_error(final_pos: Vec2, goal: Vec2) -> f64 {
    final_pos.distance(goal)
}

/// 1 when the agent stopped within `radius` of the goal (inclusive).
pub fn success(ne: f64, radius: f64) -> u8 {
    u8::from(ne <= radius)
}

/// Sum of segment lengths along the path.
pub fn trajectory_length(path: &[Vec2]) -> f64 {
    path.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Success weighted by path length: `S · ℓ* / max(ℓ*, TL)`.
pub fn spl(success: u8, shortest: f64, tl: f64) -> f64 {
    assert!(shortest > 0.0, "SPL needs a positive shortest-path length");
    f64::from(success) * shortest / shortest.max(tl)
}

/// Dynamic time warping cost between two point sequences under the
/// Euclidean point distance. Uses two rolling rows.
pub fn dtw(path: &[Vec2], reference: &[Vec2]) -> f64 {
    assert!(!path.is_empty() && !reference.is_empty(), "DTW needs non-empty sequences");
    let m = reference.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for p in path {
        cur[0] = f64::INFINITY;
        for (j, r) in reference.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(cur[j]);
            cur[j + 1] = p.distance(*r) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Normalized DTW, `exp(−DTW / (|reference| · d_th))`, in `(0, 1]`.
pub fn ndtw(path: &[Vec2], reference: &[Vec2], d_th: f64) -> f64 {
    (-dtw(path, reference) / (reference.len() as f64 * d_th)).exp()
}

/// Metrics of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: String,
    pub tl: f64,
    pub ne: f64,
    pub ndtw: f64,
    pub success: u8,
    pub spl: f64,
}

/// Inputs the metrics need from a finished episode.
#[derive(Debug, Clone)]
pub struct EpisodeRecord<'a> {
    pub episode: &'a str,
    pub path: &'a [Vec2],
    pub goal: Vec2,
    pub reference: &'a [Vec2],
    pub success_radius: f64,
    pub shortest: f64,
}

impl EpisodeMetrics {
    pub fn compute(rec: &EpisodeRecord<'_>) -> Self {
        let last = *rec.path.last().expect("path starts at the start pose");
        let tl = trajectory_length(rec.path);
        let ne = navigation_error(last, rec.goal);
        let s = success(ne, rec.success_radius);
        let spl = if rec.shortest > 0.0 && rec.shortest.is_finite() {
            spl(s, rec.shortest, tl)
        } else {
            // start already at the goal cell: any success is optimal
            f64::from(s)
        };
        Self {
            episode: rec.episode.to_string(),
            tl,
            ne,
            ndtw: ndtw(rec.path, rec.reference, rec.success_radius),
            success: s,
            spl,
        }
    }
}

/// Means over episodes; `sr` is a percentage, the rest are as per episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub episodes: usize,
    pub tl: f64,
    pub ne: f64,
    pub ndtw: f64,
    pub sr: f64,
    pub spl: f64,
}

impl AggregateMetrics {
    pub fn from_episodes(rows: &[EpisodeMetrics]) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = |f: fn(&EpisodeMetrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Self {
            episodes: rows.len(),
            tl: mean(|r| r.tl),
            ne: mean(|r| r.ne),
            ndtw: mean(|r| r.ndtw),
            sr: 100.0 * mean(|r| f64::from(r.success)),
            spl: mean(|r| r.spl),
        }
    }
}

/// Per-episode rows plus the aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub episodes: Vec<EpisodeMetrics>,
    pub aggregate: AggregateMetrics,
}

impl MetricReport {
    pub fn new(mut episodes: Vec<EpisodeMetrics>) -> Self {
        episodes.sort_by(|a, b| a.episode.cmp(&b.episode));
        let aggregate = AggregateMetrics::from_episodes(&episodes);
        Self { episodes, aggregate }
    }

    /// Aligned plain-text table with the columns `TL | NE | nDTW | SR | SPL`.
    pub fn to_table(&self) -> String {
        let width = self
            .episodes
            .iter()
            .map(|e| e.episode.len())
            .chain([9])
            .max()
            .unwrap_or(9);
        let mut out = format!(
            "{:<width$} | {:>7} | {:>7} | {:>6} | {:>6} | {:>6}\n",
            "episode", "TL", "NE", "nDTW", "SR", "SPL"
        );
        out.push_str(&format!("{}\n", "-".repeat(width + 46)));
        for e in &self.episodes {
            out.push_str(&format!(
                "{:<width$} | {:>7.2} | {:>7.2} | {:>6.3} | {:>6.1} | {:>6.3}\n",
                e.episode,
                e.tl,
                e.ne,
                e.ndtw,
                100.0 * f64::from(e.success),
                e.spl
            ));
        }
        let a = &self.aggregate;
        out.push_str(&format!("{}\n", "-".repeat(width + 46)));
        out.push_str(&format!(
            "{:<width$} | {:>7.2} | {:>7.2} | {:>6.3} | {:>6.1} | {:>6.3}\n",
            format!("mean ({})", a.episodes),
            a.tl,
            a.ne,
            a.ndtw,
            a.sr,
            a.spl
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Vec2> {
        v.iter().map(|&(x, z)| Vec2::new(x, z)).collect()
    }

    #[test]
    fn navigation_error_values() {
        assert_eq!(navigation_error(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)), 0.0);
        assert_eq!(navigation_error(Vec2::new(3.0, 4.0), Vec2::new(0.0, 0.0)), 5.0);
    }

    #[test]
    fn success_boundary_is_inclusive() {
        assert_eq!(success(2.9, 3.0), 1);
        assert_eq!(success(3.0, 3.0), 1);
        assert_eq!(success(3.1, 3.0), 0);
    }

    #[test]
    fn trajectory_length_values() {
        assert_eq!(trajectory_length(&pts(&[(1.0, 1.0)])), 0.0);
        assert_eq!(trajectory_length(&pts(&[(0.0, 0.0), (2.0, 0.0)])), 2.0);
        assert_eq!(trajectory_length(&pts(&[(0.0, 0.0), (3.0, 4.0), (3.0, 0.0)])), 9.0);
    }

    #[test]
    fn spl_values() {
        assert_eq!(spl(1, 10.0, 10.0), 1.0);
        assert_eq!(spl(0, 10.0, 12.0), 0.0);
        assert_eq!(spl(1, 10.0, 20.0), 0.5);
        assert_eq!(spl(1, 10.0, 5.0), 1.0);
    }

    #[test]
    fn ndtw_identity_and_single_point() {
        let p = pts(&[(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)]);
        assert_eq!(ndtw(&p, &p, 3.0), 1.0);
        let d = 2.5f64;
        let v = ndtw(&pts(&[(d, 0.0)]), &pts(&[(0.0, 0.0)]), 3.0);
        assert!((v - (-d / 3.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn dtw_warps_repeated_points() {
        // path dwells on its first point; warping absorbs the repeats
        let a = pts(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        let b = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(dtw(&a, &b), 0.0);
    }

    #[test]
    fn aggregate_and_table() {
        let rows = vec![
            EpisodeMetrics {
                episode: "b".into(),
                tl: 10.0,
                ne: 1.0,
                ndtw: 0.8,
                success: 1,
                spl: 1.0,
            },
            EpisodeMetrics {
                episode: "a".into(),
                tl: 6.0,
                ne: 5.0,
                ndtw: 0.4,
                success: 0,
                spl: 0.0,
            },
        ];
        let r = MetricReport::new(rows);
        assert_eq!(r.episodes[0].episode, "a");
        assert_eq!(r.aggregate.sr, 50.0);
        assert_eq!(r.aggregate.tl, 8.0);
        let table = r.to_table();
        assert!(table.lines().next().unwrap().contains("TL"));
        assert!(table.contains("mean (2)"));
    }

    proptest! {
        #[test]
        fn spl_never_exceeds_success(s in 0u8..=1, shortest in 0.1f64..50.0, tl in 0.0f64..100.0) {
            let v = spl(s, shortest, tl);
            prop_assert!(v >= 0.0 && v <= f64::from(s));
            if tl <= shortest {
                prop_assert_eq!(v, f64::from(s));
            }
        }

        #[test]
        fn ndtw_is_rigid_invariant(
            a in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..8),
            b in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..8),
            angle in 0.0f64..6.3, tx in -10.0f64..10.0, tz in -10.0f64..10.0,
        ) {
            let (s, c) = angle.sin_cos();
            let move_pt = |p: &Vec2| Vec2::new(c * p.x - s * p.z + tx, s * p.x + c * p.z + tz);
            let (a, b) = (pts(&a), pts(&b));
            let a2: Vec<_> = a.iter().map(move_pt).collect();
            let b2: Vec<_> = b.iter().map(move_pt).collect();
            let v1 = ndtw(&a, &b, 3.0);
            let v2 = ndtw(&a2, &b2, 3.0);
            prop_assert!(v1 > 0.0 && v1 <= 1.0);
            prop_assert!((v1 - v2).abs() < 1e-9);
        }
    }
}

//! Depth-to-text spatial perception.
//!
//! A depth frame is projected through a pinhole model, collapsed to one
//! ground-plane clearance per image column, aggregated into five directional
//! bins over the frontal 120° span (or one mean per panoramic view) and
//! finally verbalized with a three-way threshold rule.
//!
//! Angles in this module follow the image convention: **positive azimuth is
//! to the right** of the agent's heading. The left view sits at −30°, the
//! right view at +30°, and bins are reported left to right from −60° to +60°.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("invalid camera intrinsics: {0}")]
    Intrinsics(String),
    #[error("frame is {frame_w}x{frame_h} but intrinsics expect {intr_w}x{intr_h}")]
    DimensionMismatch {
        frame_w: usize,
        frame_h: usize,
        intr_w: usize,
        intr_h: usize,
    },
    #[error("depth grid has {got} entries, expected {expected}")]
    DepthCount { expected: usize, got: usize },
    #[error("non-finite depth at pixel index {0}")]
    NonFinite(usize),
    #[error("center crop fraction {0} must lie in (0, 1]")]
    CropFraction(f64),
    #[error("invalid thresholds: need 0 < d_close ({close}) < d_mid ({mid})")]
    Thresholds { close: f64, mid: f64 },
    #[error("column range [{lo}, {hi}) is invalid for width {width}")]
    ColumnRange { lo: usize, hi: usize, width: usize },
    #[error("panoramic view index {0} outside 1..=12")]
    ViewIndex(usize),
    #[error("expected {expected} entries, got {got}")]
    Cardinality { expected: usize, got: usize },
    #[error("point grid has no columns")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, PerceptionError>;

/// Pinhole camera parameters in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, degrees.
    pub hfov: f64,
}

impl CameraIntrinsics {
    /// Square-pixel camera with the principal point on the image center.
    ///
    /// Pixel `u` samples the ray through its own center, so the principal
    /// point sits at `(w - 1) / 2` and columns are symmetric about the axis.
    pub fn from_hfov(width: usize, height: usize, hfov: f64) -> Self {
        let fx = width as f64 / (2.0 * (hfov.to_radians() / 2.0).tan());
        Self {
            fx,
            fy: fx,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
            width,
            height,
            hfov,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PerceptionError::Intrinsics(m.to_string()));
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return bad("focal lengths must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image must be non-empty");
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return bad("principal point outside the image");
        }
        let implied = 2.0 * (self.width as f64 / (2.0 * self.fx)).atan().to_degrees();
        if (implied - self.hfov).abs() > 0.5 {
            return Err(PerceptionError::Intrinsics(format!(
                "hfov {} disagrees with fx (implies {implied:.2})",
                self.hfov
            )));
        }
        Ok(())
    }

    /// Horizontal tangent of the ray through column `j`; positive to the right.
    pub fn column_tangent(&self, j: usize) -> f64 {
        (j as f64 - self.cx) / self.fx
    }

    /// Azimuth of column `j` relative to the optical axis, degrees.
    pub fn column_azimuth(&self, j: usize) -> f64 {
        self.column_tangent(j).atan().to_degrees()
    }
}

/// A depth image in meters, row-major. Non-positive entries are invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    depths: Vec<f64>,
    /// View yaw relative to the agent heading, degrees, positive to the right.
    pub heading_offset: f64,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, depths: Vec<f64>, heading_offset: f64) -> Result<Self> {
        if depths.len() != width * height {
            return Err(PerceptionError::DepthCount {
                expected: width * height,
                got: depths.len(),
            });
        }
        if let Some(i) = depths.iter().position(|d| !d.is_finite()) {
            return Err(PerceptionError::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            depths,
            heading_offset,
        })
    }

    pub fn depth(&self, u: usize, v: usize) -> f64 {
        self.depths[v * self.width + u]
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.depth(u, v) > 0.0
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    /// Horizontal range `sqrt(x² + z²)`, ignoring height.
    pub fn ground_distance(&self) -> f64 {
        self.x.hypot(self.z)
    }
}

/// Camera-frame points from the bottom half of a depth frame.
///
/// Row `k` corresponds to image row `height - rows + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGrid {
    pub rows: usize,
    pub cols: usize,
    points: Vec<Option<Point3>>,
}

impl PointGrid {
    pub fn from_points(rows: usize, cols: usize, points: Vec<Option<Point3>>) -> Self {
        assert_eq!(points.len(), rows * cols, "point grid size");
        Self { rows, cols, points }
    }

    pub fn get(&self, k: usize, j: usize) -> Option<Point3> {
        self.points[k * self.cols + j]
    }

    pub fn present(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }
}

/// Half-open pixel window `[lo, hi)` kept by a centered crop of `fraction`.
pub fn crop_window(len: usize, fraction: f64) -> (usize, usize) {
    let kept = ((len as f64 * fraction).round() as usize).clamp(1, len);
    let lo = (len - kept) / 2;
    (lo, lo + kept)
}

/// Back-projects the bottom half of `frame`, restricted to a centered crop.
pub fn project_depth(
    frame: &DepthFrame,
    intr: &CameraIntrinsics,
    center_crop_fraction: f64,
) -> Result<PointGrid> {
    if frame.width != intr.width || frame.height != intr.height {
        return Err(PerceptionError::DimensionMismatch {
            frame_w: frame.width,
            frame_h: frame.height,
            intr_w: intr.width,
            intr_h: intr.height,
        });
    }
    if !(center_crop_fraction > 0.0 && center_crop_fraction <= 1.0) {
        return Err(PerceptionError::CropFraction(center_crop_fraction));
    }
    let rows = frame.height / 2;
    let first_row = frame.height - rows;
    let (u_lo, u_hi) = crop_window(frame.width, center_crop_fraction);
    let (v_lo, v_hi) = crop_window(frame.height, center_crop_fraction);

    let mut points = Vec::with_capacity(rows * frame.width);
    for k in 0..rows {
        let v = first_row + k;
        for u in 0..frame.width {
            let inside = (u_lo..u_hi).contains(&u) && (v_lo..v_hi).contains(&v);
            let d = frame.depth(u, v);
            points.push((inside && d > 0.0).then(|| Point3 {
                x: (u as f64 - intr.cx) * d / intr.fx,
                y: (v as f64 - intr.cy) * d / intr.fy,
                z: d,
            }));
        }
    }
    Ok(PointGrid::from_points(rows, frame.width, points))
}

/// Nearest ground-plane clearance per image column; `None` marks a column
/// without any valid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDistances {
    /// Degrees, positive to the right.
    pub heading_offset: f64,
    pub per_column: Vec<Option<f64>>,
}

pub fn column_ground_distances(grid: &PointGrid, heading_offset: f64) -> Result<ColumnDistances> {
    if grid.cols == 0 {
        return Err(PerceptionError::EmptyGrid);
    }
    let per_column = (0..grid.cols)
        .map(|j| {
            (0..grid.rows)
                .filter_map(|k| grid.get(k, j))
                .map(|p| p.ground_distance())
                .min_by(f64::total_cmp)
        })
        .collect();
    Ok(ColumnDistances {
        heading_offset,
        per_column,
    })
}

/// Edges of the five frontal bins, degrees, left to right.
pub const BIN_EDGES: [f64; 6] = [-60.0, -36.0, -12.0, 12.0, 36.0, 60.0];
/// Bin centers, degrees, left to right.
pub const BIN_CENTERS: [f64; 5] = [-60.0, -30.0, 0.0, 30.0, 60.0];
/// Direction phrases for the five frontal bins, left to right.
pub const FRONTAL_DIRECTIONS: [&str; 5] = [
    "turn left 60°",
    "turn left 30°",
    "go forward",
    "turn right 30°",
    "turn right 60°",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalBin {
    pub center_angle: f64,
    /// Mean assigned clearance; 0 when nothing was assigned.
    pub mean_distance: f64,
    pub point_count: usize,
}

impl DirectionalBin {
    pub fn mean(&self) -> Option<f64> {
        (self.point_count > 0).then_some(self.mean_distance)
    }
}

/// Index of the bin whose interval holds `azimuth`. Intervals are half-open
/// except the last, which also takes +60°.
pub fn bin_index(azimuth: f64) -> Option<usize> {
    if !(BIN_EDGES[0]..=BIN_EDGES[5]).contains(&azimuth) {
        return None;
    }
    Some((0..5).find(|&b| azimuth < BIN_EDGES[b + 1]).unwrap_or(4))
}

/// Pools column clearances of the frontal views into five directional bins.
///
/// Each column lands in the bin containing its true azimuth
/// `heading_offset + atan((j - cx) / fx)`. Columns beyond ±60° are dropped.
pub fn bin_frontal(views: &[ColumnDistances], intr: &CameraIntrinsics) -> Result<[DirectionalBin; 5]> {
    let mut sums = [0.0f64; 5];
    let mut counts = [0usize; 5];
    for view in views {
        if view.per_column.len() != intr.width {
            return Err(PerceptionError::Cardinality {
                expected: intr.width,
                got: view.per_column.len(),
            });
        }
        for (j, d) in view.per_column.iter().enumerate() {
            let Some(d) = d else { continue };
            let az = view.heading_offset + intr.column_azimuth(j);
            match bin_index(az) {
                Some(b) => {
                    sums[b] += d;
                    counts[b] += 1;
                }
                None => log::debug!("column {j} at azimuth {az:.2}° falls outside the frontal span"),
            }
        }
    }
    Ok(std::array::from_fn(|b| DirectionalBin {
        center_angle: BIN_CENTERS[b],
        mean_distance: if counts[b] > 0 { sums[b] / counts[b] as f64 } else { 0.0 },
        point_count: counts[b],
    }))
}

/// Occupancy distance thresholds, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub d_close: f64,
    pub d_mid: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            d_close: 0.5,
            d_mid: 4.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if self.d_close > 0.0 && self.d_close < self.d_mid {
            Ok(())
        } else {
            Err(PerceptionError::Thresholds {
                close: self.d_close,
                mid: self.d_mid,
            })
        }
    }
}

/// One sentence for a direction given its mean clearance.
pub fn describe(direction: &str, mean: Option<f64>, th: &Thresholds) -> String {
    match mean {
        None => format!("If you {direction}, there is no depth reading"),
        Some(d) if d < th.d_close => format!("If you {direction}, there is a very close obstacle"),
        Some(d) if d < th.d_mid => format!("If you {direction}, obstacle appears at {d:.1} meters"),
        Some(d) => format!("If you {direction}, path is clear for moving forward in {d:.1} meters"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialMode {
    Frontal5,
    Panoramic12,
}

impl SpatialMode {
    /// Number of sentences in a set of this mode.
    pub fn count(self) -> usize {
        match self {
            SpatialMode::Frontal5 => 5,
            SpatialMode::Panoramic12 => 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialEntry {
    /// Bin center angle (frontal) or view index (panoramic).
    pub key: i32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialDescriptionSet {
    pub mode: SpatialMode,
    pub entries: Vec<SpatialEntry>,
}

impl SpatialDescriptionSet {
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.text.as_str())
    }
}

pub fn render_frontal_text(bins: &[DirectionalBin; 5], th: &Thresholds) -> SpatialDescriptionSet {
    let entries = bins
        .iter()
        .zip(FRONTAL_DIRECTIONS)
        .map(|(bin, dir)| SpatialEntry {
            key: bin.center_angle as i32,
            text: describe(dir, bin.mean(), th),
        })
        .collect();
    SpatialDescriptionSet {
        mode: SpatialMode::Frontal5,
        entries,
    }
}

/// The central half `[w/4, 3w/4)` of a panoramic frame; `[64, 192)` at w = 256.
pub fn central_half(width: usize) -> (usize, usize) {
    (width / 4, width * 3 / 4)
}

/// Mean clearance over columns `[lo, hi)`, skipping columns without data.
pub fn panoramic_view_distance(cd: &ColumnDistances, lo: usize, hi: usize) -> Result<Option<f64>> {
    let width = cd.per_column.len();
    if lo >= hi || hi > width {
        return Err(PerceptionError::ColumnRange { lo, hi, width });
    }
    let (sum, n) = cd.per_column[lo..hi]
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
    Ok((n > 0).then(|| sum / n as f64))
}

/// Direction in which the panoramic scan advances from view 1 to view 12.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    /// View `i` faces `30·(i−1)` degrees to the left.
    #[default]
    CounterClockwise,
    /// View `i` faces `30·(i−1)` degrees to the right.
    Clockwise,
}

impl ScanOrder {
    /// Orientation of view `index` (1..=12), degrees counter-clockwise in `[0, 360)`.
    pub fn view_angle(self, index: usize) -> Result<u32> {
        if !(1..=12).contains(&index) {
            return Err(PerceptionError::ViewIndex(index));
        }
        let theta = 30 * (index as u32 - 1);
        Ok(match self {
            ScanOrder::CounterClockwise => theta,
            ScanOrder::Clockwise => (360 - theta) % 360,
        })
    }

    /// Direction phrase for view `index`.
    pub fn label(self, index: usize) -> Result<String> {
        Ok(match self.view_angle(index)? {
            0 => "go forward".to_string(),
            180 => "turn around".to_string(),
            t if t < 180 => format!("turn left {t}°"),
            t => format!("turn right {}°", 360 - t),
        })
    }

    /// Signed turn (degrees, counter-clockwise positive) that faces view `index`.
    pub fn turn_to(self, index: usize) -> Result<f64> {
        Ok(crate::geom::signed_deg(self.view_angle(index)? as f64))
    }
}

/// Orientation of panoramic view `index` (1..=12), degrees counter-clockwise.
pub fn view_angle(index: usize) -> Result<u32> {
    ScanOrder::CounterClockwise.view_angle(index)
}

/// Direction phrase for panoramic view `index` under the default scan order.
pub fn direction_label(index: usize) -> Result<String> {
    ScanOrder::CounterClockwise.label(index)
}

pub fn render_panoramic_text(means: &[Option<f64>], th: &Thresholds) -> Result<SpatialDescriptionSet> {
    render_panoramic_text_with(means, th, ScanOrder::CounterClockwise)
}

pub fn render_panoramic_text_with(
    means: &[Option<f64>],
    th: &Thresholds,
    order: ScanOrder,
) -> Result<SpatialDescriptionSet> {
    if means.len() != 12 {
        return Err(PerceptionError::Cardinality {
            expected: 12,
            got: means.len(),
        });
    }
    let entries = means
        .iter()
        .enumerate()
        .map(|(i, mean)| {
            Ok(SpatialEntry {
                key: i as i32 + 1,
                text: describe(&order.label(i + 1)?, *mean, th),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpatialDescriptionSet {
        mode: SpatialMode::Panoramic12,
        entries,
    })
}

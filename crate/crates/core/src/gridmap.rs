//! Raster world model.
//!
//! [`OccupancyGrid`] holds per-cell occupancy, [`distance_transform`] turns it into a
//! [`DistanceGrid`] (the Euclidean distance grid, EDG) whose cells store the exact
//! center-to-center distance to the nearest obstacle cell. The distance grid answers
//! continuous distance and gradient queries through bilinear interpolation between
//! neighbouring cell centers, and backs the three-tier footprint collision test.
//!
//! Cell `(ix, iy)` covers `[ox + ix*r, ox + (ix+1)*r) x [oy + iy*r, oy + (iy+1)*r)`
//! where `(ox, oy)` is the grid origin and `r` the resolution. Storage is row-major
//! with `iy` as the row.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose2, WorldPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),
    #[error("grid is empty")]
    Empty,
    #[error("cell buffer has {got} entries, geometry needs {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("query point ({x:.4}, {y:.4}) lies outside the interpolation interior")]
    OutOfBounds { x: f64, y: f64 },
}

/// Occupancy state of a single cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Occupancy {
    Free,
    Occupied,
    Unknown,
}

impl Occupancy {
    fn severity(self) -> u8 {
        match self {
            Occupancy::Free => 0,
            Occupancy::Unknown => 1,
            Occupancy::Occupied => 2,
        }
    }
}

/// Size, resolution and placement shared by every raster in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    width: usize,
    height: usize,
    resolution: f64,
    origin: WorldPoint,
}

impl GridGeometry {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: WorldPoint,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::InvalidGeometry(format!(
                "width and height must be positive, got {width}x{height}"
            )));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GridError::InvalidGeometry(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if !origin.is_finite() {
            return Err(GridError::InvalidGeometry("origin must be finite".into()));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> WorldPoint {
        self.origin
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    /// Length of the map diagonal in meters.
    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64) * self.resolution
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.width && iy < self.height);
        iy * self.width + ix
    }

    pub fn contains(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) < self.width && (iy as usize) < self.height
    }

    pub fn cell_center(&self, ix: i64, iy: i64) -> WorldPoint {
        WorldPoint::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing `p`, possibly outside the grid.
    pub fn world_to_cell_unchecked(&self, p: WorldPoint) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn world_to_cell(&self, p: WorldPoint) -> Option<(usize, usize)> {
        if !p.is_finite() {
            return None;
        }
        let (ix, iy) = self.world_to_cell_unchecked(p);
        self.contains(ix, iy).then_some((ix as usize, iy as usize))
    }

    /// Upper-right world corner of the grid.
    pub fn extent(&self) -> WorldPoint {
        WorldPoint::new(
            self.origin.x + self.width as f64 * self.resolution,
            self.origin.y + self.height as f64 * self.resolution,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    geometry: GridGeometry,
    cells: Vec<Occupancy>,
}

impl OccupancyGrid {
    pub fn new(geometry: GridGeometry, fill: Occupancy) -> Self {
        Self {
            geometry,
            cells: vec![fill; geometry.cell_count()],
        }
    }

    pub fn from_cells(geometry: GridGeometry, cells: Vec<Occupancy>) -> Result<Self, GridError> {
        if cells.len() != geometry.cell_count() {
            return Err(GridError::SizeMismatch {
                expected: geometry.cell_count(),
                got: cells.len(),
            });
        }
        Ok(Self { geometry, cells })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn cells(&self) -> &[Occupancy] {
        &self.cells
    }

    pub fn get(&self, ix: usize, iy: usize) -> Occupancy {
        self.cells[self.geometry.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, value: Occupancy) {
        let i = self.geometry.index(ix, iy);
        self.cells[i] = value;
    }

    /// Sets every cell whose center falls inside the world-frame rectangle.
    pub fn fill_rect(&mut self, min: WorldPoint, max: WorldPoint, value: Occupancy) {
        let g = self.geometry;
        let (x0, x1) = (min.x.min(max.x), min.x.max(max.x));
        let (y0, y1) = (min.y.min(max.y), min.y.max(max.y));
        let ix_lo = (((x0 - g.origin.x) / g.resolution) - 0.5).ceil().max(0.0) as usize;
        let iy_lo = (((y0 - g.origin.y) / g.resolution) - 0.5).ceil().max(0.0) as usize;
        let ix_hi = (((x1 - g.origin.x) / g.resolution) - 0.5).floor();
        let iy_hi = (((y1 - g.origin.y) / g.resolution) - 0.5).floor();
        if ix_hi < 0.0 || iy_hi < 0.0 {
            return;
        }
        let ix_hi = (ix_hi as usize).min(g.width - 1);
        let iy_hi = (iy_hi as usize).min(g.height - 1);
        for iy in iy_lo..=iy_hi {
            for ix in ix_lo..=ix_hi {
                self.set(ix, iy, value);
            }
        }
    }

    pub fn count(&self, value: Occupancy) -> usize {
        self.cells.iter().filter(|&&c| c == value).count()
    }

    /// Re-rasterizes onto `target`. A target cell takes the most severe state among the
    /// source cells its area overlaps (occupied over unknown over free); area outside
    /// the source grid counts as `outside`.
    pub fn resample(&self, target: GridGeometry, outside: Occupancy) -> OccupancyGrid {
        let src = self.geometry;
        let mut out = OccupancyGrid::new(target, Occupancy::Free);
        const EPS: f64 = 1e-9;
        for ty in 0..target.height {
            let y0 = target.origin.y + ty as f64 * target.resolution;
            let y1 = y0 + target.resolution;
            let sy_lo = ((y0 - src.origin.y) / src.resolution + EPS).floor() as i64;
            let sy_hi = ((y1 - src.origin.y) / src.resolution - EPS).ceil() as i64 - 1;
            for tx in 0..target.width {
                let x0 = target.origin.x + tx as f64 * target.resolution;
                let x1 = x0 + target.resolution;
                let sx_lo = ((x0 - src.origin.x) / src.resolution + EPS).floor() as i64;
                let sx_hi = ((x1 - src.origin.x) / src.resolution - EPS).ceil() as i64 - 1;
                let mut worst = Occupancy::Free;
                'scan: for sy in sy_lo..=sy_hi.max(sy_lo) {
                    for sx in sx_lo..=sx_hi.max(sx_lo) {
                        let v = if src.contains(sx, sy) {
                            self.get(sx as usize, sy as usize)
                        } else {
                            outside
                        };
                        if v.severity() > worst.severity() {
                            worst = v;
                            if worst == Occupancy::Occupied {
                                break 'scan;
                            }
                        }
                    }
                }
                out.set(tx, ty, worst);
            }
        }
        out
    }
}

/// Per-cell distance (meters) to the nearest obstacle cell center.
///
/// Immutable once built; share it behind an `Arc` and swap whole snapshots to update.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGrid {
    geometry: GridGeometry,
    distances: Vec<f64>,
    max_distance: f64,
}

impl DistanceGrid {
    /// Builds a distance grid from raw values, mainly for tests and synthetic fields.
    pub fn from_values(geometry: GridGeometry, distances: Vec<f64>) -> Result<Self, GridError> {
        if distances.len() != geometry.cell_count() {
            return Err(GridError::SizeMismatch {
                expected: geometry.cell_count(),
                got: distances.len(),
            });
        }
        Ok(Self {
            geometry,
            distances,
            max_distance: geometry.diagonal(),
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Sentinel stored when the map holds no obstacle at all: the map diagonal.
    pub fn max_distance(&self) -> f64 {
        self.max_distance
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.distances[self.geometry.index(ix, iy)]
    }

    /// Distance stored in the cell containing `p`, `None` outside the grid.
    pub fn cell_distance_at(&self, p: WorldPoint) -> Option<f64> {
        self.geometry
            .world_to_cell(p)
            .map(|(ix, iy)| self.get(ix, iy))
    }

    /// Locates the bilinear patch for `p`: lower-left cell indices and the fractional
    /// offsets inside the patch. Points on a patch boundary belong to the lower-index
    /// patch.
    fn patch(&self, p: WorldPoint) -> Result<(usize, usize, f64, f64), GridError> {
        let g = &self.geometry;
        let gx = (p.x - g.origin.x) / g.resolution - 0.5;
        let gy = (p.y - g.origin.y) / g.resolution - 0.5;
        let max_x = (g.width - 1) as f64;
        let max_y = (g.height - 1) as f64;
        if !(gx >= 0.0 && gy >= 0.0 && gx <= max_x && gy <= max_y) || g.width < 2 || g.height < 2
        {
            return Err(GridError::OutOfBounds { x: p.x, y: p.y });
        }
        let ix0 = ((gx.ceil() as i64) - 1).clamp(0, g.width as i64 - 2) as usize;
        let iy0 = ((gy.ceil() as i64) - 1).clamp(0, g.height as i64 - 2) as usize;
        Ok((ix0, iy0, gx - ix0 as f64, gy - iy0 as f64))
    }

    /// Bilinear interpolation of the distance field between the four surrounding cell
    /// centers.
    pub fn interpolate_distance(&self, p: WorldPoint) -> Result<f64, GridError> {
        let (ix0, iy0, tx, ty) = self.patch(p)?;
        let d00 = self.get(ix0, iy0);
        let d10 = self.get(ix0 + 1, iy0);
        let d01 = self.get(ix0, iy0 + 1);
        let d11 = self.get(ix0 + 1, iy0 + 1);
        Ok((1.0 - ty) * ((1.0 - tx) * d00 + tx * d10) + ty * ((1.0 - tx) * d01 + tx * d11))
    }

    /// Analytic gradient `(d/dx, d/dy)` of the bilinear surface, per meter.
    pub fn interpolate_gradient(&self, p: WorldPoint) -> Result<(f64, f64), GridError> {
        let (ix0, iy0, tx, ty) = self.patch(p)?;
        let d00 = self.get(ix0, iy0);
        let d10 = self.get(ix0 + 1, iy0);
        let d01 = self.get(ix0, iy0 + 1);
        let d11 = self.get(ix0 + 1, iy0 + 1);
        let r = self.geometry.resolution;
        let gx = ((1.0 - ty) * (d10 - d00) + ty * (d11 - d01)) / r;
        let gy = ((1.0 - tx) * (d01 - d00) + tx * (d11 - d10)) / r;
        Ok((gx, gy))
    }
}

/// Exact Euclidean distance transform (lower envelope of parabolas, applied along
/// columns then rows).
///
/// Obstacle cells are `Occupied` ones, plus `Unknown` ones when `unknown_is_obstacle`.
/// Without any obstacle every cell holds [`DistanceGrid::max_distance`].
pub fn distance_transform(
    grid: &OccupancyGrid,
    unknown_is_obstacle: bool,
) -> Result<DistanceGrid, GridError> {
    let g = *grid.geometry();
    if grid.cells().is_empty() {
        return Err(GridError::Empty);
    }
    let (w, h) = (g.width, g.height);
    let is_obstacle = |c: Occupancy| {
        c == Occupancy::Occupied || (unknown_is_obstacle && c == Occupancy::Unknown)
    };
    let max_distance = g.diagonal();
    if !grid.cells().iter().any(|&c| is_obstacle(c)) {
        return Ok(DistanceGrid {
            geometry: g,
            distances: vec![max_distance; g.cell_count()],
            max_distance,
        });
    }

    let mut sq = vec![f64::INFINITY; g.cell_count()];
    let n = w.max(h);
    let mut scratch = EnvelopeScratch::new(n);
    let mut line = vec![0.0; n];
    let mut out = vec![0.0; n];

    for ix in 0..w {
        for iy in 0..h {
            line[iy] = if is_obstacle(grid.get(ix, iy)) {
                0.0
            } else {
                f64::INFINITY
            };
        }
        scratch.transform(&line[..h], &mut out[..h]);
        for iy in 0..h {
            sq[iy * w + ix] = out[iy];
        }
    }
    for iy in 0..h {
        let row = &mut sq[iy * w..(iy + 1) * w];
        line[..w].copy_from_slice(row);
        scratch.transform(&line[..w], &mut out[..w]);
        row.copy_from_slice(&out[..w]);
    }

    let distances = sq
        .into_iter()
        .map(|d2| d2.sqrt() * g.resolution)
        .collect();
    Ok(DistanceGrid {
        geometry: g,
        distances,
        max_distance,
    })
}

struct EnvelopeScratch {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl EnvelopeScratch {
    fn new(n: usize) -> Self {
        Self {
            sites: vec![0; n],
            bounds: vec![0.0; n + 1],
        }
    }

    /// 1-D squared distance transform of the sampled function `f` (infinite entries are
    /// not sites). Values stay exact integers when `f` holds integers.
    fn transform(&mut self, f: &[f64], d: &mut [f64]) {
        let v = &mut self.sites;
        let z = &mut self.bounds;
        let mut k: isize = -1;
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            let fq = f[q] + (q * q) as f64;
            loop {
                if k < 0 {
                    k = 0;
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                let p = v[k as usize];
                let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                if s <= z[k as usize] {
                    k -= 1;
                    continue;
                }
                k += 1;
                v[k as usize] = q;
                z[k as usize] = s;
                z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
        if k < 0 {
            d.fill(f64::INFINITY);
            return;
        }
        let mut j = 0usize;
        for (q, out) in d.iter_mut().enumerate() {
            while z[j + 1] < q as f64 {
                j += 1;
            }
            let p = v[j];
            let dq = q as f64 - p as f64;
            *out = dq * dq + f[p];
        }
    }
}

/// Robot outline in the body frame together with its inscribed and circumscribed radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    vertices: Vec<WorldPoint>,
    inscribed_radius: f64,
    circumscribed_radius: f64,
}

impl Footprint {
    /// Polygon footprint; the body origin must lie strictly inside it.
    pub fn polygon(vertices: Vec<WorldPoint>) -> Result<Self, GridError> {
        if vertices.len() < 3 {
            return Err(GridError::InvalidGeometry(
                "footprint needs at least three vertices".into(),
            ));
        }
        let circumscribed_radius = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let inscribed_radius = (0..vertices.len())
            .map(|i| point_segment_distance(WorldPoint::default(), vertices[i], vertices[(i + 1) % vertices.len()]))
            .fold(f64::INFINITY, f64::min);
        if !point_in_polygon(WorldPoint::default(), &vertices) || inscribed_radius <= 0.0 {
            return Err(GridError::InvalidGeometry(
                "footprint must contain the body origin".into(),
            ));
        }
        Ok(Self {
            vertices,
            inscribed_radius,
            circumscribed_radius,
        })
    }

    /// Axis-aligned rectangle centered on the body origin.
    pub fn rectangle(length: f64, width: f64) -> Result<Self, GridError> {
        let (hx, hy) = (length / 2.0, width / 2.0);
        Self::polygon(vec![
            WorldPoint::new(hx, hy),
            WorldPoint::new(-hx, hy),
            WorldPoint::new(-hx, -hy),
            WorldPoint::new(hx, -hy),
        ])
    }

    pub fn vertices(&self) -> &[WorldPoint] {
        &self.vertices
    }

    pub fn inscribed_radius(&self) -> f64 {
        self.inscribed_radius
    }

    pub fn circumscribed_radius(&self) -> f64 {
        self.circumscribed_radius
    }

    pub fn is_pose_free(&self, dg: &DistanceGrid, pose: Pose2) -> bool {
        is_pose_collision_free(
            dg,
            pose,
            self.inscribed_radius,
            self.circumscribed_radius,
            &self.vertices,
        )
    }
}

impl Default for Footprint {
    /// 0.5 m x 0.4 m differential-drive base.
    fn default() -> Self {
        Self::rectangle(0.5, 0.4).expect("valid default footprint")
    }
}

/// Which tier of the collision test decided the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionCheck {
    FreeByClearance,
    CollisionByClearance,
    FreeByFootprint,
    CollisionByFootprint,
    OutsideGrid,
}

impl CollisionCheck {
    pub fn is_free(self) -> bool {
        matches!(
            self,
            CollisionCheck::FreeByClearance | CollisionCheck::FreeByFootprint
        )
    }
}

/// Three-tier footprint test: clearance at the pose's cell below the inscribed radius is
/// a collision; at least the circumscribed radius plus one cell diagonal is free (center
/// distances understate the gap between the robot and an obstacle cell's area by at
/// most that much); anything in between intersects the placed footprint with the
/// obstacle cell squares.
pub fn classify_pose(
    dg: &DistanceGrid,
    pose: Pose2,
    inscribed_r: f64,
    circumscribed_r: f64,
    footprint: &[WorldPoint],
) -> CollisionCheck {
    let Some(clearance) = dg.cell_distance_at(pose.position()) else {
        return CollisionCheck::OutsideGrid;
    };
    if clearance >= circumscribed_r + dg.geometry().resolution() * std::f64::consts::SQRT_2 {
        return CollisionCheck::FreeByClearance;
    }
    if clearance < inscribed_r {
        return CollisionCheck::CollisionByClearance;
    }
    if footprint_hits_obstacle(dg, pose, footprint) {
        CollisionCheck::CollisionByFootprint
    } else {
        CollisionCheck::FreeByFootprint
    }
}

pub fn is_pose_collision_free(
    dg: &DistanceGrid,
    pose: Pose2,
    inscribed_r: f64,
    circumscribed_r: f64,
    footprint: &[WorldPoint],
) -> bool {
    classify_pose(dg, pose, inscribed_r, circumscribed_r, footprint).is_free()
}

/// True when the footprint placed at `pose` overlaps the square of any obstacle cell or
/// any off-grid cell. A coarse grid built by [`OccupancyGrid::resample`] therefore never
/// reports free where a finer source grid would report a collision.
fn footprint_hits_obstacle(dg: &DistanceGrid, pose: Pose2, footprint: &[WorldPoint]) -> bool {
    let g = dg.geometry();
    let half = 0.5 * g.resolution();
    let world: Vec<WorldPoint> = footprint.iter().map(|&v| pose.transform(v)).collect();
    let (mut lo, mut hi) = (world[0], world[0]);
    for v in &world {
        lo = WorldPoint::new(lo.x.min(v.x), lo.y.min(v.y));
        hi = WorldPoint::new(hi.x.max(v.x), hi.y.max(v.y));
    }
    let (ix0, iy0) = g.world_to_cell_unchecked(lo);
    let (ix1, iy1) = g.world_to_cell_unchecked(hi);
    for iy in iy0..=iy1 {
        for ix in ix0..=ix1 {
            if g.contains(ix, iy) && dg.get(ix as usize, iy as usize) > 0.0 {
                continue;
            }
            if polygon_overlaps_square(&world, g.cell_center(ix, iy), half) {
                return true;
            }
        }
    }
    false
}

/// Whether a simple polygon and an axis-aligned square share interior points (touching
/// boundaries do not count).
pub fn polygon_overlaps_square(poly: &[WorldPoint], center: WorldPoint, half: f64) -> bool {
    let inside_square =
        |p: WorldPoint| (p.x - center.x).abs() < half && (p.y - center.y).abs() < half;
    if poly.iter().any(|&p| inside_square(p)) || point_in_polygon(center, poly) {
        return true;
    }
    let corners = [
        WorldPoint::new(center.x - half, center.y - half),
        WorldPoint::new(center.x + half, center.y - half),
        WorldPoint::new(center.x + half, center.y + half),
        WorldPoint::new(center.x - half, center.y + half),
    ];
    let n = poly.len();
    (0..n).any(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        (0..4).any(|j| segments_cross(a, b, corners[j], corners[(j + 1) % 4]))
    })
}

/// Proper crossing of two segments (endpoints strictly on opposite sides).
fn segments_cross(a: WorldPoint, b: WorldPoint, c: WorldPoint, d: WorldPoint) -> bool {
    let orient = |p: WorldPoint, q: WorldPoint, r: WorldPoint| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Crossing-number point-in-polygon test.
pub fn point_in_polygon(p: WorldPoint, poly: &[WorldPoint]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn point_segment_distance(p: WorldPoint, a: WorldPoint, b: WorldPoint) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

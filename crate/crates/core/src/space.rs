//! Compact metric spaces, points, finite grids and coverage checks.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};

/// Maximum supported ambient dimension.
pub const MAX_DIM: usize = 2;

/// A point of a [`Space`]. Points of a finite space store their index as the
/// single coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    c: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn new1(x: f64) -> Self {
        Point { c: [x, 0.0], dim: 1 }
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Point { c: [x, y], dim: 2 }
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        match coords {
            [x] => Ok(Point::new1(*x)),
            [x, y] => Ok(Point::new2(*x, *y)),
            _ => invalid(format!("points have 1 or 2 coordinates, got {}", coords.len())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    /// First coordinate; the whole point for one-dimensional spaces.
    pub fn x(&self) -> f64 {
        self.c[0]
    }

    pub fn y(&self) -> f64 {
        self.c[1]
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// A compact metric space. The circle has circumference 1 and the torus
/// carries the max of the two circle distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Space {
    Circle {},
    Interval { a: f64, b: f64 },
    Torus {},
    Finite { distances: Vec<Vec<f64>> },
}

fn arc(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl Space {
    pub fn circle() -> Self {
        Space::Circle {}
    }

    pub fn torus() -> Self {
        Space::Torus {}
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let s = Space::Interval { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn finite(distances: Vec<Vec<f64>>) -> Result<Self> {
        let s = Space::Finite { distances };
        s.validate()?;
        Ok(s)
    }

    /// Checks the descriptor invariants (metric axioms for finite tables).
    pub fn validate(&self) -> Result<()> {
        match self {
            Space::Circle {} | Space::Torus {} => Ok(()),
            Space::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return invalid(format!("interval needs finite a < b, got [{a}, {b}]"));
                }
                Ok(())
            }
            Space::Finite { distances: t } => {
                let n = t.len();
                if n == 0 {
                    return invalid("finite space needs at least one point");
                }
                for (i, row) in t.iter().enumerate() {
                    if row.len() != n {
                        return invalid("distance table must be square");
                    }
                    if row[i] != 0.0 {
                        return invalid("distance table must have a zero diagonal");
                    }
                    for (j, &v) in row.iter().enumerate() {
                        if !(v.is_finite() && v >= 0.0) {
                            return invalid("distances must be finite and nonnegative");
                        }
                        if v != t[j][i] {
                            return invalid("distance table must be symmetric");
                        }
                        if i != j && v == 0.0 {
                            return invalid("distinct points must have positive distance");
                        }
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            if t[i][k] > t[i][j] + t[j][k] + 1e-12 {
                                return invalid("distance table violates the triangle inequality");
                            }
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Torus {} => 2,
            _ => 1,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Space::Circle {} | Space::Torus {} => 0.5,
            Space::Interval { a, b } => b - a,
            Space::Finite { distances } => distances
                .iter()
                .flat_map(|r| r.iter().copied())
                .fold(0.0, f64::max),
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, Space::Circle {})
    }

    fn finite_len(&self) -> usize {
        match self {
            Space::Finite { distances } => distances.len(),
            _ => 0,
        }
    }

    /// Validated construction of a point from raw coordinates. Circle and
    /// torus coordinates are wrapped; interval and finite coordinates must
    /// already lie in range.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        let p = Point::from_slice(coords)?;
        if p.dim() != self.dim() {
            return invalid(format!(
                "point has dimension {}, space has dimension {}",
                p.dim(),
                self.dim()
            ));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return invalid("point coordinates must be finite");
        }
        match self {
            Space::Interval { a, b } => {
                if p.x() < *a || p.x() > *b {
                    return invalid(format!("{} lies outside [{a}, {b}]", p.x()));
                }
            }
            Space::Finite { .. } => {
                let x = p.x();
                if x.fract() != 0.0 || x < 0.0 || x >= self.finite_len() as f64 {
                    return invalid(format!("{x} is not a point index of the finite space"));
                }
            }
            _ => {}
        }
        Ok(self.canonical(p))
    }

    /// Projects an arbitrary point onto the canonical range: wraps circle
    /// coordinates and clamps interval coordinates.
    pub fn canonical(&self, p: Point) -> Point {
        match self {
            Space::Circle {} => Point::new1(wrap(p.x())),
            Space::Torus {} => Point::new2(wrap(p.x()), wrap(p.y())),
            Space::Interval { a, b } => Point::new1(p.x().clamp(*a, *b)),
            Space::Finite { .. } => {
                let n = self.finite_len() as f64;
                Point::new1(p.x().round().clamp(0.0, n - 1.0))
            }
        }
    }

    /// Metric on canonical points of matching dimension. Unchecked.
    #[inline]
    pub fn dist(&self, p: &Point, q: &Point) -> f64 {
        match self {
            Space::Circle {} => arc(p.x(), q.x()),
            Space::Interval { .. } => (p.x() - q.x()).abs(),
            Space::Torus {} => arc(p.x(), q.x()).max(arc(p.y(), q.y())),
            Space::Finite { distances } => distances[p.x() as usize][q.x() as usize],
        }
    }

    /// Checked metric.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        if p.dim() != self.dim() || q.dim() != self.dim() {
            return invalid("dimension mismatch in distance");
        }
        Ok(self.dist(p, q))
    }

    /// Signed displacement from `p` to `q` on the universal cover of a
    /// one-dimensional space (shortest representative on the circle).
    pub fn displacement(&self, p: &Point, q: &Point) -> f64 {
        let d = q.x() - p.x();
        if self.is_circle() {
            d - d.round()
        } else {
            d
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    Circle { n: usize },
    Interval { a: f64, b: f64, n: usize },
    Torus { n: usize },
    Finite,
}

/// Finite grid of cell representatives forming a (mesh/2)-net of the space.
#[derive(Clone, Debug)]
pub struct Grid {
    space: Space,
    mesh: f64,
    reps: Vec<Point>,
    layout: Layout,
    radius: f64,
}

/// Builds the canonical grid of the given mesh. Cells are the nearest-rep
/// regions, ties going to the lower index.
pub fn build_grid(space: &Space, mesh: f64) -> Result<Grid> {
    Grid::new(space, mesh)
}

fn cells_for(len: f64, mesh: f64) -> usize {
    // Guard against 1/0.25 style ratios landing a hair above an integer.
    ((len / mesh) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

impl Grid {
    pub fn new(space: &Space, mesh: f64) -> Result<Grid> {
        space.validate()?;
        if !(mesh.is_finite() && mesh > 0.0) {
            return invalid(format!("mesh must be positive, got {mesh}"));
        }
        if mesh > space.diameter() + 1e-12 {
            return invalid(format!(
                "mesh {mesh} exceeds the space diameter {}",
                space.diameter()
            ));
        }
        let (reps, layout, radius) = match space {
            Space::Circle {} => {
                let n = cells_for(1.0, mesh).max(2);
                let reps = (0..n).map(|i| Point::new1(i as f64 / n as f64)).collect();
                (reps, Layout::Circle { n }, 0.5 / n as f64)
            }
            Space::Interval { a, b } => {
                let n = cells_for(b - a, mesh);
                let reps = (0..=n)
                    .map(|i| Point::new1(if i == n { *b } else { a + (b - a) * i as f64 / n as f64 }))
                    .collect();
                (reps, Layout::Interval { a: *a, b: *b, n }, 0.5 * (b - a) / n as f64)
            }
            Space::Torus {} => {
                let n = cells_for(1.0, mesh).max(2);
                let mut reps = Vec::with_capacity(n * n);
                for j in 0..n {
                    for i in 0..n {
                        reps.push(Point::new2(i as f64 / n as f64, j as f64 / n as f64));
                    }
                }
                (reps, Layout::Torus { n }, 0.5 / n as f64)
            }
            Space::Finite { distances } => {
                let n = distances.len();
                let mut chosen: Vec<usize> = Vec::new();
                for i in 0..n {
                    if !chosen.iter().any(|&c| distances[c][i] <= mesh / 2.0) {
                        chosen.push(i);
                    }
                }
                let radius = (0..n)
                    .map(|i| chosen.iter().map(|&c| distances[c][i]).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                let reps = chosen.into_iter().map(|i| Point::new1(i as f64)).collect();
                (reps, Layout::Finite, radius)
            }
        };
        Ok(Grid { space: space.clone(), mesh, reps, layout, radius })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn reps(&self) -> &[Point] {
        &self.reps
    }

    pub fn rep(&self, cell: usize) -> Point {
        self.reps[cell]
    }

    /// Largest distance from a point of the space to its cell representative.
    pub fn cell_radius(&self) -> f64 {
        self.radius
    }

    /// Number of cells per axis for regular circle and torus grids.
    pub fn circle_cells(&self) -> Option<usize> {
        match self.layout {
            Layout::Circle { n } => Some(n),
            _ => None,
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.space == other.space && self.mesh == other.mesh && self.reps.len() == other.reps.len()
    }

    /// Nearest-rep cell of a canonical point, ties to the lower index.
    pub fn cell_of(&self, p: &Point) -> usize {
        match self.layout {
            Layout::Circle { n } => round_circle(p.x() * n as f64, n),
            Layout::Interval { a, b, n } => {
                let t = ((p.x() - a) / (b - a) * n as f64).clamp(0.0, n as f64);
                round_half_down(t).min(n)
            }
            Layout::Torus { n } => {
                round_circle(p.x() * n as f64, n) + n * round_circle(p.y() * n as f64, n)
            }
            Layout::Finite => {
                let mut best = (f64::INFINITY, 0);
                for (i, r) in self.reps.iter().enumerate() {
                    let d = self.space.dist(p, r);
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                best.1
            }
        }
    }

    /// Cells whose representative lies within `r` of `p`, in increasing order.
    pub fn cells_within(&self, p: &Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        match self.layout {
            Layout::Circle { n } => {
                let span = (r * n as f64).ceil() as i64 + 1;
                let c = (p.x() * n as f64).floor() as i64;
                if 2 * span + 1 >= n as i64 {
                    out.extend((0..n).filter(|&i| self.space.dist(p, &self.reps[i]) <= r));
                } else {
                    for k in c - span..=c + span + 1 {
                        let i = k.rem_euclid(n as i64) as usize;
                        if self.space.dist(p, &self.reps[i]) <= r {
                            out.push(i);
                        }
                    }
                    out.sort_unstable();
                    out.dedup();
                }
            }
            Layout::Interval { a, b, n } => {
                let t = (p.x() - a) / (b - a) * n as f64;
                let span = (r / (b - a) * n as f64).ceil() + 1.0;
                let lo = (t - span).floor().max(0.0) as usize;
                let hi = ((t + span).ceil().max(0.0) as usize).min(n);
                out.extend((lo..=hi).filter(|&i| self.space.dist(p, &self.reps[i]) <= r));
            }
            Layout::Torus { n } => {
                let span = (r * n as f64).ceil() as i64 + 1;
                let cx = (p.x() * n as f64).floor() as i64;
                let cy = (p.y() * n as f64).floor() as i64;
                let axis = |c: i64| -> Vec<usize> {
                    if 2 * span + 1 >= n as i64 {
                        (0..n).collect()
                    } else {
                        let mut v: Vec<usize> =
                            (c - span..=c + span + 1).map(|k| k.rem_euclid(n as i64) as usize).collect();
                        v.sort_unstable();
                        v.dedup();
                        v
                    }
                };
                let xs = axis(cx);
                for j in axis(cy) {
                    for &i in &xs {
                        let cell = i + n * j;
                        if self.space.dist(p, &self.reps[cell]) <= r {
                            out.push(cell);
                        }
                    }
                }
                out.sort_unstable();
            }
            Layout::Finite => {
                out.extend((0..self.reps.len()).filter(|&i| self.space.dist(p, &self.reps[i]) <= r));
            }
        }
        out
    }
}

fn round_half_down(t: f64) -> usize {
    let k = t.floor();
    if t - k > 0.5 {
        k as usize + 1
    } else {
        k as usize
    }
}

fn round_circle(t: f64, n: usize) -> usize {
    let k = t.floor();
    let frac = t - k;
    let k = (k as i64).rem_euclid(n as i64) as usize;
    if frac > 0.5 {
        (k + 1) % n
    } else if frac == 0.5 && k + 1 == n {
        // tie between cell n-1 and cell 0
        0
    } else {
        k
    }
}

/// Probe points standing in for the continuum, with the distance from any
/// point of the probed region to its nearest probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub points: Vec<Point>,
    pub slack: f64,
}

impl ProbeSet {
    pub fn from_grid(grid: &Grid) -> Self {
        ProbeSet { points: grid.reps().to_vec(), slack: grid.cell_radius() }
    }

    pub fn from_cells(grid: &Grid, cells: &[usize]) -> Self {
        ProbeSet { points: cells.iter().map(|&c| grid.rep(c)).collect(), slack: grid.cell_radius() }
    }
}

/// Outcome of an epsilon-network check against a probe set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered: bool,
    pub eps: f64,
    /// Largest probe-to-network distance.
    pub worst_distance: f64,
    pub worst_probe: Option<Point>,
    /// Probe slack; the network covers the probed region at
    /// `worst_distance + slack`.
    pub slack: f64,
}

/// Checks that every probe lies within `eps` of some candidate point.
pub fn verify_epsilon_network(
    space: &Space,
    candidates: &[Point],
    probes: &ProbeSet,
    eps: f64,
) -> Result<CoverageReport> {
    if candidates.is_empty() {
        return invalid("candidate network is empty");
    }
    if candidates.iter().chain(&probes.points).any(|p| p.dim() != space.dim()) {
        return invalid("dimension mismatch between space and points");
    }
    let loc = Locator::new(space, candidates);
    let mut worst = (0.0f64, None);
    for p in &probes.points {
        let (_, d) = loc.nearest(p);
        if d > worst.0 || worst.1.is_none() {
            worst = (d, Some(*p));
        }
    }
    Ok(CoverageReport {
        covered: worst.0 <= eps,
        eps,
        worst_distance: worst.0,
        worst_probe: worst.1,
        slack: probes.slack,
    })
}

/// Nearest-neighbour queries against a fixed point set. One-dimensional
/// spaces use a sorted index, everything else a linear scan.
pub struct Locator<'a> {
    space: &'a Space,
    points: &'a [Point],
    sorted: Vec<(f64, usize)>,
}

impl<'a> Locator<'a> {
    pub fn new(space: &'a Space, points: &'a [Point]) -> Self {
        let sorted = match space {
            Space::Circle {} | Space::Interval { .. } => {
                let mut v: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (p.x(), i)).collect();
                v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                v
            }
            _ => Vec::new(),
        };
        Locator { space, points, sorted }
    }

    /// Index and distance of the nearest point; ties to the lower index.
    pub fn nearest(&self, p: &Point) -> (usize, f64) {
        if self.sorted.is_empty() {
            let mut best = (0, f64::INFINITY);
            for (i, q) in self.points.iter().enumerate() {
                let d = self.space.dist(p, q);
                if d < best.1 {
                    best = (i, d);
                }
            }
            return best;
        }
        let n = self.sorted.len();
        let pos = self.sorted.partition_point(|e| e.0 < p.x());
        let mut best = (usize::MAX, f64::INFINITY);
        let mut consider = |k: usize| {
            let (_, i) = self.sorted[k];
            let d = self.space.dist(p, &self.points[i]);
            if d < best.1 || (d == best.1 && i < best.0) {
                best = (i, d);
            }
        };
        // Scan outward over equal coordinates so ties resolve by index.
        let mut lo = pos;
        while lo > 0 {
            lo -= 1;
            consider(lo);
            if lo == 0 || self.sorted[lo - 1].0 != self.sorted[lo].0 {
                break;
            }
        }
        let mut hi = pos;
        while hi < n {
            consider(hi);
            if hi + 1 == n || self.sorted[hi + 1].0 != self.sorted[hi].0 {
                break;
            }
            hi += 1;
        }
        if self.space.is_circle() {
            consider(0);
            consider(n - 1);
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_distance_wraps() {
        let s = Space::circle();
        let d = s.dist(&Point::new1(0.9), &Point::new1(0.1));
        assert!((d - 0.2).abs() < 1e-15);
    }

    #[test]
    fn interval_distance_is_plain() {
        let s = Space::interval(-1.0, 1.0).unwrap();
        assert_eq!(s.dist(&Point::new1(-1.0), &Point::new1(1.0)), 2.0);
    }

    #[test]
    fn torus_uses_max_metric() {
        let s = Space::torus();
        let d = s.dist(&Point::new2(0.95, 0.1), &Point::new2(0.05, 0.4));
        assert!((d - 0.3).abs() < 1e-15);
    }

    #[test]
    fn quarter_circle_grid() {
        let g = build_grid(&Space::circle(), 0.25).unwrap();
        let xs: Vec<f64> = g.reps().iter().map(|p| p.x()).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn interval_grid_counts() {
        let g = build_grid(&Space::interval(0.0, 1.0).unwrap(), 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.rep(10).x(), 1.0);
    }

    #[test]
    fn bad_mesh_rejected() {
        assert!(build_grid(&Space::circle(), -1.0).is_err());
        assert!(build_grid(&Space::circle(), 0.0).is_err());
        assert!(build_grid(&Space::circle(), 0.7).is_err());
    }

    #[test]
    fn ties_go_to_lower_index() {
        let g = build_grid(&Space::circle(), 0.25).unwrap();
        assert_eq!(g.cell_of(&Point::new1(0.125)), 0);
        assert_eq!(g.cell_of(&Point::new1(0.875)), 0);
        assert_eq!(g.cell_of(&Point::new1(0.8)), 3);
    }

    #[test]
    fn finite_space_checks_metric() {
        assert!(Space::finite(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(Space::finite(vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]).is_err());
        let s = Space::finite(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(s.point(&[2.0]).is_err());
        assert_eq!(s.point(&[1.0]).unwrap().x(), 1.0);
    }

    #[test]
    fn point_dimension_checked() {
        let s = Space::circle();
        let a = Point::new1(0.1);
        let b = Point::new2(0.1, 0.2);
        assert!(s.distance(&a, &b).is_err());
        assert!(s.point(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn space_json_round_trip() {
        for s in [Space::circle(), Space::interval(-1.0, 1.0).unwrap(), Space::torus()] {
            let j = serde_json::to_string(&s).unwrap();
            let back: Space = serde_json::from_str(&j).unwrap();
            assert_eq!(s, back);
        }
        let j = serde_json::to_string(&Space::interval(-1.0, 1.0).unwrap()).unwrap();
        assert_eq!(j, r#"{"kind":"interval","params":{"a":-1.0,"b":1.0}}"#);
    }
}

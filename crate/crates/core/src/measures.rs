//! Empirical measures on grid cells: Birkhoff histograms, push-forward,
//! Cesàro averaging, full-support combinations, and the recurrent-fraction
//! and Lyapunov statistics.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::networks::{construct_from_minimal_orbits, MinimalNetworkOptions, NetworkDomain, NetworkOutcome};
use crate::pseudo::Pseudotrajectory;
use crate::recurrence::{cell_seed, RecurrenceReport};
use crate::space::{build_grid, Grid, Locator, Point, Space};
use crate::systems::{Seed, SystemSpec};

/// Tolerance on the total mass.
pub const MASS_TOL: f64 = 1e-12;

/// One step in the construction of a measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum MeasureStep {
    Birkhoff { start: i64, len: usize, d: f64 },
    PointMass { cell: usize },
    Uniform,
    Atomic { points: usize },
    PushForward,
    Cesaro { n: usize },
    Combine { weights: Vec<f64> },
    Coarsen { from_mesh: f64 },
    Manual,
}

/// Normalised weights over the cells of a grid.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    grid: Grid,
    weights: Vec<f64>,
    history: Vec<MeasureStep>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRecord {
    space: Space,
    mesh: f64,
    history: Vec<MeasureStep>,
    weights: Vec<f64>,
}

impl Serialize for EmpiricalMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRecord {
            space: self.grid.space().clone(),
            mesh: self.grid.mesh(),
            history: self.history.clone(),
            weights: self.weights.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EmpiricalMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MeasureRecord::deserialize(d)?;
        let grid = build_grid(&r.space, r.mesh).map_err(serde::de::Error::custom)?;
        EmpiricalMeasure::new(&grid, r.weights, r.history).map_err(serde::de::Error::custom)
    }
}

impl PartialEq for EmpiricalMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.weights == other.weights && self.history == other.history
    }
}

impl EmpiricalMeasure {
    /// Normalises nonnegative weights to total mass one.
    pub fn new(grid: &Grid, weights: Vec<f64>, history: Vec<MeasureStep>) -> Result<Self> {
        if weights.len() != grid.len() {
            return invalid(format!("{} weights for {} cells", weights.len(), grid.len()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return invalid("weights must be finite and nonnegative");
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return invalid("measure has no mass");
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(EmpiricalMeasure { grid: grid.clone(), weights, history })
    }

    pub fn point_mass(grid: &Grid, cell: usize) -> Result<Self> {
        if cell >= grid.len() {
            return invalid(format!("cell {cell} out of range"));
        }
        let mut w = vec![0.0; grid.len()];
        w[cell] = 1.0;
        Self::new(grid, w, vec![MeasureStep::PointMass { cell }])
    }

    pub fn uniform(grid: &Grid) -> Self {
        Self::new(grid, vec![1.0; grid.len()], vec![MeasureStep::Uniform]).unwrap()
    }

    /// Equal mass on the cells of the given points (with multiplicity).
    pub fn atomic(grid: &Grid, points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return invalid("no points");
        }
        let mut w = vec![0.0; grid.len()];
        for p in points {
            w[grid.cell_of(&grid.space().canonical(*p))] += 1.0;
        }
        Self::new(grid, w, vec![MeasureStep::Atomic { points: points.len() }])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn history(&self) -> &[MeasureStep] {
        &self.history
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Cells of positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&c| self.weights[c] > 0.0).collect()
    }

    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(c, w)| w * f(&self.grid.rep(c))).sum()
    }

    fn derived(&self, weights: Vec<f64>, step: MeasureStep) -> Result<Self> {
        let mut history = self.history.clone();
        history.push(step);
        Self::new(&self.grid, weights, history)
    }

    /// Moves every cell's mass to the cell containing its image under a cell
    /// map.
    pub fn transport(&self, map: &CellMap) -> Result<Self> {
        map.check(&self.grid)?;
        self.derived(map.apply(&self.weights), MeasureStep::PushForward)
    }

    /// Re-bins onto a coarser grid of the same space.
    pub fn coarsen(&self, coarse: &Grid) -> Result<Self> {
        if coarse.space() != self.grid.space() {
            return invalid("grids live on different spaces");
        }
        let mut w = vec![0.0; coarse.len()];
        for (c, &m) in self.weights.iter().enumerate() {
            if m > 0.0 {
                w[coarse.cell_of(&self.grid.rep(c))] += m;
            }
        }
        let mut history = self.history.clone();
        history.push(MeasureStep::Coarsen { from_mesh: self.grid.mesh() });
        Self::new(coarse, w, history)
    }

    /// Rows `cell,x[,y],weight`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let coords = if self.grid.space().dim() == 2 { vec!["x", "y"] } else { vec!["x"] };
        let mut header = vec!["cell"];
        header.extend(coords);
        header.push("weight");
        out.write_record(&header)?;
        for (c, w) in self.weights.iter().enumerate() {
            let mut row = vec![c.to_string()];
            row.extend(self.grid.rep(c).coords().iter().map(|v| v.to_string()));
            row.push(w.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// The cell of T(representative) for every cell of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMap {
    mesh: f64,
    cells: usize,
    targets: Vec<u32>,
}

impl CellMap {
    pub fn new(system: &SystemSpec, grid: &Grid) -> Result<Self> {
        if grid.space() != system.space() {
            return invalid("grid and system live on different spaces");
        }
        let targets = match grid.circle_cells() {
            Some(n) if system.rational_rule(n as u64).is_some() => {
                let rule = system.rational_rule(n as u64).unwrap();
                (0..n as u64).map(|c| rule.step(c, n as u64) as u32).collect()
            }
            _ => grid.reps().iter().map(|p| grid.cell_of(&system.map(p)) as u32).collect(),
        };
        Ok(CellMap { mesh: grid.mesh(), cells: grid.len(), targets })
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if grid.len() != self.cells || grid.mesh() != self.mesh {
            return invalid("cell map built for a different grid");
        }
        Ok(())
    }

    pub fn target(&self, cell: usize) -> usize {
        self.targets[cell] as usize
    }

    fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        for (c, &m) in w.iter().enumerate() {
            out[self.targets[c] as usize] += m;
        }
        out
    }
}

/// Histogram of the pseudotrajectory indices start..start+n over the grid.
pub fn birkhoff_measure(pseudo: &Pseudotrajectory, grid: &Grid, start: i64, n: usize) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return invalid("empty averaging window");
    }
    if grid.space() != pseudo.system().space() {
        return invalid("grid and pseudotrajectory live on different spaces");
    }
    if start < pseudo.k_min() || start + n as i64 - 1 > pseudo.k_max() {
        return invalid("averaging window outside the pseudotrajectory");
    }
    let off = (start - pseudo.k_min()) as usize;
    let mut w = vec![0.0; grid.len()];
    for p in &pseudo.points()[off..off + n] {
        w[grid.cell_of(p)] += 1.0;
    }
    EmpiricalMeasure::new(grid, w, vec![MeasureStep::Birkhoff { start, len: n, d: pseudo.d() }])
}

pub fn push_forward(system: &SystemSpec, measure: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
    measure.transport(&CellMap::new(system, measure.grid())?)
}

/// Total variation distance, half the l1 distance of the weights.
pub fn tv_distance(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return invalid("measures live on different grids");
    }
    Ok(0.5 * a.weights.iter().zip(&b.weights).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Total variation distance between a measure and its push-forward.
pub fn invariance_defect(system: &SystemSpec, measure: &EmpiricalMeasure) -> Result<f64> {
    invariance_defect_with(&CellMap::new(system, measure.grid())?, measure)
}

pub fn invariance_defect_with(map: &CellMap, measure: &EmpiricalMeasure) -> Result<f64> {
    map.check(measure.grid())?;
    let pushed = map.apply(&measure.weights);
    Ok(0.5 * measure.weights.iter().zip(&pushed).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// (1/n) sum over i < n of (T^i)_# mu, where (T^i)_# moves the mass of a
/// cell to the cell of T^i(representative). Orbits of representatives are
/// followed exactly rather than composing the one-step cell map, whose
/// rounding stalls mass near attracting points.
pub fn cesaro_invariantize(system: &SystemSpec, measure: &EmpiricalMeasure, n: usize) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let grid = measure.grid();
    if grid.space() != system.space() {
        return invalid("grid and system live on different spaces");
    }
    let support = measure.support();
    let mut acc = vec![0.0; grid.len()];
    for chunk in support.chunks(256) {
        let seeds: Vec<Seed> = chunk.iter().map(|&c| cell_seed(grid, c)).collect();
        let orbits = system.orbits_x(&seeds, 0, n as i64 - 1)?;
        for (&c, orbit) in chunk.iter().zip(&orbits) {
            let m = measure.weights[c] / n as f64;
            for &x in orbit {
                acc[grid.cell_of(&Point::new1(x))] += m;
            }
        }
    }
    measure.derived(acc, MeasureStep::Cesaro { n })
}

/// sum_m 2^-m mu_m over the list, renormalised.
pub fn combine_full_support(measures: &[EmpiricalMeasure]) -> Result<EmpiricalMeasure> {
    let first = match measures.first() {
        Some(m) => m,
        None => return invalid("no measures to combine"),
    };
    if measures.iter().any(|m| !m.grid.same_as(&first.grid)) {
        return invalid("measures live on different grids");
    }
    let coeffs: Vec<f64> = (1..=measures.len()).map(|m| 0.5f64.powi(m as i32)).collect();
    let total: f64 = coeffs.iter().sum();
    let coeffs: Vec<f64> = coeffs.iter().map(|c| c / total).collect();
    let mut w = vec![0.0; first.grid.len()];
    for (m, c) in measures.iter().zip(&coeffs) {
        for (a, x) in w.iter_mut().zip(&m.weights) {
            *a += c * x;
        }
    }
    EmpiricalMeasure::new(&first.grid, w, vec![MeasureStep::Combine { weights: coeffs }])
}

/// One level of [`full_support_measure`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineLevel {
    pub eps: f64,
    pub network_size: Option<usize>,
    /// Why the level contributed nothing, when it did not.
    pub skipped: Option<String>,
    pub support: usize,
    pub defect: Option<f64>,
}

/// Combined measure of the Cesàro-averaged atomic measures on
/// almost-invariant networks at scales eps_1 > eps_2 > ...
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullSupportMeasure {
    pub levels: Vec<PipelineLevel>,
    pub measure: EmpiricalMeasure,
    pub support_fraction: f64,
    pub defect: f64,
    pub tv_to_uniform: f64,
}

/// Runs the network-to-measure pipeline on `grid`. Levels whose network
/// cannot be built or verified are recorded and skipped; None when no
/// level succeeds.
pub fn full_support_measure(
    system: &SystemSpec,
    report: &RecurrenceReport,
    grid: &Grid,
    eps: &[f64],
    horizon: u64,
    cesaro_n: usize,
) -> Result<Option<FullSupportMeasure>> {
    let opts = MinimalNetworkOptions { horizon, two_sided: false, domain: NetworkDomain::Space };
    let map = CellMap::new(system, grid)?;
    let mut levels = Vec::with_capacity(eps.len());
    let mut parts = Vec::new();
    for &e in eps {
        let outcome = construct_from_minimal_orbits(system, e, report, &opts)?;
        let net = match outcome {
            NetworkOutcome::Verified(n) => n,
            NetworkOutcome::Failed(f) => {
                let reason = format!("coverage fails at iterate {} (distance {})", f.n, f.distance);
                levels.push(PipelineLevel { eps: e, network_size: None, skipped: Some(reason), support: 0, defect: None });
                continue;
            }
            NetworkOutcome::Impossible(i) => {
                levels.push(PipelineLevel { eps: e, network_size: None, skipped: Some(i.reason), support: 0, defect: None });
                continue;
            }
        };
        let mu = cesaro_invariantize(system, &EmpiricalMeasure::atomic(grid, &net.points)?, cesaro_n)?;
        levels.push(PipelineLevel {
            eps: e,
            network_size: Some(net.len()),
            skipped: None,
            support: mu.support().len(),
            defect: Some(invariance_defect_with(&map, &mu)?),
        });
        parts.push(mu);
    }
    if parts.is_empty() {
        return Ok(None);
    }
    let measure = combine_full_support(&parts)?;
    let defect = invariance_defect_with(&map, &measure)?;
    let tv_to_uniform = tv_distance(&measure, &EmpiricalMeasure::uniform(grid))?;
    let support_fraction = measure.support().len() as f64 / grid.len() as f64;
    Ok(Some(FullSupportMeasure { levels, measure, support_fraction, defect, tv_to_uniform }))
}

/// Smallest fraction of indices near the recurrent set over the windows
/// [0, N) with N at least a tenth of the length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrentFraction {
    pub eps: f64,
    pub value: f64,
    pub worst_window: usize,
    pub min_window: usize,
    /// Fraction over the whole pseudotrajectory.
    pub overall: f64,
}

/// Fraction of indices with x_k within eps of one of `recurrent_points`,
/// minimised over prefix windows of length at least len/10.
pub fn recurrent_fraction(
    system: &SystemSpec,
    pseudo: &Pseudotrajectory,
    eps: f64,
    recurrent_points: &[Point],
) -> Result<RecurrentFraction> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    let len = pseudo.len();
    let min_window = len.div_ceil(10).max(1);
    let loc = Locator::new(system.space(), recurrent_points);
    let mut count = 0usize;
    let mut best = (f64::INFINITY, len);
    for (k, x) in pseudo.points().iter().enumerate() {
        if !recurrent_points.is_empty() && loc.nearest(x).1 <= eps {
            count += 1;
        }
        let n = k + 1;
        if n >= min_window {
            let f = count as f64 / n as f64;
            if f < best.0 {
                best = (f, n);
            }
        }
    }
    Ok(RecurrentFraction { eps, value: best.0, worst_window: best.1, min_window, overall: count as f64 / len as f64 })
}

/// (1/n) sum_{k<n} log|T'(T^k x)| for one-dimensional systems.
pub fn lyapunov_estimate(system: &SystemSpec, x: &Point, n: usize) -> Result<f64> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if system.space().dim() != 1 {
        return Err(Error::Unsupported("Lyapunov estimate needs a one-dimensional system".into()));
    }
    let mut y = system.space().point(x.coords())?;
    let mut sum = 0.0;
    for k in 0..n {
        let dv = system
            .derivative(&y)
            .ok_or_else(|| Error::Unsupported(format!("{} has no derivative", system.label())))?;
        if dv == 0.0 || !dv.is_finite() {
            return Err(Error::SingularDerivative { index: k });
        }
        sum += dv.abs().ln();
        y = system.map(&y);
    }
    Ok(sum / n as f64)
}

/// Test function for the integral form of invariance: a trigonometric
/// polynomial on the circle or a Chebyshev series on an interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// c0 + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x).
    Trig { c0: f64, cos: Vec<f64>, sin: Vec<f64> },
    /// sum_k c_k T_k(u), u the affine image of [a, b] on [-1, 1].
    Chebyshev { a: f64, b: f64, coeffs: Vec<f64> },
}

impl TestFunction {
    pub fn eval(&self, p: &Point) -> f64 {
        let x = p.x();
        match self {
            TestFunction::Trig { c0, cos, sin } => {
                let mut v = *c0;
                for (k, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let t = 2.0 * PI * (k + 1) as f64 * x;
                    v += a * t.cos() + b * t.sin();
                }
                v
            }
            TestFunction::Chebyshev { a, b, coeffs } => {
                let u = (2.0 * x - a - b) / (b - a);
                let (mut t0, mut t1) = (1.0, u);
                let mut v = 0.0;
                for (k, c) in coeffs.iter().enumerate() {
                    let tk = match k {
                        0 => t0,
                        1 => t1,
                        _ => {
                            let t2 = 2.0 * u * t1 - t0;
                            t0 = t1;
                            t1 = t2;
                            t2
                        }
                    };
                    v += c * tk;
                }
                v
            }
        }
    }

    /// Upper bound on |f| from the coefficients.
    pub fn sup_bound(&self) -> f64 {
        match self {
            TestFunction::Trig { c0, cos, sin } => c0.abs() + cos.iter().chain(sin).map(|c| c.abs()).sum::<f64>(),
            TestFunction::Chebyshev { coeffs, .. } => coeffs.iter().map(|c| c.abs()).sum(),
        }
    }

    /// Seeded family of test functions with coefficients uniform in [-1, 1].
    pub fn random_family(space: &Space, count: usize, degree: usize, seed: u64) -> Result<Vec<TestFunction>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coef = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect() };
        match space {
            Space::Circle {} => Ok((0..count)
                .map(|_| {
                    let c0 = coef(1)[0];
                    TestFunction::Trig { c0, cos: coef(degree), sin: coef(degree) }
                })
                .collect()),
            Space::Interval { a, b } => {
                Ok((0..count).map(|_| TestFunction::Chebyshev { a: *a, b: *b, coeffs: coef(degree + 1) }).collect())
            }
            _ => Err(Error::Unsupported("test functions are defined on the circle and intervals".into())),
        }
    }
}

/// |∫ f d(T_# mu) - ∫ f d mu| for a test function.
pub fn test_function_defect(map: &CellMap, measure: &EmpiricalMeasure, f: &TestFunction) -> Result<f64> {
    let pushed = measure.transport(map)?;
    Ok((pushed.integrate(|p| f.eval(p)) - measure.integrate(|p| f.eval(p))).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudo::{noisy_orbit, Provenance};
    use crate::systems::parse_selector;

    fn circle_grid(n: usize) -> Grid {
        build_grid(&Space::circle(), 1.0 / n as f64).unwrap()
    }

    #[test]
    fn rotation_orbit_equidistributes() {
        let s = parse_selector("rotation").unwrap();
        let pts = s.orbit_segment(&Point::new1(0.0), 99_999).unwrap();
        let p = Pseudotrajectory::new(&s, 0, pts, 0.0, Provenance::Exact).unwrap();
        let g = circle_grid(100);
        let m = birkhoff_measure(&p, &g, 0, 100_000).unwrap();
        let dev = m.weights().iter().map(|w| (w - 0.01).abs()).fold(0.0, f64::max);
        assert!(dev < 0.002, "{dev}");
        assert!(invariance_defect(&s, &m).unwrap() <= 0.02);
    }

    #[test]
    fn point_masses() {
        let s = parse_selector("north_south").unwrap();
        let g = circle_grid(100);
        let fixed = EmpiricalMeasure::point_mass(&g, 50).unwrap();
        assert_eq!(invariance_defect(&s, &fixed).unwrap(), 0.0);
        let moving = EmpiricalMeasure::point_mass(&g, 25).unwrap();
        assert_eq!(invariance_defect(&s, &moving).unwrap(), 1.0);
        // The orbit from 0.25 enters the attractor cell after 25 iterates.
        let c = cesaro_invariantize(&s, &moving, 1000).unwrap();
        assert!((c.weights()[50] - 0.975).abs() < 1e-12, "{}", c.weights()[50]);
        let c = cesaro_invariantize(&s, &moving, 10_000).unwrap();
        assert!(c.weights()[50] >= 0.99);
    }

    #[test]
    fn quarter_rotation_cycles() {
        let s = parse_selector("rotation:alpha=0.25").unwrap();
        let g = circle_grid(4);
        let u = EmpiricalMeasure::uniform(&g);
        assert_eq!(push_forward(&s, &u).unwrap().weights(), u.weights());
        let c = cesaro_invariantize(&s, &EmpiricalMeasure::point_mass(&g, 0).unwrap(), 4).unwrap();
        assert_eq!(c.weights(), &[0.25; 4]);
    }

    #[test]
    fn combine_weights() {
        let g = circle_grid(10);
        let a = EmpiricalMeasure::point_mass(&g, 0).unwrap();
        let b = EmpiricalMeasure::point_mass(&g, 5).unwrap();
        let c = combine_full_support(&[a.clone(), b]).unwrap();
        assert!((c.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.support(), vec![0, 5]);
        assert_eq!(combine_full_support(&[a.clone()]).unwrap().weights(), a.weights());
        assert!(combine_full_support(&[a, EmpiricalMeasure::uniform(&circle_grid(20))]).is_err());
    }

    #[test]
    fn lyapunov_values() {
        let d = parse_selector("doubling").unwrap();
        assert!((lyapunov_estimate(&d, &Point::new1(0.1), 50).unwrap() - 2f64.ln()).abs() < 1e-15);
        let r = parse_selector("rotation").unwrap();
        assert_eq!(lyapunov_estimate(&r, &Point::new1(0.1), 50).unwrap(), 0.0);
        let n = parse_selector("north_south").unwrap();
        let l = lyapunov_estimate(&n, &Point::new1(0.5), 10).unwrap();
        assert!((l - (1.0 - 0.05 * PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn recurrent_fraction_prefix() {
        let s = parse_selector("quartic_interval").unwrap();
        let p = noisy_orbit(&s, &Point::new1(0.5), 1e-3, 2000, 4).unwrap();
        let r = recurrent_fraction(&s, &p, 0.1, &[Point::new1(1.0)]).unwrap();
        assert!(r.value >= 0.9, "{r:?}");
    }

    #[test]
    fn chebyshev_values() {
        let f = TestFunction::Chebyshev { a: -1.0, b: 1.0, coeffs: vec![0.0, 0.0, 0.0, 1.0] };
        let x: f64 = 0.3;
        assert!((f.eval(&Point::new1(x)) - (4.0 * x.powi(3) - 3.0 * x)).abs() < 1e-15);
    }
}

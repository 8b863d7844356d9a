//! Pseudotrajectories: finite sequences with bounded one-step errors, their
//! generators and their CSV/JSON serialisation.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::recurrence::{build_transition_graph, TransitionGraph};
use crate::space::{Grid, Point, Space};
use crate::systems::SystemSpec;

/// Absolute rounding allowance when comparing step errors against d.
pub const STEP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// How a pseudotrajectory was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Noisy { seed: u64 },
    Drift { pushes: Vec<usize>, turns: Option<u32> },
    Arc { y: f64, z: f64, kappa: f64, steps: usize },
    PeriodicChain { cells: Vec<usize>, period: usize },
    External { source: String },
}

/// A finite d-pseudotrajectory x_{k_min}, ..., x_{k_max} of a system.
#[derive(Clone, Debug, PartialEq)]
pub struct Pseudotrajectory {
    system: SystemSpec,
    k_min: i64,
    points: Vec<Point>,
    d: f64,
    provenance: Provenance,
}

/// JSON sidecar accompanying the CSV point list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoMeta {
    pub system: SystemSpec,
    pub k_min: i64,
    pub len: usize,
    pub d: f64,
    pub sidedness: Sidedness,
    pub provenance: Provenance,
}

/// Largest one-step error rho(x_{k+1}, T(x_k)) of a sequence.
pub fn max_step_error(system: &SystemSpec, points: &[Point]) -> f64 {
    step_errors(system, points).into_iter().fold(0.0, f64::max)
}

fn step_errors(system: &SystemSpec, points: &[Point]) -> Vec<f64> {
    let space = system.space();
    let mut xs: Vec<f64> = points.iter().map(|p| space.canonical(*p).x()).collect();
    let next: Vec<Point> = xs[1.min(xs.len())..].iter().map(|&x| Point::new1(x)).collect();
    xs.pop();
    system.forward_batch(&mut xs);
    xs.iter().zip(&next).map(|(&t, n)| space.dist(&Point::new1(t), n)).collect()
}

/// True iff every step error is at most d (plus rounding allowance).
pub fn verify_pseudotrajectory(system: &SystemSpec, points: &[Point], d: f64) -> Result<bool> {
    if points.is_empty() {
        return invalid("pseudotrajectory is empty");
    }
    if !(d >= 0.0) {
        return invalid(format!("d must be nonnegative, got {d}"));
    }
    if points.iter().any(|p| p.dim() != system.space().dim()) {
        return invalid("point dimension does not match the system's space");
    }
    Ok(max_step_error(system, points) <= d + STEP_TOL)
}

impl Pseudotrajectory {
    /// Builds and verifies a pseudotrajectory. Two-sided ranges (k_min < 0)
    /// require an invertible system.
    pub fn new(system: &SystemSpec, k_min: i64, points: Vec<Point>, d: f64, provenance: Provenance) -> Result<Self> {
        if points.len() < 2 {
            return invalid("a pseudotrajectory needs at least two points");
        }
        if k_min < 0 && !system.is_invertible() {
            return Err(Error::Unsupported(format!(
                "two-sided pseudotrajectories need an invertible system; {} is not",
                system.label()
            )));
        }
        let space = system.space();
        let points: Vec<Point> = points.into_iter().map(|p| space.canonical(p)).collect();
        if !verify_pseudotrajectory(system, &points, d)? {
            return invalid(format!(
                "step error {} exceeds d = {d}",
                max_step_error(system, &points)
            ));
        }
        Ok(Pseudotrajectory { system: system.clone(), k_min, points, d, provenance })
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.points.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// The point with index k.
    pub fn at(&self, k: i64) -> Point {
        self.points[(k - self.k_min) as usize]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn sidedness(&self) -> Sidedness {
        if self.k_min < 0 {
            Sidedness::TwoSided
        } else {
            Sidedness::OneSided
        }
    }

    pub fn max_step_error(&self) -> f64 {
        max_step_error(&self.system, &self.points)
    }

    pub fn meta(&self) -> PseudoMeta {
        PseudoMeta {
            system: self.system.clone(),
            k_min: self.k_min,
            len: self.points.len(),
            d: self.d,
            sidedness: self.sidedness(),
            provenance: self.provenance.clone(),
        }
    }

    /// A periodic chain x_0..x_p (with x_p = x_0) repeated to cover
    /// `len` indices starting at 0.
    pub fn periodic_extension(&self, len: usize) -> Result<Pseudotrajectory> {
        let period = match self.provenance {
            Provenance::PeriodicChain { period, .. } => period,
            _ => return invalid("only periodic chains can be extended periodically"),
        };
        let pts: Vec<Point> = (0..len.max(2)).map(|k| self.points[k % period]).collect();
        Pseudotrajectory::new(&self.system, 0, pts, self.d, self.provenance.clone())
    }

    /// Writes `k,x` rows with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let dim = self.system.space().dim();
        let mut header = vec!["k".to_string()];
        header.extend((0..dim).map(|i| format!("x{i}")));
        wtr.write_record(&header)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row = vec![(self.k_min + i as i64).to_string()];
            row.extend(p.coords().iter().map(|v| format!("{v:?}")));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads rows written by [`Pseudotrajectory::write_csv`] and re-verifies
    /// them against the sidecar.
    pub fn read_csv<R: Read>(r: R, meta: &PseudoMeta) -> Result<Pseudotrajectory> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut points = Vec::new();
        let mut expect = meta.k_min;
        for rec in rdr.records() {
            let rec = rec?;
            let k: i64 = rec
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::InvalidInput("bad index column".into()))?;
            if k != expect {
                return invalid(format!("expected index {expect}, found {k}"));
            }
            expect += 1;
            let coords: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("bad coordinate: {e}")))?;
            points.push(meta.system.space().point(&coords)?);
        }
        if points.len() != meta.len {
            return invalid(format!("sidecar lists {} points, file has {}", meta.len, points.len()));
        }
        Pseudotrajectory::new(&meta.system, meta.k_min, points, meta.d, meta.provenance.clone())
    }
}

/// Seeded noisy orbit: x_{k+1} = T(x_k) + u_k with u_k uniform on the
/// d-ball, projected back into the space. Returns `len` points.
pub fn noisy_orbit(system: &SystemSpec, x0: &Point, d: f64, len: usize, seed: u64) -> Result<Pseudotrajectory> {
    if !(d >= 0.0 && d.is_finite()) {
        return invalid(format!("d must be nonnegative, got {d}"));
    }
    if len < 2 {
        return invalid("length must be at least 2");
    }
    let space = system.space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = space.point(x0.coords())?.x();
    let mut pts = Vec::with_capacity(len);
    pts.push(Point::new1(x));
    for _ in 1..len {
        let u = if d > 0.0 { rng.gen_range(-d..=d) } else { 0.0 };
        x = space.canonical(Point::new1(system.step_x(x) + u)).x();
        pts.push(Point::new1(x));
    }
    Pseudotrajectory::new(system, 0, pts, d, Provenance::Noisy { seed })
}

/// Stopping rule for [`drift_pseudo`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriftStop {
    /// Stop once the lift has advanced by this many turns (circle only).
    Turns(u32),
    /// Stop after this many points.
    Steps(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftOptions {
    pub max_len: usize,
    /// Extra exact steps spent at the n-th stagnation stretch before pushing
    /// (cycled; empty means none).
    pub dwell: Vec<usize>,
}

impl Default for DriftOptions {
    fn default() -> Self {
        DriftOptions { max_len: 1_000_000, dwell: Vec::new() }
    }
}

/// Follows T exactly while it moves forward by more than d/2 and otherwise
/// pushes d/2 past T(x), so the sequence crosses stagnation points of a
/// one-dimensional system.
pub fn drift_pseudo(
    system: &SystemSpec,
    x0: &Point,
    d: f64,
    stop: DriftStop,
    opts: &DriftOptions,
) -> Result<Pseudotrajectory> {
    if !(d > 0.0 && d.is_finite()) {
        return invalid(format!("d must be positive, got {d}"));
    }
    let space = system.space();
    let circle = space.is_circle();
    if matches!(stop, DriftStop::Turns(_)) && !circle {
        return invalid("winding needs a circle system");
    }
    let start = space.point(x0.coords())?;
    if stop == DriftStop::Turns(0) {
        let pts = vec![start, system.map(&start)];
        return Pseudotrajectory::new(system, 0, pts, d, Provenance::Drift { pushes: Vec::new(), turns: Some(0) });
    }
    let lift0 = start.x();
    let mut lift = lift0;
    let mut pts = vec![start];
    let mut pushes = Vec::new();
    let mut stagnating = false;
    let mut stretch = 0usize;
    let mut dwell_left = 0usize;
    loop {
        if let DriftStop::Steps(n) = stop {
            if pts.len() >= n.max(2) {
                break;
            }
        }
        if pts.len() >= opts.max_len {
            return Err(Error::BudgetExceeded(format!(
                "drift did not finish within {} points (d = {d})",
                opts.max_len
            )));
        }
        let x = *pts.last().unwrap();
        let tx = system.map(&x);
        let delta = space.displacement(&x, &tx);
        let mut next = lift + delta;
        if delta <= 0.5 * d {
            if !stagnating {
                stagnating = true;
                dwell_left = if opts.dwell.is_empty() { 0 } else { opts.dwell[stretch % opts.dwell.len()] };
                stretch += 1;
            }
            if dwell_left > 0 {
                dwell_left -= 1;
            } else {
                next += 0.5 * d;
                pushes.push(pts.len());
            }
        } else {
            stagnating = false;
        }
        if let DriftStop::Turns(t) = stop {
            let target = lift0 + t as f64;
            if next >= target {
                let land = target.max(lift + delta - d);
                pts.push(space.canonical(Point::new1(land)));
                break;
            }
        }
        lift = next;
        let p = space.canonical(Point::new1(next));
        if !circle {
            lift = p.x();
        }
        pts.push(p);
    }
    let turns = match stop {
        DriftStop::Turns(t) => Some(t),
        DriftStop::Steps(_) => None,
    };
    Pseudotrajectory::new(system, 0, pts, d, Provenance::Drift { pushes, turns })
}

/// Winding pseudo-orbit of a circle flow: total lift displacement equals
/// `turns`. It starts at the fixed point 0 so the last turn ends in the
/// slow zone, where the landing step can hit the target lift exactly.
pub fn winding_pseudo(system: &SystemSpec, d: f64, turns: u32) -> Result<Pseudotrajectory> {
    drift_pseudo(system, &Point::new1(0.0), d, DriftStop::Turns(turns), &DriftOptions::default())
}

/// Lift displacement accumulated along a one-dimensional sequence.
pub fn lift_displacement(space: &Space, points: &[Point]) -> f64 {
    points.windows(2).map(|w| space.displacement(&w[0], &w[1])).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArcOptions {
    /// Iterate range |n| <= horizon used to probe the equicontinuity modulus.
    pub horizon: usize,
    /// Exact-orbit indices kept on each side of the transition.
    pub tail: usize,
    pub probe_seed: u64,
}

impl Default for ArcOptions {
    fn default() -> Self {
        ArcOptions { horizon: 10_000, tail: 16, probe_seed: 0 }
    }
}

/// Two-sided pseudotrajectory following the orbit of y in the past and
/// the orbit of z in the future: p_k = T^k(x_k) along a fine path
/// y = x_0, ..., x_N = z.
pub fn arc_pseudo(system: &SystemSpec, y: &Point, z: &Point, delta: f64, opts: &ArcOptions) -> Result<Pseudotrajectory> {
    if !system.is_invertible() {
        return Err(Error::Unsupported(format!("{} is not invertible", system.label())));
    }
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let space = system.space();
    let y = space.point(y.coords())?;
    let z = space.point(z.coords())?;
    let kappa = probe_modulus(system, delta, opts)?;
    let gap = space.displacement(&y, &z);
    let n = (gap.abs() / (0.999 * kappa)).ceil() as usize;
    let path: Vec<Point> = (0..=n)
        .map(|k| {
            let t = if n == 0 { 0.0 } else { k as f64 / n as f64 };
            space.canonical(Point::new1(y.x() + t * gap))
        })
        .collect();
    let tail = opts.tail.max(1) as i64;
    let k_min = -tail;
    let k_max = n as i64 + tail;
    let mut pts = Vec::with_capacity((k_max - k_min + 1) as usize);
    for k in k_min..=k_max {
        let base = if k <= 0 { y } else if k >= n as i64 { z } else { path[k as usize] };
        pts.push(system.apply_n(&base, k)?);
    }
    let provenance = Provenance::Arc { y: y.x(), z: z.x(), kappa, steps: n };
    Pseudotrajectory::new(system, k_min, pts, delta, provenance)
}

/// Largest tested kappa (halving from delta) such that pairs closer than
/// kappa stay delta-close for all |n| <= horizon on seeded sample pairs.
fn probe_modulus(system: &SystemSpec, delta: f64, opts: &ArcOptions) -> Result<f64> {
    let space = system.space();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.probe_seed);
    let mut kappa = delta;
    for _ in 0..50 {
        let pairs: Vec<(f64, f64)> = (0..16)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..1.0);
                (a, a + 0.999 * kappa)
            })
            .collect();
        let mut fwd: Vec<f64> = pairs.iter().flat_map(|p| [p.0, p.1]).map(|v| space.canonical(Point::new1(v)).x()).collect();
        let mut bwd = fwd.clone();
        let mut ok = true;
        'outer: for _ in 0..opts.horizon {
            system.forward_batch(&mut fwd);
            system.backward_batch(&mut bwd)?;
            for w in fwd.chunks(2).chain(bwd.chunks(2)) {
                if space.dist(&Point::new1(w[0]), &Point::new1(w[1])) >= delta {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            return Ok(kappa);
        }
        kappa *= 0.5;
    }
    Err(Error::Unsupported(format!(
        "no equicontinuity modulus found for {} at delta = {delta}",
        system.label()
    )))
}

/// A periodic chain closed at x: x, r_1, ..., r_{p-1}, x, where the r_i are
/// representatives along the shortest graph cycle through x's cell. The
/// graph tolerance is reduced so that every step, including the two steps
/// touching x, stays within d. Returns None when no cycle of length at most
/// `max_len` exists.
pub fn periodic_chain(
    system: &SystemSpec,
    x: &Point,
    d: f64,
    grid: &Grid,
    max_len: usize,
) -> Result<Option<Pseudotrajectory>> {
    if !(d > grid.mesh()) {
        return invalid(format!("d = {d} must exceed the grid mesh {}", grid.mesh()));
    }
    let space = system.space();
    let x = space.point(x.coords())?;
    let c = grid.cell_of(&x);
    let rep = grid.rep(c);
    let e0 = space.dist(&system.map(&x), &system.map(&rep));
    let dg = (d - 0.5 * grid.mesh() - e0 - space.dist(&x, &rep)).max(0.0);
    let graph = build_transition_graph(system, grid, dg, usize::MAX)?;
    periodic_chain_in_graph(system, &graph, &x, max_len, Some(d))
}

/// Periodic chain through x using an existing graph. The step bound is `d`
/// when given, otherwise the largest realised step error.
pub fn periodic_chain_in_graph(
    system: &SystemSpec,
    graph: &TransitionGraph,
    x: &Point,
    max_len: usize,
    d: Option<f64>,
) -> Result<Option<Pseudotrajectory>> {
    let grid = graph.grid();
    let c = grid.cell_of(x);
    let cycle = match graph.shortest_cycle(c) {
        Some(cy) if cy.len() <= max_len => cy,
        _ => return Ok(None),
    };
    let mut pts = vec![*x];
    pts.extend(cycle[1..].iter().map(|&k| grid.rep(k)));
    pts.push(*x);
    let bound = match d {
        Some(d) => d,
        None => max_step_error(system, &pts),
    };
    let period = cycle.len();
    Pseudotrajectory::new(system, 0, pts, bound, Provenance::PeriodicChain { cells: cycle, period }).map(Some)
}

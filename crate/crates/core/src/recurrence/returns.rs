use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::space::{build_grid, Grid, Point};
use crate::systems::{Seed, SystemSpec};

/// Fraction of the horizon used as the syndetic gap bound and as the
/// refutation threshold for minimality.
pub const DEFAULT_GAP_FRACTION: f64 = 0.1;

pub(crate) fn gap_bound(horizon: u64, fraction: f64) -> u64 {
    ((horizon as f64 * fraction).floor() as u64).max(1)
}

/// Visit times of an orbit to a closed ball over [0, horizon].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnTimeSet {
    pub center: Point,
    pub radius: f64,
    pub horizon: u64,
    pub visits: Vec<u64>,
    /// Largest distance between consecutive visits, counting the virtual
    /// visits at -1 and horizon + 1.
    pub max_gap: u64,
    /// Every window [m, m + n] inside the horizon meets the visit set for
    /// n = max_gap - 1.
    pub syndetic_constant: u64,
    pub gap_bound: u64,
    pub syndetic: bool,
}

/// Largest gap of a sorted visit list over [0, horizon] with sentinels.
pub fn max_gap_with_sentinels(visits: &[u64], horizon: u64) -> u64 {
    let mut prev: i64 = -1;
    let mut best = 0i64;
    for &v in visits {
        best = best.max(v as i64 - prev);
        prev = v as i64;
    }
    best.max(horizon as i64 + 1 - prev) as u64
}

/// Return times of x to the closed ball B(center, radius), with the
/// syndetic verdict at gap bound horizon/10.
pub fn return_times(system: &SystemSpec, x: &Point, center: &Point, radius: f64, horizon: u64) -> Result<ReturnTimeSet> {
    return_times_seeded(system, &Seed::point(*x), center, radius, horizon, DEFAULT_GAP_FRACTION)
}

pub fn return_times_seeded(
    system: &SystemSpec,
    seed: &Seed,
    center: &Point,
    radius: f64,
    horizon: u64,
    gap_fraction: f64,
) -> Result<ReturnTimeSet> {
    if !(radius > 0.0) {
        return invalid(format!("radius must be positive, got {radius}"));
    }
    let space = system.space();
    let center = space.point(center.coords())?;
    let orbit = system.orbit(seed, 0, horizon as i64)?;
    let visits: Vec<u64> = orbit
        .iter()
        .enumerate()
        .filter(|(_, p)| space.dist(p, &center) <= radius)
        .map(|(t, _)| t as u64)
        .collect();
    let max_gap = max_gap_with_sentinels(&visits, horizon);
    let bound = gap_bound(horizon, gap_fraction);
    Ok(ReturnTimeSet {
        center,
        radius,
        horizon,
        visits,
        max_gap,
        syndetic_constant: max_gap.saturating_sub(1),
        gap_bound: bound,
        syndetic: max_gap <= bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Refuted,
    Inconclusive,
}

/// A cover cell whose return gap decided (or blocked) the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapWitness {
    pub cell: usize,
    pub center: Point,
    pub radius: f64,
    pub gap: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalVerdict {
    pub verdict: Verdict,
    pub horizon: u64,
    pub cover_mesh: f64,
    pub gap_bound: u64,
    /// Largest gap over all visited cover cells, head gap included.
    pub max_gap: u64,
    pub witness: Option<GapWitness>,
    pub visited_cells: usize,
}

/// Per-orbit summary of a cell itinerary.
#[derive(Clone, Debug, Default)]
pub(crate) struct ItineraryStats {
    pub verdict: Option<Verdict>,
    pub max_gap: u64,
    /// (cell, gap) deciding the verdict.
    pub witness: Option<(usize, u64)>,
    pub returns_late: bool,
    pub repeated: Vec<usize>,
    pub late: Vec<usize>,
    pub visited: usize,
}

/// Scratch space for analysing itineraries over a fixed number of cells.
pub(crate) struct ItineraryScratch {
    first: Vec<u64>,
    last: Vec<u64>,
    inner_gap: Vec<u64>,
    count: Vec<u32>,
    touched: Vec<u32>,
}

const NEVER: u64 = u64::MAX;

impl ItineraryScratch {
    pub fn new(cells: usize) -> Self {
        ItineraryScratch {
            first: vec![NEVER; cells],
            last: vec![0; cells],
            inner_gap: vec![0; cells],
            count: vec![0; cells],
            touched: Vec::new(),
        }
    }

    /// Summarises the itinerary `cells[t]`, t = 0..=horizon.
    pub fn analyse(&mut self, itin: &[u32], bound: u64) -> ItineraryStats {
        let horizon = itin.len() as u64 - 1;
        let late_from = horizon.div_ceil(2);
        let start = itin[0];
        let mut stats = ItineraryStats::default();
        let mut late_seen: Vec<u32> = Vec::new();
        for (t, &c) in itin.iter().enumerate() {
            let t = t as u64;
            let ci = c as usize;
            if self.first[ci] == NEVER {
                self.first[ci] = t;
                self.touched.push(c);
            } else {
                self.inner_gap[ci] = self.inner_gap[ci].max(t - self.last[ci]);
            }
            self.last[ci] = t;
            self.count[ci] += 1;
            if t >= late_from {
                if c == start && t > 0 {
                    stats.returns_late = true;
                }
                late_seen.push(c);
            }
        }
        let mut refuted: Option<(usize, u64)> = None;
        let mut blocking: Option<(usize, u64)> = None;
        let mut worst = 0u64;
        self.touched.sort_unstable();
        for &c in &self.touched {
            let ci = c as usize;
            let head = self.first[ci] + 1;
            let tail = horizon + 1 - self.last[ci];
            let after = self.inner_gap[ci].max(tail);
            let all = after.max(head);
            worst = worst.max(all);
            if after > bound && refuted.map_or(true, |r| after > r.1) {
                refuted = Some((ci, after));
            }
            if all > bound && blocking.map_or(true, |b| all > b.1) {
                blocking = Some((ci, all));
            }
            if self.count[ci] >= 2 {
                stats.repeated.push(ci);
            }
        }
        stats.visited = self.touched.len();
        stats.max_gap = worst;
        (stats.verdict, stats.witness) = match (refuted, blocking) {
            (Some(r), _) => (Some(Verdict::Refuted), Some(r)),
            (None, Some(b)) => (Some(Verdict::Inconclusive), Some(b)),
            (None, None) => (Some(Verdict::Consistent), None),
        };
        late_seen.sort_unstable();
        late_seen.dedup();
        stats.late = late_seen.into_iter().map(|c| c as usize).collect();
        for &c in &self.touched {
            let ci = c as usize;
            self.first[ci] = NEVER;
            self.inner_gap[ci] = 0;
            self.count[ci] = 0;
        }
        self.touched.clear();
        stats
    }
}

/// Cell itineraries of many seeds over [0, horizon], computed in lockstep.
/// Circle grids whose denominators the map preserves are iterated exactly.
pub(crate) fn itineraries(system: &SystemSpec, grid: &Grid, seeds: &[Seed], horizon: u64) -> Result<Vec<Vec<u32>>> {
    let len = horizon as usize + 1;
    let mut out: Vec<Vec<u32>> = vec![Vec::with_capacity(len); seeds.len()];
    let n = grid.circle_cells();
    let mut exact: Vec<(usize, u64, u64)> = Vec::new();
    let mut float: Vec<(usize, f64)> = Vec::new();
    for (i, s) in seeds.iter().enumerate() {
        if s.index != 0 {
            return invalid("itinerary seeds must be anchored at time 0");
        }
        match &s.origin {
            crate::systems::SeedOrigin::Rational { num, den } if *den > 0 && system.rational_rule(*den).is_some() => {
                exact.push((i, *num, *den));
            }
            crate::systems::SeedOrigin::Point(p) => float.push((i, system.space().canonical(*p).x())),
            crate::systems::SeedOrigin::Rational { num, den } if *den > 0 => {
                float.push((i, *num as f64 / *den as f64))
            }
            _ => return invalid("itineraries need point or rational seeds"),
        }
    }
    for &(i, num, den) in &exact {
        let rule = system.rational_rule(den).unwrap();
        // Cells are exact when the grid refines the rational lattice.
        let scale = n.filter(|&n| n as u64 % den == 0).map(|n| n as u64 / den);
        let mut v = num % den;
        for _ in 0..len {
            out[i].push(match scale {
                Some(scale) => (v * scale) as u32,
                None => grid.cell_of(&Point::new1(v as f64 / den as f64)) as u32,
            });
            v = rule.step(v, den);
        }
    }
    let mut xs: Vec<f64> = float.iter().map(|e| e.1).collect();
    for t in 0..len {
        for (k, &x) in xs.iter().enumerate() {
            out[float[k].0].push(grid.cell_of(&Point::new1(x)) as u32);
        }
        if t + 1 < len {
            system.forward_batch(&mut xs);
        }
    }
    Ok(out)
}

/// Seed of a grid representative: an exact rational on circle grids.
pub fn cell_seed(grid: &Grid, cell: usize) -> Seed {
    match grid.circle_cells() {
        Some(n) => Seed::rational(cell as u64, n as u64),
        None => Seed::point(grid.rep(cell)),
    }
}

/// Tests the sampled orbit for minimality: every cover cell it visits
/// (cells of a grid of mesh 2 eps, so of radius at most eps) must recur
/// with gaps of at most horizon/10. A gap above that after the first visit
/// refutes minimality; a long wait before the first visit alone leaves the
/// verdict inconclusive.
pub fn classify_minimal(system: &SystemSpec, x: &Point, eps: f64, horizon: u64) -> Result<MinimalVerdict> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    let cover = build_grid(system.space(), (2.0 * eps).min(system.space().diameter()))?;
    let x = system.space().point(x.coords())?;
    classify_on_grid(system, &Seed::point(x), &cover, horizon, DEFAULT_GAP_FRACTION)
}

pub fn classify_on_grid(system: &SystemSpec, seed: &Seed, cover: &Grid, horizon: u64, gap_fraction: f64) -> Result<MinimalVerdict> {
    if horizon < 1 {
        return invalid("horizon must be at least 1");
    }
    let itin = itineraries(system, cover, std::slice::from_ref(seed), horizon)?.pop().unwrap();
    let bound = gap_bound(horizon, gap_fraction);
    let stats = ItineraryScratch::new(cover.len()).analyse(&itin, bound);
    Ok(MinimalVerdict {
        verdict: stats.verdict.unwrap(),
        horizon,
        cover_mesh: cover.mesh(),
        gap_bound: bound,
        max_gap: stats.max_gap,
        witness: stats.witness.map(|(cell, gap)| GapWitness {
            cell,
            center: cover.rep(cell),
            radius: cover.cell_radius(),
            gap,
        }),
        visited_cells: stats.visited,
    })
}

/// Cells visited by the orbit of x at times burn_in..=horizon.
pub fn omega_limit_cells(system: &SystemSpec, x: &Point, grid: &Grid, burn_in: u64, horizon: u64) -> Result<Vec<usize>> {
    if burn_in > horizon {
        return invalid("burn-in exceeds the horizon");
    }
    let x = system.space().point(x.coords())?;
    let itin = itineraries(system, grid, &[Seed::point(x)], horizon)?.pop().unwrap();
    let mut cells: Vec<usize> = itin[burn_in as usize..].iter().map(|&c| c as usize).collect();
    cells.sort_unstable();
    cells.dedup();
    Ok(cells)
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pseudo::Pseudotrajectory;
use crate::recurrence::{cell_seed, classify_on_grid, max_gap_with_sentinels, Verdict, DEFAULT_GAP_FRACTION};
use crate::space::{build_grid, Grid, Locator, Point};
use crate::systems::{Seed, SystemSpec};

/// Upper density surrogate of an index set over [0, len): the largest
/// value of |K ∩ [0, N)| / N for N = 1..=len. `indices` must be sorted.
pub fn density(indices: &[u64], len: u64) -> f64 {
    window_density(indices, len, 1)
}

/// As [`density`] but only over windows with N >= min_window.
pub fn window_density(indices: &[u64], len: u64, min_window: u64) -> f64 {
    if len == 0 {
        return 0.0;
    }
    let min_window = min_window.clamp(1, len);
    let before = indices.partition_point(|&k| k < min_window);
    let mut best = before as f64 / min_window as f64;
    for (j, &k) in indices.iter().enumerate().skip(before) {
        if k >= len {
            break;
        }
        best = best.max((j + 1) as f64 / (k + 1) as f64);
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsequenceOptions {
    /// Largest shift s tried for the orbit T^s(center).
    pub horizon_p: u64,
    /// Horizon of the minimality check on candidate centers.
    pub classify_horizon: u64,
    pub gap_fraction: f64,
}

impl Default for SubsequenceOptions {
    fn default() -> Self {
        SubsequenceOptions { horizon_p: 1000, classify_horizon: 10_000, gap_fraction: DEFAULT_GAP_FRACTION }
    }
}

/// An orbit within eps of the pseudotrajectory along an index set of
/// positive density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsequenceCertificate {
    pub seed: Seed,
    /// Orbit value at the first index.
    pub point: Point,
    /// The orbit starts from a minimal-consistent center.
    pub minimal_consistent: bool,
    pub center: Point,
    pub center_cell: usize,
    pub center_mesh: f64,
    pub shift: u64,
    pub eps: f64,
    pub k_min: i64,
    pub k_max: i64,
    /// Indices k with rho(x_k, T^k(y)) < eps.
    pub indices: Vec<i64>,
    pub density: f64,
    /// Density restricted to windows of at least a tenth of the range.
    pub window_density: f64,
}

impl SubsequenceCertificate {
    fn relative(&self) -> Vec<u64> {
        self.indices.iter().map(|&k| (k - self.k_min) as u64).collect()
    }

    /// Recomputes the orbit, checks every listed index and the reported
    /// densities.
    pub fn verify(&self, system: &SystemSpec, pseudo: &Pseudotrajectory) -> Result<bool> {
        if pseudo.k_min() != self.k_min || pseudo.k_max() != self.k_max {
            return Ok(false);
        }
        let orbit = system.orbit(&self.seed, self.k_min, self.k_max)?;
        let space = system.space();
        for &k in &self.indices {
            if k < self.k_min || k > self.k_max {
                return Ok(false);
            }
            let i = (k - self.k_min) as usize;
            if !(space.dist(&orbit[i], &pseudo.points()[i]) < self.eps) {
                return Ok(false);
            }
        }
        let rel = self.relative();
        let len = pseudo.len() as u64;
        Ok(rel.windows(2).all(|w| w[0] < w[1])
            && density(&rel, len) == self.density
            && window_density(&rel, len, len / 10) == self.window_density
            && self.density > 0.0)
    }
}

/// Subsequence-shadowing search for one system and eps. Minimality
/// verdicts of candidate centers are cached across pseudotrajectories.
pub struct SubsequenceSearch<'a> {
    system: &'a SystemSpec,
    eps: f64,
    opts: SubsequenceOptions,
    centers: Grid,
    verdicts: BTreeMap<usize, bool>,
}

impl<'a> SubsequenceSearch<'a> {
    /// Centers form a grid of mesh eps/2.
    pub fn new(system: &'a SystemSpec, eps: f64, opts: SubsequenceOptions) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("eps must be positive, got {eps}"));
        }
        if system.space().dim() != 1 {
            return invalid("subsequence search needs a one-dimensional system");
        }
        let mesh = (0.5 * eps).min(system.space().diameter());
        let centers = build_grid(system.space(), mesh)?;
        Ok(SubsequenceSearch { system, eps, opts, centers, verdicts: BTreeMap::new() })
    }

    fn is_minimal(&mut self, cell: usize) -> Result<bool> {
        if let Some(&v) = self.verdicts.get(&cell) {
            return Ok(v);
        }
        let seed = cell_seed(&self.centers, cell);
        let v = classify_on_grid(self.system, &seed, &self.centers, self.opts.classify_horizon, self.opts.gap_fraction)?;
        let ok = v.verdict == Verdict::Consistent;
        self.verdicts.insert(cell, ok);
        Ok(ok)
    }

    /// 1. The center ball of radius eps/2 with the highest visit density,
    ///    preferring minimal-consistent centers.
    /// 2. The shift s <= P for which the orbit of T^s(center) is back in
    ///    the ball at the most visit times.
    /// 3. All indices where that orbit is within eps.
    pub fn run(&mut self, pseudo: &Pseudotrajectory) -> Result<SubsequenceCertificate> {
        if pseudo.system() != self.system {
            return invalid("pseudotrajectory belongs to a different system");
        }
        let space = self.system.space().clone();
        let half = 0.5 * self.eps;
        let len = pseudo.len() as u64;
        let mut visits: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for (k, x) in pseudo.points().iter().enumerate() {
            for c in self.centers.cells_within(x, half) {
                if space.dist(x, &self.centers.rep(c)) < half {
                    visits.entry(c).or_default().push(k as u64);
                }
            }
        }
        let mut ranked: Vec<(f64, usize, usize)> =
            visits.iter().map(|(&c, v)| (density(v, len), v.len(), c)).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        let mut chosen = None;
        for &(_, _, c) in &ranked {
            if self.is_minimal(c)? {
                chosen = Some((c, true));
                break;
            }
        }
        let (cell, minimal) = match chosen.or(ranked.first().map(|r| (r.2, false))) {
            Some(c) => c,
            None => return invalid("pseudotrajectory visits no center ball"),
        };
        let center = self.centers.rep(cell);
        let center_seed = cell_seed(&self.centers, cell);
        let p = self.opts.horizon_p;
        let k_min = pseudo.k_min();
        let orbit = self.system.orbits_x(std::slice::from_ref(&center_seed), k_min, pseudo.k_max() + p as i64)?.remove(0);
        let in_ball: Vec<bool> = orbit.iter().map(|&y| space.dist(&Point::new1(y), &center) <= half).collect();
        let v = &visits[&cell];
        let mut best: Option<((f64, usize), u64)> = None;
        let mut hits = Vec::with_capacity(v.len());
        for s in 0..=p {
            hits.clear();
            hits.extend(v.iter().copied().filter(|&k| in_ball[(k + s) as usize]));
            let key = (density(&hits, len), hits.len());
            if best.map_or(true, |b| key.0 > b.0 .0 || (key.0 == b.0 .0 && key.1 > b.0 .1)) {
                best = Some((key, s));
            }
            if hits.len() == v.len() {
                break;
            }
        }
        let shift = best.map(|b| b.1).unwrap_or(0);
        let mut rel = Vec::new();
        for (k, x) in pseudo.points().iter().enumerate() {
            if space.dist(&Point::new1(orbit[k + shift as usize]), x) < self.eps {
                rel.push(k as u64);
            }
        }
        let seed = center_seed.shifted(shift as i64);
        Ok(SubsequenceCertificate {
            point: Point::new1(orbit[shift as usize]),
            seed,
            minimal_consistent: minimal,
            center,
            center_cell: cell,
            center_mesh: self.centers.mesh(),
            shift,
            eps: self.eps,
            k_min,
            k_max: pseudo.k_max(),
            density: density(&rel, len),
            window_density: window_density(&rel, len, len / 10),
            indices: rel.iter().map(|&k| k_min + k as i64).collect(),
        })
    }
}

/// One-off subsequence-shadowing search.
pub fn subsequence_shadow_search(
    system: &SystemSpec,
    pseudo: &Pseudotrajectory,
    eps: f64,
    horizon_p: u64,
) -> Result<SubsequenceCertificate> {
    let opts = SubsequenceOptions { horizon_p, ..Default::default() };
    SubsequenceSearch::new(system, eps, opts)?.run(pseudo)
}

/// Visits of a pseudotrajectory to the eps-neighbourhood of a point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyndeticVisitReport {
    pub eps: f64,
    pub qualifying: usize,
    /// Largest gap between qualifying indices, counting virtual visits just
    /// before the first and just after the last index.
    pub max_gap: u64,
    pub gap_bound: u64,
    pub syndetic: bool,
    /// Indices outside the neighbourhood.
    pub excursions: Vec<i64>,
    /// The excursions form an initial segment of the index range.
    pub excursions_are_prefix: bool,
}

/// Gaps between the indices k with x_k within eps of some point of `points`
/// (typically minimal-consistent cell representatives).
pub fn syndetic_visit_check(
    system: &SystemSpec,
    pseudo: &Pseudotrajectory,
    eps: f64,
    points: &[Point],
    gap_bound: u64,
) -> Result<SyndeticVisitReport> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    let space = system.space();
    let mut hits = Vec::new();
    let mut excursions = Vec::new();
    let loc = Locator::new(space, points);
    for (k, x) in pseudo.points().iter().enumerate() {
        let near = !points.is_empty() && loc.nearest(x).1 <= eps;
        if near {
            hits.push(k as u64);
        } else {
            excursions.push(pseudo.k_min() + k as i64);
        }
    }
    let max_gap = max_gap_with_sentinels(&hits, pseudo.len() as u64 - 1);
    let prefix = excursions.iter().enumerate().all(|(i, &k)| k == pseudo.k_min() + i as i64);
    Ok(SyndeticVisitReport {
        eps,
        qualifying: hits.len(),
        max_gap,
        gap_bound,
        syndetic: max_gap <= gap_bound,
        excursions,
        excursions_are_prefix: prefix,
    })
}

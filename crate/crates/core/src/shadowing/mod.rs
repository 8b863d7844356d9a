//! Searches for shadowing, multishadowing and subsequence-shadowing
//! certificates of a pseudotrajectory, with re-verification.
//!
//! Candidate orbits are drawn from a grid of starting points, orbits through
//! evenly spaced pseudotrajectory points and one locally refined starting
//! point. Searches are exhaustive over that finite set only.

mod candidates;
pub mod cover;
mod subsequence;

use serde::{Deserialize, Serialize};

pub use candidates::{CandidateSource, ANCHORS};
pub use subsequence::{
    density, subsequence_shadow_search, syndetic_visit_check, window_density, SubsequenceCertificate,
    SubsequenceOptions, SubsequenceSearch, SyndeticVisitReport,
};

use candidates::{anchor_candidates, errors, evaluate, grid_candidates, refined_candidate, Candidate};
use cover::{exact_cover_small, greedy_cover, packing_lower_bound};

use crate::error::{invalid, Result};
use crate::pseudo::{Pseudotrajectory, Sidedness};
use crate::space::{Grid, Point};
use crate::systems::{Seed, SystemSpec};

/// Largest index count for which the exact minimum cover is computed.
pub const EXACT_COVER_LIMIT: usize = 64;

/// A single orbit within eps of the pseudotrajectory at every index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowCertificate {
    pub seed: Seed,
    /// Orbit value at the first index.
    pub initial_point: Point,
    pub source: CandidateSource,
    pub eps: f64,
    pub k_min: i64,
    pub k_max: i64,
    pub sidedness: Sidedness,
    pub max_error: f64,
    pub candidate_mesh: f64,
}

/// The candidate orbit with the smallest sup-error when none is within eps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowFailure {
    pub eps: f64,
    pub best_seed: Seed,
    pub best_source: CandidateSource,
    pub best_error: f64,
    /// Index where the best candidate is farthest from the pseudotrajectory.
    pub worst_index: i64,
    pub candidates: usize,
    pub candidate_mesh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ShadowOutcome {
    Certificate(ShadowCertificate),
    Failure(ShadowFailure),
}

/// Finitely many orbits, each index assigned to one within eps of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultishadowCertificate {
    pub eps: f64,
    pub k_min: i64,
    pub k_max: i64,
    pub sidedness: Sidedness,
    pub seeds: Vec<Seed>,
    pub sources: Vec<CandidateSource>,
    /// Orbit used at each index, relative to k_min.
    pub assignment: Vec<u32>,
    pub errors: Vec<f64>,
    pub n: usize,
    /// Lower bound on the cover size over the candidate set.
    pub n_lower: usize,
    pub candidates: usize,
    pub candidate_mesh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultishadowFailure {
    pub eps: f64,
    pub budget: usize,
    /// Size of the full greedy cover, if the candidates cover every index.
    pub greedy_n: Option<usize>,
    /// Lower bound on the cover size over the candidate set; None when some
    /// index is covered by no candidate.
    pub lower_bound: Option<usize>,
    /// Indices left uncovered by the first `budget` greedy picks.
    pub uncovered: usize,
    pub first_uncovered: Option<i64>,
    pub candidates: usize,
    pub candidate_mesh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum MultishadowOutcome {
    Certificate(MultishadowCertificate),
    Failure(MultishadowFailure),
}

impl ShadowOutcome {
    pub fn certificate(&self) -> Option<&ShadowCertificate> {
        match self {
            ShadowOutcome::Certificate(c) => Some(c),
            ShadowOutcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&ShadowFailure> {
        match self {
            ShadowOutcome::Certificate(_) => None,
            ShadowOutcome::Failure(f) => Some(f),
        }
    }
}

impl MultishadowOutcome {
    pub fn certificate(&self) -> Option<&MultishadowCertificate> {
        match self {
            MultishadowOutcome::Certificate(c) => Some(c),
            MultishadowOutcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&MultishadowFailure> {
        match self {
            MultishadowOutcome::Certificate(_) => None,
            MultishadowOutcome::Failure(f) => Some(f),
        }
    }
}

fn check_inputs(system: &SystemSpec, pseudo: &Pseudotrajectory, eps: f64, grid: &Grid) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    if pseudo.system() != system {
        return invalid("pseudotrajectory belongs to a different system");
    }
    if grid.space() != system.space() {
        return invalid("candidate grid lives on a different space");
    }
    if system.space().dim() != 1 {
        return invalid("shadowing searches need a one-dimensional system");
    }
    Ok(())
}

fn start_candidate(pseudo: &Pseudotrajectory) -> Candidate {
    Candidate { seed: Seed::anchored(pseudo.k_min(), pseudo.points()[0]), source: CandidateSource::Start }
}

/// Candidate orbits that do not depend on eps.
fn fixed_candidates(system: &SystemSpec, pseudo: &Pseudotrajectory, grid: &Grid) -> Result<Vec<Candidate>> {
    let mut out = anchor_candidates(system, pseudo)?;
    out.extend(refined_candidate(system, pseudo, grid.mesh())?);
    Ok(out)
}

/// Looks for one exact orbit within eps of the whole pseudotrajectory.
///
/// Candidates, in order: the orbit through x_0, grid representatives
/// within eps of x_0, orbits through anchored pseudotrajectory points, and
/// a refined starting point near x_0. The first candidate with sup-error
/// at most eps is certified.
pub fn shadow_search(system: &SystemSpec, pseudo: &Pseudotrajectory, eps: f64, grid: &Grid) -> Result<ShadowOutcome> {
    check_inputs(system, pseudo, eps, grid)?;
    let x0 = pseudo.points()[0];
    let mut cands = vec![start_candidate(pseudo)];
    let near: Vec<usize> =
        grid.cells_within(&x0, eps).into_iter().filter(|&c| system.space().dist(&grid.rep(c), &x0) <= eps).collect();
    cands.extend(grid_candidates(pseudo, grid, &near));
    cands.extend(fixed_candidates(system, pseudo, grid)?);
    let mut best: Option<(f64, i64, usize)> = None;
    for (b, batch) in cands.chunks(64).enumerate() {
        let seeds: Vec<Seed> = batch.iter().map(|c| c.seed.clone()).collect();
        let evals = evaluate(system, pseudo, &seeds, None)?;
        for (i, e) in evals.iter().enumerate() {
            let idx = b * 64 + i;
            if e.sup <= eps {
                let c = &cands[idx];
                return Ok(ShadowOutcome::Certificate(ShadowCertificate {
                    initial_point: system.orbit_at(&c.seed, pseudo.k_min())?,
                    seed: c.seed.clone(),
                    source: c.source.clone(),
                    eps,
                    k_min: pseudo.k_min(),
                    k_max: pseudo.k_max(),
                    sidedness: pseudo.sidedness(),
                    max_error: e.sup,
                    candidate_mesh: grid.mesh(),
                }));
            }
            if best.map_or(true, |b| e.sup < b.0) {
                best = Some((e.sup, e.worst, idx));
            }
        }
    }
    let (err, worst, idx) = match best {
        Some(b) => b,
        None => return invalid("empty candidate set"),
    };
    Ok(ShadowOutcome::Failure(ShadowFailure {
        eps,
        best_seed: cands[idx].seed.clone(),
        best_source: cands[idx].source.clone(),
        best_error: err,
        worst_index: worst,
        candidates: cands.len(),
        candidate_mesh: grid.mesh(),
    }))
}

/// Greedy multishadowing cover of the pseudotrajectory indices.
///
/// Every candidate orbit covers the indices where it is within eps of the
/// pseudotrajectory; candidates are the orbit through x_0, every grid
/// representative, the anchored orbits and the refined start. The cover is
/// certified when it uses at most `budget` orbits. For at most
/// [`EXACT_COVER_LIMIT`] indices the minimum cover is computed exactly and
/// used when smaller; otherwise a packing argument gives the lower bound.
pub fn multishadow_search(
    system: &SystemSpec,
    pseudo: &Pseudotrajectory,
    eps: f64,
    grid: &Grid,
    budget: usize,
) -> Result<MultishadowOutcome> {
    check_inputs(system, pseudo, eps, grid)?;
    if budget == 0 {
        return invalid("budget must be at least 1");
    }
    let mut cands = vec![start_candidate(pseudo)];
    let all: Vec<usize> = (0..grid.len()).collect();
    cands.extend(grid_candidates(pseudo, grid, &all));
    cands.extend(fixed_candidates(system, pseudo, grid)?);
    let seeds: Vec<Seed> = cands.iter().map(|c| c.seed.clone()).collect();
    let evals = evaluate(system, pseudo, &seeds, Some(eps))?;
    let sets: Vec<cover::Bits> = evals.into_iter().map(|e| e.covered.unwrap()).collect();
    let len = pseudo.len();

    let greedy = greedy_cover(&sets, len, usize::MAX);
    let (mut chosen, lower) = if !greedy.complete {
        (greedy.chosen.clone(), None)
    } else if len <= EXACT_COVER_LIMIT {
        let exact = exact_cover_small(&sets, len, greedy.chosen.len()).unwrap_or_else(|| greedy.chosen.clone());
        let n = exact.len();
        (exact, Some(n))
    } else {
        (greedy.chosen.clone(), packing_lower_bound(&sets, len).map(|p| p.0))
    };
    if greedy.complete && chosen.len() <= budget {
        // Pick order decides the assignment; exact covers are in index order.
        if chosen.len() == greedy.chosen.len() {
            chosen = greedy.chosen.clone();
        }
        let mut assignment = vec![0u32; len];
        for k in 0..len {
            assignment[k] = chosen.iter().position(|&c| sets[c].get(k)).unwrap() as u32;
        }
        let picked: Vec<&Candidate> = chosen.iter().map(|&c| &cands[c]).collect();
        let per_orbit: Vec<Vec<f64>> = picked.iter().map(|c| errors(system, pseudo, &c.seed)).collect::<Result<_>>()?;
        let errs = (0..len).map(|k| per_orbit[assignment[k] as usize][k]).collect();
        return Ok(MultishadowOutcome::Certificate(MultishadowCertificate {
            eps,
            k_min: pseudo.k_min(),
            k_max: pseudo.k_max(),
            sidedness: pseudo.sidedness(),
            seeds: picked.iter().map(|c| c.seed.clone()).collect(),
            sources: picked.iter().map(|c| c.source.clone()).collect(),
            assignment,
            errors: errs,
            n: chosen.len(),
            n_lower: lower.unwrap_or(1).min(chosen.len()),
            candidates: cands.len(),
            candidate_mesh: grid.mesh(),
        }));
    }
    let within = greedy_cover(&sets, len, budget);
    Ok(MultishadowOutcome::Failure(MultishadowFailure {
        eps,
        budget,
        greedy_n: greedy.complete.then_some(greedy.chosen.len()),
        lower_bound: lower,
        uncovered: within.uncovered.count(),
        first_uncovered: within.uncovered.first_set().map(|k| pseudo.k_min() + k as i64),
        candidates: cands.len(),
        candidate_mesh: grid.mesh(),
    }))
}

impl ShadowCertificate {
    /// Recomputes the orbit and checks every index against eps.
    pub fn verify(&self, system: &SystemSpec, pseudo: &Pseudotrajectory) -> Result<bool> {
        if pseudo.k_min() != self.k_min || pseudo.k_max() != self.k_max {
            return Ok(false);
        }
        let errs = errors(system, pseudo, &self.seed)?;
        Ok(errs.iter().all(|&e| e <= self.eps))
    }
}

impl MultishadowCertificate {
    /// Recomputes every orbit and checks the assigned one at each index.
    pub fn verify(&self, system: &SystemSpec, pseudo: &Pseudotrajectory) -> Result<bool> {
        if pseudo.k_min() != self.k_min
            || pseudo.k_max() != self.k_max
            || self.assignment.len() != pseudo.len()
            || self.n != self.seeds.len()
            || self.n == 0
        {
            return Ok(false);
        }
        let orbits = system.orbits_x(&self.seeds, self.k_min, self.k_max)?;
        let space = system.space();
        for (k, (&a, x)) in self.assignment.iter().zip(pseudo.points()).enumerate() {
            let Some(orbit) = orbits.get(a as usize) else { return Ok(false) };
            if space.dist(&Point::new1(orbit[k]), x) > self.eps {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudo::{drift_pseudo, noisy_orbit, winding_pseudo, DriftOptions, DriftStop, Provenance};
    use crate::space::build_grid;
    use crate::systems::parse_selector;

    fn exact(system: &SystemSpec, x0: f64, len: usize) -> Pseudotrajectory {
        let pts = system.orbit_segment(&Point::new1(x0), len - 1).unwrap();
        Pseudotrajectory::new(system, 0, pts, 0.0, Provenance::Exact).unwrap()
    }

    #[test]
    fn exact_orbit_is_its_own_shadow() {
        let s = parse_selector("north_south").unwrap();
        let p = exact(&s, 0.123, 200);
        let g = build_grid(s.space(), 0.01).unwrap();
        let c = shadow_search(&s, &p, 1e-6, &g).unwrap();
        let c = c.certificate().unwrap();
        assert_eq!(c.source, CandidateSource::Start);
        assert_eq!(c.max_error, 0.0);
        assert_eq!(c.initial_point.x(), 0.123);
        assert!(c.verify(&s, &p).unwrap());
    }

    #[test]
    fn doubling_noise_is_shadowed_by_preimages() {
        let s = parse_selector("doubling").unwrap();
        let p = noisy_orbit(&s, &Point::new1(0.3), 1e-4, 1000, 5).unwrap();
        let g = build_grid(s.space(), 0.01).unwrap();
        let out = shadow_search(&s, &p, 2e-4, &g).unwrap();
        let c = out.certificate().expect("certificate");
        assert!(c.max_error <= 2e-4);
        assert!(c.verify(&s, &p).unwrap());
    }

    #[test]
    fn quartic_crossing_needs_two_orbits() {
        let s = parse_selector("quartic_interval").unwrap();
        let p = drift_pseudo(&s, &Point::new1(-0.6), 1e-3, DriftStop::Steps(3000), &DriftOptions::default()).unwrap();
        assert!(p.points().last().unwrap().x() > 0.9);
        let g = build_grid(s.space(), 0.01).unwrap();
        let f = shadow_search(&s, &p, 0.1, &g).unwrap();
        assert!(f.failure().unwrap().best_error > 0.5);
        let m = multishadow_search(&s, &p, 0.1, &g, 3).unwrap();
        let c = m.certificate().expect("cover");
        assert_eq!(c.n, 2);
        assert!(c.verify(&s, &p).unwrap());
    }

    #[test]
    fn identity_walk_cover_bound() {
        let s = parse_selector("identity").unwrap();
        let p = noisy_orbit(&s, &Point::new1(0.5), 0.01, 2000, 9).unwrap();
        let g = build_grid(s.space(), 0.01).unwrap();
        let (eps, d) = (0.05, 0.01);
        let c = multishadow_search(&s, &p, eps, &g, 100).unwrap();
        let c = c.certificate().unwrap();
        let total: f64 = p.points().windows(2).map(|w| s.space().dist(&w[0], &w[1])).sum();
        assert!(c.n as f64 <= (total / (2.0 * eps - 2.0 * d)).ceil() + 1.0);
        assert!(c.verify(&s, &p).unwrap());
    }

    #[test]
    fn winding_defeats_small_budgets() {
        let s = parse_selector("sin2_circle").unwrap();
        let p = winding_pseudo(&s, 0.01, 10).unwrap();
        let g = build_grid(s.space(), 0.01).unwrap();
        let out = multishadow_search(&s, &p, 0.05, &g, 5).unwrap();
        let f = out.failure().expect("failure");
        assert!(f.lower_bound.unwrap() >= 10, "{f:?}");
    }

    #[test]
    fn short_pseudo_uses_exact_cover() {
        let s = parse_selector("quartic_interval").unwrap();
        let p = drift_pseudo(&s, &Point::new1(-0.3), 0.05, DriftStop::Steps(60), &DriftOptions::default()).unwrap();
        let g = build_grid(s.space(), 0.05).unwrap();
        let m = multishadow_search(&s, &p, 0.05, &g, 60).unwrap();
        let c = m.certificate().unwrap();
        assert_eq!(c.n_lower, c.n);
        assert!(c.verify(&s, &p).unwrap());
    }
}

//! Candidate orbits for shadowing searches and their evaluation against a
//! pseudotrajectory.

use serde::{Deserialize, Serialize};

use super::cover::Bits;
use crate::error::Result;
use crate::pseudo::Pseudotrajectory;
use crate::recurrence::cell_seed;
use crate::space::{Grid, Point};
use crate::systems::{Seed, SeedOrigin, SystemSpec};

/// Number of pseudotrajectory points used as orbit anchors.
pub const ANCHORS: usize = 100;

const REFINE_SAMPLES: usize = 17;
const REFINE_ROUNDS: usize = 3;
const BATCH: usize = 64;

/// Where a candidate orbit came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateSource {
    /// Passes through the first pseudotrajectory point.
    Start,
    /// Passes through a grid representative at the first index.
    Grid { cell: usize },
    /// Passes through the pseudotrajectory point at `index`; earlier times
    /// follow the inverse branch nearest to the pseudotrajectory.
    Anchor { index: i64 },
    /// Best of a local sampling around the first point.
    Refined,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Candidate {
    pub seed: Seed,
    pub source: CandidateSource,
}

#[derive(Clone, Debug)]
pub(crate) struct Evaluation {
    pub sup: f64,
    pub worst: i64,
    pub covered: Option<Bits>,
}

fn at_start(seed: Seed, k_min: i64) -> Seed {
    Seed { index: k_min, ..seed }
}

/// Grid representatives as orbits through the first index.
pub(crate) fn grid_candidates(pseudo: &Pseudotrajectory, grid: &Grid, cells: &[usize]) -> Vec<Candidate> {
    cells
        .iter()
        .map(|&c| Candidate { seed: at_start(cell_seed(grid, c), pseudo.k_min()), source: CandidateSource::Grid { cell: c } })
        .collect()
}

/// Orbits through evenly spaced pseudotrajectory points, including the
/// last one.
pub(crate) fn anchor_candidates(system: &SystemSpec, pseudo: &Pseudotrajectory) -> Result<Vec<Candidate>> {
    let len = pseudo.len();
    let mut times: Vec<usize> = (1..=ANCHORS).map(|j| j * (len - 1) / ANCHORS).filter(|&t| t > 0).collect();
    times.dedup();
    let invertible = system.is_invertible();
    let pts = pseudo.points();
    let mut out = Vec::with_capacity(times.len());
    for t in times {
        let index = pseudo.k_min() + t as i64;
        let seed = if invertible {
            Seed::anchored(index, pts[t])
        } else {
            Seed { index, origin: SeedOrigin::Preimage { anchor: pts[t], branches: nearest_branches(system, pts, t)? } }
        };
        out.push(Candidate { seed, source: CandidateSource::Anchor { index } });
    }
    Ok(out)
}

/// Inverse branches taking the point at position t back to position 0,
/// each step choosing the preimage nearest the pseudotrajectory.
fn nearest_branches(system: &SystemSpec, pts: &[Point], t: usize) -> Result<Vec<u8>> {
    let space = system.space();
    let mut y = pts[t];
    let mut branches = Vec::with_capacity(t);
    for s in (1..=t).rev() {
        let pre = system.preimages(&y)?;
        let mut best = (f64::INFINITY, 0usize);
        for (b, p) in pre.iter().enumerate() {
            let d = space.dist(p, &pts[s - 1]);
            if d < best.0 {
                best = (d, b);
            }
        }
        branches.push(best.1 as u8);
        y = pre[best.1];
    }
    Ok(branches)
}

/// Samples starting points within `half` of the first point and zooms in on
/// the one with the smallest sup-error.
pub(crate) fn refined_candidate(system: &SystemSpec, pseudo: &Pseudotrajectory, half: f64) -> Result<Option<Candidate>> {
    let space = system.space();
    if space.dim() != 1 || !(half > 0.0) {
        return Ok(None);
    }
    let x0 = pseudo.points()[0].x();
    let (mut centre, mut half) = (x0, half);
    for _ in 0..REFINE_ROUNDS {
        let step = 2.0 * half / (REFINE_SAMPLES - 1) as f64;
        let seeds: Vec<Seed> = (0..REFINE_SAMPLES)
            .map(|i| Seed::anchored(pseudo.k_min(), space.canonical(Point::new1(centre - half + i as f64 * step))))
            .collect();
        let evals = evaluate(system, pseudo, &seeds, None)?;
        let best = argmin(&evals);
        centre = seeds[best].anchor_x();
        half = step;
    }
    Ok(Some(Candidate { seed: Seed::anchored(pseudo.k_min(), Point::new1(centre)), source: CandidateSource::Refined }))
}

pub(crate) fn argmin(evals: &[Evaluation]) -> usize {
    let mut best = 0;
    for (i, e) in evals.iter().enumerate() {
        if e.sup < evals[best].sup {
            best = i;
        }
    }
    best
}

/// Sup-error of every seed against the pseudotrajectory, and optionally the
/// indices (relative to k_min) where the error is at most `eps`.
pub(crate) fn evaluate(
    system: &SystemSpec,
    pseudo: &Pseudotrajectory,
    seeds: &[Seed],
    eps: Option<f64>,
) -> Result<Vec<Evaluation>> {
    let space = system.space();
    let pts = pseudo.points();
    let mut out = Vec::with_capacity(seeds.len());
    for batch in seeds.chunks(BATCH) {
        let orbits = system.orbits_x(batch, pseudo.k_min(), pseudo.k_max())?;
        for orbit in orbits {
            let mut sup = -1.0;
            let mut worst = 0;
            let mut covered = eps.map(|_| Bits::new(pts.len()));
            for (k, (y, x)) in orbit.iter().zip(pts).enumerate() {
                let e = space.dist(&Point::new1(*y), x);
                if e > sup {
                    sup = e;
                    worst = k;
                }
                if let (Some(bits), Some(eps)) = (covered.as_mut(), eps) {
                    if e <= eps {
                        bits.set(k);
                    }
                }
            }
            out.push(Evaluation { sup, worst: pseudo.k_min() + worst as i64, covered });
        }
    }
    Ok(out)
}

/// Pointwise errors of one seed over the pseudotrajectory range.
pub(crate) fn errors(system: &SystemSpec, pseudo: &Pseudotrajectory, seed: &Seed) -> Result<Vec<f64>> {
    let orbit = system.orbits_x(std::slice::from_ref(seed), pseudo.k_min(), pseudo.k_max())?;
    let space = system.space();
    Ok(orbit[0].iter().zip(pseudo.points()).map(|(y, x)| space.dist(&Point::new1(*y), x)).collect())
}

use serde::{Deserialize, Serialize};

use super::graph::{build_transition_graph, chain_recurrent_cells, TransitionGraph};
use super::returns::{cell_seed, gap_bound, itineraries, ItineraryScratch, Verdict, DEFAULT_GAP_FRACTION};
use crate::error::{invalid, Result};
use crate::space::{build_grid, Grid, Locator, Point, Space};
use crate::systems::{Seed, SystemSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub mesh: f64,
    pub d: f64,
    pub horizon: u64,
    pub gap_fraction: f64,
    pub max_cells: usize,
}

impl ReportConfig {
    pub fn new(mesh: f64, d: f64, horizon: u64) -> Self {
        ReportConfig { mesh, d, horizon, gap_fraction: DEFAULT_GAP_FRACTION, max_cells: 1_000_000 }
    }
}

/// Cells where the classification chain minimal ⊆ recurrent ⊆ Ω ⊆ CR
/// fails, as computed (the sets in the report are not adjusted).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InclusionViolations {
    pub minimal_not_recurrent: Vec<usize>,
    pub recurrent_not_nonwandering: Vec<usize>,
    pub nonwandering_not_chain_recurrent: Vec<usize>,
}

impl InclusionViolations {
    pub fn total(&self) -> usize {
        self.minimal_not_recurrent.len()
            + self.recurrent_not_nonwandering.len()
            + self.nonwandering_not_chain_recurrent.len()
    }
}

/// Cell-level recurrence classification of a system at one scale.
///
/// For the orbit of every cell representative over [0, horizon]:
/// minimal-consistent if each visited cell recurs with gaps of at most
/// gap_fraction * horizon; recurrent if it is back in its own cell during
/// the second half of the horizon; a cell is in the Ω approximation if some
/// representative orbit visits it at two different times.
///
/// With L the Lipschitz bound of the system and d >= L mesh / 2 every exact
/// itinerary is a path of the transition graph, so the inclusion chain holds;
/// at finer d violations are possible and are reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub system: SystemSpec,
    pub space: Space,
    pub config: ReportConfig,
    pub cell_count: usize,
    pub edge_count: usize,
    pub chain_recurrent: Vec<usize>,
    pub nonwandering: Vec<usize>,
    pub recurrent: Vec<usize>,
    pub minimal: Vec<usize>,
    pub minimality_inconclusive: Vec<usize>,
    /// Cells visited by some representative orbit in the second half of
    /// the horizon.
    pub omega_sample: Vec<usize>,
    pub violations: InclusionViolations,
}

const CHUNK: usize = 256;

/// Builds the graph, the chain recurrent set and the orbit-based
/// classifications.
pub fn recurrence_report(system: &SystemSpec, cfg: &ReportConfig) -> Result<RecurrenceReport> {
    if cfg.horizon < 2 {
        return invalid("horizon must be at least 2");
    }
    let grid = build_grid(system.space(), cfg.mesh)?;
    let graph = build_transition_graph(system, &grid, cfg.d, cfg.max_cells)?;
    report_on_graph(system, &graph, cfg)
}

pub fn report_on_graph(system: &SystemSpec, graph: &TransitionGraph, cfg: &ReportConfig) -> Result<RecurrenceReport> {
    let grid = graph.grid();
    let n = grid.len();
    let chain_recurrent = chain_recurrent_cells(graph);
    let bound = gap_bound(cfg.horizon, cfg.gap_fraction);
    let mut scratch = ItineraryScratch::new(n);
    let mut recurrent = vec![false; n];
    let mut minimal = vec![false; n];
    let mut inconclusive = vec![false; n];
    let mut nonwandering = vec![false; n];
    let mut omega = vec![false; n];
    let seeds: Vec<Seed> = (0..n).map(|c| cell_seed(grid, c)).collect();
    for (chunk_no, chunk) in seeds.chunks(CHUNK).enumerate() {
        let its = itineraries(system, grid, chunk, cfg.horizon)?;
        for (k, itin) in its.iter().enumerate() {
            let c = chunk_no * CHUNK + k;
            let stats = scratch.analyse(itin, bound);
            recurrent[c] = stats.returns_late;
            match stats.verdict {
                Some(Verdict::Consistent) => minimal[c] = true,
                Some(Verdict::Inconclusive) => inconclusive[c] = true,
                _ => {}
            }
            for &r in &stats.repeated {
                nonwandering[r] = true;
            }
            for &w in &stats.late {
                omega[w] = true;
            }
        }
    }
    let cr_mask = {
        let mut m = vec![false; n];
        for &c in &chain_recurrent {
            m[c] = true;
        }
        m
    };
    let cells = |mask: &[bool]| -> Vec<usize> { (0..n).filter(|&c| mask[c]).collect() };
    let violations = InclusionViolations {
        minimal_not_recurrent: (0..n).filter(|&c| minimal[c] && !recurrent[c]).collect(),
        recurrent_not_nonwandering: (0..n).filter(|&c| recurrent[c] && !nonwandering[c]).collect(),
        nonwandering_not_chain_recurrent: (0..n).filter(|&c| nonwandering[c] && !cr_mask[c]).collect(),
    };
    Ok(RecurrenceReport {
        system: system.clone(),
        space: system.space().clone(),
        config: ReportConfig { mesh: grid.mesh(), d: graph.d(), ..cfg.clone() },
        cell_count: n,
        edge_count: graph.edge_count(),
        chain_recurrent,
        nonwandering: cells(&nonwandering),
        recurrent: cells(&recurrent),
        minimal: cells(&minimal),
        minimality_inconclusive: cells(&inconclusive),
        omega_sample: cells(&omega),
        violations,
    })
}

/// Comparison of the chain recurrent cells with the closure of the
/// minimal-consistent cells at a given radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureVerdict {
    pub radius: f64,
    /// CR lies within `radius` of minimal cells.
    pub equal: bool,
    /// Largest distance from a CR cell to the nearest minimal cell; None
    /// when there are no minimal cells.
    pub excess: Option<f64>,
    pub farthest_cell: Option<usize>,
    pub farthest_point: Option<Point>,
}

impl RecurrenceReport {
    pub fn grid(&self) -> Result<Grid> {
        build_grid(&self.space, self.config.mesh)
    }

    /// Whether CR equals the closure of the minimal points at this scale.
    pub fn closure_verdict(&self, radius: f64) -> Result<ClosureVerdict> {
        let grid = self.grid()?;
        let mins: Vec<Point> = self.minimal.iter().map(|&c| grid.rep(c)).collect();
        if mins.is_empty() {
            let far = self.chain_recurrent.first().copied();
            return Ok(ClosureVerdict {
                radius,
                equal: self.chain_recurrent.is_empty(),
                excess: None,
                farthest_cell: far,
                farthest_point: far.map(|c| grid.rep(c)),
            });
        }
        let loc = Locator::new(&self.space, &mins);
        let mut worst: (f64, Option<usize>) = (0.0, None);
        for &c in &self.chain_recurrent {
            let (_, d) = loc.nearest(&grid.rep(c));
            if d > worst.0 || worst.1.is_none() {
                worst = (d, Some(c));
            }
        }
        Ok(ClosureVerdict {
            radius,
            equal: worst.0 <= radius,
            excess: Some(worst.0),
            farthest_cell: worst.1,
            farthest_point: worst.1.map(|c| grid.rep(c)),
        })
    }

    /// Representatives of a cell list.
    pub fn points(&self, cells: &[usize]) -> Result<Vec<Point>> {
        let grid = self.grid()?;
        Ok(cells.iter().map(|&c| grid.rep(c)).collect())
    }
}

//! Almost-invariant epsilon-networks: finite point sets all of whose
//! iterates over a checked range stay epsilon-dense in a probed region.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measures::EmpiricalMeasure;
use crate::pseudo::periodic_chain_in_graph;
use crate::recurrence::{cell_seed, chain_recurrent_cells, classify_on_grid, RecurrenceReport, TransitionGraph};
use crate::shadowing::cover::{greedy_cover, Bits};
use crate::shadowing::multishadow_search;
use crate::space::{build_grid, Locator, Point, ProbeSet, Space};
use crate::systems::{Seed, SeedOrigin, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkDomain {
    Space,
    ChainRecurrent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPiece {
    pub start: Point,
    /// Number of iterates taken after the start.
    pub length: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkProvenance {
    MinimalOrbits { report_mesh: f64, domain: NetworkDomain, orbits: Vec<OrbitPiece> },
    PeriodicChains { d: f64, graph_mesh: f64, chains: Vec<OrbitPiece> },
    Manual,
}

/// A point set verified to be an eps-network at every iterate in
/// [n_min, n_max] on a probe set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonNetwork {
    pub seeds: Vec<Seed>,
    /// Values of the seeds at time 0.
    pub points: Vec<Point>,
    pub eps: f64,
    pub n_min: i64,
    pub n_max: i64,
    /// Largest probe-to-network distance at each checked iterate.
    pub worst_radius: Vec<f64>,
    pub probes: ProbeSet,
    pub provenance: NetworkProvenance,
    /// Size before minimisation, when minimised.
    pub minimized_from: Option<usize>,
}

/// First iterate and probe where coverage fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageFailure {
    pub eps: f64,
    pub n: i64,
    pub probe: Point,
    pub distance: f64,
}

/// A constructor could not produce a candidate network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionImpossible {
    pub eps: f64,
    pub reason: String,
    /// Center of a ball the construction cannot serve.
    pub witness: Point,
    pub radius: f64,
    /// Distance from the witness to the nearest minimal-consistent cell.
    pub nearest_minimal: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum NetworkOutcome {
    Verified(EpsilonNetwork),
    Failed(CoverageFailure),
    Impossible(ConstructionImpossible),
}

impl NetworkOutcome {
    pub fn network(&self) -> Option<&EpsilonNetwork> {
        match self {
            NetworkOutcome::Verified(n) => Some(n),
            _ => None,
        }
    }

    pub fn into_network(self) -> Option<EpsilonNetwork> {
        match self {
            NetworkOutcome::Verified(n) => Some(n),
            _ => None,
        }
    }
}

/// Iterate range [n_min, n_max] for a horizon: symmetric when two-sided.
pub fn iterate_range(system: &SystemSpec, horizon: u64, two_sided: bool) -> Result<(i64, i64)> {
    if two_sided && !system.is_invertible() {
        return invalid(format!("{} is not invertible; negative iterates are undefined", system.label()));
    }
    let n = horizon as i64;
    Ok((if two_sided { -n } else { 0 }, n))
}

/// Coverage of the probes by the iterates of the seeds, one entry per
/// iterate, stopping at the first failure.
fn coverage(
    system: &SystemSpec,
    seeds: &[Seed],
    eps: f64,
    range: (i64, i64),
    probes: &ProbeSet,
) -> Result<std::result::Result<Vec<f64>, CoverageFailure>> {
    let orbits = system.orbits_x(seeds, range.0, range.1)?;
    Ok(coverage_of(system.space(), &orbits, None, eps, range, probes))
}

fn coverage_of(
    space: &Space,
    orbits: &[Vec<f64>],
    keep: Option<&[bool]>,
    eps: f64,
    range: (i64, i64),
    probes: &ProbeSet,
) -> std::result::Result<Vec<f64>, CoverageFailure> {
    let mut worst = Vec::with_capacity((range.1 - range.0 + 1) as usize);
    let mut pts = Vec::with_capacity(orbits.len());
    for (t, n) in (range.0..=range.1).enumerate() {
        pts.clear();
        for (i, o) in orbits.iter().enumerate() {
            if keep.map_or(true, |k| k[i]) {
                pts.push(Point::new1(o[t]));
            }
        }
        let loc = Locator::new(space, &pts);
        let mut w = 0.0f64;
        for p in &probes.points {
            let d = loc.nearest(p).1;
            if d > eps {
                return Err(CoverageFailure { eps, n, probe: *p, distance: d });
            }
            w = w.max(d);
        }
        worst.push(w);
    }
    Ok(worst)
}

fn time_zero(system: &SystemSpec, seeds: &[Seed]) -> Result<Vec<Point>> {
    Ok(system.orbits_x(seeds, 0, 0)?.into_iter().map(|o| Point::new1(o[0])).collect())
}

/// Checks that T^n of the seed set covers every probe within eps for each
/// n in the horizon range.
pub fn verify_almost_invariant(
    system: &SystemSpec,
    seeds: &[Seed],
    eps: f64,
    horizon: u64,
    two_sided: bool,
    probes: &ProbeSet,
) -> Result<NetworkOutcome> {
    verify_with(system, seeds, eps, horizon, two_sided, probes, NetworkProvenance::Manual)
}

fn verify_with(
    system: &SystemSpec,
    seeds: &[Seed],
    eps: f64,
    horizon: u64,
    two_sided: bool,
    probes: &ProbeSet,
    provenance: NetworkProvenance,
) -> Result<NetworkOutcome> {
    if seeds.is_empty() {
        return invalid("network is empty");
    }
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    if system.space().dim() != 1 {
        return invalid("networks need a one-dimensional system");
    }
    let range = iterate_range(system, horizon, two_sided)?;
    match coverage(system, seeds, eps, range, probes)? {
        Err(f) => Ok(NetworkOutcome::Failed(f)),
        Ok(worst) => Ok(NetworkOutcome::Verified(EpsilonNetwork {
            points: time_zero(system, seeds)?,
            seeds: seeds.to_vec(),
            eps,
            n_min: range.0,
            n_max: range.1,
            worst_radius: worst,
            probes: probes.clone(),
            provenance,
            minimized_from: None,
        })),
    }
}

impl EpsilonNetwork {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Recomputes every iterate and the recorded coverage radii.
    pub fn verify(&self, system: &SystemSpec) -> Result<bool> {
        let range = (self.n_min, self.n_max);
        match coverage(system, &self.seeds, self.eps, range, &self.probes)? {
            Ok(worst) => Ok(worst == self.worst_radius),
            Err(_) => Ok(false),
        }
    }

    /// Rows `n,worst_radius`.
    pub fn write_radius_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "worst_radius"])?;
        for (i, r) in self.worst_radius.iter().enumerate() {
            out.write_record([(self.n_min + i as i64).to_string(), r.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn dedup_seeds(system: &SystemSpec, seeds: Vec<Seed>) -> Result<Vec<Seed>> {
    let pts = time_zero(system, &seeds)?;
    let mut out: Vec<Seed> = Vec::new();
    let mut seen: Vec<f64> = Vec::new();
    for (s, p) in seeds.into_iter().zip(pts) {
        if !seen.contains(&p.x()) {
            seen.push(p.x());
            out.push(s);
        }
    }
    Ok(out)
}

/// Options for [`construct_from_minimal_orbits`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalNetworkOptions {
    pub horizon: u64,
    pub two_sided: bool,
    pub domain: NetworkDomain,
}

/// Builds a network from orbit pieces of minimal-consistent points.
///
/// An eps/2-net {b_i} of the domain is served greedily: each b_i not yet
/// within eps/2 of a chosen point takes the nearest minimal-consistent cell,
/// whose orbit x, T(x), ..., T^n(x) joins the network, n being the largest
/// return gap of x to the eps/2-cells it visits. A b_i with no
/// minimal-consistent cell within eps/2 makes the construction impossible.
pub fn construct_from_minimal_orbits(
    system: &SystemSpec,
    eps: f64,
    report: &RecurrenceReport,
    opts: &MinimalNetworkOptions,
) -> Result<NetworkOutcome> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    if &report.system != system {
        return invalid("report belongs to a different system");
    }
    let space = system.space();
    let grid = report.grid()?;
    let half = 0.5 * eps;
    let domain_cells: Vec<usize> = match opts.domain {
        NetworkDomain::Space => (0..grid.len()).collect(),
        NetworkDomain::ChainRecurrent => report.chain_recurrent.clone(),
    };
    if domain_cells.is_empty() {
        return invalid("empty domain");
    }
    let b_net: Vec<Point> = match opts.domain {
        NetworkDomain::Space => build_grid(space, half.min(space.diameter()))?.reps().to_vec(),
        NetworkDomain::ChainRecurrent => {
            let mut net: Vec<Point> = Vec::new();
            for &c in &domain_cells {
                let p = grid.rep(c);
                if !net.iter().any(|q| space.dist(&p, q) <= half) {
                    net.push(p);
                }
            }
            net
        }
    };
    let minimal: Vec<Point> = report.minimal.iter().map(|&c| grid.rep(c)).collect();
    let loc = Locator::new(space, &minimal);
    let mut worst: Option<(f64, Point)> = None;
    for b in &b_net {
        let d = if minimal.is_empty() { f64::INFINITY } else { loc.nearest(b).1 };
        if d > half && worst.map_or(true, |w| d > w.0) {
            worst = Some((d, *b));
        }
    }
    if let Some((d, b)) = worst {
        return Ok(NetworkOutcome::Impossible(ConstructionImpossible {
            eps,
            reason: "no minimal-consistent cell within eps/2 of a net point".into(),
            witness: b,
            radius: half,
            nearest_minimal: d.is_finite().then_some(d),
        }));
    }
    let cover = build_grid(space, eps.min(space.diameter()))?;
    let mut seeds: Vec<Seed> = Vec::new();
    let mut chosen: Vec<Point> = Vec::new();
    let mut pieces = Vec::new();
    for b in &b_net {
        if chosen.iter().any(|q| space.dist(b, q) <= half) {
            continue;
        }
        let cell = report.minimal[loc.nearest(b).0];
        let seed = cell_seed(&grid, cell);
        let v = classify_on_grid(system, &seed, &cover, report.config.horizon, report.config.gap_fraction)?;
        let n = v.max_gap;
        let piece: Vec<Seed> = (0..=n as i64).map(|j| seed.shifted(j)).collect();
        chosen.extend(time_zero(system, &piece)?);
        seeds.extend(piece);
        pieces.push(OrbitPiece { start: grid.rep(cell), length: n });
    }
    let seeds = dedup_seeds(system, seeds)?;
    let probes = ProbeSet::from_cells(&grid, &domain_cells);
    let provenance = NetworkProvenance::MinimalOrbits { report_mesh: grid.mesh(), domain: opts.domain, orbits: pieces };
    verify_with(system, &seeds, eps, opts.horizon, opts.two_sided, &probes, provenance)
}

/// Options for [`construct_from_periodic_chains`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainNetworkOptions {
    pub budget: usize,
    pub horizon: u64,
    pub two_sided: bool,
    pub max_period: usize,
    /// Periods in the multishadowed extension of each chain.
    pub repeats: usize,
}

impl Default for ChainNetworkOptions {
    fn default() -> Self {
        ChainNetworkOptions { budget: 8, horizon: 1000, two_sided: false, max_period: 1000, repeats: 8 }
    }
}

/// Replaces a seed by the exact periodic point of period dividing p it
/// approximates, for maps with exact rational arithmetic on denominator
/// 2^p - 1. Other seeds are returned unchanged.
fn snap_periodic(system: &SystemSpec, seed: Seed, p: usize) -> Result<Seed> {
    if system.is_invertible() || !(1..=62).contains(&p) {
        return Ok(seed);
    }
    let den = (1u64 << p) - 1;
    if system.rational_rule(den).is_none() {
        return Ok(seed);
    }
    let x = system.orbit_at(&seed, 0)?.x();
    let num = ((x * den as f64).round() as u64) % den;
    Ok(Seed::rational(num, den))
}

/// Builds a network from periodic chains through an eps-net of the chain
/// recurrent cells of the graph.
///
/// Each chain, repeated a few periods, is multishadowed; the shadowing
/// orbits and their iterates over one period form the network, which is
/// verified on the chain recurrent cells at 2 eps.
pub fn construct_from_periodic_chains(
    system: &SystemSpec,
    eps: f64,
    d: f64,
    graph: &TransitionGraph,
    opts: &ChainNetworkOptions,
) -> Result<NetworkOutcome> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    if !(d >= graph.d()) {
        return invalid(format!("d = {d} is below the graph's d = {}", graph.d()));
    }
    let grid = graph.grid();
    let space = system.space();
    let cr = chain_recurrent_cells(graph);
    if cr.is_empty() {
        return invalid("graph has no chain recurrent cells");
    }
    let mut net: Vec<Point> = Vec::new();
    for &c in &cr {
        let p = grid.rep(c);
        if !net.iter().any(|q| space.dist(&p, q) <= eps) {
            net.push(p);
        }
    }
    let mut seeds = Vec::new();
    let mut pieces = Vec::new();
    for x in &net {
        let chain = match periodic_chain_in_graph(system, graph, x, opts.max_period, None)? {
            Some(c) => c,
            None => {
                return Ok(NetworkOutcome::Impossible(ConstructionImpossible {
                    eps,
                    reason: format!("no periodic chain of period at most {}", opts.max_period),
                    witness: *x,
                    radius: eps,
                    nearest_minimal: None,
                }))
            }
        };
        let period = chain.len() - 1;
        let ext = chain.periodic_extension(period * opts.repeats.max(1) + 1)?;
        let cert = match multishadow_search(system, &ext, eps, grid, opts.budget)?.certificate() {
            Some(c) => c.clone(),
            None => {
                return Ok(NetworkOutcome::Impossible(ConstructionImpossible {
                    eps,
                    reason: format!("periodic chain not multishadowed within {} orbits", opts.budget),
                    witness: *x,
                    radius: eps,
                    nearest_minimal: None,
                }))
            }
        };
        for s in cert.seeds {
            let s = snap_periodic(system, s, period)?;
            for i in 0..period as i64 {
                seeds.push(s.shifted(i));
            }
        }
        pieces.push(OrbitPiece { start: *x, length: period as u64 });
    }
    let seeds = dedup_seeds(system, seeds)?;
    let probes = ProbeSet::from_cells(grid, &cr);
    let provenance = NetworkProvenance::PeriodicChains { d, graph_mesh: grid.mesh(), chains: pieces };
    verify_with(system, &seeds, 2.0 * eps, opts.horizon, opts.two_sided, &probes, provenance)
}

/// Largest (point, iterate, probe) incidence table built by
/// [`minimize_network`].
const COVER_TABLE_LIMIT: usize = 1 << 29;

/// Drops points while the network still verifies over its recorded range
/// and probes. Duplicate orbits go first; the rest is reduced both by a
/// greedy set cover of the (iterate, probe) pairs and by removal in index
/// order, each followed by a pruning pass, keeping the smaller result.
pub fn minimize_network(system: &SystemSpec, network: &EpsilonNetwork) -> Result<EpsilonNetwork> {
    let range = (network.n_min, network.n_max);
    let orbits = system.orbits_x(&network.seeds, range.0, range.1)?;
    let n = orbits.len();
    let space = system.space();
    let eps = network.eps;
    let covers = |keep: &[bool]| coverage_of(space, &orbits, Some(keep), eps, range, &network.probes).is_ok();
    let prune = |keep: &mut Vec<bool>, order: &[usize]| {
        for &i in order {
            if keep[i] && keep.iter().filter(|&&k| k).count() > 1 {
                keep[i] = false;
                if !covers(keep) {
                    keep[i] = true;
                }
            }
        }
    };
    let mut unique = vec![true; n];
    for i in 0..n {
        if (0..i).any(|j| unique[j] && orbits[j] == orbits[i]) {
            unique[i] = false;
        }
    }
    if !covers(&unique) {
        return invalid("input network does not verify");
    }
    let order: Vec<usize> = (0..n).collect();
    let mut keep = unique.clone();
    prune(&mut keep, &order);

    let steps = orbits.first().map_or(0, Vec::len);
    let universe = steps * network.probes.points.len();
    let candidates: Vec<usize> = (0..n).filter(|&i| unique[i]).collect();
    if universe > 0 && candidates.len().saturating_mul(universe) <= COVER_TABLE_LIMIT {
        let sets: Vec<Bits> = candidates
            .iter()
            .map(|&i| {
                let mut b = Bits::new(universe);
                for (t, &x) in orbits[i].iter().enumerate() {
                    let y = Point::new1(x);
                    for (j, p) in network.probes.points.iter().enumerate() {
                        if space.dist(&y, p) <= eps {
                            b.set(t * network.probes.points.len() + j);
                        }
                    }
                }
                b
            })
            .collect();
        let cover = greedy_cover(&sets, universe, usize::MAX);
        if cover.complete {
            let mut alt = vec![false; n];
            for &c in &cover.chosen {
                alt[candidates[c]] = true;
            }
            let rev: Vec<usize> = cover.chosen.iter().rev().map(|&c| candidates[c]).collect();
            prune(&mut alt, &rev);
            if alt.iter().filter(|&&k| k).count() < keep.iter().filter(|&&k| k).count() {
                keep = alt;
            }
        }
    }
    let worst = match coverage_of(space, &orbits, Some(&keep), eps, range, &network.probes) {
        Ok(w) => w,
        Err(_) => return invalid("minimised network does not verify"),
    };
    let seeds: Vec<Seed> = network.seeds.iter().zip(&keep).filter(|(_, k)| **k).map(|(s, _)| s.clone()).collect();
    let points = network.points.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect();
    Ok(EpsilonNetwork {
        seeds,
        points,
        worst_radius: worst,
        minimized_from: Some(network.minimized_from.unwrap_or(network.len())),
        ..network.clone()
    })
}

/// Size of the smallest eps-network of a one-dimensional space:
/// ceil(length / (2 eps)).
pub fn covering_lower_bound(space: &Space, eps: f64) -> Option<usize> {
    let length = match space {
        Space::Circle {} => 1.0,
        Space::Interval { a, b } => b - a,
        _ => return None,
    };
    Some(((length / (2.0 * eps)) - 1e-12).ceil().max(1.0) as usize)
}

/// A point set whose iterates' eps-neighbourhoods carry mass above 1 - eps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuNetwork {
    pub points: Vec<Point>,
    pub eps: f64,
    pub n_min: i64,
    pub n_max: i64,
    /// Smallest covered mass over the checked iterates.
    pub min_mass: f64,
    pub worst_n: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum MuOutcome {
    Verified(MuNetwork),
    Failed { eps: f64, n: i64, covered_mass: f64 },
}

/// Checks mu(U_eps(T^n A)) > 1 - eps over the horizon range, counting the
/// mass of cells whose representative is within eps of T^n A.
pub fn verify_mu_almost_invariant(
    system: &SystemSpec,
    seeds: &[Seed],
    eps: f64,
    measure: &EmpiricalMeasure,
    horizon: u64,
    two_sided: bool,
) -> Result<MuOutcome> {
    if seeds.is_empty() {
        return invalid("network is empty");
    }
    if (measure.total_mass() - 1.0).abs() > 1e-9 {
        return invalid("measure is not normalised");
    }
    let grid = measure.grid();
    if grid.space() != system.space() {
        return invalid("measure lives on a different space");
    }
    let range = iterate_range(system, horizon, two_sided)?;
    let orbits = system.orbits_x(seeds, range.0, range.1)?;
    let support = measure.support();
    let mut best = (f64::INFINITY, range.0);
    let mut pts = Vec::with_capacity(seeds.len());
    for (t, n) in (range.0..=range.1).enumerate() {
        pts.clear();
        pts.extend(orbits.iter().map(|o| Point::new1(o[t])));
        let loc = Locator::new(system.space(), &pts);
        let mass: f64 =
            support.iter().filter(|&&c| loc.nearest(&grid.rep(c)).1 <= eps).map(|&c| measure.weights()[c]).sum();
        if mass < best.0 {
            best = (mass, n);
        }
        if !(mass > 1.0 - eps) {
            return Ok(MuOutcome::Failed { eps, n, covered_mass: mass });
        }
    }
    Ok(MuOutcome::Verified(MuNetwork {
        points: time_zero(system, seeds)?,
        eps,
        n_min: range.0,
        n_max: range.1,
        min_mass: best.0,
        worst_n: best.1,
    }))
}

/// Seeds of plain points at time 0.
pub fn point_seeds(points: &[Point]) -> Vec<Seed> {
    points.iter().map(|p| Seed { index: 0, origin: SeedOrigin::Point(*p) }).collect()
}

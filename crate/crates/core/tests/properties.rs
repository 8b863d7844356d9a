use proptest::prelude::*;
use shadowlab::measures::{
    cesaro_invariantize, invariance_defect, test_function_defect, CellMap, EmpiricalMeasure, TestFunction,
};
use shadowlab::networks::{verify_almost_invariant, NetworkOutcome};
use shadowlab::pseudo::{
    arc_pseudo, drift_pseudo, lift_displacement, noisy_orbit, periodic_chain, verify_pseudotrajectory,
    winding_pseudo, ArcOptions, DriftOptions, DriftStop, Provenance, Pseudotrajectory,
};
use shadowlab::recurrence::{build_transition_graph, cell_seed, chain_recurrent_cells, recurrence_report, ReportConfig};
use shadowlab::shadowing::{
    multishadow_search, shadow_search, MultishadowCertificate, ShadowCertificate, SubsequenceCertificate,
    SubsequenceOptions, SubsequenceSearch,
};
use shadowlab::space::{build_grid, verify_epsilon_network, Point, ProbeSet, Space};
use shadowlab::systems::{parse_selector, Seed, SystemSpec, ZOO};

fn sys(name: &str) -> SystemSpec {
    parse_selector(name).unwrap()
}

fn spaces() -> Vec<Space> {
    vec![Space::circle(), Space::interval(-1.0, 1.0).unwrap(), Space::torus()]
}

fn any_point(space: &Space, u: f64, v: f64) -> Point {
    match space {
        Space::Interval { a, b } => Point::new1(a + (b - a) * u),
        _ if space.dim() == 2 => Point::new2(u, v),
        _ => Point::new1(u),
    }
}

fn random_mass(grid: &shadowlab::space::Grid, raw: &[f64]) -> EmpiricalMeasure {
    let mut w = vec![0.0; grid.len()];
    for (i, r) in raw.iter().enumerate() {
        w[(i * 7919) % grid.len()] += r;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    EmpiricalMeasure::new(grid, w, Vec::new()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(k in 0usize..3, c in prop::array::uniform6(0.0f64..1.0)) {
        let space = &spaces()[k];
        let p = any_point(space, c[0], c[1]);
        let q = any_point(space, c[2], c[3]);
        let r = any_point(space, c[4], c[5]);
        prop_assert_eq!(space.dist(&p, &p), 0.0);
        prop_assert!((space.dist(&p, &q) - space.dist(&q, &p)).abs() <= 1e-12);
        prop_assert!(space.dist(&p, &r) <= space.dist(&p, &q) + space.dist(&q, &r) + 1e-12);
    }

    #[test]
    fn grids_are_half_mesh_nets(k in 0usize..2, cells in 2usize..300, extra in 0.0f64..0.2) {
        let space = &spaces()[k];
        let mesh = space.diameter() / cells as f64;
        let grid = build_grid(space, mesh).unwrap();
        let probes = ProbeSet::from_grid(&build_grid(space, mesh / 10.0).unwrap());
        let eps = mesh / 2.0 + 1e-12;
        prop_assert!(verify_epsilon_network(space, grid.reps(), &probes, eps).unwrap().covered);
        prop_assert!(verify_epsilon_network(space, grid.reps(), &probes, eps + extra).unwrap().covered);
    }

    #[test]
    fn rotation_is_an_isometry(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let s = sys("rotation");
        let (p, q) = (Point::new1(x), Point::new1(y));
        prop_assert!((s.space().dist(&s.map(&p), &s.map(&q)) - s.space().dist(&p, &q)).abs() <= 1e-12);
    }

    #[test]
    fn doubling_expands_locally(x in 0.0f64..1.0, dx in 0.0f64..0.2499) {
        let s = sys("doubling");
        let (p, q) = (Point::new1(x), s.space().canonical(Point::new1(x + dx)));
        let before = s.space().dist(&p, &q);
        prop_assert!((s.space().dist(&s.map(&p), &s.map(&q)) - 2.0 * before).abs() <= 1e-9);
    }

    /// Flows keep fixed points, preserve order and never pass a fixed point.
    #[test]
    fn flows_are_monotone(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let sin2 = sys("sin2_circle");
        for f in [0.0, 0.5] {
            prop_assert_eq!(sin2.map(&Point::new1(f)).x(), f);
        }
        let (a, b) = (x.min(y), x.max(y));
        let (ta, tb) = (sin2.map(&Point::new1(a)).x(), sin2.map(&Point::new1(b)).x());
        if b < 0.5 {
            prop_assert!(a <= ta && ta <= tb && tb <= 0.5);
        } else if a >= 0.5 && tb != 0.0 {
            prop_assert!(a <= ta && ta <= tb && tb < 1.0);
        }
        let quartic = sys("quartic_interval");
        for f in [-1.0, 0.0, 1.0] {
            prop_assert_eq!(quartic.map(&Point::new1(f)).x(), f);
        }
        let (a, b) = (2.0 * a - 1.0, 2.0 * b - 1.0);
        let (ta, tb) = (quartic.map(&Point::new1(a)).x(), quartic.map(&Point::new1(b)).x());
        prop_assert!(ta <= tb);
        for (z, tz) in [(a, ta), (b, tb)] {
            let limit = if z < 0.0 { 0.0 } else { 1.0 };
            prop_assert!(z <= tz && tz <= limit);
        }
    }

    #[test]
    fn noisy_and_drift_generators_are_d_pseudo(k in 0usize..6, x in 0.0f64..1.0, d in 1e-4f64..0.05, seed in 0u64..1000) {
        let s = sys(ZOO[k]);
        let x0 = any_point(s.space(), x, 0.0);
        let p = noisy_orbit(&s, &x0, d, 300, seed).unwrap();
        prop_assert!(verify_pseudotrajectory(&s, p.points(), d).unwrap());
        if s.space().dim() == 1 {
            let p = drift_pseudo(&s, &x0, d, DriftStop::Steps(300), &DriftOptions::default()).unwrap();
            prop_assert!(verify_pseudotrajectory(&s, p.points(), d).unwrap());
        }
    }

    /// Splicing two d-pseudotrajectories whose junction step is within d.
    #[test]
    fn concatenation_closure(k in 0usize..6, x in 0.0f64..1.0, d in 1e-3f64..0.05, seed in 0u64..1000) {
        let s = sys(ZOO[k]);
        let a = noisy_orbit(&s, &any_point(s.space(), x, 0.0), d, 100, seed).unwrap();
        let last = *a.points().last().unwrap();
        let next = noisy_orbit(&s, &s.map(&last), d, 100, seed + 1).unwrap();
        let mut pts = a.points().to_vec();
        pts.extend_from_slice(next.points());
        prop_assert!(Pseudotrajectory::new(&s, 0, pts, d, Provenance::Exact).is_ok());
    }

    #[test]
    fn winding_displacement_counts_turns(turns in 0u32..6, d in 0.005f64..0.05) {
        let s = sys("sin2_circle");
        let p = winding_pseudo(&s, d, turns).unwrap();
        prop_assert!(verify_pseudotrajectory(&s, p.points(), d).unwrap());
        let lift = lift_displacement(s.space(), p.points());
        prop_assert!((lift - turns as f64).abs() <= d, "lift {} for {} turns", lift, turns);
    }
}

#[test]
fn chain_and_arc_generators_are_d_pseudo() {
    for name in ["rotation", "identity", "north_south"] {
        let s = sys(name);
        let grid = build_grid(s.space(), 0.01).unwrap();
        let p = periodic_chain(&s, &Point::new1(0.3), 0.05, &grid, 500).unwrap().expect("chain exists");
        assert!(verify_pseudotrajectory(&s, p.points(), 0.05).unwrap());
    }
    let s = sys("rotation");
    let p = arc_pseudo(&s, &Point::new1(0.1), &Point::new1(0.4), 0.01, &ArcOptions::default()).unwrap();
    assert!(verify_pseudotrajectory(&s, p.points(), 0.01).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// At d >= L mesh / 2 every exact itinerary is a path of the graph.
    #[test]
    fn inclusion_chain_and_d_monotonicity(k in 0usize..6, cells in 20usize..150, extra in 0.0f64..0.03, horizon in 50u64..2000) {
        let s = sys(ZOO[k]);
        let mesh = s.space().diameter() / cells as f64;
        let d = s.lipschitz_bound() * mesh / 2.0 + extra;
        let r = recurrence_report(&s, &ReportConfig::new(mesh, d, horizon)).unwrap();
        prop_assert_eq!(r.violations.total(), 0);
        let sub = |a: &[usize], b: &[usize]| a.iter().all(|c| b.binary_search(c).is_ok());
        prop_assert!(sub(&r.minimal, &r.recurrent));
        prop_assert!(sub(&r.recurrent, &r.nonwandering));
        prop_assert!(sub(&r.nonwandering, &r.chain_recurrent));
        let grid = build_grid(s.space(), mesh).unwrap();
        let small = chain_recurrent_cells(&build_transition_graph(&s, &grid, d, usize::MAX).unwrap());
        let large = chain_recurrent_cells(&build_transition_graph(&s, &grid, 2.0 * d + 1e-3, usize::MAX).unwrap());
        prop_assert!(sub(&small, &large));
    }

    /// Certificates re-verify, survive a JSON round trip and behave
    /// monotonically in eps; shadowing implies multishadowing with one orbit.
    #[test]
    fn certificates(k in 0usize..6, x in 0.0f64..1.0, d in 0.0f64..0.01, len in 8usize..64, seed in 0u64..1000) {
        let s = sys(ZOO[k]);
        let p = noisy_orbit(&s, &any_point(s.space(), x, 0.0), d, len, seed).unwrap();
        let grid = build_grid(s.space(), 0.05).unwrap();
        let mut last_n = usize::MAX;
        for eps in [0.05, 0.1, 0.2, 0.4] {
            let single = shadow_search(&s, &p, eps, &grid).unwrap();
            let multi = multishadow_search(&s, &p, eps, &grid, 64).unwrap();
            if let Some(c) = single.certificate() {
                prop_assert!(c.verify(&s, &p).unwrap());
                let back: ShadowCertificate = serde_json::from_str(&serde_json::to_string(c).unwrap()).unwrap();
                prop_assert!(back.verify(&s, &p).unwrap());
                let one = multishadow_search(&s, &p, eps, &grid, 1).unwrap();
                prop_assert_eq!(one.certificate().map(|m| m.n), Some(1));
                for wider in [eps * 1.5, eps * 3.0] {
                    prop_assert!(shadow_search(&s, &p, wider, &grid).unwrap().certificate().is_some());
                }
            }
            if let Some(m) = multi.certificate() {
                prop_assert!(m.verify(&s, &p).unwrap());
                let back: MultishadowCertificate = serde_json::from_str(&serde_json::to_string(m).unwrap()).unwrap();
                prop_assert!(back.verify(&s, &p).unwrap());
                prop_assert!(m.n <= last_n, "N grew from {} to {} at eps {}", last_n, m.n, eps);
                last_n = m.n;
            } else {
                prop_assert_eq!(last_n, usize::MAX);
            }
        }
        let opts = SubsequenceOptions { horizon_p: 50, classify_horizon: 500, ..Default::default() };
        let sub = SubsequenceSearch::new(&s, 0.1, opts).unwrap().run(&p).unwrap();
        prop_assert!(sub.density > 0.0);
        let back: SubsequenceCertificate = serde_json::from_str(&serde_json::to_string(&sub).unwrap()).unwrap();
        prop_assert!(back.verify(&s, &p).unwrap());
    }
}

#[test]
fn greedy_multishadow_n_is_nonincreasing_in_eps() {
    for name in ZOO {
        let s = sys(name);
        let grid = build_grid(s.space(), 0.02).unwrap();
        for seed in 0..3 {
            let p = noisy_orbit(&s, &Point::new1(0.1 + 0.3 * seed as f64), 5e-3, 3000, seed).unwrap();
            let ns: Vec<Option<usize>> = [0.05, 0.1, 0.2, 0.4]
                .iter()
                .map(|&eps| multishadow_search(&s, &p, eps, &grid, 1000).unwrap().certificate().map(|c| c.n))
                .collect();
            for w in ns.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    assert!(b <= a, "{name} seed {seed}: {ns:?}");
                }
            }
        }
    }
}

#[test]
fn network_verification_monotonicity() {
    let s = sys("rotation");
    let grid = build_grid(s.space(), 0.01).unwrap();
    let probes = ProbeSet::from_grid(&grid);
    let seeds: Vec<Seed> = (0..8).map(|i| Seed::point(Point::new1(i as f64 / 8.0 + 0.01))).collect();
    let ok = |eps: f64, horizon: u64| {
        matches!(verify_almost_invariant(&s, &seeds, eps, horizon, false, &probes).unwrap(), NetworkOutcome::Verified(_))
    };
    assert!(ok(0.07, 1000));
    assert!(ok(0.1, 1000) && ok(0.07, 10));
    assert!(!ok(0.05, 1000));
    assert!(!ok(0.05, 2000));

    // Every probe of a verified network on the doubling map has a
    // minimal-consistent cell within 2 eps.
    let d = sys("doubling");
    let report = recurrence_report(&d, &ReportConfig::new(0.01, 0.01, 2000)).unwrap();
    let mins = report.points(&report.minimal).unwrap();
    let eps = 0.1;
    let seeds: Vec<Seed> = report.minimal.iter().map(|&c| cell_seed(&grid, c)).collect();
    if let NetworkOutcome::Verified(net) = verify_almost_invariant(&d, &seeds, eps, 200, false, &probes).unwrap() {
        for probe in &net.probes.points {
            assert!(mins.iter().any(|m| d.space().dist(m, probe) <= 2.0 * eps));
        }
    } else {
        panic!("minimal orbits of the doubling map do not form a network");
    }
}

/// Cesàro defects shrink with n, test-function defects obey the TV bound
/// and near-invariant measures sit near recurrent cells.
#[test]
fn cesaro_measures() {
    for name in ZOO {
        let s = sys(name);
        let grid = build_grid(s.space(), 0.01).unwrap();
        let map = CellMap::new(&s, &grid).unwrap();
        let report = recurrence_report(&s, &ReportConfig::new(0.01, 0.01, 10_000)).unwrap();
        let recurrent = report.points(&report.recurrent).unwrap();
        let tests = TestFunction::random_family(s.space(), 10, 5, 7).unwrap();
        // Steps each representative orbit spends beyond 1.5 mesh of the
        // recurrent cells: Cesàro averages over n steps keep at most
        // max/n of their mass there.
        let seeds: Vec<Seed> = (0..grid.len()).map(|c| cell_seed(&grid, c)).collect();
        let orbits = s.orbits_x(&seeds, 0, 10_000).unwrap();
        let far = |x: f64| recurrent.iter().all(|r| s.space().dist(r, &Point::new1(x)) > 1.5 * grid.mesh());
        let outside = |n: usize| orbits.iter().map(|o| o[..n].iter().filter(|&&x| far(x)).count()).max().unwrap();
        for seed in 0..3u64 {
            let raw: Vec<f64> = (0..20).map(|i| ((i as u64 * 2654435761 + seed * 97) % 1000 + 1) as f64).collect();
            let mu = random_mass(&grid, &raw);
            let mut last = f64::INFINITY;
            for n in [100, 1000, 10_000] {
                let m = cesaro_invariantize(&s, &mu, n).unwrap();
                assert!((m.total_mass() - 1.0).abs() <= 1e-12);
                let defect = invariance_defect(&s, &m).unwrap();
                assert!(defect <= last + 1e-12, "{name} seed {seed}: defect {defect} after {last} at n {n}");
                last = defect;
                for f in &tests {
                    let tf = test_function_defect(&map, &m, f).unwrap();
                    assert!(tf <= defect * 2.0 * f.sup_bound() + 1e-12, "{name}: {tf} vs {defect}");
                }
                if defect <= 0.02 {
                    let near: f64 = m
                        .support()
                        .iter()
                        .filter(|&&c| recurrent.iter().any(|r| s.space().dist(r, &grid.rep(c)) <= 2.0 * grid.mesh() + 1e-12))
                        .map(|&c| m.weights()[c])
                        .sum();
                    let floor = (0.95f64).min(1.0 - outside(n) as f64 / n as f64);
                    assert!(near >= floor - 1e-12, "{name} seed {seed} n {n}: {near} of the mass near recurrent cells");
                }
            }
        }
    }
}

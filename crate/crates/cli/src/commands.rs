use std::io::Write;

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::{json, Value};
use shadowlab::measures::{full_support_measure, recurrent_fraction};
use shadowlab::networks::{
    construct_from_minimal_orbits, construct_from_periodic_chains, covering_lower_bound, minimize_network,
    ChainNetworkOptions, EpsilonNetwork, MinimalNetworkOptions, NetworkDomain, NetworkOutcome,
};
use shadowlab::pseudo::{noisy_orbit, Pseudotrajectory};
use shadowlab::recurrence::{build_transition_graph, recurrence_report, RecurrenceReport, ReportConfig};
use shadowlab::shadowing::{multishadow_search, shadow_search, subsequence_shadow_search, MultishadowOutcome, ShadowOutcome};
use shadowlab::space::{build_grid, Point};
use shadowlab::systems::{parse_selector, SystemSpec, ZOO};

use crate::run::{Run, Status};
use crate::source::{self, SourceConfig};
use crate::{Common, DomainArg, MeasureArgs, NetworkArgs, NetworkMode, ShadowArgs, ShadowMode};

/// The hashed part of a run configuration.
#[derive(Serialize)]
struct Config<'a, E: Serialize> {
    command: &'a str,
    system: &'a SystemSpec,
    mesh: f64,
    d: f64,
    eps: f64,
    horizon: u64,
    seed: u64,
    #[serde(flatten)]
    extra: E,
}

fn system_of(c: &Common) -> Result<SystemSpec> {
    for (name, v) in [("mesh", c.mesh), ("eps", c.eps)] {
        if !(v > 0.0 && v.is_finite()) {
            bail!("--{name} must be positive, got {v}");
        }
    }
    if !(c.d >= 0.0 && c.d.is_finite()) {
        bail!("--d must be nonnegative, got {}", c.d);
    }
    Ok(parse_selector(&c.system)?)
}

fn open<E: Serialize>(c: &Common, command: &str, system: &SystemSpec, extra: E) -> Result<Run> {
    let cfg = Config {
        command,
        system,
        mesh: c.mesh,
        d: c.d,
        eps: c.eps,
        horizon: c.horizon,
        seed: c.seed,
        extra,
    };
    Run::create(&c.out, command, c.seed, &cfg)
}

fn write_cells(run: &mut Run, report: &RecurrenceReport) -> Result<()> {
    let grid = report.grid()?;
    let n = report.cell_count;
    let flags = |cells: &[usize]| {
        let mut f = vec![false; n];
        for &c in cells {
            f[c] = true;
        }
        f
    };
    let (cr, nw, rec, min) = (
        flags(&report.chain_recurrent),
        flags(&report.nonwandering),
        flags(&report.recurrent),
        flags(&report.minimal),
    );
    run.csv("cells.csv", "cells", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["cell", "x", "chain_recurrent", "nonwandering", "recurrent", "minimal"])?;
        for c in 0..n {
            let b = |v: bool| if v { "1" } else { "0" }.to_string();
            out.write_record([c.to_string(), grid.rep(c).x().to_string(), b(cr[c]), b(nw[c]), b(rec[c]), b(min[c])])?;
        }
        out.flush()?;
        Ok(())
    })
}

pub fn analyze(c: &Common) -> Result<Status> {
    let system = system_of(c)?;
    let mut run = open(c, "analyze", &system, json!({}))?;
    let report = recurrence_report(&system, &ReportConfig::new(c.mesh, c.d, c.horizon))?;
    run.stage("recurrence_report");
    let verdict = report.closure_verdict(c.eps)?;
    run.stage("closure_verdict");
    run.json("recurrence_report.json", "recurrence_report", &report)?;
    run.json("closure_verdict.json", "closure_verdict", &verdict)?;
    write_cells(&mut run, &report)?;
    let summary = json!({
        "system": system.label(),
        "cells": report.cell_count,
        "chain_recurrent": report.chain_recurrent.len(),
        "nonwandering": report.nonwandering.len(),
        "recurrent": report.recurrent.len(),
        "minimal": report.minimal.len(),
        "inclusion_violations": report.violations.total(),
        "cr_equals_minimal_closure": verdict.equal,
        "excess": verdict.excess,
        "predicted_class": if verdict.equal { "W" } else { "not W" },
    });
    run.finish(Status::Success, summary)
}

#[derive(Serialize)]
struct ShadowExtra {
    mode: ShadowMode,
    budget: usize,
    pseudo: SourceConfig,
}

fn pseudo_of(a: &ShadowArgs, system: &SystemSpec) -> Result<(Pseudotrajectory, SourceConfig)> {
    match (&a.pseudo, &a.gen) {
        (Some(path), _) => source::load(system, path, a.common.d),
        (None, Some(spec)) => {
            let p = source::generate(system, spec, a.common.d, a.common.seed)?;
            Ok((p, SourceConfig::Gen { spec: spec.clone() }))
        }
        (None, None) => bail!("one of --pseudo or --gen is required"),
    }
}

pub fn shadow(a: &ShadowArgs) -> Result<Status> {
    let c = &a.common;
    let system = system_of(c)?;
    let (pseudo, src) = pseudo_of(a, &system)?;
    let mut run = open(c, "shadow", &system, ShadowExtra { mode: a.mode, budget: a.budget, pseudo: src })?;
    run.stage("pseudotrajectory");
    run.json("pseudo.json", "pseudo_meta", &pseudo.meta())?;
    run.csv("pseudo.csv", "pseudo", |w| Ok(pseudo.write_csv(w)?))?;
    let grid = build_grid(system.space(), c.mesh)?;
    let base = json!({ "system": system.label(), "mode": a.mode, "len": pseudo.len(), "eps": c.eps });
    let (status, extra) = match a.mode {
        ShadowMode::Shadow => match shadow_search(&system, &pseudo, c.eps, &grid)? {
            ShadowOutcome::Certificate(cert) => {
                run.stage("search");
                let ok = cert.verify(&system, &pseudo)?;
                run.stage("verify");
                run.json("shadow_certificate.json", "shadow_certificate", &cert)?;
                (Status::Success, json!({ "result": "certificate", "max_error": cert.max_error, "verified": ok }))
            }
            ShadowOutcome::Failure(f) => {
                run.stage("search");
                run.json("shadow_failure.json", "shadow_failure", &f)?;
                (Status::Negative, json!({ "result": "failure", "best_error": f.best_error, "worst_index": f.worst_index }))
            }
        },
        ShadowMode::Multishadow => match multishadow_search(&system, &pseudo, c.eps, &grid, a.budget)? {
            MultishadowOutcome::Certificate(cert) => {
                run.stage("search");
                let ok = cert.verify(&system, &pseudo)?;
                run.stage("verify");
                run.json("multishadow_certificate.json", "multishadow_certificate", &cert)?;
                run.csv("tracking.csv", "tracking", |w| {
                    let mut out = csv::Writer::from_writer(w);
                    out.write_record(["k", "orbit", "error"])?;
                    for (i, (o, e)) in cert.assignment.iter().zip(&cert.errors).enumerate() {
                        out.write_record([(cert.k_min + i as i64).to_string(), o.to_string(), e.to_string()])?;
                    }
                    out.flush()?;
                    Ok(())
                })?;
                (Status::Success, json!({ "result": "certificate", "n": cert.n, "n_lower": cert.n_lower, "verified": ok }))
            }
            MultishadowOutcome::Failure(f) => {
                run.stage("search");
                run.json("multishadow_failure.json", "multishadow_failure", &f)?;
                let v = json!({ "result": "failure", "greedy_n": f.greedy_n, "lower_bound": f.lower_bound, "uncovered": f.uncovered });
                (Status::Negative, v)
            }
        },
        ShadowMode::Subsequence => {
            let cert = subsequence_shadow_search(&system, &pseudo, c.eps, c.horizon)?;
            run.stage("search");
            let ok = cert.verify(&system, &pseudo)?;
            run.stage("verify");
            run.json("subsequence_certificate.json", "subsequence_certificate", &cert)?;
            let v = json!({
                "result": "certificate",
                "density": cert.density,
                "window_density": cert.window_density,
                "indices": cert.indices.len(),
                "verified": ok,
            });
            (Status::Success, v)
        }
    };
    run.finish(status, merge(base, extra))
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

#[derive(Serialize)]
struct NetworkExtra {
    mode: NetworkMode,
    domain: DomainArg,
    report_horizon: u64,
    budget: usize,
    two_sided: bool,
    minimize: bool,
}

fn write_network(run: &mut Run, stem: &str, net: &EpsilonNetwork) -> Result<()> {
    run.json(&format!("{stem}.json"), "epsilon_network", net)?;
    run.csv(&format!("{stem}_radius.csv"), "coverage_radius", |w| Ok(net.write_radius_csv(w)?))
}

pub fn network(a: &NetworkArgs) -> Result<Status> {
    let c = &a.common;
    let system = system_of(c)?;
    let extra = NetworkExtra {
        mode: a.mode,
        domain: a.domain,
        report_horizon: a.report_horizon,
        budget: a.budget,
        two_sided: a.two_sided,
        minimize: a.minimize,
    };
    let mut run = open(c, "network", &system, extra)?;
    let outcome = match a.mode {
        NetworkMode::Minimal => {
            let report = recurrence_report(&system, &ReportConfig::new(c.mesh, c.d, a.report_horizon))?;
            run.stage("recurrence_report");
            run.json("recurrence_report.json", "recurrence_report", &report)?;
            let domain = match a.domain {
                DomainArg::Space => NetworkDomain::Space,
                DomainArg::Cr => NetworkDomain::ChainRecurrent,
            };
            let opts = MinimalNetworkOptions { horizon: c.horizon, two_sided: a.two_sided, domain };
            construct_from_minimal_orbits(&system, c.eps, &report, &opts)?
        }
        NetworkMode::Chains => {
            if a.domain != DomainArg::Cr {
                bail!("chain mode covers the chain recurrent cells; pass --domain cr");
            }
            let grid = build_grid(system.space(), c.mesh)?;
            let graph = build_transition_graph(&system, &grid, c.d, usize::MAX)?;
            run.stage("transition_graph");
            let opts = ChainNetworkOptions {
                budget: a.budget,
                horizon: c.horizon,
                two_sided: a.two_sided,
                ..Default::default()
            };
            construct_from_periodic_chains(&system, c.eps, c.d, &graph, &opts)?
        }
    };
    run.stage("construct");
    let base = json!({ "system": system.label(), "mode": a.mode, "eps": c.eps });
    let (status, extra) = match outcome {
        NetworkOutcome::Verified(net) => {
            write_network(&mut run, "network", &net)?;
            let mut v = json!({ "result": "verified", "size": net.len(), "n_max": net.n_max });
            if a.minimize {
                let min = minimize_network(&system, &net)?;
                run.stage("minimize");
                write_network(&mut run, "network_minimized", &min)?;
                let bound = covering_lower_bound(system.space(), net.eps);
                v = merge(v, json!({ "minimized_size": min.len(), "covering_lower_bound": bound }));
            }
            (Status::Success, v)
        }
        NetworkOutcome::Failed(f) => {
            run.json("network_failure.json", "coverage_failure", &f)?;
            (Status::Negative, json!({ "result": "failed", "n": f.n, "probe": f.probe, "distance": f.distance }))
        }
        NetworkOutcome::Impossible(i) => {
            run.json("network_impossible.json", "construction_impossible", &i)?;
            (Status::Negative, json!({ "result": "impossible", "witness": i.witness, "radius": i.radius }))
        }
    };
    run.finish(status, merge(base, extra))
}

#[derive(Serialize)]
struct MeasureExtra {
    levels: u32,
    report_horizon: u64,
    len: usize,
}

#[derive(Serialize)]
struct FractionRow {
    d: f64,
    n: usize,
    fraction: f64,
}

pub fn measure(a: &MeasureArgs) -> Result<Status> {
    let c = &a.common;
    let system = system_of(c)?;
    if a.levels == 0 {
        bail!("--levels must be at least 1");
    }
    if a.len < 10 {
        bail!("--len must be at least 10");
    }
    let mut run = open(c, "measure", &system, MeasureExtra { levels: a.levels, report_horizon: a.report_horizon, len: a.len })?;
    let report = recurrence_report(&system, &ReportConfig::new(c.mesh, c.d, a.report_horizon))?;
    run.stage("recurrence_report");
    let grid = report.grid()?;
    let eps: Vec<f64> = (1..=a.levels).map(|m| 0.5f64.powi(m as i32)).collect();
    let pipeline = full_support_measure(&system, &report, &grid, &eps, c.horizon, c.horizon as usize)?;
    run.stage("measure_pipeline");

    let recurrent: Vec<Point> = report.points(&report.recurrent)?;
    let mut fractions = Vec::new();
    let mut rows = Vec::new();
    for d in [c.d, c.d / 10.0] {
        let pseudo = noisy_orbit(&system, &Point::new1(0.3), d, a.len, c.seed)?;
        fractions.push(json!({ "d": d, "fraction": recurrent_fraction(&system, &pseudo, c.eps, &recurrent)? }));
        let space = system.space();
        let near: Vec<bool> = pseudo
            .points()
            .iter()
            .map(|x| recurrent.iter().any(|r| space.dist(x, r) <= c.eps))
            .collect();
        let mut n = a.len / 100;
        while n <= a.len {
            if n > 0 {
                let hits = near[..n].iter().filter(|&&b| b).count();
                rows.push(FractionRow { d, n, fraction: hits as f64 / n as f64 });
            }
            n *= 10;
        }
    }
    run.stage("recurrent_fraction");
    run.json("recurrent_fraction.json", "recurrent_fraction", &fractions)?;
    run.csv("recurrent_fraction.csv", "recurrent_fraction_table", |w| {
        let mut out = csv::Writer::from_writer(w);
        for r in &rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    })?;

    let base = json!({ "system": system.label(), "levels": a.levels });
    let (status, extra) = match pipeline {
        Some(p) => {
            run.json("measure_pipeline.json", "full_support_measure", &p)?;
            run.csv("measure.csv", "measure_histogram", |w| Ok(p.measure.write_csv(w)?))?;
            let v = json!({
                "result": "measure",
                "support_fraction": p.support_fraction,
                "defect": p.defect,
                "tv_to_uniform": p.tv_to_uniform,
            });
            (Status::Success, v)
        }
        None => (Status::Negative, json!({ "result": "no_network", "eps": eps })),
    };
    run.finish(status, merge(base, extra))
}

pub fn zoo() -> Result<Status> {
    let entries: Vec<Value> = ZOO
        .iter()
        .map(|name| {
            let s = parse_selector(name)?;
            Ok(json!({
                "name": s.name(),
                "params": s.params(),
                "space": s.space(),
                "invertible": s.is_invertible(),
                "equicontinuous": s.is_equicontinuous(),
            }))
        })
        .collect::<Result<_>>()?;
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&entries)?);
    Ok(Status::Success)
}

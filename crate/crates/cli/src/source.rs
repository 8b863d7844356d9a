//! Pseudotrajectory sources: generator specs and CSV files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use shadowlab::pseudo::{
    drift_pseudo, noisy_orbit, winding_pseudo, DriftOptions, DriftStop, PseudoMeta, Pseudotrajectory, Provenance,
    Sidedness,
};
use shadowlab::space::Point;
use shadowlab::systems::SystemSpec;

use crate::run::sha256_hex;

/// What the configuration hash sees of a pseudotrajectory source.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceConfig {
    Gen { spec: String },
    File { name: String, sha256: String },
}

/// Parses `k=v,k=v` into numbers.
fn parse_params(rest: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("expected key=value in generator, got '{kv}'"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("generator parameter '{k}'"))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn take(params: &mut BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.remove(key).unwrap_or(default)
}

fn count(v: f64, what: &str) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 {
        bail!("{what} must be a nonnegative integer, got {v}");
    }
    Ok(v as usize)
}

/// Builds a pseudotrajectory from a generator spec.
pub fn generate(system: &SystemSpec, spec: &str, d: f64, seed: u64) -> Result<Pseudotrajectory> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut p = parse_params(rest)?;
    let pseudo = match name.trim() {
        "noisy" => {
            let x0 = take(&mut p, "x0", 0.3);
            let len = count(take(&mut p, "len", 10_000.0), "len")?;
            noisy_orbit(system, &Point::new1(x0), d, len, seed)?
        }
        "exact" => {
            let x0 = take(&mut p, "x0", 0.3);
            let len = count(take(&mut p, "len", 10_000.0), "len")?;
            if len < 2 {
                bail!("len must be at least 2");
            }
            let pts = system.orbit_segment(&system.space().point(&[x0])?, len - 1)?;
            Pseudotrajectory::new(system, 0, pts, 0.0, Provenance::Exact)?
        }
        "winding" => {
            let turns = count(take(&mut p, "turns", 10.0), "turns")?;
            winding_pseudo(system, d, turns as u32)?
        }
        "drift" => {
            let x0 = take(&mut p, "x0", 0.3);
            let steps = count(take(&mut p, "steps", 10_000.0), "steps")?;
            drift_pseudo(system, &Point::new1(x0), d, DriftStop::Steps(steps), &DriftOptions::default())?
        }
        other => bail!("unknown generator '{other}' (expected noisy, exact, winding or drift)"),
    };
    if let Some(k) = p.keys().next() {
        bail!("unknown parameter '{k}' for generator '{}'", name.trim());
    }
    Ok(pseudo)
}

/// Reads `k,x0` rows. The sidecar `<stem>.json` supplies the metadata when
/// present; otherwise the file is taken as an external one-dimensional
/// sequence for `system` with error bound `d`.
pub fn load(system: &SystemSpec, path: &Path, d: f64) -> Result<(Pseudotrajectory, SourceConfig)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let sidecar = path.with_extension("json");
    let meta = if sidecar.is_file() {
        let text = fs::read_to_string(&sidecar).with_context(|| format!("reading {}", sidecar.display()))?;
        // Sidecars written by a run carry the metadata inside an envelope.
        let mut v: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", sidecar.display()))?;
        if let Some(body) = v.get_mut("body") {
            v = body.take();
        }
        let meta: PseudoMeta = serde_json::from_value(v).with_context(|| format!("parsing {}", sidecar.display()))?;
        if &meta.system != system {
            bail!("{} belongs to {}, not {}", sidecar.display(), meta.system.label(), system.label());
        }
        meta
    } else {
        let mut rdr = csv::Reader::from_reader(bytes.as_slice());
        let mut first = None;
        let mut len = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if first.is_none() {
                first = Some(rec.get(0).unwrap_or("").trim().parse::<i64>().context("bad index column")?);
            }
            len += 1;
        }
        let k_min = first.ok_or_else(|| anyhow!("{} has no rows", path.display()))?;
        PseudoMeta {
            system: system.clone(),
            k_min,
            len,
            d,
            sidedness: if k_min < 0 { Sidedness::TwoSided } else { Sidedness::OneSided },
            provenance: Provenance::External { source: file_name(path) },
        }
    };
    let pseudo = Pseudotrajectory::read_csv(bytes.as_slice(), &meta)?;
    Ok((pseudo, SourceConfig::File { name: file_name(path), sha256: sha256_hex(&bytes) }))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

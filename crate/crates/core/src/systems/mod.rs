//! The system zoo: continuous self-maps of the circle and the interval.

mod flow;
mod orbit;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::space::{Point, Space};

pub use flow::{quartic_field, sin2_field, SUBSTEPS};
pub use orbit::{Seed, SeedOrigin};

/// Names accepted by [`zoo`].
pub const ZOO: [&str; 6] = ["identity", "rotation", "doubling", "north_south", "sin2_circle", "quartic_interval"];

/// Default time step of the flow maps and of `north_south`.
pub const DEFAULT_H: f64 = 0.1;

/// Golden mean rotation number (sqrt 5 - 1) / 2.
pub fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Identity,
    Rotation { alpha: f64 },
    Doubling,
    NorthSouth { h: f64 },
    Sin2 { h: f64 },
    Quartic { h: f64 },
}

/// Exact update rule on circle rationals num/den.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RationalRule {
    Fixed,
    Add(u64),
    Double,
}

impl RationalRule {
    #[inline]
    pub fn step(self, num: u64, den: u64) -> u64 {
        match self {
            RationalRule::Fixed => num,
            RationalRule::Add(a) => (num + a) % den,
            RationalRule::Double => (2 * num) % den,
        }
    }

    fn back(self, num: u64, den: u64) -> Option<u64> {
        match self {
            RationalRule::Fixed => Some(num),
            RationalRule::Add(a) => Some((num + den - a) % den),
            RationalRule::Double => None,
        }
    }
}

/// A dynamical system from the zoo together with its phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    kind: Kind,
    space: Space,
}

/// Builds a zoo system. Unspecified parameters take their defaults
/// (`alpha` = golden mean, `h` = 0.1).
pub fn zoo(name: &str, params: &BTreeMap<String, f64>) -> Result<SystemSpec> {
    let allowed: &[&str] = match name {
        "identity" | "doubling" => &[],
        "rotation" => &["alpha"],
        "north_south" | "sin2_circle" | "quartic_interval" => &["h"],
        other => return invalid(format!("unknown system '{other}'; expected one of {}", ZOO.join(", "))),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return invalid(format!("system '{name}' has no parameter '{k}'"));
    }
    let h = params.get("h").copied().unwrap_or(DEFAULT_H);
    if !(h.is_finite() && h > 0.0) {
        return invalid(format!("time step h must be positive, got {h}"));
    }
    let circle = Space::circle();
    let (kind, space) = match name {
        "identity" => (Kind::Identity, circle),
        "rotation" => {
            let alpha = params.get("alpha").copied().unwrap_or_else(golden);
            if !alpha.is_finite() {
                return invalid("rotation number must be finite");
            }
            (Kind::Rotation { alpha: alpha.rem_euclid(1.0) }, circle)
        }
        "doubling" => (Kind::Doubling, circle),
        "north_south" => {
            if h >= 2.0 / PI {
                return invalid(format!("north_south needs h < 2/pi to stay a homeomorphism, got {h}"));
            }
            (Kind::NorthSouth { h }, circle)
        }
        "sin2_circle" => {
            if h > 0.5 {
                return invalid(format!("flow step h must be at most 0.5, got {h}"));
            }
            (Kind::Sin2 { h }, circle)
        }
        _ => {
            if h > 0.5 {
                return invalid(format!("flow step h must be at most 0.5, got {h}"));
            }
            (Kind::Quartic { h }, Space::interval(-1.0, 1.0)?)
        }
    };
    Ok(SystemSpec { kind, space })
}

/// Parses `NAME[:k=v[,k=v...]]`; `alpha=golden` is accepted for rotations.
pub fn parse_selector(sel: &str) -> Result<SystemSpec> {
    let (name, rest) = match sel.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (sel.trim(), ""),
    };
    let mut params = BTreeMap::new();
    for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("expected key=value, got '{kv}'")))?;
        let value = if v.trim() == "golden" {
            golden()
        } else {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("parameter '{k}' is not a number: '{v}'")))?
        };
        params.insert(k.trim().to_string(), value);
    }
    zoo(name, &params)
}

impl SystemSpec {
    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Identity => "identity",
            Kind::Rotation { .. } => "rotation",
            Kind::Doubling => "doubling",
            Kind::NorthSouth { .. } => "north_south",
            Kind::Sin2 { .. } => "sin2_circle",
            Kind::Quartic { .. } => "quartic_interval",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match self.kind {
            Kind::Rotation { alpha } => {
                m.insert("alpha".to_string(), alpha);
            }
            Kind::NorthSouth { h } | Kind::Sin2 { h } | Kind::Quartic { h } => {
                m.insert("h".to_string(), h);
            }
            Kind::Identity | Kind::Doubling => {}
        }
        m
    }

    /// Human-readable label, e.g. `rotation(alpha=0.25)`.
    pub fn label(&self) -> String {
        let p = self.params();
        if p.is_empty() {
            self.name().to_string()
        } else {
            let inner: Vec<String> = p.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{}({})", self.name(), inner.join(","))
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn is_invertible(&self) -> bool {
        !matches!(self.kind, Kind::Doubling)
    }

    /// Isometries of the circle; used to gate constructions that need a
    /// uniform modulus of continuity for all iterates.
    pub fn is_equicontinuous(&self) -> bool {
        matches!(self.kind, Kind::Identity | Kind::Rotation { .. })
    }

    pub fn has_derivative(&self) -> bool {
        true
    }

    /// Upper bound on the Lipschitz constant of one step.
    pub fn lipschitz_bound(&self) -> f64 {
        match self.kind {
            Kind::Identity | Kind::Rotation { .. } => 1.0,
            Kind::Doubling => 2.0,
            Kind::NorthSouth { h } => 1.0 + h * PI / 2.0,
            Kind::Sin2 { h } => h.exp(),
            Kind::Quartic { h } => (2.0 * h).exp(),
        }
    }

    /// Exact rational update on denominators `den`, if the map sends
    /// num/den to a rational with the same denominator.
    pub fn rational_rule(&self, den: u64) -> Option<RationalRule> {
        match self.kind {
            Kind::Identity => Some(RationalRule::Fixed),
            Kind::Doubling => Some(RationalRule::Double),
            Kind::Rotation { alpha } => {
                let a = alpha * den as f64;
                let r = a.round();
                if (a - r).abs() < 1e-9 {
                    Some(RationalRule::Add(r as u64 % den))
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// One application of the map to a coordinate, canonicalised.
    #[inline]
    pub(crate) fn step_x(&self, x: f64) -> f64 {
        let mut b = [x];
        self.forward_batch(&mut b);
        b[0]
    }

    /// Lockstep forward step of raw coordinates.
    pub(crate) fn forward_batch(&self, xs: &mut [f64]) {
        match self.kind {
            Kind::Identity => {}
            Kind::Rotation { alpha } => xs.iter_mut().for_each(|x| *x = wrap(*x + alpha)),
            Kind::Doubling => xs.iter_mut().for_each(|x| *x = wrap(2.0 * *x)),
            Kind::NorthSouth { h } => {
                xs.iter_mut().for_each(|x| *x = wrap(*x + 0.25 * h * (2.0 * PI * *x).sin()))
            }
            Kind::Sin2 { h } => {
                flow::sin2_advance(xs, h);
                xs.iter_mut().for_each(|x| *x = wrap(*x));
            }
            Kind::Quartic { h } => {
                flow::quartic_advance(xs, h);
                xs.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
            }
        }
    }

    /// Lockstep inverse step of raw coordinates.
    pub(crate) fn backward_batch(&self, xs: &mut [f64]) -> Result<()> {
        match self.kind {
            Kind::Identity => {}
            Kind::Rotation { alpha } => xs.iter_mut().for_each(|x| *x = wrap(*x - alpha)),
            Kind::Doubling => return Err(self.not_invertible()),
            Kind::NorthSouth { h } => xs.iter_mut().for_each(|x| *x = north_south_inverse(*x, h)),
            Kind::Sin2 { h } => {
                flow::sin2_advance(xs, -h);
                xs.iter_mut().for_each(|x| *x = wrap(*x));
            }
            Kind::Quartic { h } => {
                flow::quartic_advance(xs, -h);
                xs.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
            }
        }
        Ok(())
    }

    fn not_invertible(&self) -> Error {
        Error::Unsupported(format!("{} is not invertible", self.label()))
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.space.dim() {
            return invalid("point dimension does not match the system's space");
        }
        Ok(())
    }

    /// The forward map.
    pub fn map(&self, x: &Point) -> Point {
        Point::new1(self.step_x(self.space.canonical(*x).x()))
    }

    /// The inverse map, for invertible systems.
    pub fn inverse(&self, x: &Point) -> Result<Point> {
        self.check_point(x)?;
        let mut b = [self.space.canonical(*x).x()];
        self.backward_batch(&mut b)?;
        Ok(Point::new1(b[0]))
    }

    /// All preimages of a point under a non-invertible branch map, ordered
    /// by branch index. Invertible systems return the single inverse.
    pub fn preimages(&self, x: &Point) -> Result<Vec<Point>> {
        match self.kind {
            Kind::Doubling => {
                let y = self.space.canonical(*x).x();
                Ok(vec![Point::new1(doubling_branch(y, 0)), Point::new1(doubling_branch(y, 1))])
            }
            _ => Ok(vec![self.inverse(x)?]),
        }
    }

    /// Derivative of the map at a point.
    pub fn derivative(&self, x: &Point) -> Option<f64> {
        let x = self.space.canonical(*x).x();
        Some(match self.kind {
            Kind::Identity | Kind::Rotation { .. } => 1.0,
            Kind::Doubling => 2.0,
            Kind::NorthSouth { h } => 1.0 + 0.5 * h * PI * (2.0 * PI * x).cos(),
            Kind::Sin2 { h } => flow::variational(x, h, sin2_field, flow::sin2_dfield),
            Kind::Quartic { h } => flow::variational(x, h, quartic_field, flow::quartic_dfield),
        })
    }

    /// T^n(x); negative n uses the inverse.
    pub fn apply_n(&self, x: &Point, n: i64) -> Result<Point> {
        self.check_point(x)?;
        let mut b = [self.space.canonical(*x).x()];
        if n >= 0 {
            for _ in 0..n {
                self.forward_batch(&mut b);
            }
        } else {
            for _ in 0..(-n) {
                self.backward_batch(&mut b)?;
            }
        }
        Ok(Point::new1(b[0]))
    }

    /// The points x, T(x), ..., T^n(x).
    pub fn orbit_segment(&self, x: &Point, n: usize) -> Result<Vec<Point>> {
        self.check_point(x)?;
        let mut out = Vec::with_capacity(n + 1);
        let mut b = [self.space.canonical(*x).x()];
        out.push(Point::new1(b[0]));
        for _ in 0..n {
            self.forward_batch(&mut b);
            out.push(Point::new1(b[0]));
        }
        Ok(out)
    }

    /// Whether rho(T(x), x) <= tol.
    pub fn is_fixed_point(&self, x: &Point, tol: f64) -> Result<bool> {
        self.check_point(x)?;
        let x = self.space.canonical(*x);
        Ok(self.space.dist(&self.map(&x), &x) <= tol)
    }
}

#[inline]
pub(crate) fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[inline]
pub(crate) fn doubling_branch(y: f64, b: u8) -> f64 {
    0.5 * y + if b == 0 { 0.0 } else { 0.5 }
}

/// Solves phi + (h/4) sin(2 pi phi) = y on the lift by safeguarded Newton.
fn north_south_inverse(y: f64, h: f64) -> f64 {
    let g = |p: f64| p + 0.25 * h * (2.0 * PI * p).sin() - y;
    let (mut lo, mut hi) = (y - 0.25 * h, y + 0.25 * h);
    let mut p = y;
    for _ in 0..100 {
        let v = g(p);
        if v == 0.0 {
            break;
        }
        if v > 0.0 {
            hi = p;
        } else {
            lo = p;
        }
        let dp = 1.0 + 0.5 * h * PI * (2.0 * PI * p).cos();
        let mut next = p - v / dp;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - p).abs() <= 1e-17 * p.abs().max(1.0) {
            p = next;
            break;
        }
        p = next;
    }
    wrap(p)
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Serialize, Deserialize)]
struct SystemRecord {
    name: String,
    params: BTreeMap<String, f64>,
}

impl Serialize for SystemSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SystemRecord { name: self.name().to_string(), params: self.params() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SystemRecord::deserialize(d)?;
        zoo(&r.name, &r.params).map_err(serde::de::Error::custom)
    }
}

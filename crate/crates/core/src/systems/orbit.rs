//! Orbit seeds and lockstep orbit evaluation.
//!
//! A floating-point orbit of an expanding map loses a bit per step, so an
//! orbit is described by a seed rather than a starting point: an anchor
//! point at some time, an exact circle rational, or an anchor plus the
//! inverse branches taken to reach earlier times.

use serde::{Deserialize, Serialize};

use super::{doubling_branch, SystemSpec};
use crate::error::{invalid, Error, Result};
use crate::space::Point;

/// The orbit whose value at time `index` is given by `origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub index: i64,
    #[serde(flatten)]
    pub origin: SeedOrigin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedOrigin {
    /// A point; earlier times use the inverse map.
    Point(Point),
    /// The circle point num/den, iterated exactly when the map allows it.
    Rational { num: u64, den: u64 },
    /// A point; earlier times follow the listed inverse branches, the first
    /// entry taking time `index` to `index - 1`.
    Preimage { anchor: Point, branches: Vec<u8> },
}

impl Seed {
    pub fn point(p: Point) -> Self {
        Seed { index: 0, origin: SeedOrigin::Point(p) }
    }

    pub fn anchored(index: i64, p: Point) -> Self {
        Seed { index, origin: SeedOrigin::Point(p) }
    }

    pub fn rational(num: u64, den: u64) -> Self {
        Seed { index: 0, origin: SeedOrigin::Rational { num: num % den.max(1), den } }
    }

    /// The orbit of T^by applied to this one: value at t is this orbit's
    /// value at t + by.
    pub fn shifted(&self, by: i64) -> Self {
        Seed { index: self.index - by, origin: self.origin.clone() }
    }

    /// Coordinate of the anchor value.
    pub fn anchor_x(&self) -> f64 {
        match &self.origin {
            SeedOrigin::Point(p) => p.x(),
            SeedOrigin::Rational { num, den } => *num as f64 / *den as f64,
            SeedOrigin::Preimage { anchor, .. } => anchor.x(),
        }
    }
}

impl SystemSpec {
    /// Orbit of a seed over the times k_min..=k_max.
    pub fn orbit(&self, seed: &Seed, k_min: i64, k_max: i64) -> Result<Vec<Point>> {
        let xs = self.orbits_x(std::slice::from_ref(seed), k_min, k_max)?;
        Ok(xs[0].iter().map(|&x| Point::new1(x)).collect())
    }

    /// Value of a seeded orbit at time t.
    pub fn orbit_at(&self, seed: &Seed, t: i64) -> Result<Point> {
        Ok(self.orbit(seed, t, t)?[0])
    }

    /// Orbits of many seeds over k_min..=k_max, evaluated in lockstep.
    pub fn orbits_x(&self, seeds: &[Seed], k_min: i64, k_max: i64) -> Result<Vec<Vec<f64>>> {
        if k_max < k_min {
            return invalid("empty orbit range");
        }
        let len = (k_max - k_min + 1) as usize;
        let mut out = vec![Vec::new(); seeds.len()];
        // (seed index, anchor time, anchor value, branches)
        let mut lanes: Vec<(usize, i64, f64, Option<&[u8]>)> = Vec::new();
        for (i, s) in seeds.iter().enumerate() {
            match &s.origin {
                SeedOrigin::Rational { num, den } if *den > 0 => {
                    if let Some(rule) = self.rational_rule(*den) {
                        out[i] = rational_orbit(rule, *num, *den, s.index, k_min, len)
                            .ok_or_else(|| self.no_past(s.index, k_min))?;
                        continue;
                    }
                    lanes.push((i, s.index, self.space().canonical(Point::new1(s.anchor_x())).x(), None));
                }
                SeedOrigin::Rational { .. } => return invalid("rational seed with zero denominator"),
                SeedOrigin::Point(p) => lanes.push((i, s.index, self.space().canonical(*p).x(), None)),
                SeedOrigin::Preimage { anchor, branches } => {
                    lanes.push((i, s.index, self.space().canonical(*anchor).x(), Some(branches)))
                }
            }
        }
        // Bring anchors into range.
        for lane in lanes.iter_mut() {
            while lane.1 < k_min {
                lane.2 = self.step_x(lane.2);
                lane.1 += 1;
            }
            while lane.1 > k_max {
                lane.2 = self.back_x(lane.2, lane.3, seeds[lane.0].index - lane.1)?;
                lane.1 -= 1;
            }
        }
        for lane in &lanes {
            out[lane.0] = vec![0.0; len];
        }
        // Forward from each anchor.
        let mut order: Vec<usize> = (0..lanes.len()).collect();
        order.sort_by_key(|&j| (lanes[j].1, j));
        let mut cur: Vec<f64> = Vec::with_capacity(lanes.len());
        let mut who: Vec<usize> = Vec::with_capacity(lanes.len());
        let mut ptr = 0;
        if let Some(&first) = order.first() {
            for t in lanes[first].1..=k_max {
                while ptr < order.len() && lanes[order[ptr]].1 == t {
                    cur.push(lanes[order[ptr]].2);
                    who.push(lanes[order[ptr]].0);
                    ptr += 1;
                }
                let slot = (t - k_min) as usize;
                for (x, &s) in cur.iter().zip(&who) {
                    out[s][slot] = *x;
                }
                if t < k_max {
                    self.forward_batch(&mut cur);
                }
            }
        }
        // Backward from each anchor.
        let mut back: Vec<usize> = (0..lanes.len()).filter(|&j| lanes[j].1 > k_min).collect();
        if back.is_empty() {
            return Ok(out);
        }
        back.sort_by_key(|&j| (std::cmp::Reverse(lanes[j].1), j));
        let mut plain: Vec<(usize, f64)> = Vec::new();
        let mut branched: Vec<(usize, f64)> = Vec::new();
        let mut buf: Vec<f64> = Vec::new();
        let mut ptr = 0;
        let mut t = lanes[back[0]].1;
        while t > k_min {
            while ptr < back.len() && lanes[back[ptr]].1 == t {
                let j = back[ptr];
                if lanes[j].3.is_some() {
                    branched.push((j, lanes[j].2));
                } else {
                    plain.push((j, lanes[j].2));
                }
                ptr += 1;
            }
            if !plain.is_empty() {
                buf.clear();
                buf.extend(plain.iter().map(|e| e.1));
                if !self.is_invertible() {
                    return Err(self.no_past(t, k_min));
                }
                self.backward_batch(&mut buf)?;
                for (e, x) in plain.iter_mut().zip(&buf) {
                    e.1 = *x;
                }
            }
            for e in branched.iter_mut() {
                let lane = &lanes[e.0];
                let steps = seeds[lane.0].index - t;
                e.1 = self.back_x(e.1, lane.3, steps)?;
            }
            t -= 1;
            let slot = (t - k_min) as usize;
            for e in plain.iter().chain(&branched) {
                out[lanes[e.0].0][slot] = e.1;
            }
        }
        Ok(out)
    }

    /// One backward step from time index-steps, for a lane whose anchor is
    /// `steps` steps in the future.
    fn back_x(&self, x: f64, branches: Option<&[u8]>, steps: i64) -> Result<f64> {
        match branches {
            Some(b) => {
                let k = steps as usize;
                let branch = *b.get(k).ok_or_else(|| {
                    Error::Unsupported(format!("preimage seed records only {} backward steps", b.len()))
                })?;
                if self.is_invertible() {
                    let mut v = [x];
                    self.backward_batch(&mut v)?;
                    Ok(v[0])
                } else {
                    Ok(doubling_branch(x, branch))
                }
            }
            None => {
                let mut v = [x];
                self.backward_batch(&mut v)?;
                Ok(v[0])
            }
        }
    }

    fn no_past(&self, index: i64, k_min: i64) -> Error {
        Error::Unsupported(format!(
            "{} is not invertible; cannot extend an orbit anchored at time {index} back to {k_min}",
            self.label()
        ))
    }
}

fn rational_orbit(
    rule: super::RationalRule,
    num: u64,
    den: u64,
    index: i64,
    k_min: i64,
    len: usize,
) -> Option<Vec<f64>> {
    let mut n = num % den;
    let mut t = index;
    while t < k_min {
        n = rule.step(n, den);
        t += 1;
    }
    while t > k_min {
        n = rule.back(n, den)?;
        t -= 1;
    }
    let mut v = Vec::with_capacity(len);
    for _ in 0..len {
        v.push(n as f64 / den as f64);
        n = rule.step(n, den);
    }
    Some(v)
}

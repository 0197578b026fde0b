//! Conservative linearization of link capacity.
//!
//! Capacity is written as `B log2 s(X) - B log2 t(X)` where `s` is the full
//! receive aggregate (signal + interference + noise) and `t` the interference
//! plus noise. The concave `B log2 s` is under-estimated by chords through
//! points of its graph and `B log2 t` is over-estimated by its tangent at the
//! expansion point, so their difference never exceeds the true capacity and is
//! exact at the expansion point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{interference_plus_noise, LinkId, PowerVector, Scenario};

/// `slope · v + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: f64,
    pub intercept: f64,
}

impl AffinePiece {
    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        self.slope * v + self.intercept
    }
}

/// Pointwise minimum of a set of affine pieces.
pub fn envelope(pieces: &[AffinePiece], v: f64) -> f64 {
    pieces.iter().map(|p| p.eval(v)).fold(f64::INFINITY, f64::min)
}

/// Secants of `B log2 s` between consecutive breakpoints. Their minimum is a
/// concave piecewise-linear function that is exact at every breakpoint and
/// below `B log2 s` in between.
pub fn chord_pieces(breakpoints: &[f64], bandwidth: f64) -> Result<Vec<AffinePiece>> {
    if breakpoints.len() < 2 {
        return Err(Error::InvalidParameter("need at least two breakpoints".into()));
    }
    if breakpoints.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParameter("breakpoints must be positive".into()));
    }
    if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "breakpoints must be strictly increasing".into(),
        ));
    }
    Ok(breakpoints
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let rise = bandwidth * ((hi - lo) / lo).ln_1p() / std::f64::consts::LN_2;
            let slope = rise / (hi - lo);
            AffinePiece {
                slope,
                intercept: bandwidth * lo.log2() - slope * lo,
            }
        })
        .collect())
}

/// Tangent of `B log2 t` at `t0`; an over-estimate for every `t > 0`.
pub fn taylor_f2(t0: f64, bandwidth: f64) -> Result<AffinePiece> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "expansion point t0 = {t0} must be > 0"
        )));
    }
    let slope = bandwidth / (t0 * std::f64::consts::LN_2);
    Ok(AffinePiece {
        slope,
        intercept: bandwidth * t0.log2() - slope * t0,
    })
}

/// Linearization data for one `(link, subchannel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkApprox {
    pub f1_pieces: Vec<AffinePiece>,
    pub f2_tangent: AffinePiece,
    pub breakpoints: Vec<f64>,
    pub noise: f64,
    /// Receive aggregate at the expansion point.
    pub s0: f64,
    /// Interference-plus-noise at the expansion point.
    pub t0: f64,
    /// Largest interference-plus-noise reachable inside the power box.
    pub t_max: f64,
    /// Upper bound on how negative the linearized capacity can get when the
    /// link itself transmits nothing (the tangent-minus-chord gap over
    /// `[noise, t_max]`).
    pub deficit_bound: f64,
    /// Upper bound on the exact capacity inside the power box.
    pub capacity_bound: f64,
}

impl LinkApprox {
    /// Linearized capacity for given aggregates.
    pub fn capacity(&self, s: f64, t: f64) -> f64 {
        envelope(&self.f1_pieces, s) - self.f2_tangent.eval(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityApprox {
    num_subchannels: usize,
    entries: Vec<LinkApprox>,
    pub expansion_point: PowerVector,
    pub segments: usize,
}

impl CapacityApprox {
    pub fn get(&self, link: LinkId, f: usize) -> &LinkApprox {
        &self.entries[link * self.num_subchannels + f]
    }

    pub fn num_links(&self) -> usize {
        self.entries.len().checked_div(self.num_subchannels).unwrap_or(0)
    }

    pub fn num_subchannels(&self) -> usize {
        self.num_subchannels
    }

    /// Linearized capacity of `(link, f)` at powers `p`.
    pub fn approx_capacity(&self, s: &Scenario, p: &PowerVector, link: LinkId, f: usize) -> f64 {
        let t = interference_plus_noise(s, p, link, f);
        let sig = s.gains.lambda[link][f] * p.get(link, f);
        self.get(link, f).capacity(t + sig, t)
    }
}

/// Geometric grid of `segments + 1` points on `[lo, hi]`, with the endpoints
/// exact.
fn geometric_grid(lo: f64, hi: f64, segments: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln();
    let mut out: Vec<f64> = (0..=segments)
        .map(|k| lo * (ratio * k as f64 / segments as f64).exp())
        .collect();
    out[0] = lo;
    out[segments] = hi;
    out.dedup();
    out
}

/// Inserts `v` into a sorted grid. An interior point that is numerically equal
/// is replaced so the grid passes through `v` exactly.
fn insert_breakpoint(grid: &mut Vec<f64>, v: f64) {
    const SAME: f64 = 1e-13;
    let close = |a: f64| (a - v).abs() <= SAME * v.abs();
    let last = grid.len() - 1;
    if close(grid[0]) || close(grid[last]) {
        return;
    }
    if let Some(k) = grid.iter().position(|&g| close(g)) {
        grid[k] = v;
        return;
    }
    let pos = grid.partition_point(|&g| g < v);
    grid.insert(pos, v);
}

/// Builds the linearization around `p0` with `segments` geometric chord
/// segments per `(link, subchannel)` plus one breakpoint at `s(p0)`.
pub fn build(s: &Scenario, p0: &PowerVector, segments: usize) -> Result<CapacityApprox> {
    if segments == 0 {
        return Err(Error::InvalidParameter("segments must be >= 1".into()));
    }
    let nl = s.num_links();
    let nf = s.num_subchannels();
    if p0.num_links() != nl || (nl > 0 && p0.num_subchannels() != nf) {
        return Err(Error::DimensionMismatch("expansion point vs scenario".into()));
    }
    if p0.as_slice().iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParameter("expansion point must be nonnegative".into()));
    }
    let bw = s.spectrum.bandwidth;
    let caps: Vec<f64> = (0..nl).map(|l| s.power_cap(l)).collect();
    let mut entries = Vec::with_capacity(nl * nf);
    for link in 0..nl {
        for f in 0..nf {
            let noise = s.spectrum.noise_power[link][f];
            let t0 = interference_plus_noise(s, p0, link, f);
            let s0 = t0 + s.gains.lambda[link][f] * p0.get(link, f);
            let t_max = noise
                + (0..nl)
                    .filter(|&o| o != link)
                    .map(|o| s.gains.gamma(link, o, f) * caps[o])
                    .sum::<f64>();
            let s_max = (t_max + s.gains.lambda[link][f] * caps[link]).max(s0);
            let f2_tangent = taylor_f2(t0, bw)?;

            let (breakpoints, f1_pieces) = if s_max <= noise * (1.0 + 1e-12) {
                (
                    vec![noise],
                    vec![AffinePiece {
                        slope: 0.0,
                        intercept: bw * noise.log2(),
                    }],
                )
            } else {
                let mut grid = geometric_grid(noise, s_max, segments);
                insert_breakpoint(&mut grid, s0);
                let pieces = chord_pieces(&grid, bw)?;
                (grid, pieces)
            };

            let deficit = |t: f64| f2_tangent.eval(t) - envelope(&f1_pieces, t);
            let deficit_bound = deficit(noise).max(deficit(t_max)).max(0.0);
            let capacity_bound = bw * (s.gains.lambda[link][f] * caps[link] / noise).ln_1p() / std::f64::consts::LN_2;
            entries.push(LinkApprox {
                f1_pieces,
                f2_tangent,
                breakpoints,
                noise,
                s0,
                t0,
                t_max,
                deficit_bound,
                capacity_bound,
            });
        }
    }
    Ok(CapacityApprox {
        num_subchannels: nf,
        entries,
        expansion_point: p0.clone(),
        segments,
    })
}

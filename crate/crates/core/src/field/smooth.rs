//! Mollifiers and the Gaussian convolution semigroup.

use serde::{Deserialize, Serialize};

use super::window::along_axis;
use super::{Boundary, GridField};
use crate::error::{Error, Result};
use crate::linalg::Sym2;
use crate::quad::adaptive_simpson;

/// Unnormalized bump `exp(-1 / (1 - s^2))` for `|s| < 1`, else 0.
pub fn bump(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// `∫_{|x|<1} bump(|x|) dx` in dimension `d`.
pub fn bump_mass(d: usize) -> f64 {
    match d {
        1 => 2.0 * adaptive_simpson(&bump, 0.0, 1.0, 1e-14),
        2 => 2.0 * std::f64::consts::PI * adaptive_simpson(&|r| r * bump(r), 0.0, 1.0, 1e-14),
        _ => panic!("dimension {d} not supported"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MollifierKind {
    /// `ρ_ν(x) = ν^{-d} ρ(x / ν)`, supported in the ball of radius ν.
    Space,
    /// One-sided time mollifier supported in `(-δ, 0)`.
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub kind: MollifierKind,
    pub width: f64,
}

impl MollifierSpec {
    pub fn space(nu: f64) -> Result<Self> {
        Self::checked(MollifierKind::Space, nu)
    }

    pub fn time(delta: f64) -> Result<Self> {
        Self::checked(MollifierKind::Time, delta)
    }

    fn checked(kind: MollifierKind, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Config(format!("mollifier width must be positive, got {width}")));
        }
        Ok(MollifierSpec { kind, width })
    }

    /// Continuous density at `x` (distance from the centre for `Space`, time
    /// offset for `Time`).
    pub fn density(&self, x: f64, d: usize) -> f64 {
        match self.kind {
            MollifierKind::Space => bump(x / self.width) / (bump_mass(d) * self.width.powi(d as i32)),
            MollifierKind::Time => {
                let s = (2.0 * x + self.width) / self.width;
                2.0 * bump(s) / (bump_mass(1) * self.width)
            }
        }
    }

    /// Supremum of the continuous space density.
    pub fn peak(&self, d: usize) -> f64 {
        (-1.0f64).exp() / (bump_mass(d) * self.width.powi(d as i32))
    }

    /// Space mollifier centred at `center`, sampled on the lattice of `like`
    /// and normalized to unit discrete mass. If the support misses every node,
    /// the nearest node carries the full mass.
    pub fn on_grid(&self, like: &GridField, center: [f64; 2]) -> GridField {
        assert_eq!(self.kind, MollifierKind::Space, "on_grid needs a space mollifier");
        let vals: Vec<f64> = like
            .coords()
            .map(|x| {
                let dx = x[0] - center[0];
                let dy = if like.dim() == 2 { x[1] - center[1] } else { 0.0 };
                bump(dx.hypot(dy) / self.width)
            })
            .collect();
        let mut g = like.with_values(vals);
        let mass = g.integral();
        if mass > 0.0 {
            let s = 1.0 / mass;
            g.values_mut().iter_mut().for_each(|v| *v *= s);
        } else {
            let k = like.nearest_index(center);
            g.values_mut()[k] = 1.0 / like.cell_volume();
        }
        g
    }

    /// Weights `w_k` at lags `s = -k dt`, `k ≥ 1`, summing to one.
    pub fn time_weights(&self, dt: f64) -> Vec<(usize, f64)> {
        assert_eq!(self.kind, MollifierKind::Time, "time_weights needs a time mollifier");
        let kmax = (self.width / dt).ceil() as usize;
        let mut w: Vec<(usize, f64)> = (1..=kmax)
            .map(|k| (k, self.density(-(k as f64) * dt, 1)))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        if w.is_empty() {
            return vec![(1, 1.0)];
        }
        let total: f64 = w.iter().map(|p| p.1).sum();
        w.iter_mut().for_each(|p| p.1 /= total);
        w
    }
}

/// Normalized samples of the centred Gaussian with variance `var` at lattice
/// offsets `-r..=r` (spacing `h`).
fn gaussian_taps(var: f64, h: f64) -> (isize, Vec<f64>) {
    let sigma = var.sqrt();
    let r = ((8.0 * sigma / h).ceil() as isize).max(1);
    let mut w: Vec<f64> = (-r..=r)
        .map(|k| {
            let x = k as f64 * h;
            (-x * x / (2.0 * var)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    (r, w)
}

fn convolve_line(src: &[f64], taps: &[f64], r: isize, boundary: Boundary, out: &mut [f64]) {
    let n = src.len();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, w) in taps.iter().enumerate() {
            let p = i as isize + k as isize - r;
            acc += w * src[boundary.index(p, n)];
        }
        *o = acc;
    }
}

/// Heat flow `∂_t φ = tr(a0 D²φ)` at time `t` by discrete convolution with
/// the sampled, mass-normalized kernel (covariance `2 t a0`).
///
/// Values outside the lattice follow the boundary policy, so mass is only
/// conserved up to what crosses the edge. Diagonal `a0` is applied axis by
/// axis; a rank-one `a0` is applied along its range with bilinear sampling;
/// general `a0` uses the full two-dimensional kernel.
pub fn gaussian_convolve(f: &GridField, a0: &Sym2, t: f64) -> GridField {
    let h = f.h();
    if t <= 0.0 {
        return f.clone();
    }
    let b = f.boundary();
    if f.dim() == 1 {
        let var = 2.0 * a0.xx.max(0.0) * t;
        if var <= 0.0 {
            return f.clone();
        }
        let (r, w) = gaussian_taps(var, h);
        return along_axis(f, 0, |src, out| convolve_line(src, &w, r, b, out));
    }
    let scale = a0.norm().max(1e-300);
    let (lo, hi, v) = a0.eigen();
    let lo = if lo.abs() <= 1e-14 * scale { 0.0 } else { lo };
    if hi <= 0.0 {
        return f.clone();
    }
    if a0.xy.abs() <= 1e-14 * scale {
        let mut g = f.clone();
        for (axis, lam) in [(0, a0.xx), (1, a0.yy)] {
            let var = 2.0 * lam.max(0.0) * t;
            if var > 0.0 {
                let (r, w) = gaussian_taps(var, h);
                g = along_axis(&g, axis, |src, out| convolve_line(src, &w, r, b, out));
            }
        }
        return g;
    }
    if lo == 0.0 {
        // Rank one: 1-D kernel along v, off-lattice values by bilinear sampling.
        let var = 2.0 * hi * t;
        let (r, w) = gaussian_taps(var, h);
        let mut out = vec![0.0; f.len()];
        for (k, x) in f.coords().enumerate() {
            let mut acc = 0.0;
            for (m, wk) in w.iter().enumerate() {
                let s = (m as isize - r) as f64 * h;
                acc += wk * f.sample([x[0] + s * v[0], x[1] + s * v[1]]);
            }
            out[k] = acc;
        }
        return f.with_values(out);
    }
    // Full kernel exp(-x^T a0^{-1} x / (4 t)).
    let det = a0.det();
    let inv = Sym2::new(a0.yy / det, -a0.xy / det, a0.xx / det);
    let r = ((8.0 * (2.0 * hi * t).sqrt() / h).ceil() as isize).max(1);
    let mut taps = Vec::new();
    for di in -r..=r {
        for dj in -r..=r {
            let x = [di as f64 * h, dj as f64 * h];
            let q = inv.xx * x[0] * x[0] + 2.0 * inv.xy * x[0] * x[1] + inv.yy * x[1] * x[1];
            let w = (-q / (4.0 * t)).exp();
            if w > 1e-300 {
                taps.push((di, dj, w));
            }
        }
    }
    let total: f64 = taps.iter().map(|p| p.2).sum();
    let [nx, ny] = f.shape();
    let mut out = vec![0.0; f.len()];
    for i in 0..nx {
        for j in 0..ny {
            let mut acc = 0.0;
            for &(di, dj, w) in &taps {
                acc += w * f.at(i as isize + di, j as isize + dj);
            }
            out[i * ny + j] = acc / total;
        }
    }
    f.with_values(out)
}

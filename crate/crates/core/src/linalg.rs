//! Small dense linear algebra for d <= 2.

use serde::{Deserialize, Serialize};

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`. In one space dimension only
/// `xx` is meaningful and the other entries are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { xx: 0.0, xy: 0.0, yy: 0.0 };
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub fn scalar(a: f64) -> Self {
        Sym2 { xx: a, xy: 0.0, yy: 0.0 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Sym2 { xx: a, xy: 0.0, yy: b }
    }

    /// `v vᵀ`.
    pub fn outer(v: [f64; 2]) -> Self {
        Sym2 { xx: v[0] * v[0], xy: v[0] * v[1], yy: v[1] * v[1] }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// `tr(self * other)` for symmetric arguments.
    pub fn frob(&self, other: &Sym2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn norm(&self) -> f64 {
        self.frob(self).sqrt()
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2 { xx: self.xx + o.xx, xy: self.xy + o.xy, yy: self.yy + o.yy }
    }

    pub fn sub(&self, o: &Sym2) -> Sym2 {
        Sym2 { xx: self.xx - o.xx, xy: self.xy - o.xy, yy: self.yy - o.yy }
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2 { xx: self.xx * s, xy: self.xy * s, yy: self.yy * s }
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    /// Eigen-decomposition: `(λ_min, λ_max, unit eigenvector of λ_max)`.
    pub fn eigen(&self) -> (f64, f64, [f64; 2]) {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let rad = half_diff.hypot(self.xy);
        let hi = mean + rad;
        let lo = mean - rad;
        let v = if rad == 0.0 {
            [1.0, 0.0]
        } else {
            // (xy, hi - xx) and (hi - yy, xy) both span the eigenspace; pick the
            // better conditioned one.
            let a = [self.xy, hi - self.xx];
            let b = [hi - self.yy, self.xy];
            let (v, n) = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) {
                (a, a[0].hypot(a[1]))
            } else {
                (b, b[0].hypot(b[1]))
            };
            [v[0] / n, v[1] / n]
        };
        (lo, hi, v)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen().1
    }

    /// Rebuild from eigenpairs after mapping each eigenvalue through `f`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Sym2 {
        let (lo, hi, v) = self.eigen();
        let w = [-v[1], v[0]];
        Sym2::outer(v).scale(f(hi)).add(&Sym2::outer(w).scale(f(lo)))
    }

    /// Frobenius projection onto the PSD cone.
    pub fn psd_part(&self) -> Sym2 {
        self.map_spectrum(|l| l.max(0.0))
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }
}

pub fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_swap_matrix() {
        let (lo, hi, v) = Sym2::new(0.0, 1.0, 0.0).eigen();
        assert!((lo + 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        assert!((v[0] - v[1]).abs() < 1e-15);
    }

    #[test]
    fn psd_part_clips_negative_eigenvalue() {
        let p = Sym2::diag(2.0, -3.0).psd_part();
        assert!((p.xx - 2.0).abs() < 1e-15 && p.yy.abs() < 1e-15 && p.xy.abs() < 1e-15);
    }

    #[test]
    fn map_spectrum_identity_roundtrip() {
        let a = Sym2::new(1.3, -0.4, 0.7);
        let b = a.map_spectrum(|l| l);
        assert!(a.sub(&b).norm() < 1e-14);
    }
}

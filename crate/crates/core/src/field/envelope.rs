//! Quadratic sup- and inf-convolution by lower envelopes of parabolas.

use super::window::along_axis;
use super::{Boundary, GridField};

/// `out[p] = min_q { g[q] + c (p - q)^2 }`, exact, O(n).
fn lower_envelope(g: &[f64], c: f64, out: &mut [f64]) {
    let n = g.len();
    if n == 0 {
        return;
    }
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let inter = |q: usize, r: usize| {
        let (qf, rf) = (q as f64, r as f64);
        ((g[q] + c * qf * qf) - (g[r] + c * rf * rf)) / (2.0 * c * (qf - rf))
    };
    for q in 1..n {
        let mut s = inter(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = inter(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while z[k + 1] < p as f64 {
            k += 1;
        }
        let d = p as f64 - v[k] as f64;
        // Rounding in the breakpoints can select a neighbour that is tied
        // with the node itself; never exceed the node's own value.
        *o = (g[v[k]] + c * d * d).min(g[p]);
    }
}

fn line_supconv(src: &[f64], c: f64, boundary: Boundary, out: &mut [f64]) {
    let n = src.len();
    let neg: Vec<f64> = match boundary {
        // Points beyond the edge carry the edge value at a larger distance, so
        // they never win against the edge node itself.
        Boundary::ConstantExtension => src.iter().map(|v| -v).collect(),
        Boundary::Periodic => (0..3 * n).map(|k| -src[k % n]).collect(),
    };
    let mut env = vec![0.0; neg.len()];
    lower_envelope(&neg, c, &mut env);
    let off = if boundary == Boundary::Periodic { n } else { 0 };
    for i in 0..n {
        out[i] = -env[i + off];
    }
}

/// `g(x) = max_y { f(y) - |x - y|^2 / (2 eps^2) }` over lattice points `y`.
///
/// Periodic fields wrap once in each direction, which is exact when
/// `eps` is small against the period.
pub fn supconvolve(f: &GridField, eps: f64) -> GridField {
    assert!(eps > 0.0, "eps must be positive");
    let c = f.h() * f.h() / (2.0 * eps * eps);
    let b = f.boundary();
    let mut g = along_axis(f, 0, |src, out| line_supconv(src, c, b, out));
    if f.dim() == 2 {
        g = along_axis(&g, 1, |src, out| line_supconv(src, c, b, out));
    }
    g
}

/// `g(x) = min_y { f(y) + |x - y|^2 / (2 eps^2) }`.
pub fn infconvolve(f: &GridField, eps: f64) -> GridField {
    supconvolve(&f.map(|v| -v), eps).map(|v| -v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(f: &GridField, eps: f64) -> Vec<f64> {
        let pts: Vec<[f64; 2]> = f.coords().collect();
        pts.iter()
            .map(|x| {
                pts.iter()
                    .zip(f.values())
                    .map(|(y, v)| v - crate::linalg::dist2(*x, *y).powi(2) / (2.0 * eps * eps))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    #[test]
    fn constant_is_fixed() {
        let f = GridField::from_fn_1d(-1.0, 1.0, 0.05, |_| 0.7);
        assert!(supconvolve(&f, 0.3).values().iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn delta_gives_parabola() {
        let eps = 0.2;
        let mut f = GridField::from_fn_1d(-1.0, 1.0, 0.01, |_| 0.0);
        let k = f.nearest_index([0.0, 0.0]);
        f.values_mut()[k] = 1.0;
        let g = supconvolve(&f, eps);
        for (k, x) in f.coords().enumerate() {
            let expect = (1.0 - x[0] * x[0] / (2.0 * eps * eps)).max(0.0);
            assert!((g.values()[k] - expect).abs() < 1e-12, "{}", x[0]);
        }
    }

    #[test]
    fn matches_brute_force_1d_and_2d() {
        let f = GridField::from_fn_1d(-1.0, 1.0, 0.05, |x| (9.0 * x).sin() + x * x);
        let g = supconvolve(&f, 0.15);
        for (a, b) in g.values().iter().zip(brute(&f, 0.15)) {
            assert!((a - b).abs() < 1e-12);
        }
        let f = GridField::from_fn_2d(-1.0, 1.0, 0.1, |x, y| (4.0 * x * y).cos() - y);
        let g = supconvolve(&f, 0.25);
        for (a, b) in g.values().iter().zip(brute(&f, 0.25)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dominates_input_and_decreases_with_eps() {
        let f = GridField::from_fn_1d(-1.0, 1.0, 0.02, |x| if x > 0.1 { 1.0 } else { (5.0 * x).sin() });
        let wide = supconvolve(&f, 0.3);
        let narrow = supconvolve(&f, 0.05);
        for k in 0..f.len() {
            assert!(narrow.values()[k] >= f.values()[k]);
            assert!(wide.values()[k] >= narrow.values()[k]);
        }
    }

    #[test]
    fn inf_convolution_is_below() {
        let f = GridField::from_fn_1d(-1.0, 1.0, 0.02, |x| x.abs());
        let g = infconvolve(&f, 0.1);
        assert!(g.values().iter().zip(f.values()).all(|(a, b)| a <= b));
    }

    #[test]
    fn periodic_wraps() {
        let mut f = GridField::from_fn_1d(0.0, 0.99, 0.01, |_| 0.0).with_boundary(Boundary::Periodic);
        f.values_mut()[0] = 1.0;
        let g = supconvolve(&f, 0.05);
        let last = g.values()[g.len() - 1];
        assert!((last - (1.0 - 0.0001 / 0.005)).abs() < 1e-12);
    }
}

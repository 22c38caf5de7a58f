//! Finite control sets, the Hamiltonian they define, the drift hull and the
//! two Hamiltonian seminorms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist2, dot2, Sym2};

/// One control: drift `b` and diffusion `a = σ σᵀ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub drift: [f64; 2],
    pub diffusion: Sym2,
}

impl Control {
    pub fn new(drift: [f64; 2], diffusion: Sym2) -> Self {
        Control { drift, diffusion }
    }

    /// Scalar control in one dimension.
    pub fn scalar(b: f64, a: f64) -> Self {
        Control { drift: [b, 0.0], diffusion: Sym2::scalar(a) }
    }

    /// Build `a = Σ_k c_k c_kᵀ` from the columns `c_k` of a `d × K` factor.
    pub fn from_factor(drift: [f64; 2], columns: &[[f64; 2]]) -> Self {
        let diffusion = columns.iter().fold(Sym2::ZERO, |acc, c| acc.add(&Sym2::outer(*c)));
        Control { drift, diffusion }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlledOperator {
    dim: usize,
    controls: Vec<Control>,
}

impl ControlledOperator {
    pub fn new(dim: usize, controls: Vec<Control>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Shape(format!("dimension {dim} not in {{1, 2}}")));
        }
        if controls.is_empty() {
            return Err(Error::Config("control set is empty".into()));
        }
        let mut controls = controls;
        for (k, c) in controls.iter_mut().enumerate() {
            if !(c.drift[0].is_finite() && c.drift[1].is_finite() && c.diffusion.is_finite()) {
                return Err(Error::Config(format!("control {k} has non-finite entries")));
            }
            if dim == 1 {
                c.drift[1] = 0.0;
                if c.diffusion.xy != 0.0 || c.diffusion.yy != 0.0 {
                    return Err(Error::Shape(format!("control {k}: 2x2 diffusion in one dimension")));
                }
            }
            let scale = c.diffusion.norm().max(1.0);
            if !c.diffusion.is_psd(1e-12 * scale) {
                return Err(Error::Config(format!("control {k}: diffusion is not positive semidefinite")));
            }
        }
        Ok(ControlledOperator { dim, controls })
    }

    /// One-dimensional operator from `(b, a)` pairs.
    pub fn scalar(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(1, pairs.iter().map(|&(b, a)| Control::scalar(b, a)).collect())
    }

    /// Product control set `{(b + b̃, a + ã)}`, the operator of `H + H̃`.
    pub fn sum(&self, other: &ControlledOperator) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Shape("operators of different dimension".into()));
        }
        let mut out = Vec::with_capacity(self.controls.len() * other.controls.len());
        for a in &self.controls {
            for b in &other.controls {
                out.push(Control {
                    drift: [a.drift[0] + b.drift[0], a.drift[1] + b.drift[1]],
                    diffusion: a.diffusion.add(&b.diffusion),
                });
            }
        }
        Self::new(self.dim, out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    pub fn max_trace(&self) -> f64 {
        self.controls.iter().map(|c| c.diffusion.trace()).fold(0.0, f64::max)
    }

    /// `max_ξ Σ_k |b_k(ξ)|`.
    pub fn max_drift_l1(&self) -> f64 {
        self.controls.iter().map(|c| c.drift[0].abs() + c.drift[1].abs()).fold(0.0, f64::max)
    }
}

/// `sup_ξ { b(ξ)·p + tr(a(ξ) X) }`.
pub fn hamiltonian(op: &ControlledOperator, p: &[f64], x: &Sym2) -> Result<f64> {
    if p.len() != op.dim {
        return Err(Error::Shape(format!("gradient of length {} for d = {}", p.len(), op.dim)));
    }
    if op.dim == 1 && (x.xy != 0.0 || x.yy != 0.0) {
        return Err(Error::Shape("2x2 Hessian for d = 1".into()));
    }
    let p2 = [p[0], if op.dim == 2 { p[1] } else { 0.0 }];
    Ok(op
        .controls
        .iter()
        .map(|c| dot2(c.drift, p2) + c.diffusion.frob(x))
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Minimizer {
    /// Centre `b₀` of the smallest ball containing the drifts.
    Drift([f64; 2]),
    /// Trace-maximal `a₀` below every diffusion.
    Diffusion(Sym2),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormResult {
    pub value: f64,
    pub minimizer: Minimizer,
    pub tolerance_achieved: f64,
    pub iterations: usize,
}

/// Smallest circle through or around a set of at most a handful of points,
/// by enumerating pairs and triples.
fn small_meb(pts: &[[f64; 2]]) -> ([f64; 2], f64) {
    if pts.len() == 1 {
        return (pts[0], 0.0);
    }
    let covers = |c: [f64; 2], r: f64| pts.iter().all(|p| dist2(*p, c) <= r * (1.0 + 1e-12) + 1e-15);
    let mut best: Option<([f64; 2], f64)> = None;
    let consider = |c: [f64; 2], r: f64, best: &mut Option<([f64; 2], f64)>| {
        if best.is_none_or(|b| r < b.1) && covers(c, r) {
            *best = Some((c, r));
        }
    };
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let c = [0.5 * (pts[i][0] + pts[j][0]), 0.5 * (pts[i][1] + pts[j][1])];
            consider(c, 0.5 * dist2(pts[i], pts[j]), &mut best);
            for k in j + 1..pts.len() {
                if let Some((c, r)) = circumcircle(pts[i], pts[j], pts[k]) {
                    consider(c, r, &mut best);
                }
            }
        }
    }
    best.expect("a covering circle always exists among pairs and triples")
}

fn circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<([f64; 2], f64)> {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let scale = (bx * bx + by * by) * (cx * cx + cy * cy);
    if d.abs() <= 1e-14 * scale.sqrt().max(1e-300) {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Some(([a[0] + ux, a[1] + uy], ux.hypot(uy)))
}

/// `|H|_conv`: radius of the smallest ball containing all drifts.
///
/// Two dimensions use core-set iteration: solve the ball of a small core set
/// exactly, add the farthest outside point, repeat.
pub fn seminorm_conv(op: &ControlledOperator) -> SeminormResult {
    let pts: Vec<[f64; 2]> = op.controls.iter().map(|c| c.drift).collect();
    if op.dim == 1 {
        let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return SeminormResult {
            value: 0.5 * (hi - lo),
            minimizer: Minimizer::Drift([0.5 * (lo + hi), 0.0]),
            tolerance_achieved: 0.0,
            iterations: 1,
        };
    }
    let far = |c: [f64; 2]| -> (usize, f64) {
        pts.iter().enumerate().fold((0, -1.0), |(bi, bd), (i, p)| {
            let d = dist2(*p, c);
            if d > bd {
                (i, d)
            } else {
                (bi, bd)
            }
        })
    };
    let (i0, _) = far(pts[0]);
    let (i1, _) = far(pts[i0]);
    let mut core = vec![pts[i0]];
    if i1 != i0 {
        core.push(pts[i1]);
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (c, r) = small_meb(&core);
        let (k, d) = far(c);
        let tol = 1e-10 * r.max(1e-300);
        if d <= r + tol || iterations > pts.len() + 2 {
            return SeminormResult {
                value: r.max(d),
                minimizer: Minimizer::Drift(c),
                tolerance_achieved: (d - r).max(0.0),
                iterations,
            };
        }
        core.push(pts[k]);
        // Keep only the points that define the current ball plus the newcomer.
        if core.len() > 6 {
            let (c2, r2) = small_meb(&core);
            core.retain(|p| dist2(*p, c2) >= r2 * (1.0 - 1e-9));
        }
    }
}

/// Worst violation of `0 ⪯ X ⪯ a_i`.
fn infeasibility(x: &Sym2, caps: &[Sym2]) -> f64 {
    let mut v = (-x.min_eigenvalue()).max(0.0);
    for a in caps {
        v = v.max(-(a.sub(x).min_eigenvalue()));
    }
    v.max(0.0)
}

const GOLDEN_STEPS: usize = 90;

/// Best point of a unimodal function on `[lo, hi]` by golden-section search.
/// Returns the best evaluated point, so a maximum sitting on the edge of a
/// feasible region is approached from the feasible side.
fn golden_max(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..GOLDEN_STEPS {
        if fc < fd {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        }
    }
    best
}

/// Root of a monotone `f` on `[lo, hi]` with `f(lo)` and `f(hi)` of opposite sign
/// (`inside` is the end where `f ≥ 0`); returns the feasible end of the bracket.
fn bisect_edge(mut inside: f64, mut outside: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (inside + outside);
        if f(mid) >= 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// `max tr X` over `0 ⪯ X ⪯ a_i` in two dimensions.
///
/// With `X = [[x, z], [z, y]]` the best `y` for given `(x, z)` is
/// `min_i (q_i − (r_i − z)² / (p_i − x))`, a jointly concave function, and
/// PSD-ness of `X` is `y ≥ z² / x`. Hence the optimal value is concave in `z`
/// and, for fixed `z`, concave in `x` on a feasible interval. Nested
/// golden-section searches resolve both to rounding level.
fn trace_bound_2d(caps: &[Sym2]) -> Sym2 {
    let scale = caps.iter().map(Sym2::norm).fold(0.0, f64::max);
    let pmin = caps.iter().map(|a| a.xx).fold(f64::INFINITY, f64::min);
    let ybest = |x: f64, z: f64| -> f64 {
        caps.iter()
            .map(|a| {
                let px = a.xx - x;
                let rz = a.xy - z;
                if px > 0.0 {
                    a.yy - rz * rz / px
                } else if rz == 0.0 {
                    a.yy
                } else {
                    f64::NEG_INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min)
    };
    if pmin <= 1e-14 * scale {
        let y = ybest(0.0, 0.0).max(0.0);
        return Sym2::new(0.0, 0.0, y);
    }
    let phi = |x: f64, z: f64| ybest(x, z) - z * z / x;
    let best_x = |z: f64| -> Option<(f64, f64)> {
        let (xs, ps) = golden_max(0.0, pmin, |x| phi(x, z));
        if ps < 0.0 {
            return None;
        }
        let lo = bisect_edge(xs, 0.0, |x| if x <= 0.0 { -1.0 } else { phi(x, z) });
        let hi = bisect_edge(xs, pmin, |x| if x >= pmin { -1.0 } else { phi(x, z) });
        Some(golden_max(lo, hi, |x| x + ybest(x, z)))
    };
    let penalty = 10.0 * (scale + 1.0);
    let zb = caps.iter().map(|a| (a.xx * a.yy).max(0.0).sqrt()).fold(f64::INFINITY, f64::min);
    let outer = |z: f64| match best_x(z) {
        Some((_, v)) => v,
        None => golden_max(0.0, pmin, |x| phi(x, z)).1 - penalty,
    };
    let (z, _) = if zb > 0.0 { golden_max(-zb, zb, outer) } else { (0.0, outer(0.0)) };
    let (x, _) = best_x(z).unwrap_or((0.0, 0.0));
    let y = ybest(x, z).max(if x > 0.0 { z * z / x } else { 0.0 });
    Sym2::new(x, z, y)
}

/// `|H|_diff = max_ξ tr a(ξ) − max{tr a₀ : 0 ⪯ a₀ ⪯ a(ξ) ∀ξ}`.
///
/// One dimension is closed form (`a₀ = min a_i`); two dimensions use
/// [`trace_bound_2d`]. The `Convergence` error is raised if the returned `a₀`
/// violates a constraint by more than `1e-9` relative; it then carries the
/// value of the feasible point `0`, a valid upper bound.
pub fn seminorm_diff(op: &ControlledOperator) -> Result<SeminormResult> {
    let caps: Vec<Sym2> = op.controls.iter().map(|c| c.diffusion).collect();
    let max_tr = caps.iter().map(Sym2::trace).fold(f64::NEG_INFINITY, f64::max);
    if op.dim == 1 {
        let lo = caps.iter().map(|a| a.xx).fold(f64::INFINITY, f64::min);
        return Ok(SeminormResult {
            value: max_tr - lo,
            minimizer: Minimizer::Diffusion(Sym2::scalar(lo)),
            tolerance_achieved: 0.0,
            iterations: 1,
        });
    }
    let scale = max_tr.max(1e-300);
    if caps.iter().all(|a| a.sub(&caps[0]).norm() <= 1e-15 * scale) {
        return Ok(SeminormResult {
            value: 0.0,
            minimizer: Minimizer::Diffusion(caps[0]),
            tolerance_achieved: 0.0,
            iterations: 0,
        });
    }
    let a0 = trace_bound_2d(&caps);
    let viol = infeasibility(&a0, &caps);
    if viol > 1e-9 * scale {
        return Err(Error::Convergence { iterations: GOLDEN_STEPS, best: max_tr });
    }
    Ok(SeminormResult {
        value: (max_tr - a0.trace()).max(0.0),
        minimizer: Minimizer::Diffusion(a0),
        tolerance_achieved: viol,
        iterations: GOLDEN_STEPS,
    })
}

/// Closed form for a commuting family (common eigenbasis): `T* = Σ_k min_i λ_ik`.
pub fn commuting_trace_bound(caps: &[Sym2]) -> Option<f64> {
    let scale = caps.iter().map(Sym2::norm).fold(0.0, f64::max).max(1e-300);
    // Find a shared eigenbasis from the first non-scalar member.
    let basis = caps
        .iter()
        .find(|a| (a.xx - a.yy).hypot(2.0 * a.xy) > 1e-12 * scale)
        .map(|a| a.eigen().2)
        .unwrap_or([1.0, 0.0]);
    let w = [-basis[1], basis[0]];
    let rayleigh = |a: &Sym2, v: [f64; 2]| a.xx * v[0] * v[0] + 2.0 * a.xy * v[0] * v[1] + a.yy * v[1] * v[1];
    for a in caps {
        let off = a.xx * basis[0] * w[0] + a.xy * (basis[0] * w[1] + basis[1] * w[0]) + a.yy * basis[1] * w[1];
        if off.abs() > 1e-10 * scale {
            return None;
        }
    }
    let l1 = caps.iter().map(|a| rayleigh(a, basis)).fold(f64::INFINITY, f64::min);
    let l2 = caps.iter().map(|a| rayleigh(a, w)).fold(f64::INFINITY, f64::min);
    Some(l1 + l2)
}

/// Convex hull of the drift points: an interval in one dimension, a
/// counter-clockwise polygon in two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexHullSet {
    dim: usize,
    vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl ConvexHullSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::from_points(1, &[[lo, 0.0], [hi, 0.0]])
    }

    pub fn point(p: [f64; 2]) -> Self {
        ConvexHullSet { dim: 2, vertices: vec![p] }
    }

    /// Hull by Andrew's monotone chain; collinear boundary points are dropped.
    pub fn from_points(dim: usize, pts: &[[f64; 2]]) -> Self {
        assert!(!pts.is_empty(), "hull of an empty set");
        if dim == 1 {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let vertices = if lo == hi { vec![[lo, 0.0]] } else { vec![[lo, 0.0], [hi, 0.0]] };
            return ConvexHullSet { dim: 1, vertices };
        }
        let mut p: Vec<[f64; 2]> = pts.to_vec();
        p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        p.dedup();
        if p.len() <= 2 {
            return ConvexHullSet { dim: 2, vertices: p };
        }
        let scale = p.iter().fold(0.0f64, |m, q| m.max(q[0].abs()).max(q[1].abs())).max(1e-300);
        let eps = 1e-14 * scale * scale;
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &q in &p {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= eps {
                lower.pop();
            }
            lower.push(q);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &q in p.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= eps {
                upper.pop();
            }
            upper.push(q);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        ConvexHullSet { dim: 2, vertices: lower }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold([0.0, 0.0], |a, v| [a[0] + v[0], a[1] + v[1]]);
        [s[0] / n, s[1] / n]
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            s += a[0] * b[1] - a[1] * b[0];
        }
        0.5 * s
    }

    /// `Some((lo, hi))` when the hull is an axis-aligned box (possibly degenerate).
    pub fn axis_box(&self) -> Option<([f64; 2], [f64; 2])> {
        let (lo, hi) = self.bounding_box();
        if self.dim == 1 || self.vertices.len() == 1 {
            return Some((lo, hi));
        }
        let w = hi[0] - lo[0];
        let h = hi[1] - lo[1];
        let scale = w.max(h);
        if self.vertices.len() == 2 {
            return (w <= 1e-14 * scale || h <= 1e-14 * scale).then_some((lo, hi));
        }
        ((self.area() - w * h).abs() <= 1e-12 * scale * scale).then_some((lo, hi))
    }

    /// Membership with absolute slack `tol`.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let v = &self.vertices;
        if self.dim == 1 {
            return p[0] >= v[0][0] - tol && p[0] <= v[v.len() - 1][0] + tol;
        }
        match v.len() {
            1 => dist2(p, v[0]) <= tol,
            2 => {
                let d = [v[1][0] - v[0][0], v[1][1] - v[0][1]];
                let len2 = dot2(d, d);
                let s = (dot2([p[0] - v[0][0], p[1] - v[0][1]], d) / len2).clamp(0.0, 1.0);
                dist2(p, [v[0][0] + s * d[0], v[0][1] + s * d[1]]) <= tol
            }
            n => (0..n).all(|i| {
                let a = v[i];
                let b = v[(i + 1) % n];
                let len = dist2(a, b);
                cross(a, b, p) >= -tol * len
            }),
        }
    }

    /// Support function `max_{c ∈ hull} c · p`.
    pub fn support(&self, p: [f64; 2]) -> f64 {
        self.vertices.iter().map(|v| dot2(*v, p)).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn drift_hull(op: &ControlledOperator) -> ConvexHullSet {
    let pts: Vec<[f64; 2]> = op.controls.iter().map(|c| c.drift).collect();
    ConvexHullSet::from_points(op.dim, &pts)
}

/// Default number of samples for a continuous control family.
pub const DEFAULT_FAMILY_SAMPLES: usize = 65;

/// Sample `ξ ↦ control(ξ)` at `n` uniform points of `[lo, hi]`.
pub fn sample_family(
    dim: usize,
    lo: f64,
    hi: f64,
    n: usize,
    control: impl Fn(f64) -> Control,
) -> Result<ControlledOperator> {
    if n == 0 || !(hi >= lo) {
        return Err(Error::Config(format!("bad family sampling: n = {n}, range [{lo}, {hi}]")));
    }
    let xs: Vec<Control> = (0..n)
        .map(|k| {
            let s = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
            control(lo + s * (hi - lo))
        })
        .collect();
    ControlledOperator::new(dim, xs)
}

/// Sample a family starting from `n0` points, doubling the resolution until
/// both seminorms move by less than `1e-3` between consecutive levels.
pub fn sample_family_checked(
    dim: usize,
    lo: f64,
    hi: f64,
    n0: usize,
    control: impl Fn(f64) -> Control,
) -> Result<ControlledOperator> {
    let seminorms = |op: &ControlledOperator| -> Result<(f64, f64)> {
        Ok((seminorm_conv(op).value, seminorm_diff(op)?.value))
    };
    let mut n = n0.max(2);
    let mut op = sample_family(dim, lo, hi, n, &control)?;
    let mut prev = seminorms(&op)?;
    while n <= 1 << 14 {
        let n2 = 2 * n - 1;
        let op2 = sample_family(dim, lo, hi, n2, &control)?;
        let next = seminorms(&op2)?;
        if (next.0 - prev.0).abs() < 1e-3 && (next.1 - prev.1).abs() < 1e-3 {
            return Ok(op);
        }
        n = n2;
        op = op2;
        prev = next;
    }
    Err(Error::Convergence { iterations: n, best: prev.0.max(prev.1) })
}

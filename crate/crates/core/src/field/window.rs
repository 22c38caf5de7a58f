//! Sliding suprema over cubes and convex structuring elements.

use std::collections::VecDeque;

use super::{Boundary, GridField, NormKind, NormValue};
use crate::controls::ConvexHullSet;
use crate::record::VerificationRecord;

/// Sliding maximum of `src` over offsets `lo..=hi` (monotone deque, O(n + hi - lo)).
/// Out-of-range indices follow `boundary`.
pub(crate) fn sliding_max_line(src: &[f64], lo: isize, hi: isize, boundary: Boundary, out: &mut [f64]) {
    debug_assert!(lo <= hi);
    let n = src.len();
    let val = |p: isize| src[boundary.index(p, n)];
    let width = hi - lo;
    let mut dq: VecDeque<isize> = VecDeque::with_capacity((width + 1) as usize);
    let mut p = lo;
    let end = n as isize - 1 + hi;
    while p <= end {
        let v = val(p);
        while let Some(&back) = dq.back() {
            if val(back) <= v {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(p);
        while let Some(&front) = dq.front() {
            if front < p - width {
                dq.pop_front();
            } else {
                break;
            }
        }
        let i = p - hi;
        if i >= 0 {
            out[i as usize] = val(*dq.front().unwrap());
        }
        p += 1;
    }
}

/// Apply a 1-D line operation along `axis` of a lattice.
pub(crate) fn along_axis(
    f: &GridField,
    axis: usize,
    mut op: impl FnMut(&[f64], &mut [f64]),
) -> GridField {
    let [nx, ny] = f.shape();
    let mut out = f.values().to_vec();
    if axis == 0 {
        let mut line = vec![0.0; nx];
        let mut res = vec![0.0; nx];
        for j in 0..ny {
            for i in 0..nx {
                line[i] = f.values()[i * ny + j];
            }
            op(&line, &mut res);
            for i in 0..nx {
                out[i * ny + j] = res[i];
            }
        }
    } else {
        let mut res = vec![0.0; ny];
        for i in 0..nx {
            op(&f.values()[i * ny..(i + 1) * ny], &mut res);
            out[i * ny..(i + 1) * ny].copy_from_slice(&res);
        }
    }
    f.with_values(out)
}

/// Separable sliding maximum of `f` (not of `|f|`) over the box of per-axis
/// offsets `[lo[k], hi[k]]`.
pub(crate) fn box_max(f: &GridField, lo: [isize; 2], hi: [isize; 2]) -> GridField {
    let b = f.boundary();
    let mut g = along_axis(f, 0, |src, out| sliding_max_line(src, lo[0], hi[0], b, out));
    if f.dim() == 2 {
        g = along_axis(&g, 1, |src, out| sliding_max_line(src, lo[1], hi[1], b, out));
    }
    g
}

/// Half-width of a window of radius `r` in cells: `round(r / h)`.
pub(crate) fn window_cells(r: f64, h: f64) -> isize {
    (r / h).round().max(0.0) as isize
}

/// `g(x) = max |f|` over the cube `x + [-r, r]^d` rasterized on the lattice.
///
/// Windows narrower than one cell reduce to `|f|`.
pub fn sliding_sup(f: &GridField, r: f64) -> GridField {
    let w = window_cells(r, f.h());
    box_max(&f.abs(), [-w, -w], [w, w])
}

/// Discrete int norm `h^d Σ_x max_{Q_r(x)} |f|`; `r = 1` gives the usual norm.
pub fn norm_int(f: &GridField, r: f64) -> NormValue {
    let value = sliding_sup(f, r).integral();
    NormValue { window_radius: Some(r), ..NormValue::simple(NormKind::Int, value) }
}

/// Checks `∫ sup_{Q_{r+ε}} f ≤ ((r+ε)/r)^d ∫ sup_{Q_r} f` on the lattice.
pub fn check_window_inequality(f: &GridField, r: f64, eps: f64) -> VerificationRecord {
    let d = f.dim() as i32;
    let wide = norm_int(f, r + eps).value;
    let narrow = norm_int(f, r).value;
    let factor = ((r + eps) / r).powi(d);
    let rhs = factor * narrow;
    // Rounding of r/h to whole cells is the only discretization; r/h and
    // (r+ε)/h integral make the lattice statement exact.
    let tol = 1e-12 * rhs.abs().max(1.0);
    VerificationRecord::new("window-inequality", "window enlargement bound", wide, rhs, tol, "1e-12 * max(rhs, 1)")
        .param("r", r)
        .param("eps", eps)
        .param("h", f.h())
        .param("ratio", if narrow > 0.0 { wide / narrow } else { 0.0 })
        .param("bound", factor)
}

/// `g(x) = max f` over lattice points of `x + t·hull`.
///
/// Axis-aligned boxes go through the separable sliding maximum; general convex
/// polygons are rasterized by a point-in-polygon test. If the scaled hull
/// contains no lattice offset, the offset nearest to its centroid is used.
pub fn dilate_by_hull(f: &GridField, hull: &ConvexHullSet, t: f64) -> GridField {
    let h = f.h();
    let eps = 1e-9;
    if t <= 0.0 {
        return f.clone();
    }
    if let Some((lo, hi)) = hull.axis_box() {
        let mut lo_c = [0isize; 2];
        let mut hi_c = [0isize; 2];
        let axes = f.dim();
        for k in 0..axes {
            let a = (t * lo[k] / h - eps).ceil() as isize;
            let b = (t * hi[k] / h + eps).floor() as isize;
            if a <= b {
                lo_c[k] = a;
                hi_c[k] = b;
            } else {
                let m = (t * 0.5 * (lo[k] + hi[k]) / h).round() as isize;
                lo_c[k] = m;
                hi_c[k] = m;
            }
        }
        return box_max(f, lo_c, hi_c);
    }
    // General polygon (d = 2).
    let verts = hull.vertices();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for v in verts {
        xmin = xmin.min(v[0]);
        xmax = xmax.max(v[0]);
        ymin = ymin.min(v[1]);
        ymax = ymax.max(v[1]);
    }
    let mut offsets = Vec::new();
    let i0 = (t * xmin / h - eps).ceil() as isize;
    let i1 = (t * xmax / h + eps).floor() as isize;
    let j0 = (t * ymin / h - eps).ceil() as isize;
    let j1 = (t * ymax / h + eps).floor() as isize;
    for i in i0..=i1 {
        for j in j0..=j1 {
            let p = [i as f64 * h / t, j as f64 * h / t];
            if hull.contains(p, 1e-9 * (1.0 + h / t)) {
                offsets.push((i, j));
            }
        }
    }
    if offsets.is_empty() {
        let c = hull.centroid();
        offsets.push(((t * c[0] / h).round() as isize, (t * c[1] / h).round() as isize));
    }
    let [nx, ny] = f.shape();
    let mut out = vec![0.0; f.len()];
    for i in 0..nx {
        for j in 0..ny {
            let mut m = f64::NEG_INFINITY;
            for &(di, dj) in &offsets {
                m = m.max(f.at(i as isize + di, j as isize + dj));
            }
            out[i * ny + j] = m;
        }
    }
    f.with_values(out)
}

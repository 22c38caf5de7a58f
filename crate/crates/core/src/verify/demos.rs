//! Explicit data sequences on which `L¹` stability fails, and the `L∞_int`
//! bound that replaces it.

use rayon::prelude::*;

use super::VerifyOptions;
use crate::error::Result;
use crate::field::{norm_int, supconvolve, GridField, MollifierSpec};
use crate::hjb::{evolve, Hamiltonian, HjbProblem, SchemeConfig};
use crate::oracle::{bump_peak, modulus_upper_analytic, u_profile};
use crate::record::VerificationRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct DemoParams {
    pub h: f64,
    /// Time of the eikonal mass demo.
    pub t_mass: f64,
    pub n_mass: Vec<usize>,
    /// Time of the nonpositive-data demo (at most 1/4).
    pub t_gap: f64,
    pub n_gap: Vec<usize>,
    /// `(x, t)` of the blow-up demo.
    pub point: (f64, f64),
    pub n_blowup: Vec<usize>,
}

impl DemoParams {
    pub fn for_options(o: &VerifyOptions) -> Self {
        DemoParams {
            h: o.h(1.0 / 400.0),
            t_mass: 0.5,
            n_mass: vec![8, 16, 32, 64],
            t_gap: 0.2,
            n_gap: vec![4, 8, 16, 32],
            point: (0.5, 0.1),
            n_blowup: vec![4, 8, 16, 32],
        }
    }
}

fn solve(ham: Hamiltonian, init: GridField, t: f64) -> Result<GridField> {
    Ok(evolve(&HjbProblem::new(ham, init)?, t, &SchemeConfig::default(), &[t])?.remove(0))
}

/// `(1 + ω̂(t|H|_diff))(1 + t|H|_conv)^d ‖φ₀‖_int` against `‖G_tφ₀‖_int`.
fn int_bound_record(ham: &Hamiltonian, phi0: &GridField, phit: &GridField, t: f64, label: &str) -> Result<VerificationRecord> {
    let (conv, diff) = ham.seminorms(1)?;
    let omega = if diff > 0.0 { modulus_upper_analytic(t * diff, 1).0 } else { 0.0 };
    let n0 = norm_int(phi0, 1.0).value;
    let lhs = norm_int(phit, 1.0).value;
    let rhs = (1.0 + omega) * (1.0 + t * conv) * n0;
    Ok(VerificationRecord::new("instability-int-bound", "int-norm bound", lhs, rhs, phi0.h().sqrt() * rhs, "sqrt(h) rhs")
        .param("t", t)
        .param("conv", conv)
        .param("diff", diff)
        .note(label.to_string()))
}

/// Eikonal solutions from `(1 − n|x|)⁺` converge to `1_{[−t, t]}` although
/// the data vanish in `L¹`.
fn eikonal_mass(p: &DemoParams) -> Result<Vec<VerificationRecord>> {
    let t = p.t_mass;
    let h = p.h;
    let runs = p
        .n_mass
        .par_iter()
        .map(|&n| {
            let nf = n as f64;
            let phi0 = GridField::from_fn_1d(-1.5, 1.5, h, |x| (1.0 - nf * x.abs()).max(0.0));
            let phit = solve(Hamiltonian::Eikonal, phi0.clone(), t)?;
            Ok((n, phi0, phit))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (n, phi0, phit) in &runs {
        let nf = *n as f64;
        let (m0, mt) = (phi0.integral(), phit.integral());
        out.push(
            VerificationRecord::new("instability-eikonal-mass", "L1 instability, nonnegative data", (mt - (2.0 * t + 1.0 / nf)).abs(), 0.0, 4.0 * h, "4 h")
                .param("n", nf)
                .param("mass", mt)
                .param("data_mass", m0)
                .param("h", h),
        );
    }
    if let Some((n, phi0, phit)) = runs.last() {
        let mt = phit.integral();
        out.push(
            VerificationRecord::new("instability-eikonal-limit", "L1 instability, nonnegative data", (mt - 2.0 * t).abs(), 0.0, 0.05, "0.05")
                .param("n", *n as f64)
                .param("mass", mt),
        );
        out.push(
            VerificationRecord::new("instability-eikonal-data", "L1 instability, nonnegative data", phi0.integral(), 0.02, 0.0, "none")
                .param("n", *n as f64),
        );
        out.push(int_bound_record(&Hamiltonian::Eikonal, phi0, phit, t, "eikonal")?);
    }
    Ok(out)
}

fn g(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0 - r
    } else {
        0.0
    }
}

/// Nonpositive data `−g(|x|)` perturbed by `1_{[−1/n, 1/n]}`: the perturbation
/// vanishes in `L¹` but the solutions stay `2t` apart.
fn nonpositive_gap(p: &DemoParams) -> Result<Vec<VerificationRecord>> {
    let t = p.t_gap;
    let h = p.h;
    let base = GridField::from_fn_1d(-3.0, 3.0, h, |x| -g(x.abs()));
    let phi = solve(Hamiltonian::Eikonal, base.clone(), t)?;
    let runs = p
        .n_gap
        .par_iter()
        .map(|&n| {
            let w = 1.0 / n as f64;
            let bumped = base.with_values(
                base.coords().zip(base.values()).map(|(x, v)| v + if x[0].abs() <= w { 1.0 } else { 0.0 }).collect(),
            );
            // Continuous data above the discontinuous ones, converging in L¹.
            let smooth = supconvolve(&bumped, 0.25 * w);
            let a = solve(Hamiltonian::Eikonal, bumped.clone(), t)?;
            let b = solve(Hamiltonian::Eikonal, smooth.clone(), t)?;
            let gap = |f: &GridField| f.zip_map(&phi, |x, y| x - y).map(|d| d.integral());
            let data = |f: &GridField| f.zip_map(&base, |x, y| x - y).map(|d| d.l1_norm());
            Ok((n, gap(&a)?, gap(&b)?, data(&bumped)?, data(&smooth)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (n, ga, gb, da, db) in runs {
        for (kind, gap, dist) in [("discontinuous", ga, da), ("regularized", gb, db)] {
            out.push(
                VerificationRecord::new(format!("instability-nonpositive-{kind}"), "L1 instability, nonpositive data", 2.0 * t, gap, 0.05, "0.05")
                    .param("n", n as f64)
                    .param("t", t)
                    .param("data_distance", dist)
                    .param("h", h),
            );
        }
    }
    Ok(out)
}

/// `(∂²φ)⁺` from `nρ(nx)`: the value at a fixed point stays above
/// `n c U(|x|/√t)` and grows without bound.
fn blowup(p: &DemoParams) -> Result<Vec<VerificationRecord>> {
    let (x, t) = p.point;
    let h = p.h;
    let c = bump_peak(1);
    let runs = p
        .n_blowup
        .par_iter()
        .map(|&n| {
            let like = GridField::from_fn_1d(-2.0, 2.0, h, |_| 0.0);
            let phi0 = MollifierSpec::space(1.0 / n as f64)?.on_grid(&like, [0.0, 0.0]);
            let phit = solve(Hamiltonian::PlusLaplacian1d, phi0.clone(), t)?;
            let value = phit.sample([x, 0.0]);
            Ok((n, value, phi0, phit))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (n, value, ..) in &runs {
        let lower = *n as f64 * c * u_profile(x.abs() / t.sqrt());
        out.push(
            VerificationRecord::new("instability-blowup-lower", "blow-up everywhere", lower, *value, 4.0 * h, "4 h")
                .param("n", *n as f64)
                .param("x", x)
                .param("t", t)
                .param("h", h),
        );
    }
    let values: Vec<f64> = runs.iter().map(|r| r.1).collect();
    out.push(
        VerificationRecord::flag("instability-blowup-monotone", "blow-up everywhere", values.windows(2).all(|w| w[1] > w[0]))
            .param("first", values[0])
            .param("last", values[values.len() - 1]),
    );
    out.push(VerificationRecord::new("instability-blowup-growth", "blow-up everywhere", 5.0 * values[0], values[values.len() - 1], 0.0, "none"));
    if let Some((_, _, phi0, phit)) = runs.last() {
        out.push(int_bound_record(&Hamiltonian::PlusLaplacian1d, phi0, phit, t, "plus-laplacian")?);
    }
    Ok(out)
}

pub fn run_instability_demos(p: &DemoParams) -> Result<Vec<VerificationRecord>> {
    let mut out = eikonal_mass(p)?;
    out.extend(nonpositive_gap(p)?);
    out.extend(blowup(p)?);
    Ok(out)
}

//! Numerical bounds on the modulus `ω_d`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::VerifyOptions;
use crate::error::{Error, Result};
use crate::field::{GridField, MollifierSpec};
use crate::hjb::{evolve, Hamiltonian, HjbProblem, SchemeConfig};
use crate::oracle::{int_norm_formula, level_set_constants, modulus_upper_analytic};
use crate::record::VerificationRecord;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub r: f64,
    pub lower: f64,
    pub upper: f64,
    /// Mollifier width behind `upper`.
    pub nu: f64,
}

/// Cells per mollifier width.
const CELLS_PER_NU: f64 = 32.0;

/// Lower bound `‖G_r 1_{0}‖_int / ‖1_{0}‖_int − 1` for `∂_tφ = λ⁺(D²φ)`, in
/// closed form.
fn lower_bound(r: f64, d: usize) -> f64 {
    let (meas, _) = level_set_constants(d);
    int_norm_formula(0.0, 1.0, r, 0.0, d) / meas - 1.0
}

/// `(1+ν)^d ∫ Ψ_ν(y, r) dy − 1`, with `Ψ_ν` the solution of `∂_tφ = λ⁺(D²φ)`
/// started from the mollifier `ρ_ν`.
fn upper_bound(r: f64, d: usize, nu: f64) -> Result<f64> {
    let h = nu / CELLS_PER_NU;
    let half = nu + 10.0 * r.sqrt() + 4.0 * h;
    let like = match d {
        1 => GridField::from_fn_1d(-half, half, h, |_| 0.0),
        2 => GridField::from_fn_2d(-half, half, h, |_, _| 0.0),
        _ => return Err(Error::Shape(format!("dimension {d} not supported"))),
    };
    let rho = MollifierSpec::space(nu)?.on_grid(&like, [0.0, 0.0]);
    let ham = if d == 1 { Hamiltonian::PlusLaplacian1d } else { Hamiltonian::EtaNu { eta: 0.0, nu: 1.0 } };
    let psi = evolve(&HjbProblem::new(ham, rho)?, r, &SchemeConfig::default(), &[r])?;
    Ok((1.0 + nu).powi(d as i32) * psi[0].integral() - 1.0)
}

/// Both bounds at `r` with mollifier width `nu`.
pub fn estimate_modulus(r: f64, d: usize, nu: f64) -> Result<ModulusEstimate> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("modulus argument must be nonnegative, got {r}")));
    }
    if r == 0.0 {
        return Ok(ModulusEstimate { r, lower: 0.0, upper: 0.0, nu });
    }
    Ok(ModulusEstimate { r, lower: lower_bound(r, d), upper: upper_bound(r, d, nu)?, nu })
}

/// Best upper bound over `ν ∈ r^{1/3}·{1/2, 1, 2}` at each `r`.
pub fn estimate_modulus_sweep(rs: &[f64], d: usize) -> Result<Vec<ModulusEstimate>> {
    rs.par_iter()
        .map(|&r| {
            let base = r.cbrt();
            let mut best: Option<ModulusEstimate> = None;
            for nu in [0.5 * base, base, 2.0 * base] {
                let e = estimate_modulus(r, d, nu)?;
                if best.is_none_or(|b| e.upper < b.upper) {
                    best = Some(e);
                }
            }
            Ok(best.expect("three candidates"))
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub(crate) fn modulus_records(_o: &VerifyOptions) -> Result<Vec<VerificationRecord>> {
    let n = 20;
    let rs: Vec<f64> = (0..n).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / (n - 1) as f64)).collect();
    let est = estimate_modulus_sweep(&rs, 1)?;
    let mut out = Vec::new();
    for e in &est {
        let closed = 2.0 / std::f64::consts::PI.sqrt() * e.r.sqrt();
        out.push(
            VerificationRecord::new("modulus-lower-closed-form", "modulus lower bound", (e.lower - closed).abs(), 0.0, 1e-6, "1e-6")
                .param("r", e.r)
                .param("lower", e.lower),
        );
        out.push(
            VerificationRecord::new("modulus-upper-dominates", "modulus upper bound", e.lower, e.upper, 0.0, "none")
                .param("r", e.r)
                .param("nu", e.nu)
                .param("analytic_upper", modulus_upper_analytic(e.r, 1).0),
        );
    }
    let lowers: Vec<f64> = est.iter().map(|e| e.lower).collect();
    let p = fit_exponent(&rs, &lowers);
    out.push(
        VerificationRecord::new("modulus-exponent", "square-root growth", (p - 0.5).abs(), 0.05, 0.0, "none")
            .param("exponent", p),
    );
    let uppers: Vec<f64> = est.iter().map(|e| e.upper).collect();
    out.push(
        VerificationRecord::flag("modulus-upper-vanishes", "modulus tends to zero", uppers[0] < uppers[n - 1])
            .param("upper_first", uppers[0])
            .param("upper_last", uppers[n - 1])
            .param("upper_exponent", fit_exponent(&rs, &uppers)),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_argument() {
        let e = estimate_modulus(0.0, 1, 0.5).unwrap();
        assert_eq!((e.lower, e.upper), (0.0, 0.0));
    }

    #[test]
    fn lower_closed_form_at_one_hundredth() {
        let e = estimate_modulus(0.01, 1, 0.2).unwrap();
        assert!((e.lower - 0.112_837_916_7).abs() < 1e-8, "{}", e.lower);
        assert!(e.upper >= e.lower);
    }

    #[test]
    fn exponent_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.7)).collect();
        assert!((fit_exponent(&xs, &ys) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn negative_argument_rejected() {
        assert!(estimate_modulus(-1.0, 1, 0.5).is_err());
    }
}

//! Checks on the conservation-law side and its dual equation.

use rayon::prelude::*;

use super::fixtures::{random_steps, seeded_rng};
use super::VerifyOptions;
use crate::claw::{claw_evolve, claw_history, kato_residual, periodic, ClawProblem, FluxModel};
use crate::controls::{sample_family, Control, ControlledOperator, DEFAULT_FAMILY_SAMPLES};
use crate::error::Result;
use crate::field::GridField;
use crate::hjb::{evolve, Evolution, Hamiltonian, HjbProblem, SchemeConfig};
use crate::record::{TracePoint, VerificationRecord};
use crate::sum::pairwise_sum_by;

/// Constant `C` of the weighted-contraction budget `C √h (‖u₀−v₀‖_{L¹} + ‖φ₀‖_∞)`,
/// twice the largest value measured on the Burgers Riemann fixture at
/// `h ∈ {0.02, 0.01}` (0.0695), rounded up.
pub const WEIGHTED_TOLERANCE_C: f64 = 0.15;

/// Times at which the pairs are compared.
const PAIR_TIMES: [f64; 3] = [0.25, 0.5, 1.0];
/// Time shifts of the dual solution.
const SHIFTS: [f64; 2] = [0.0, 0.25];
/// Times at which every dual solution is stored.
const DUAL_TIMES: [f64; 6] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25];

/// Controls `(F′(ξ), A(ξ))` over sampled `ξ ∈ [m, M]`.
pub fn dual_operator(flux: &FluxModel) -> Result<ControlledOperator> {
    let (m, big_m) = flux.range();
    sample_family(1, m, big_m, DEFAULT_FAMILY_SAMPLES, |xi| Control::scalar(flux.dflux_at(xi), flux.diffusion_at(xi)))
}

fn dual_index(t: f64) -> usize {
    DUAL_TIMES.iter().position(|&s| (s - t).abs() < 1e-12).expect("dual time is stored")
}

/// A Gaussian weight and its dual evolution.
#[derive(Clone, Debug)]
pub struct DualWeight {
    pub center: f64,
    pub sigma: f64,
    /// Dual solution at each of the stored times.
    pub phi: Vec<GridField>,
    /// `‖G_{1+¼}φ₀ − G_1 G_¼ φ₀‖_∞`.
    pub semigroup_gap: f64,
}

impl DualWeight {
    pub fn at(&self, t: f64) -> &GridField {
        &self.phi[dual_index(t)]
    }
}

/// Random data pairs for `F(u) = u²/2`, `A(u) = u²` on `[0, 1]`, their
/// solutions, and three Gaussian weights with their dual evolutions.
#[derive(Clone, Debug)]
pub struct BurgersFixture {
    pub flux: FluxModel,
    pub h: f64,
    pub initial: Vec<(GridField, GridField)>,
    /// `solutions[k][i]` is the pair `k` at `PAIR_TIMES[i]`.
    pub solutions: Vec<Vec<(GridField, GridField)>>,
    pub weights: Vec<DualWeight>,
}

fn weighted_l1(u: &GridField, v: &GridField, w: &GridField) -> f64 {
    let (a, b, c) = (u.values(), v.values(), w.values());
    u.cell_volume() * pairwise_sum_by(a.len(), |j| (a[j] - b[j]).abs() * c[j])
}

impl BurgersFixture {
    pub fn build(o: &VerifyOptions) -> Result<Self> {
        let flux = FluxModel::burgers_porous(0.0, 1.0);
        let h = o.h(0.01);
        let (lo, hi) = (-3.0, 3.0);
        let cfg = SchemeConfig::default();
        let initial: Vec<(GridField, GridField)> = (0..o.trials)
            .map(|k| {
                let mut rng = seeded_rng(o.seed, "burgers-pairs", k);
                let s = random_steps(&mut rng, -1.0, 1.0, 5, 0.0, 1.0, 0.0);
                let t = random_steps(&mut rng, -1.0, 1.0, 5, 0.0, 1.0, 0.0);
                (GridField::from_fn_1d(lo, hi, h, |x| s.eval(x)), GridField::from_fn_1d(lo, hi, h, |x| t.eval(x)))
            })
            .collect();
        let solutions = initial
            .par_iter()
            .map(|(u0, v0)| {
                let t_end = PAIR_TIMES[PAIR_TIMES.len() - 1];
                let u = claw_evolve(&ClawProblem::new(flux.clone(), u0.clone())?, t_end, &cfg, &PAIR_TIMES)?;
                let v = claw_evolve(&ClawProblem::new(flux.clone(), v0.clone())?, t_end, &cfg, &PAIR_TIMES)?;
                Ok(u.into_iter().zip(v).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let ham = Hamiltonian::Controlled(dual_operator(&flux)?);
        let sigma = 0.25;
        let weights = [-0.5, 0.0, 0.5]
            .par_iter()
            .map(|&c| {
                let phi0 = GridField::from_fn_1d(lo, hi, h, |x| (-(x - c) * (x - c) / (2.0 * sigma * sigma)).exp());
                let phi = evolve(&HjbProblem::new(ham.clone(), phi0)?, DUAL_TIMES[5], &cfg, &DUAL_TIMES)?;
                let mut ev = Evolution::from_state(&ham, phi[dual_index(0.25)].clone(), &cfg)?;
                ev.advance_to(1.0);
                let semigroup_gap = ev.state().zip_map(&phi[dual_index(1.25)], |a, b| a - b)?.linf_norm();
                Ok(DualWeight { center: c, sigma, phi, semigroup_gap })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BurgersFixture { flux, h, initial, solutions, weights })
    }

    fn tolerance(&self, k: usize, w: &DualWeight) -> f64 {
        let (u0, v0) = &self.initial[k];
        let d0 = u0.zip_map(v0, |a, b| a - b).map(|d| d.l1_norm()).unwrap_or(f64::NAN);
        WEIGHTED_TOLERANCE_C * self.h.sqrt() * (d0 + w.phi[0].linf_norm())
    }

    fn pair_record(&self, name: &str, anchor: &str, k: usize, wi: usize, t: f64, s: f64) -> Result<VerificationRecord> {
        let w = &self.weights[wi];
        let i = PAIR_TIMES.iter().position(|&x| x == t).expect("pair time");
        let (u, v) = &self.solutions[k][i];
        let (u0, v0) = &self.initial[k];
        let lhs = weighted_l1(u, v, w.at(s));
        let rhs = weighted_l1(u0, v0, w.at(t + s));
        let tol = self.tolerance(k, w);
        Ok(VerificationRecord::new(name, anchor, lhs, rhs, tol, "C sqrt(h) (|u0-v0|_1 + |phi0|_inf)")
            .param("trial", k as f64)
            .param("center", w.center)
            .param("t", t)
            .param("s", s)
            .param("h", self.h)
            .param("C", WEIGHTED_TOLERANCE_C))
    }
}

/// `∫|u−v|(t)φ₀ ≤ ∫|u₀−v₀|φ(t)` for every pair, weight and time.
pub fn check_weighted_contraction(fx: &BurgersFixture) -> Result<Vec<VerificationRecord>> {
    let mut out = Vec::new();
    for k in 0..fx.initial.len() {
        for wi in 0..fx.weights.len() {
            for t in PAIR_TIMES {
                out.push(fx.pair_record("weighted-contraction", "weighted L1 contraction", k, wi, t, 0.0)?);
            }
        }
    }
    Ok(out)
}

/// `∫|u−v|(t)φ(s) ≤ ∫|u₀−v₀|φ(t+s)`, plus the semigroup property of the dual
/// solver used to form `φ(t+s)`.
pub fn check_duality_inequality(fx: &BurgersFixture) -> Result<Vec<VerificationRecord>> {
    let mut out = Vec::new();
    for w in &fx.weights {
        out.push(
            VerificationRecord::new("dual-semigroup", "semigroup property", w.semigroup_gap, 0.0, 2.0 * fx.h, "2 h")
                .param("center", w.center)
                .param("h", fx.h),
        );
    }
    for k in 0..fx.initial.len() {
        for wi in 0..fx.weights.len() {
            for t in PAIR_TIMES {
                for s in SHIFTS {
                    out.push(fx.pair_record("duality-inequality", "duality inequality", k, wi, t, s)?);
                }
            }
        }
    }
    Ok(out)
}

/// `∫|u−v|(t)e^{−|x|} ≤ e^{(L_F+L_A)t} ∫|u₀−v₀|e^{−|x|}`.
pub fn check_exp_weight_contraction(fx: &BurgersFixture) -> Result<Vec<VerificationRecord>> {
    let (u0, _) = &fx.initial[0];
    let w = u0.with_values(u0.coords().map(|x| (-x[0].abs()).exp()).collect());
    let rate = fx.flux.lip_f() + fx.flux.lip_a();
    let mut out = Vec::new();
    for (k, (u0, v0)) in fx.initial.iter().enumerate() {
        let d0 = weighted_l1(u0, v0, &w);
        let mut trace = vec![TracePoint { t: 0.0, lhs: d0, rhs: d0 }];
        for (i, &t) in PAIR_TIMES.iter().enumerate() {
            let (u, v) = &fx.solutions[k][i];
            let lhs = weighted_l1(u, v, &w);
            let rhs = (rate * t).exp() * d0;
            trace.push(TracePoint { t, lhs, rhs });
            out.push(
                VerificationRecord::new("exp-weight-contraction", "exponential-weight estimate", lhs, rhs, 4.0 * fx.h * d0, "4 h |u0-v0|_w")
                    .param("trial", k as f64)
                    .param("t", t)
                    .param("rate", rate)
                    .param("h", fx.h)
                    .with_trace(trace.clone()),
            );
        }
    }
    Ok(out)
}

fn integral_over(u: &GridField, v: &GridField, a: f64, b: f64) -> f64 {
    let (x, y) = (u.values(), v.values());
    let h = u.h();
    let x0 = u.origin()[0];
    h * pairwise_sum_by(x.len(), |j| {
        let c = x0 + j as f64 * h;
        if c >= a - 1e-12 && c <= b + 1e-12 {
            (x[j] - y[j]).abs()
        } else {
            0.0
        }
    })
}

/// `∫_B|u−v|(t) ≤ ∫_{B−t𝒞}|u₀−v₀|` for first-order laws, `𝒞 = [min F′, max F′]`.
pub fn check_domain_of_dependence(o: &VerifyOptions) -> Result<Vec<VerificationRecord>> {
    let h = o.h(0.01);
    let t = 0.5;
    let cfg = SchemeConfig::default();
    let regions = [(-0.5, 0.0), (0.0, 0.5), (1.0, 1.5), (-2.0, -1.5)];
    let fluxes = [FluxModel::burgers(0.0, 1.0), FluxModel::transport(0.5, 0.0, 1.0)];
    let pairs = (o.trials / 5).max(1);
    let mut out = Vec::new();
    for flux in &fluxes {
        let (cmin, cmax) = flux.speed_range();
        let recs = (0..pairs)
            .into_par_iter()
            .map(|k| {
                let mut rng = seeded_rng(o.seed, &format!("dod-{}", flux.name), k);
                let s = random_steps(&mut rng, -1.0, 1.0, 5, 0.0, 1.0, 0.0);
                let r = random_steps(&mut rng, -1.0, 1.0, 5, 0.0, 1.0, 0.0);
                let u0 = GridField::from_fn_1d(-3.0, 3.0, h, |x| s.eval(x));
                let v0 = GridField::from_fn_1d(-3.0, 3.0, h, |x| r.eval(x));
                let u = &claw_evolve(&ClawProblem::new(flux.clone(), u0.clone())?, t, &cfg, &[t])?[0];
                let v = &claw_evolve(&ClawProblem::new(flux.clone(), v0.clone())?, t, &cfg, &[t])?[0];
                let sup0 = u0.zip_map(&v0, |a, b| a - b)?.linf_norm();
                let tol = 4.0 * (h + (h * t * flux.lip_f()).sqrt()) * sup0;
                Ok(regions
                    .iter()
                    .map(|&(a, b)| {
                        let lhs = integral_over(u, v, a, b);
                        let rhs = integral_over(&u0, &v0, a - t * cmax, b - t * cmin);
                        VerificationRecord::new(
                            "domain-of-dependence",
                            "finite speed of propagation",
                            lhs,
                            rhs,
                            tol,
                            "4 (h + sqrt(h t L_F)) |u0-v0|_inf",
                        )
                        .param("trial", k as f64)
                        .param("a", a)
                        .param("b", b)
                        .param("t", t)
                        .param("h", h)
                        .note(flux.name.clone())
                    })
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(recs.into_iter().flatten());
    }
    Ok(out)
}

/// Periodic `L¹` contraction of the discrete scheme.
pub fn check_claw_contraction(o: &VerifyOptions) -> Result<Vec<VerificationRecord>> {
    let h = o.h(0.02);
    let t = 0.5;
    let flux = FluxModel::burgers_porous(0.0, 1.0);
    let cfg = SchemeConfig::default();
    (0..o.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded_rng(o.seed, "claw-contraction", k);
            let s = random_steps(&mut rng, 0.0, 2.0, 6, 0.0, 1.0, 0.0);
            let r = random_steps(&mut rng, 0.0, 2.0, 6, 0.0, 1.0, 0.0);
            let u0 = periodic(GridField::from_fn_1d(0.0, 2.0 - h, h, |x| s.eval(x)));
            let v0 = periodic(GridField::from_fn_1d(0.0, 2.0 - h, h, |x| r.eval(x)));
            let u = &claw_evolve(&ClawProblem::new(flux.clone(), u0.clone())?, t, &cfg, &[t])?[0];
            let v = &claw_evolve(&ClawProblem::new(flux.clone(), v0.clone())?, t, &cfg, &[t])?[0];
            let lhs = u.zip_map(v, |a, b| a - b)?.l1_norm();
            let rhs = u0.zip_map(&v0, |a, b| a - b)?.l1_norm();
            Ok(VerificationRecord::new("claw-l1-contraction", "L1 contraction", lhs, rhs, 1e-12, "1e-12")
                .param("trial", k as f64)
                .param("h", h))
        })
        .collect()
}

/// Kato inequality on Burgers pairs against Gaussian space-time tests.
pub fn check_kato(o: &VerifyOptions, pairs: usize) -> Result<Vec<VerificationRecord>> {
    let h = o.h(1.0 / 200.0);
    let t_end = 0.5;
    let flux = FluxModel::burgers(0.0, 1.0);
    let cfg = SchemeConfig::default();
    (0..pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded_rng(o.seed, "kato", k);
            let s = random_steps(&mut rng, -1.0, 1.0, 5, 0.0, 1.0, 0.0);
            let r = random_steps(&mut rng, -1.0, 1.0, 5, 0.0, 1.0, 0.0);
            let c = [-0.5, 0.0, 0.5][k % 3];
            let test = move |x: f64, t: f64| {
                let (dx, dt) = ((x - c) / 0.4, (t - 0.25) / 0.2);
                (-0.5 * (dx * dx + dt * dt)).exp()
            };
            let u = claw_history(&ClawProblem::new(flux.clone(), GridField::from_fn_1d(-3.0, 3.0, h, |x| s.eval(x)))?, t_end, &cfg)?;
            let v = claw_history(&ClawProblem::new(flux.clone(), GridField::from_fn_1d(-3.0, 3.0, h, |x| r.eval(x)))?, t_end, &cfg)?;
            Ok(kato_residual(&u, &v, &flux, &test)?.param("trial", k as f64).param("center", c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_controls_follow_flux() {
        let op = dual_operator(&FluxModel::burgers_porous(0.0, 1.0)).unwrap();
        assert_eq!(op.controls().len(), DEFAULT_FAMILY_SAMPLES);
        let last = op.controls()[DEFAULT_FAMILY_SAMPLES - 1];
        assert!((last.drift[0] - 1.0).abs() < 1e-2);
        assert!((last.diffusion.xx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn claw_contraction_small() {
        let o = VerifyOptions { trials: 3, ..Default::default() };
        for r in check_claw_contraction(&o).unwrap() {
            assert!(r.passed(), "{r:?}");
        }
    }
}

//! Closed-form reference solutions built on the self-similar profile
//! `U(r) = c₀ ∫_r^∞ e^{-s²/4} ds`, level-set constants, and a Monte Carlo
//! lower bound from the stochastic representation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controls::{ControlledOperator, ConvexHullSet};
use crate::error::{Error, Result};
use crate::field::{bump_mass, dilate_by_hull, GridField};
use crate::linalg::{dot2, Sym2};
use crate::quad::{adaptive_simpson, integrate_to_infinity};
use crate::sum::pairwise_sum;

/// Absolute target for the profile quadratures.
pub const QUAD_TOL: f64 = 1e-10;

/// `c₀ = 1/√π`, normalizing `U(0) = 1`.
pub const C0: f64 = 0.564_189_583_547_756_3;

/// `c₀` recomputed from `∫₀^∞ e^{-s²/4} ds` by quadrature.
pub fn c0_by_quadrature() -> f64 {
    1.0 / integrate_to_infinity(&|s| (-s * s / 4.0).exp(), 0.0, QUAD_TOL)
}

/// `U(r) = erfc(r / 2)`.
pub fn u_profile(r: f64) -> f64 {
    libm::erfc(0.5 * r)
}

/// `U(a / √σ)` with `U(a/0) = 0` for `a > 0` and `U(0/0) = 1`.
pub fn u_ratio(a: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        u_profile(a / sigma.sqrt())
    } else if a > 0.0 {
        0.0
    } else {
        1.0
    }
}

/// `∫₀^∞ r^k U(r) dr` by adaptive quadrature.
pub fn u_moment(k: i32) -> f64 {
    integrate_to_infinity(&|r| r.powi(k) * u_profile(r), 0.0, QUAD_TOL)
}

fn moments() -> &'static [f64; 2] {
    static M: OnceLock<[f64; 2]> = OnceLock::new();
    M.get_or_init(|| [u_moment(0), u_moment(1)])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Profile {
    /// `U(|x|)`, time independent.
    U,
    /// `Φ(x, t) = U((|x| − 1)⁺ / √t)`.
    Phi,
    /// `Ψ(x, t) = U((|x| − 1 − L_b t)⁺ / √(L_a t))`.
    Psi { l_b: f64, l_a: f64 },
    /// `U((|x| − ηt − s)⁺ / √(νt + s))`.
    EtaNu { eta: f64, nu: f64, s: f64 },
}

pub fn profile_eval(p: &Profile, x: [f64; 2], t: f64) -> f64 {
    let r = x[0].hypot(x[1]);
    match *p {
        Profile::U => u_profile(r),
        Profile::Phi => u_ratio((r - 1.0).max(0.0), t),
        Profile::Psi { l_b, l_a } => u_ratio((r - 1.0 - l_b * t).max(0.0), l_a * t),
        Profile::EtaNu { eta, nu, s } => u_ratio((r - eta * t - s).max(0.0), nu * t + s),
    }
}

/// Sample a profile on a lattice.
pub fn profile_field(p: &Profile, like: &GridField, t: f64) -> GridField {
    like.with_values(like.coords().map(|x| profile_eval(p, x, t)).collect())
}

/// `(meas(Q̄₁), [c_1, …, c_d])` with `meas{dist(·, Q̄₁) ≤ r} = meas(Q̄₁) + Σ c_i r^i`.
pub fn level_set_constants(d: usize) -> (f64, Vec<f64>) {
    match d {
        1 => (2.0, vec![2.0]),
        2 => (4.0, vec![8.0, PI]),
        _ => panic!("dimension {d} not supported"),
    }
}

/// `meas{x : dist(x, Q̄₁) ≤ r}` by counting lattice cells of size `h`.
pub fn level_set_measure_bruteforce(d: usize, r: f64, h: f64) -> f64 {
    let n = ((1.0 + r) / h).ceil() as i64 + 1;
    let dist = |x: f64| (x.abs() - 1.0).max(0.0);
    match d {
        1 => (-n..=n).filter(|&i| dist(i as f64 * h) <= r).count() as f64 * h,
        2 => {
            let mut count = 0u64;
            for i in -n..=n {
                let dx = dist(i as f64 * h);
                if dx > r {
                    continue;
                }
                for j in -n..=n {
                    if dx.hypot(dist(j as f64 * h)) <= r {
                        count += 1;
                    }
                }
            }
            count as f64 * h * h
        }
        _ => panic!("dimension {d} not supported"),
    }
}

/// Cross-check the constants against lattice counting (run once per process
/// before the first use of the two-dimensional constants).
fn checked_constants(d: usize) -> (f64, Vec<f64>) {
    static CHECKED: OnceLock<()> = OnceLock::new();
    if d == 2 {
        CHECKED.get_or_init(|| {
            let (m, c) = level_set_constants(2);
            for r in [0.5, 1.5] {
                let exact = m + c[0] * r + c[1] * r * r;
                let counted = level_set_measure_bruteforce(2, r, 1.0 / 200.0);
                assert!(
                    (counted - exact).abs() <= 1e-2 * exact,
                    "level-set constants disagree with lattice count: {counted} vs {exact}"
                );
            }
        });
    }
    level_set_constants(d)
}

/// `∫ sup_{Q̄₁(x)} U((|y| − ηt − s)⁺ / √(νt + s)) dx` by the level-set expansion:
/// `meas(Q̄₁) + Σ c_i R^i + Σ i c_i √σ ∫₀^∞ (R + r√σ)^{i−1} U(r) dr`
/// with `R = ηt + s`, `σ = νt + s`.
pub fn int_norm_formula(eta: f64, nu: f64, t: f64, s: f64, d: usize) -> f64 {
    let (meas, c) = checked_constants(d);
    let big_r = eta * t + s;
    let sigma = nu * t + s;
    let sq = sigma.max(0.0).sqrt();
    let m = moments();
    let mut total = meas;
    for (k, ci) in c.iter().enumerate() {
        let i = (k + 1) as i32;
        total += ci * big_r.powi(i);
        if sq > 0.0 {
            // (R + r√σ)^{i-1} expanded for i ≤ 2.
            let tail = match i {
                1 => sq * m[0],
                2 => sq * (big_r * m[0] + sq * m[1]),
                _ => unreachable!(),
            };
            total += i as f64 * ci * tail;
        }
    }
    total
}

/// Exact solution of a first-order problem with drift hull `hull` (dilation).
pub fn first_order_value(phi0: &GridField, hull: &ConvexHullSet, t: f64) -> GridField {
    dilate_by_hull(phi0, hull, t)
}

/// `∫ Φ(y, t) dy`: `2 + 4√t/√π` in one dimension, `π + 2π(2√t/√π + t)` in two.
pub fn phi_mass(t: f64, d: usize) -> f64 {
    let m = moments();
    let st = t.max(0.0).sqrt();
    match d {
        1 => 2.0 + 2.0 * st * m[0],
        2 => PI + 2.0 * PI * (st * m[0] + t * m[1]),
        _ => panic!("dimension {d} not supported"),
    }
}

/// Supremum of the unit-mass bump on the unit ball.
pub fn bump_peak(d: usize) -> f64 {
    (-1.0f64).exp() / bump_mass(d)
}

/// Closed-form upper bound on the modulus:
/// `inf_ν (1+ν)^d c_ρ ∫ Φ(·, r/ν²) − 1`, using that `Φ` dominates the
/// solution started from the unit ball indicator. Returns `(bound, ν*)`;
/// the bound is `0` at `r = 0`.
pub fn modulus_upper_analytic(r: f64, d: usize) -> (f64, f64) {
    if r <= 0.0 {
        return (0.0, 0.0);
    }
    let c_rho = bump_peak(d);
    let f = |lnu: f64| {
        let nu = lnu.exp();
        (1.0 + nu).powi(d as i32) * c_rho * phi_mass(r / (nu * nu), d) - 1.0
    };
    // Unimodal in log ν; golden section on a wide bracket.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (-12.0f64, 12.0f64);
    for _ in 0..120 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if f(c) < f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    let lnu = 0.5 * (a + b);
    (f(lnu), lnu.exp())
}

/// Fixed (non-adapted or Markov) control policy for the Monte Carlo estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Policy {
    Constant { control: usize },
    /// `(switch time, control)` pairs; the first entry's time is ignored and
    /// each control runs until the next switch time.
    Schedule { pieces: Vec<(f64, usize)> },
    /// Pick the control whose drift points most towards `center`; ties go to
    /// the largest diffusion trace.
    RadialBangBang { center: [f64; 2] },
}

impl Policy {
    fn choose(&self, op: &ControlledOperator, x: [f64; 2], t: f64) -> usize {
        match self {
            Policy::Constant { control } => *control,
            Policy::Schedule { pieces } => {
                let mut cur = pieces[0].1;
                for &(ts, c) in pieces.iter().skip(1) {
                    if t >= ts {
                        cur = c;
                    }
                }
                cur
            }
            Policy::RadialBangBang { center } => {
                let toward = [center[0] - x[0], center[1] - x[1]];
                let mut best = 0;
                let mut key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for (k, c) in op.controls().iter().enumerate() {
                    let cand = (dot2(c.drift, toward), c.diffusion.trace());
                    if cand.0 > key.0 + 1e-15 || ((cand.0 - key.0).abs() <= 1e-15 && cand.1 > key.1) {
                        key = cand;
                        best = k;
                    }
                }
                best
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSpec {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub policy: Policy,
}

/// Printed alongside every Monte Carlo result.
pub const MC_LIMITATION: &str =
    "fixed-policy Monte Carlo: a statistical lower bound on the value, not the supremum over adapted controls";

/// Square root `s` of a PSD `a` with `s sᵀ = a`.
fn sqrt_psd(a: &Sym2) -> Sym2 {
    a.map_spectrum(|l| l.max(0.0).sqrt())
}

/// Mean and standard error of `φ₀(X_t^x)` under
/// `dX = b(ξ) ds + √2 σ(ξ) dB` with Euler–Maruyama and the given policy.
///
/// Path `k` draws from a ChaCha8 stream selected by `k`, so results do not
/// depend on how paths are split across threads.
pub fn mc_lower_bound(
    op: &ControlledOperator,
    phi0: &GridField,
    x: [f64; 2],
    t: f64,
    spec: &MonteCarloSpec,
) -> Result<(f64, f64)> {
    if spec.paths == 0 || !(spec.dt > 0.0) || t < 0.0 {
        return Err(Error::Config("Monte Carlo needs paths ≥ 1, dt > 0, t ≥ 0".into()));
    }
    let n_ctrl = op.controls().len();
    let check = |c: usize| {
        if c >= n_ctrl {
            Err(Error::Config(format!("policy refers to control {c} of {n_ctrl}")))
        } else {
            Ok(())
        }
    };
    match &spec.policy {
        Policy::Constant { control } => check(*control)?,
        Policy::Schedule { pieces } => {
            if pieces.is_empty() {
                return Err(Error::Config("empty schedule".into()));
            }
            for p in pieces {
                check(p.1)?;
            }
        }
        Policy::RadialBangBang { .. } => {}
    }
    let roots: Vec<Sym2> = op.controls().iter().map(|c| sqrt_psd(&c.diffusion)).collect();
    let steps = (t / spec.dt).ceil() as usize;
    let dim = op.dim();
    let values: Vec<f64> = (0..spec.paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(k as u64);
            let mut pos = x;
            let mut s = 0.0;
            for _ in 0..steps {
                let dt = spec.dt.min(t - s);
                if dt <= 0.0 {
                    break;
                }
                let c = spec.policy.choose(op, pos, s);
                let ctl = &op.controls()[c];
                let z0: f64 = StandardNormal.sample(&mut rng);
                let z1: f64 = if dim == 2 { StandardNormal.sample(&mut rng) } else { 0.0 };
                let r = &roots[c];
                let amp = (2.0 * dt).sqrt();
                pos[0] += ctl.drift[0] * dt + amp * (r.xx * z0 + r.xy * z1);
                if dim == 2 {
                    pos[1] += ctl.drift[1] * dt + amp * (r.xy * z0 + r.yy * z1);
                }
                s += dt;
            }
            phi0.sample(pos)
        })
        .collect();
    let n = values.len() as f64;
    let mean = pairwise_sum(&values) / n;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if values.len() > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

/// Simpson-rule check helper: `∫_a^b f` to the profile tolerance.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    adaptive_simpson(f, a, b, QUAD_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::Control;
    use crate::field::gaussian_convolve;
    use crate::field::norm_int;
    use crate::hjb::lambda_plus;

    #[test]
    fn profile_normalization() {
        assert_eq!(u_profile(0.0), 1.0);
        assert!((c0_by_quadrature() - C0).abs() < 1e-9);
        assert!((C0 - 1.0 / PI.sqrt()).abs() < 1e-15);
        // U agrees with its defining integral.
        for r in [0.3, 1.0, 2.5] {
            let direct = C0 * integrate_to_infinity(&|s| (-s * s / 4.0).exp(), r, QUAD_TOL);
            assert!((direct - u_profile(r)).abs() < 1e-9);
        }
        assert!((u_moment(0) - 2.0 / PI.sqrt()).abs() < 1e-9);
        assert!((u_moment(1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn profile_monotone_and_vanishing() {
        let mut prev = 1.0;
        for k in 1..200 {
            let v = u_profile(k as f64 * 0.1);
            assert!(v <= prev && v >= 0.0);
            prev = v;
        }
        assert!(u_profile(40.0) < 1e-170 && u_profile(60.0) == 0.0);
    }

    #[test]
    fn eta_nu_profile_conventions() {
        let p = Profile::EtaNu { eta: 1.0, nu: 0.0, s: 0.0 };
        assert_eq!(profile_eval(&p, [0.4, 0.0], 0.5), 1.0);
        assert_eq!(profile_eval(&p, [0.5, 0.0], 0.5), 1.0);
        assert_eq!(profile_eval(&p, [0.6, 0.0], 0.5), 0.0);
        let q = Profile::EtaNu { eta: 0.0, nu: 0.0, s: 0.0 };
        assert_eq!(profile_eval(&q, [0.0, 0.0], 1.0), 1.0);
        assert_eq!(profile_eval(&q, [1e-9, 0.0], 1.0), 0.0);
    }

    #[test]
    fn int_norm_formula_cases() {
        assert_eq!(int_norm_formula(0.0, 0.0, 0.0, 0.0, 1), 2.0);
        for t in [0.01f64, 0.25, 1.0] {
            let expect = 2.0 + 2.0 * t.sqrt() * 2.0 / PI.sqrt();
            assert!((int_norm_formula(0.0, 1.0, t, 0.0, 1) - expect).abs() < 1e-9);
        }
        // First order: (2 + 2ηt) exactly.
        assert!((int_norm_formula(1.0, 0.0, 0.25, 0.0, 1) - 2.5).abs() < 1e-15);
        assert!((int_norm_formula(1.0, 0.0, 0.25, 0.0, 2) - (4.0 + 2.0 + PI / 16.0)).abs() < 1e-14);
    }

    #[test]
    fn int_norm_formula_matches_lattice_norm() {
        // Direct evaluation of the int norm of the profile on a fine lattice.
        let h = 1e-3;
        for &(eta, nu, t, s) in &[(1.0, 1.0, 0.3, 0.0), (0.5, 0.2, 1.0, 0.1)] {
            let p = Profile::EtaNu { eta, nu, s };
            let f = GridField::from_fn_1d(-12.0, 12.0, h, |x| profile_eval(&p, [x, 0.0], t));
            let direct = norm_int(&f, 1.0).value;
            assert!((direct - int_norm_formula(eta, nu, t, s, 1)).abs() < 3.0 * h, "{eta} {nu}");
        }
        let h2 = 0.02;
        let p = Profile::EtaNu { eta: 0.5, nu: 0.5, s: 0.0 };
        let f = GridField::from_fn_2d(-6.0, 6.0, h2, |x, y| profile_eval(&p, [x, y], 0.4));
        let direct = norm_int(&f, 1.0).value;
        let formula = int_norm_formula(0.5, 0.5, 0.4, 0.0, 2);
        assert!((direct - formula).abs() < 0.02 * formula, "{direct} vs {formula}");
    }

    #[test]
    fn level_set_constants_against_counting() {
        for r in [0.0, 0.3, 1.0, 2.0] {
            let c1 = level_set_measure_bruteforce(1, r, 1e-4);
            assert!((c1 - (2.0 + 2.0 * r)).abs() < 1e-3);
            let c2 = level_set_measure_bruteforce(2, r, 2e-3);
            let exact = 4.0 + 8.0 * r + PI * r * r;
            assert!((c2 - exact).abs() < 2e-2 * exact.max(1.0), "{c2} vs {exact}");
        }
    }

    #[test]
    fn phi_mass_by_quadrature() {
        for t in [0.1f64, 1.0, 4.0] {
            let one = 2.0 * integrate_to_infinity(&|y| profile_eval(&Profile::Phi, [y, 0.0], t), 0.0, 1e-11);
            assert!((one - phi_mass(t, 1)).abs() < 1e-8);
            let two = 2.0 * PI * integrate_to_infinity(&|r| r * profile_eval(&Profile::Phi, [r, 0.0], t), 0.0, 1e-11);
            assert!((two - phi_mass(t, 2)).abs() < 1e-7);
            // Bound of the form c_d(1 + √t ∫U + √t^d ∫ s^{d-1} U).
            assert!(phi_mass(t, 2) <= 2.0 * PI * (1.0 + t.sqrt() * u_moment(0) + t * u_moment(1)));
        }
    }

    #[test]
    fn phi_is_supersolution_of_lambda_plus_equation() {
        let (h, dt) = (1e-3, 1e-6);
        let t = 0.3;
        for d in [1usize, 2] {
            for r in [1.05, 1.3, 1.8, 2.5] {
                let x = if d == 1 { [r, 0.0] } else { [r * 0.6, r * 0.8] };
                let f = |y: [f64; 2], s: f64| profile_eval(&Profile::Phi, y, s);
                let dtf = (f(x, t + dt) - f(x, t - dt)) / (2.0 * dt);
                let c = f(x, t);
                let hess = if d == 1 {
                    Sym2::scalar((f([x[0] + h, 0.0], t) - 2.0 * c + f([x[0] - h, 0.0], t)) / (h * h))
                } else {
                    let fxx = (f([x[0] + h, x[1]], t) - 2.0 * c + f([x[0] - h, x[1]], t)) / (h * h);
                    let fyy = (f([x[0], x[1] + h], t) - 2.0 * c + f([x[0], x[1] - h], t)) / (h * h);
                    let fxy = (f([x[0] + h, x[1] + h], t) - f([x[0] + h, x[1] - h], t)
                        - f([x[0] - h, x[1] + h], t)
                        + f([x[0] - h, x[1] - h], t))
                        / (4.0 * h * h);
                    Sym2::new(fxx, fxy, fyy)
                };
                assert!(dtf - lambda_plus(&hess) >= -1e-4, "d={d} r={r}: {dtf} vs {}", lambda_plus(&hess));
            }
        }
    }

    #[test]
    fn analytic_modulus_bound_shape() {
        assert_eq!(modulus_upper_analytic(0.0, 1).0, 0.0);
        let (b1, nu) = modulus_upper_analytic(1.0, 1);
        assert!(nu > 0.0 && b1 > 0.0);
        // Infimum is no larger than the ν = 1 value.
        let at_one = 2.0 * bump_peak(1) * phi_mass(1.0, 1) - 1.0;
        assert!(b1 <= at_one + 1e-12);
        assert!((bump_peak(1) - 0.8285).abs() < 1e-3);
        assert!(modulus_upper_analytic(4.0, 1).0 > b1);
    }

    #[test]
    fn frozen_paths_return_data() {
        let op = ControlledOperator::scalar(&[(0.0, 0.0)]).unwrap();
        let f = GridField::from_fn_1d(-2.0, 2.0, 0.01, |x| x.cos());
        let spec = MonteCarloSpec { paths: 16, dt: 0.01, seed: 7, policy: Policy::Constant { control: 0 } };
        let (m, se) = mc_lower_bound(&op, &f, [0.3, 0.0], 0.5, &spec).unwrap();
        assert!((m - f.sample([0.3, 0.0])).abs() < 1e-15);
        assert!(se < 1e-12);
    }

    #[test]
    fn linear_case_matches_heat_kernel() {
        let op = ControlledOperator::scalar(&[(0.0, 0.5)]).unwrap();
        let f = GridField::from_fn_1d(-6.0, 6.0, 0.01, |x| (-x * x).exp());
        let spec = MonteCarloSpec { paths: 20_000, dt: 0.01, seed: 0xD0A1, policy: Policy::Constant { control: 0 } };
        let x = [0.4, 0.0];
        let (m, se) = mc_lower_bound(&op, &f, x, 0.3, &spec).unwrap();
        let g = gaussian_convolve(&f, &Sym2::scalar(0.5), 0.3);
        let exact = g.sample(x);
        assert!((m - exact).abs() <= 3.0 * se + 1e-4, "{m} ± {se} vs {exact}");
    }

    #[test]
    fn bang_bang_stays_below_oracle() {
        let (eta, nu) = (1.0, 1.0);
        let op = ControlledOperator::scalar(&[(-eta, 0.0), (eta, 0.0), (-eta, nu), (eta, nu)]).unwrap();
        let t = 0.4;
        let h = 0.005;
        // Narrow data approximating the indicator of the origin.
        let f = GridField::from_fn_1d(-6.0, 6.0, h, |x| u_ratio((x.abs() - 0.05).max(0.0), 1e-4));
        let spec = MonteCarloSpec { paths: 4000, dt: 0.002, seed: 0xD0A1, policy: Policy::RadialBangBang { center: [0.0, 0.0] } };
        for x in [0.2, 0.6, 1.0] {
            let (m, se) = mc_lower_bound(&op, &f, [x, 0.0], t, &spec).unwrap();
            let oracle = profile_eval(&Profile::EtaNu { eta, nu, s: 0.05 }, [x, 0.0], t);
            assert!(m <= oracle + 3.0 * se + 1e-3, "x={x}: {m} vs {oracle}");
        }
    }

    #[test]
    fn seeding_is_reproducible_and_thread_independent() {
        let op = ControlledOperator::scalar(&[(0.3, 0.7)]).unwrap();
        let f = GridField::from_fn_1d(-5.0, 5.0, 0.01, |x| x.sin());
        let spec = MonteCarloSpec { paths: 500, dt: 0.01, seed: 42, policy: Policy::Constant { control: 0 } };
        let a = mc_lower_bound(&op, &f, [0.0, 0.0], 0.2, &spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| mc_lower_bound(&op, &f, [0.0, 0.0], 0.2, &spec).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn more_switching_never_lowers_best_policy() {
        // Max over the schedules tried: adding schedules cannot decrease it.
        let op = ControlledOperator::scalar(&[(1.0, 0.0), (-1.0, 0.0), (0.0, 0.5)]).unwrap();
        let f = GridField::from_fn_1d(-4.0, 4.0, 0.01, |x| (-(x - 0.3) * (x - 0.3) * 4.0).exp());
        let run = |pieces: Vec<(f64, usize)>| {
            let spec = MonteCarloSpec { paths: 300, dt: 0.01, seed: 1, policy: Policy::Schedule { pieces } };
            mc_lower_bound(&op, &f, [0.0, 0.0], 0.4, &spec).unwrap().0
        };
        let coarse = [vec![(0.0, 0)], vec![(0.0, 1)], vec![(0.0, 2)]];
        let best_coarse = coarse.iter().map(|p| run(p.clone())).fold(f64::NEG_INFINITY, f64::max);
        let mut fine: Vec<Vec<(f64, usize)>> = coarse.to_vec();
        fine.push(vec![(0.0, 0), (0.2, 2)]);
        fine.push(vec![(0.0, 2), (0.3, 0)]);
        let best_fine = fine.iter().map(|p| run(p.clone())).fold(f64::NEG_INFINITY, f64::max);
        assert!(best_fine >= best_coarse);
    }

    #[test]
    fn rejects_bad_spec() {
        let op = ControlledOperator::scalar(&[(0.0, 0.0)]).unwrap();
        let f = GridField::from_fn_1d(-1.0, 1.0, 0.1, |_| 0.0);
        let bad = MonteCarloSpec { paths: 0, dt: 0.1, seed: 0, policy: Policy::Constant { control: 0 } };
        assert!(mc_lower_bound(&op, &f, [0.0, 0.0], 1.0, &bad).is_err());
        let bad2 = MonteCarloSpec { paths: 1, dt: 0.1, seed: 0, policy: Policy::Constant { control: 3 } };
        assert!(mc_lower_bound(&op, &f, [0.0, 0.0], 1.0, &bad2).is_err());
        let _ = Control::scalar(0.0, 0.0);
    }
}

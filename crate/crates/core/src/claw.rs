//! Monotone conservative finite-volume scheme for the one-dimensional
//! degenerate convection–diffusion law `∂t u + ∂x F(u) = ∂²_xx 𝒜(u)`, with
//! entropy and Kato-inequality diagnostics.
//!
//! `F` is taken as the piecewise-linear interpolant of its table, so every
//! quantity derived from `F′` (numerical flux, `q(u, v)`, entropy fluxes) is
//! an exact integral of the same function.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Boundary, GridField};
use crate::hjb::{FluxScheme, SchemeConfig};
use crate::record::VerificationRecord;
use crate::sum::{pairwise_sum, pairwise_sum_by};

/// Default number of nodes of the value table.
pub const TABLE_POINTS: usize = 1025;

/// Tabulated flux data on a uniform value grid over `[m, M]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxModel {
    pub name: String,
    m: f64,
    big_m: f64,
    du: f64,
    f: Vec<f64>,
    /// Nodal `F′` (average of adjacent segment slopes), diagnostic only.
    df: Vec<f64>,
    a: Vec<f64>,
    /// `𝒜(u) = ∫₀ᵘ A`.
    acal: Vec<f64>,
    /// `ζ(u) = ∫₀ᵘ √A`.
    zeta: Vec<f64>,
    /// `∫_m^u (F′)⁺` and `∫_m^u (F′)⁻`.
    fplus: Vec<f64>,
    fminus: Vec<f64>,
    l_f: f64,
    l_a: f64,
    convex: bool,
}

fn cumtrapz(vals: &[f64], du: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in vals.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * du;
        out.push(acc);
    }
    out
}

impl FluxModel {
    /// Build from nodal values of `F` and `A` on a uniform grid of `[m, M]`.
    pub fn from_tables(name: impl Into<String>, m: f64, big_m: f64, f: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        let n = f.len();
        if n < 2 || a.len() != n {
            return Err(Error::Shape(format!("flux tables need equal length ≥ 2, got {} and {}", n, a.len())));
        }
        if !(m < big_m) || !m.is_finite() || !big_m.is_finite() {
            return Err(Error::Config(format!("flux range [{m}, {big_m}] is empty")));
        }
        if f.iter().chain(&a).any(|v| !v.is_finite()) {
            return Err(Error::Config("flux tables must be finite".into()));
        }
        if let Some(v) = a.iter().find(|&&v| v < 0.0) {
            return Err(Error::Config(format!("diffusion A must be nonnegative, found {v}")));
        }
        let du = (big_m - m) / (n - 1) as f64;
        let slopes: Vec<f64> = f.windows(2).map(|w| (w[1] - w[0]) / du).collect();
        let mut df = vec![0.0; n];
        for i in 0..n {
            let lo = if i > 0 { slopes[i - 1] } else { slopes[0] };
            let hi = if i + 1 < n { slopes[i] } else { slopes[n - 2] };
            df[i] = 0.5 * (lo + hi);
        }
        let mut fplus = vec![0.0; n];
        let mut fminus = vec![0.0; n];
        for (i, s) in slopes.iter().enumerate() {
            fplus[i + 1] = fplus[i] + s.max(0.0) * du;
            fminus[i + 1] = fminus[i] + s.min(0.0) * du;
        }
        let l_f = slopes.iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
        let l_a = a.iter().fold(0.0f64, |acc, &v| acc.max(v));
        let scale = l_f.max(1e-300);
        let convex = slopes.windows(2).all(|w| w[1] >= w[0] - 1e-9 * scale);
        let mut model = FluxModel {
            name: name.into(),
            m,
            big_m,
            du,
            df,
            acal: cumtrapz(&a, du),
            zeta: cumtrapz(&a.iter().map(|v| v.sqrt()).collect::<Vec<_>>(), du),
            f,
            a,
            fplus,
            fminus,
            l_f,
            l_a,
            convex,
        };
        // Integrals are anchored at 0 (or the nearest end of the range).
        let anchor = 0.0f64.clamp(m, big_m);
        let (a0, z0) = (model.acal_at(anchor), model.zeta_at(anchor));
        model.acal.iter_mut().for_each(|v| *v -= a0);
        model.zeta.iter_mut().for_each(|v| *v -= z0);
        Ok(model)
    }

    /// Sample `F` and `A` on `n` nodes.
    pub fn from_fns(
        name: impl Into<String>,
        m: f64,
        big_m: f64,
        n: usize,
        flux: impl Fn(f64) -> f64,
        diffusion: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("value table needs at least 2 nodes".into()));
        }
        let du = (big_m - m) / (n - 1) as f64;
        let us: Vec<f64> = (0..n).map(|i| if i + 1 == n { big_m } else { m + i as f64 * du }).collect();
        Self::from_tables(name, m, big_m, us.iter().map(|&u| flux(u)).collect(), us.iter().map(|&u| diffusion(u)).collect())
    }

    /// `F(u) = u²/2`, `A = 0`.
    pub fn burgers(m: f64, big_m: f64) -> Self {
        Self::from_fns("burgers", m, big_m, TABLE_POINTS, |u| 0.5 * u * u, |_| 0.0).expect("valid builtin")
    }

    /// `F(u) = u²/2`, `A(u) = u²`, so `𝒜(u) = u³/3`.
    pub fn burgers_porous(m: f64, big_m: f64) -> Self {
        Self::from_fns("burgers-porous", m, big_m, TABLE_POINTS, |u| 0.5 * u * u, |u| u * u).expect("valid builtin")
    }

    /// `F(u) = c u`, `A = 0`.
    pub fn transport(c: f64, m: f64, big_m: f64) -> Self {
        Self::from_fns("transport", m, big_m, TABLE_POINTS, |u| c * u, |_| 0.0).expect("valid builtin")
    }

    /// `F = 0`, `A = 1`.
    pub fn heat(m: f64, big_m: f64) -> Self {
        Self::from_fns("heat", m, big_m, TABLE_POINTS, |_| 0.0, |_| 1.0).expect("valid builtin")
    }

    /// Read a table with header `u,F,A`; `u` must be uniform and increasing.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != ["u", "F", "A"] {
            return Err(Error::Parse(format!("flux table header must be u,F,A, got {header:?}")));
        }
        let (mut us, mut fs, mut as_) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                let cell = rec.get(k).ok_or_else(|| Error::Parse("short row in flux table".into()))?;
                cell.parse().map_err(|e| Error::Parse(format!("{cell:?}: {e}")))
            };
            us.push(parse(0)?);
            fs.push(parse(1)?);
            as_.push(parse(2)?);
        }
        if us.len() < 2 {
            return Err(Error::Parse("flux table needs at least 2 rows".into()));
        }
        let (m, big_m) = (us[0], us[us.len() - 1]);
        let du = (big_m - m) / (us.len() - 1) as f64;
        for (i, u) in us.iter().enumerate() {
            if (u - (m + i as f64 * du)).abs() > 1e-9 * (big_m - m).abs().max(1.0) {
                return Err(Error::Parse(format!("flux table grid is not uniform at row {}", i + 1)));
            }
        }
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string();
        Self::from_tables(name, m, big_m, fs, as_)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.m, self.big_m)
    }

    pub fn table_spacing(&self) -> f64 {
        self.du
    }

    pub fn table_len(&self) -> usize {
        self.f.len()
    }

    /// `ess sup |F′|` over the range.
    pub fn lip_f(&self) -> f64 {
        self.l_f
    }

    /// `ess sup A` over the range.
    pub fn lip_a(&self) -> f64 {
        self.l_a
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn is_first_order(&self) -> bool {
        self.l_a == 0.0
    }

    /// Table node `i` value.
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.f.len() {
            self.big_m
        } else {
            self.m + i as f64 * self.du
        }
    }

    #[inline]
    fn locate(&self, u: f64) -> (usize, f64) {
        let s = ((u - self.m) / self.du).clamp(0.0, (self.f.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.f.len() - 2);
        (i, s - i as f64)
    }

    #[inline]
    fn interp(&self, table: &[f64], u: f64) -> f64 {
        let (i, w) = self.locate(u);
        table[i] + w * (table[i + 1] - table[i])
    }

    pub fn flux_at(&self, u: f64) -> f64 {
        self.interp(&self.f, u)
    }

    pub fn dflux_at(&self, u: f64) -> f64 {
        self.interp(&self.df, u)
    }

    pub fn diffusion_at(&self, u: f64) -> f64 {
        self.interp(&self.a, u)
    }

    pub fn acal_at(&self, u: f64) -> f64 {
        self.interp(&self.acal, u)
    }

    pub fn zeta_at(&self, u: f64) -> f64 {
        self.interp(&self.zeta, u)
    }

    /// Nodal `(F′, A)` pairs; the dual control set of the weighted contraction.
    pub fn nodal_coefficients(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.df.iter().copied().zip(self.a.iter().copied())
    }

    /// Extreme values of `F′` over the range (the hull of its essential image).
    pub fn speed_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for w in self.f.windows(2) {
            let s = (w[1] - w[0]) / self.du;
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }

    /// Engquist–Osher flux `F(m) + ∫_m^{u_l} (F′)⁺ + ∫_m^{u_r} (F′)⁻`.
    #[inline]
    pub fn engquist_osher(&self, ul: f64, ur: f64) -> f64 {
        self.f[0] + self.interp(&self.fplus, ul) + self.interp(&self.fminus, ur)
    }

    /// Godunov flux for a convex `F`.
    #[inline]
    pub fn godunov(&self, ul: f64, ur: f64) -> f64 {
        if ul <= ur {
            // Minimum of a convex function on [ul, ur]: at the sonic point if inside.
            let (lo_i, _) = self.locate(ul);
            let mut best = self.flux_at(ul).min(self.flux_at(ur));
            let (hi_i, _) = self.locate(ur);
            for i in lo_i + 1..=hi_i {
                let v = self.f[i];
                if v < best {
                    best = v;
                } else if i > lo_i + 1 {
                    break;
                }
            }
            best
        } else {
            self.flux_at(ul).max(self.flux_at(ur))
        }
    }

    /// `sgn(u − v) ∫_v^u F′ = sgn(u − v)(F(u) − F(v))`.
    pub fn kato_q(&self, u: f64, v: f64) -> f64 {
        sgn(u - v) * (self.flux_at(u) - self.flux_at(v))
    }

    /// `sgn(u − v) ∫_v^u A = |𝒜(u) − 𝒜(v)|`.
    pub fn kato_r(&self, u: f64, v: f64) -> f64 {
        sgn(u - v) * (self.acal_at(u) - self.acal_at(v))
    }

    /// Largest deviation between `𝒜′` and `A` by finite differences on the table.
    pub fn consistency_gap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.f.len() - 1 {
            let d = (self.acal[i + 1] - self.acal[i]) / self.du;
            worst = worst.max((d - 0.5 * (self.a[i] + self.a[i + 1])).abs());
        }
        worst
    }
}

/// Sign with `sgn(0) = 0`.
#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct ClawProblem {
    pub flux: FluxModel,
    pub initial: GridField,
}

impl ClawProblem {
    pub fn new(flux: FluxModel, initial: GridField) -> Result<Self> {
        check_range(&flux, &initial)?;
        Ok(ClawProblem { flux, initial })
    }
}

fn check_range(flux: &FluxModel, u: &GridField) -> Result<()> {
    if u.dim() != 1 {
        return Err(Error::Shape("the conservation-law solver is one-dimensional".into()));
    }
    let (m, big_m) = flux.range();
    let slack = 1e-12 * (big_m - m).max(1.0);
    let (lo, hi) = (u.min_value(), u.max_value());
    if lo < m - slack || hi > big_m + slack {
        return Err(Error::Precondition(format!("data range [{lo}, {hi}] leaves the flux range [{m}, {big_m}]")));
    }
    Ok(())
}

/// The explicit scheme for a given flux and lattice spacing.
#[derive(Clone, Debug)]
pub struct ClawScheme {
    flux: FluxModel,
    h: f64,
    kind: FluxScheme,
}

impl ClawScheme {
    pub fn new(flux: &FluxModel, h: f64, cfg: &SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.flux == FluxScheme::Godunov && !flux.is_convex() {
            return Err(Error::Config(format!("Godunov flux requires a convex F; '{}' is not", flux.name)));
        }
        Ok(ClawScheme { flux: flux.clone(), h, kind: cfg.flux })
    }

    /// `L_F / h + 2 L_A / h²`; monotone iff `dt` times this is at most one.
    pub fn diagonal_coefficient(&self) -> f64 {
        self.flux.lip_f() / self.h + 2.0 * self.flux.lip_a() / (self.h * self.h)
    }

    pub fn flux(&self) -> &FluxModel {
        &self.flux
    }

    #[inline]
    fn numerical_flux(&self, ul: f64, ur: f64) -> f64 {
        match self.kind {
            FluxScheme::EngquistOsher => self.flux.engquist_osher(ul, ur),
            FluxScheme::Godunov => self.flux.godunov(ul, ur),
        }
    }

    /// `u_j − (dt/h)(F̂_{j+½} − F̂_{j−½}) + (dt/h²)(𝒜_{j+1} − 2𝒜_j + 𝒜_{j−1})`.
    pub fn step(&self, state: &GridField, dt: f64) -> GridField {
        let n = state.len();
        let b = state.boundary();
        let u = state.values();
        let get = |i: isize| u[b.index(i, n)];
        // Face k sits between cells k − 1 and k.
        let faces: Vec<f64> =
            (0..n + 1).into_par_iter().with_min_len(4096).map(|k| self.numerical_flux(get(k as isize - 1), get(k as isize))).collect();
        let acal: Vec<f64> = (0..n + 2).map(|k| self.flux.acal_at(get(k as isize - 1))).collect();
        let lam = dt / self.h;
        let mu = dt / (self.h * self.h);
        let out: Vec<f64> = (0..n)
            .into_par_iter()
            .with_min_len(4096)
            .map(|j| u[j] - lam * (faces[j + 1] - faces[j]) + mu * (acal[j + 2] - 2.0 * acal[j + 1] + acal[j]))
            .collect();
        state.with_values(out)
    }
}

/// Incremental marching of one conservation-law problem.
#[derive(Clone, Debug)]
pub struct ClawEvolution {
    scheme: ClawScheme,
    state: GridField,
    time: f64,
    dt: f64,
}

impl ClawEvolution {
    pub fn new(problem: &ClawProblem, cfg: &SchemeConfig) -> Result<Self> {
        let scheme = ClawScheme::new(&problem.flux, problem.initial.h(), cfg)?;
        let dt = cfg.resolve_dt(scheme.diagonal_coefficient(), 1.0)?;
        Ok(ClawEvolution { scheme, state: problem.initial.clone(), time: 0.0, dt })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state(&self) -> &GridField {
        &self.state
    }

    pub fn step_until(&mut self, limit: f64) {
        let dt = self.dt.min(limit - self.time);
        if dt <= 0.0 {
            return;
        }
        self.state = self.scheme.step(&self.state, dt);
        self.time = if limit - (self.time + dt) <= 1e-12 * limit.abs().max(1.0) { limit } else { self.time + dt };
    }

    pub fn advance_to(&mut self, t: f64) {
        while self.time < t {
            self.step_until(t);
        }
    }
}

/// One step with the configured time step.
pub fn claw_step(problem: &ClawProblem, state: &GridField, cfg: &SchemeConfig) -> Result<GridField> {
    check_range(&problem.flux, state)?;
    let scheme = ClawScheme::new(&problem.flux, state.h(), cfg)?;
    let dt = cfg.resolve_dt(scheme.diagonal_coefficient(), 1.0)?;
    Ok(scheme.step(state, dt))
}

/// Solution at each snapshot time (sorted, within `[0, t_final]`); an empty
/// list returns the solution at `t_final`.
pub fn claw_evolve(problem: &ClawProblem, t_final: f64, cfg: &SchemeConfig, snapshots: &[f64]) -> Result<Vec<GridField>> {
    if !(t_final >= 0.0) {
        return Err(Error::Config(format!("t_final must be nonnegative, got {t_final}")));
    }
    let times: Vec<f64> = if snapshots.is_empty() { vec![t_final] } else { snapshots.to_vec() };
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| t < 0.0 || t > t_final) {
        return Err(Error::Config("snapshot times must be sorted and lie in [0, t_final]".into()));
    }
    let mut ev = ClawEvolution::new(problem, cfg)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in &times {
        ev.advance_to(t);
        out.push(ev.state().clone());
    }
    Ok(out)
}

/// Every time level of a run, for space-time quadratures.
#[derive(Clone, Debug)]
pub struct History {
    pub times: Vec<f64>,
    pub states: Vec<GridField>,
}

impl History {
    pub fn final_state(&self) -> &GridField {
        self.states.last().expect("history is never empty")
    }
}

/// Run to `t_final` keeping every time level; with `dt` fixed by `cfg`, two
/// runs on the same lattice share their time levels.
pub fn claw_history(problem: &ClawProblem, t_final: f64, cfg: &SchemeConfig) -> Result<History> {
    let mut ev = ClawEvolution::new(problem, cfg)?;
    let mut times = vec![0.0];
    let mut states = vec![problem.initial.clone()];
    while ev.time() < t_final {
        ev.step_until(t_final);
        times.push(ev.time());
        states.push(ev.state().clone());
    }
    Ok(History { times, states })
}

/// `h Σ u`.
pub fn mass(u: &GridField) -> f64 {
    u.cell_volume() * pairwise_sum(u.values())
}

/// Space-time test function, evaluated pointwise.
pub type TestFn<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

/// Derivative step for the time derivative of a test function.
const TIME_DELTA: f64 = 1e-5;

/// `h Σ_j g(j, φ, φ_t, φ_x, φ_xx)` at time `t`, derivatives by centered differences.
fn space_sum(grid: &GridField, test: TestFn, t: f64, g: impl Fn(usize, [f64; 4]) -> f64 + Sync) -> f64 {
    let h = grid.h();
    let x0 = grid.origin()[0];
    let n = grid.len();
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .with_min_len(1024)
        .map(|j| {
            let x = x0 + j as f64 * h;
            let c = test(x, t);
            let (l, r) = (test(x - h, t), test(x + h, t));
            let dt = (test(x, t + TIME_DELTA) - test(x, (t - TIME_DELTA).max(0.0))) / (t + TIME_DELTA - (t - TIME_DELTA).max(0.0));
            g(j, [c, dt, (r - l) / (2.0 * h), (r - 2.0 * c + l) / (h * h)])
        })
        .collect();
    h * pairwise_sum(&terms)
}

/// Trapezoid in time of per-level values.
fn time_trapezoid(times: &[f64], vals: &[f64]) -> f64 {
    pairwise_sum_by(times.len() - 1, |k| 0.5 * (times[k + 1] - times[k]) * (vals[k] + vals[k + 1]))
}

fn check_test(grid: &GridField, test: TestFn, times: &[f64]) -> Result<()> {
    for &t in times.iter().step_by((times.len() / 16).max(1)).chain(times.last()) {
        for x in grid.coords() {
            let v = test(x[0], t);
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Precondition(format!("test function is negative or not finite at ({}, {t})", x[0])));
            }
        }
    }
    Ok(())
}

/// Kato inequality for two runs sharing their time levels:
/// `lhs = ∫|u−v|(T)φ(T)` against
/// `rhs = ∫|u₀−v₀|φ(0) + ∫∫ |u−v|φ_t + q(u,v)φ_x + r(u,v)φ_xx`.
pub fn kato_residual(u: &History, v: &History, flux: &FluxModel, test: TestFn) -> Result<VerificationRecord> {
    if u.times.len() != v.times.len() || u.times.iter().zip(&v.times).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Shape("Kato residual needs runs on the same time levels".into()));
    }
    u.states[0].check_same_grid(&v.states[0])?;
    check_test(&u.states[0], test, &u.times)?;
    let h = u.states[0].h();
    let levels: Vec<f64> = (0..u.times.len())
        .map(|k| {
            let (a, b) = (u.states[k].values(), v.states[k].values());
            space_sum(&u.states[k], test, u.times[k], |j, [_, pt, px, pxx]| {
                (a[j] - b[j]).abs() * pt + flux.kato_q(a[j], b[j]) * px + flux.kato_r(a[j], b[j]) * pxx
            })
        })
        .collect();
    let weighted = |k: usize| {
        let (a, b) = (u.states[k].values(), v.states[k].values());
        space_sum(&u.states[k], test, u.times[k], |j, [p, ..]| (a[j] - b[j]).abs() * p)
    };
    let last = u.times.len() - 1;
    let lhs = weighted(last);
    let rhs = weighted(0) + time_trapezoid(&u.times, &levels);
    let tol = 4.0 * h;
    Ok(VerificationRecord::new("kato-residual", "Kato inequality", lhs, rhs, tol, "4 h")
        .param("h", h)
        .param("T", u.times[last]))
}

/// Kruzhkov entropy inequality with `η(u) = √((u−k)² + ε²)`, `ε` the table
/// spacing, and the (nonnegative) dissipation term dropped:
/// `lhs = ∫η(u(T))φ(T)` against `rhs = ∫η(u₀)φ(0) + ∫∫ ηφ_t + qφ_x + rφ_xx`.
pub fn entropy_residual(u: &History, flux: &FluxModel, k: f64, test: TestFn) -> Result<VerificationRecord> {
    let (m, big_m) = flux.range();
    if !(k >= m && k <= big_m) {
        return Err(Error::Precondition(format!("Kruzhkov level {k} outside [{m}, {big_m}]")));
    }
    check_test(&u.states[0], test, &u.times)?;
    let eps = flux.table_spacing();
    let eta = |w: f64| ((w - k) * (w - k) + eps * eps).sqrt();
    let deta = |w: f64| (w - k) / ((w - k) * (w - k) + eps * eps).sqrt();
    // Entropy fluxes by the midpoint rule on each table segment.
    let n = flux.table_len();
    let mut q_tab = vec![0.0; n];
    let mut r_tab = vec![0.0; n];
    for i in 0..n - 1 {
        let (a, b) = (flux.node(i), flux.node(i + 1));
        let mid = 0.5 * (a + b);
        let w = deta(mid);
        q_tab[i + 1] = q_tab[i] + w * (flux.flux_at(b) - flux.flux_at(a));
        r_tab[i + 1] = r_tab[i] + w * (flux.acal_at(b) - flux.acal_at(a));
    }
    let qk = flux.interp(&q_tab, k);
    let rk = flux.interp(&r_tab, k);
    let q = |w: f64| flux.interp(&q_tab, w) - qk;
    let r = |w: f64| flux.interp(&r_tab, w) - rk;
    let h = u.states[0].h();
    let levels: Vec<f64> = (0..u.times.len())
        .map(|l| {
            let a = u.states[l].values();
            space_sum(&u.states[l], test, u.times[l], |j, [_, pt, px, pxx]| eta(a[j]) * pt + q(a[j]) * px + r(a[j]) * pxx)
        })
        .collect();
    let weighted = |l: usize| {
        let a = u.states[l].values();
        space_sum(&u.states[l], test, u.times[l], |j, [p, ..]| eta(a[j]) * p)
    };
    let last = u.times.len() - 1;
    let lhs = weighted(last);
    let rhs = weighted(0) + time_trapezoid(&u.times, &levels);
    Ok(VerificationRecord::new("entropy-residual", "entropy inequality", lhs, rhs, 4.0 * h, "4 h")
        .param("k", k)
        .param("h", h))
}

/// `Σ_n dt_n Σ_j h ((ζ(u_{j+1}) − ζ(u_j))/h)²` over cells with `x_j ∈ [a, b]`.
pub fn local_energy(u: &History, flux: &FluxModel, window: (f64, f64)) -> f64 {
    let per_level: Vec<f64> = u
        .states
        .iter()
        .map(|s| {
            let h = s.h();
            let n = s.len();
            let vals = s.values();
            let b = s.boundary();
            let x0 = s.origin()[0];
            pairwise_sum_by(n, |j| {
                let x = x0 + j as f64 * h;
                if x < window.0 || x > window.1 {
                    return 0.0;
                }
                let d = (flux.zeta_at(vals[b.index(j as isize + 1, n)]) - flux.zeta_at(vals[j])) / h;
                h * d * d
            })
        })
        .collect();
    // Left-endpoint rule, matching the explicit step that produced each level.
    pairwise_sum_by(u.times.len() - 1, |k| (u.times[k + 1] - u.times[k]) * per_level[k])
}

/// Periodic copy of a one-dimensional field.
pub fn periodic(u: GridField) -> GridField {
    u.with_boundary(Boundary::Periodic)
}

//! The inequality harness: each suite runs one family of experiments and
//! returns [`VerificationRecord`]s in a fixed order.

mod claw_checks;
mod demos;
mod fixtures;
mod hjb_checks;
mod modulus;
mod static_checks;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::VerificationRecord;

pub use claw_checks::{
    check_claw_contraction, check_domain_of_dependence, check_duality_inequality, check_exp_weight_contraction,
    check_weighted_contraction, dual_operator, BurgersFixture, DualWeight, WEIGHTED_TOLERANCE_C,
};
pub use demos::{run_instability_demos, DemoParams};
pub use fixtures::{eval_piecewise_linear, random_piecewise_linear, random_steps, seeded_rng, Steps};
pub use hjb_checks::{
    check_eikonal_dilation, check_hjb_contraction, check_int_stability, check_lip_lower_bounds,
    check_quasicontraction, check_self_similar, SelfSimilarResult,
};
pub use modulus::{estimate_modulus, estimate_modulus_sweep, fit_exponent, ModulusEstimate};
pub use static_checks::{check_seminorm_fixtures, check_window_suite};

/// Default seed of every randomized suite.
pub const DEFAULT_SEED: u64 = 0xD0A1;
/// Default number of randomized trials.
pub const DEFAULT_TRIALS: usize = 50;

/// Named experiment families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    SelfSimilar,
    Eikonal,
    Window,
    Seminorms,
    Contraction,
    Weighted,
    Duality,
    ExpWeight,
    DomainOfDependence,
    IntStability,
    Modulus,
    Instability,
    Lip,
    Quasicontraction,
    Kato,
}

impl Suite {
    pub const ALL: [Suite; 15] = [
        Suite::SelfSimilar,
        Suite::Eikonal,
        Suite::Window,
        Suite::Seminorms,
        Suite::Contraction,
        Suite::Weighted,
        Suite::Duality,
        Suite::ExpWeight,
        Suite::DomainOfDependence,
        Suite::IntStability,
        Suite::Modulus,
        Suite::Instability,
        Suite::Lip,
        Suite::Quasicontraction,
        Suite::Kato,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SelfSimilar => "self-similar",
            Suite::Eikonal => "eikonal",
            Suite::Window => "window",
            Suite::Seminorms => "seminorms",
            Suite::Contraction => "contraction",
            Suite::Weighted => "weighted",
            Suite::Duality => "duality",
            Suite::ExpWeight => "exp-weight",
            Suite::DomainOfDependence => "domain-of-dependence",
            Suite::IntStability => "int-stability",
            Suite::Modulus => "modulus",
            Suite::Instability => "instability",
            Suite::Lip => "lip",
            Suite::Quasicontraction => "quasicontraction",
            Suite::Kato => "kato",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

/// Parse `NAME[,NAME...]`; `default` or `all` expands to every suite, an
/// empty string to none.
pub fn parse_suites(spec: &str) -> Result<Vec<Suite>> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "default" || part == "all" {
            out.extend(Suite::ALL);
        } else {
            out.push(part.parse()?);
        }
    }
    let mut seen = std::collections::HashSet::new();
    out.retain(|s| seen.insert(*s));
    Ok(out)
}

/// Knobs shared by every suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub trials: usize,
    /// Multiplies every default lattice spacing (2 = one level coarser).
    pub h_scale: f64,
    /// Multiplies every tolerance before the verdict.
    pub tolerance_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: DEFAULT_SEED, trials: DEFAULT_TRIALS, h_scale: 1.0, tolerance_scale: 1.0 }
    }
}

impl VerifyOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_scale > 0.0 && self.h_scale.is_finite()) {
            return Err(Error::Config(format!("h_scale must be positive, got {}", self.h_scale)));
        }
        if !self.tolerance_scale.is_finite() {
            return Err(Error::Config("tolerance_scale must be finite".into()));
        }
        Ok(())
    }

    /// Lattice spacing `base · h_scale`.
    pub fn h(&self, base: f64) -> f64 {
        base * self.h_scale
    }
}

/// Runs suites, sharing expensive fixtures between them.
pub struct Verifier {
    pub options: VerifyOptions,
    burgers: OnceLock<Result<Arc<BurgersFixture>, String>>,
}

impl Verifier {
    pub fn new(options: VerifyOptions) -> Result<Self> {
        options.validate()?;
        Ok(Verifier { options, burgers: OnceLock::new() })
    }

    fn burgers(&self) -> Result<Arc<BurgersFixture>> {
        self.burgers
            .get_or_init(|| BurgersFixture::build(&self.options).map(Arc::new).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Precondition)
    }

    pub fn run_suite(&self, suite: Suite) -> Result<Vec<VerificationRecord>> {
        let o = &self.options;
        let start = Instant::now();
        let mut records = match suite {
            Suite::SelfSimilar => check_self_similar(o.h(1.0 / 160.0))?.records,
            Suite::Eikonal => check_eikonal_dilation(o, 20)?,
            Suite::Window => check_window_suite(o)?,
            Suite::Seminorms => check_seminorm_fixtures()?,
            Suite::Contraction => {
                let mut r = check_hjb_contraction(o)?;
                r.extend(check_claw_contraction(o)?);
                r
            }
            Suite::Weighted => check_weighted_contraction(&*self.burgers()?)?,
            Suite::Duality => check_duality_inequality(&*self.burgers()?)?,
            Suite::ExpWeight => check_exp_weight_contraction(&*self.burgers()?)?,
            Suite::DomainOfDependence => check_domain_of_dependence(o)?,
            Suite::IntStability => check_int_stability(o)?,
            Suite::Modulus => modulus::modulus_records(o)?,
            Suite::Instability => run_instability_demos(&DemoParams::for_options(o))?,
            Suite::Lip => check_lip_lower_bounds(o)?,
            Suite::Quasicontraction => check_quasicontraction(o, 20)?,
            Suite::Kato => claw_checks::check_kato(o, 20)?,
        };
        let elapsed = start.elapsed();
        let share = elapsed / records.len().max(1) as u32;
        for r in &mut records {
            r.runtime = share;
            r.params.insert("h_scale".into(), o.h_scale);
            if o.tolerance_scale != 1.0 {
                r.rescale_tolerance(o.tolerance_scale);
            }
        }
        Ok(records)
    }

    /// Every selected suite in order, tagged with the suite name.
    pub fn run(&self, suites: &[Suite]) -> Result<Vec<(Suite, Vec<VerificationRecord>)>> {
        suites.iter().map(|&s| Ok((s, self.run_suite(s)?))).collect()
    }
}

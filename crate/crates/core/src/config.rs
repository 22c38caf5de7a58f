//! Run configuration: an INI-like file of `key = value` lines under
//! `[section]` headers, lists as comma-separated values.
//!
//! Unknown sections and keys are rejected. The hash covers the canonical
//! text (sorted sections and keys, normalized lists) plus the bytes of every
//! referenced file, so a config written back with [`RunConfig::to_ini`]
//! hashes identically.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;
use sha2::{Digest, Sha256};

use crate::claw::FluxModel;
use crate::controls::{Control, ControlledOperator};
use crate::error::{Error, Result};
use crate::field::{read_csv, Boundary, GridField, MollifierSpec};
use crate::hjb::{FluxScheme, Hamiltonian, SchemeConfig};
use crate::linalg::Sym2;
use crate::oracle::{profile_eval, Profile};
use crate::verify::{dual_operator, parse_suites, Suite, VerifyOptions, DEFAULT_SEED, DEFAULT_TRIALS};

/// Accepted keys per section.
const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["seed", "trials", "h_scale", "tolerance_scale", "suite"]),
    ("grid", &["dim", "lo", "hi", "h", "boundary"]),
    ("time", &["t_final", "snapshots", "dt", "cfl_safety", "n_theta", "flux_scheme", "gradient_splitting"]),
    ("hamiltonian", &["kind", "eta", "nu", "drifts", "diffusions", "product", "controls"]),
    ("initial", &["kind", "center", "width", "height", "left", "right", "position", "eta", "nu", "s", "time", "path"]),
    ("flux", &["kind", "range", "speed", "path"]),
    ("norm", &["radius", "triple", "tol_rel"]),
];

/// Keys whose value is a file path relative to the config file.
const PATH_KEYS: &[(&str, &str)] = &[("initial", "path"), ("flux", "path")];

/// Largest lattice the command-line solvers accept.
pub const MAX_NODES: usize = 20_000_000;

/// Parsed configuration, kept as text so it can be hashed and written back.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    base_dir: PathBuf,
}

fn normalize(value: &str) -> String {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    parts.join(", ")
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, dir)
    }

    /// Parse config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        let mut cfg = RunConfig { sections: BTreeMap::new(), base_dir: base_dir.into() };
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if props.iter().next().is_some() {
                    return Err(Error::Config("keys before the first [section] header".into()));
                }
                continue;
            };
            for (k, v) in props.iter() {
                cfg.set(section, k, v)?;
            }
        }
        cfg.check_paths()?;
        Ok(cfg)
    }

    /// Insert or replace one value, checking it against the schema.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let (section, key) = (section.trim(), key.trim());
        let keys = SCHEMA
            .iter()
            .find(|(s, _)| *s == section)
            .ok_or_else(|| Error::Config(format!("unknown section [{section}]")))?
            .1;
        if !keys.contains(&key) {
            return Err(Error::Config(format!("unknown key '{key}' in [{section}]")));
        }
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), normalize(value));
        Ok(())
    }

    fn check_paths(&self) -> Result<()> {
        for (s, k) in PATH_KEYS {
            if let Some(p) = self.path(s, k) {
                if !p.is_file() {
                    return Err(Error::Config(format!("[{s}] {k}: no such file {}", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.get(section, key).map(|p| self.base_dir.join(p))
    }

    fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => parse_f64(section, key, v),
        }
    }

    fn f64_req(&self, section: &str, key: &str) -> Result<f64> {
        let v = self.get(section, key).ok_or_else(|| Error::Config(format!("[{section}] {key} is required")))?;
        parse_f64(section, key, v)
    }

    fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("[{section}] {key}: expected an integer, got '{v}'"))),
        }
    }

    fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(Error::Config(format!("[{section}] {key}: expected a boolean, got '{v}'"))),
        }
    }

    fn list_or(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some("") => Ok(Vec::new()),
            Some(v) => v.split(',').map(|x| parse_f64(section, key, x.trim())).collect(),
        }
    }

    /// Canonical text: sorted sections and keys, normalized lists.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        for (s, props) in &self.sections {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("[{s}]\n"));
            for (k, v) in props {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    /// Hex SHA-256 of the canonical text and referenced file contents.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_ini().as_bytes());
        for (s, k) in PATH_KEYS {
            if let Some(p) = self.path(s, k) {
                h.update(format!("\n#{s}.{k}\n").as_bytes());
                if let Ok(bytes) = std::fs::read(&p) {
                    h.update(&bytes);
                }
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn verify_options(&self) -> Result<VerifyOptions> {
        let seed = match self.get("run", "seed") {
            None => DEFAULT_SEED,
            Some(v) => parse_seed(v)?,
        };
        let trials = self.usize_or("run", "trials", DEFAULT_TRIALS)?;
        if !(1..=10_000).contains(&trials) {
            return Err(Error::Config(format!("[run] trials must be in 1..=10000, got {trials}")));
        }
        let o = VerifyOptions {
            seed,
            trials,
            h_scale: self.f64_or("run", "h_scale", 1.0)?,
            tolerance_scale: self.f64_or("run", "tolerance_scale", 1.0)?,
        };
        o.validate()?;
        if o.h_scale > 16.0 {
            return Err(Error::Config(format!("[run] h_scale must be at most 16, got {}", o.h_scale)));
        }
        Ok(o)
    }

    /// Suites from `[run] suite`, every suite when absent.
    pub fn suites(&self) -> Result<Vec<Suite>> {
        parse_suites(self.get("run", "suite").unwrap_or("default"))
    }

    pub fn scheme(&self) -> Result<SchemeConfig> {
        let flux = match self.get("time", "flux_scheme").unwrap_or("engquist-osher") {
            "engquist-osher" => FluxScheme::EngquistOsher,
            "godunov" => FluxScheme::Godunov,
            other => return Err(Error::Config(format!("[time] flux_scheme: unknown scheme '{other}'"))),
        };
        let cfg = SchemeConfig {
            dt: self.get("time", "dt").map(|v| parse_f64("time", "dt", v)).transpose()?,
            cfl_safety: self.f64_or("time", "cfl_safety", 0.9)?,
            n_theta: self.usize_or("time", "n_theta", 8)?,
            flux,
            gradient_splitting: self.bool_or("time", "gradient_splitting", false)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `(t_final, snapshot times)`; snapshots default to `t_final` alone.
    pub fn times(&self) -> Result<(f64, Vec<f64>)> {
        let t = self.f64_req("time", "t_final")?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("[time] t_final must be nonnegative, got {t}")));
        }
        let snaps = self.list_or("time", "snapshots", &[t])?;
        if snaps.windows(2).any(|w| w[1] < w[0]) || snaps.iter().any(|&s| !(0.0..=t).contains(&s)) {
            return Err(Error::Config("[time] snapshots must be sorted and lie in [0, t_final]".into()));
        }
        Ok((t, snaps))
    }

    /// `[grid] dim`, 1 when absent.
    pub fn dim(&self) -> Result<usize> {
        match self.usize_or("grid", "dim", 1)? {
            d @ (1 | 2) => Ok(d),
            d => Err(Error::Config(format!("[grid] dim must be 1 or 2, got {d}"))),
        }
    }

    /// Empty lattice described by `[grid]`.
    pub fn grid(&self) -> Result<GridField> {
        let dim = self.dim()?;
        let lo = self.f64_req("grid", "lo")?;
        let hi = self.f64_req("grid", "hi")?;
        let h = self.f64_req("grid", "h")?;
        if !(hi > lo && h > 0.0 && h <= hi - lo) {
            return Err(Error::Config(format!("[grid] needs lo < hi and 0 < h <= hi - lo, got {lo}, {hi}, {h}")));
        }
        let n = ((hi - lo) / h).round() as usize + 1;
        if n.pow(dim as u32) > MAX_NODES {
            return Err(Error::Config(format!("[grid] {n}^{dim} nodes exceed the limit of {MAX_NODES}")));
        }
        let boundary = match self.get("grid", "boundary").unwrap_or("constant") {
            "constant" => Boundary::ConstantExtension,
            "periodic" => Boundary::Periodic,
            other => return Err(Error::Config(format!("[grid] boundary: unknown policy '{other}'"))),
        };
        let f = if dim == 1 { GridField::from_fn_1d(lo, hi, h, |_| 0.0) } else { GridField::from_fn_2d(lo, hi, h, |_, _| 0.0) };
        Ok(f.with_boundary(boundary))
    }

    /// Initial data from `[initial]`, sampled on `[grid]` unless read from a file.
    pub fn initial(&self) -> Result<GridField> {
        let kind = self.get("initial", "kind").ok_or_else(|| Error::Config("[initial] kind is required".into()))?;
        if kind == "csv" {
            let p = self.path("initial", "path").ok_or_else(|| Error::Config("[initial] path is required for csv".into()))?;
            let f = read_csv(&p)?;
            return Ok(match self.get("grid", "boundary") {
                Some("periodic") => f.with_boundary(Boundary::Periodic),
                _ => f,
            });
        }
        let grid = self.grid()?;
        let d = grid.dim();
        let c = self.list_or("initial", "center", &[0.0, 0.0])?;
        let center = [c.first().copied().unwrap_or(0.0), c.get(1).copied().unwrap_or(0.0)];
        let width = self.f64_or("initial", "width", 1.0)?;
        let height = self.f64_or("initial", "height", 1.0)?;
        if !(width > 0.0) {
            return Err(Error::Config(format!("[initial] width must be positive, got {width}")));
        }
        let dist = |x: [f64; 2]| (x[0] - center[0]).hypot(if d == 2 { x[1] - center[1] } else { 0.0 });
        let sample = |g: &dyn Fn([f64; 2]) -> f64| grid.with_values(grid.coords().map(g).collect());
        Ok(match kind {
            "constant" => sample(&|_| height),
            "tent" => sample(&|x| height * (1.0 - dist(x) / width).max(0.0)),
            "indicator" => sample(&|x| if dist(x) <= width { height } else { 0.0 }),
            "gaussian" => sample(&|x| height * (-0.5 * (dist(x) / width).powi(2)).exp()),
            "delta" => {
                let mut f = grid.clone();
                let k = f.nearest_index(center);
                f.values_mut()[k] = height;
                f
            }
            "bump" => MollifierSpec::space(width)?.on_grid(&grid, center).map(|v| height * v),
            "riemann" => {
                let left = self.f64_req("initial", "left")?;
                let right = self.f64_req("initial", "right")?;
                let pos = self.f64_or("initial", "position", 0.0)?;
                sample(&|x| if x[0] < pos { left } else { right })
            }
            "profile" => {
                let p = Profile::EtaNu {
                    eta: self.f64_or("initial", "eta", 1.0)?,
                    nu: self.f64_or("initial", "nu", 1.0)?,
                    s: self.f64_or("initial", "s", 0.0)?,
                };
                let t = self.f64_req("initial", "time")?;
                sample(&|x| profile_eval(&p, [dist(x), 0.0], t))
            }
            other => return Err(Error::Config(format!("[initial] kind: unknown generator '{other}'"))),
        })
    }

    pub fn hamiltonian(&self, dim: usize) -> Result<Hamiltonian> {
        let kind = self.get("hamiltonian", "kind").ok_or_else(|| Error::Config("[hamiltonian] kind is required".into()))?;
        Ok(match kind {
            "eikonal" => Hamiltonian::Eikonal,
            "plus-laplacian" => Hamiltonian::PlusLaplacian1d,
            "model-norm" => Hamiltonian::ModelNorm,
            "eta-nu" => Hamiltonian::EtaNu { eta: self.f64_req("hamiltonian", "eta")?, nu: self.f64_req("hamiltonian", "nu")? },
            "controlled" => Hamiltonian::Controlled(self.controls(dim)?),
            "dual" => Hamiltonian::Controlled(dual_operator(&self.flux()?)?),
            other => return Err(Error::Config(format!("[hamiltonian] kind: unknown Hamiltonian '{other}'"))),
        })
    }

    /// Control list from `drifts`/`diffusions` (1-D) or `controls` groups
    /// `b a; b a` (1-D) and `bx by axx axy ayy; ...` (2-D).
    fn controls(&self, dim: usize) -> Result<ControlledOperator> {
        if let Some(groups) = self.get("hamiltonian", "controls") {
            let width = if dim == 1 { 2 } else { 5 };
            let mut out = Vec::new();
            for g in groups.split(';').map(str::trim).filter(|g| !g.is_empty()) {
                let xs: Vec<f64> = g
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_f64("hamiltonian", "controls", s))
                    .collect::<Result<_>>()?;
                if xs.len() != width {
                    return Err(Error::Config(format!("[hamiltonian] controls: '{g}' needs {width} numbers in {dim}-d")));
                }
                out.push(if dim == 1 {
                    Control::scalar(xs[0], xs[1])
                } else {
                    Control::new([xs[0], xs[1]], Sym2::new(xs[2], xs[3], xs[4]))
                });
            }
            return ControlledOperator::new(dim, out);
        }
        if dim != 1 {
            return Err(Error::Config("[hamiltonian] 2-d operators need the controls key".into()));
        }
        let b = self.list_or("hamiltonian", "drifts", &[0.0])?;
        let a = self.list_or("hamiltonian", "diffusions", &[0.0])?;
        let pairs: Vec<(f64, f64)> = if self.bool_or("hamiltonian", "product", true)? {
            b.iter().flat_map(|&bi| a.iter().map(move |&ai| (bi, ai))).collect()
        } else {
            if a.len() != b.len() {
                return Err(Error::Config("[hamiltonian] drifts and diffusions differ in length".into()));
            }
            b.iter().copied().zip(a.iter().copied()).collect()
        };
        ControlledOperator::scalar(&pairs)
    }

    pub fn flux(&self) -> Result<FluxModel> {
        let kind = self.get("flux", "kind").ok_or_else(|| Error::Config("[flux] kind is required".into()))?;
        if kind == "csv" {
            let p = self.path("flux", "path").ok_or_else(|| Error::Config("[flux] path is required for csv".into()))?;
            return FluxModel::from_csv(p);
        }
        let r = self.list_or("flux", "range", &[0.0, 1.0])?;
        let [m, big_m] = r[..] else {
            return Err(Error::Config("[flux] range needs two values".into()));
        };
        if !(big_m > m) {
            return Err(Error::Config(format!("[flux] range must be increasing, got {m}, {big_m}")));
        }
        Ok(match kind {
            "burgers" => FluxModel::burgers(m, big_m),
            "burgers-porous" => FluxModel::burgers_porous(m, big_m),
            "transport" => FluxModel::transport(self.f64_or("flux", "speed", 1.0)?, m, big_m),
            "heat" => FluxModel::heat(m, big_m),
            other => return Err(Error::Config(format!("[flux] kind: unknown flux '{other}'"))),
        })
    }

    /// `(window radius, whether to compute the triple norm, tol_rel)`.
    pub fn norm(&self) -> Result<(f64, bool, f64)> {
        let r = self.f64_or("norm", "radius", 1.0)?;
        if !(r > 0.0) {
            return Err(Error::Config(format!("[norm] radius must be positive, got {r}")));
        }
        Ok((r, self.bool_or("norm", "triple", false)?, self.f64_or("norm", "tol_rel", 1e-3)?))
    }
}

fn parse_f64(section: &str, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|_| Error::Config(format!("[{section}] {key}: expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("[{section}] {key}: value must be finite")));
    }
    Ok(x)
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(v: &str) -> Result<u64> {
    let v = v.trim();
    let r = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse(),
    };
    r.map_err(|_| Error::Config(format!("seed must be an unsigned integer, got '{v}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
[grid]
lo = -1
hi =  1
h = 0.25

[time]
t_final = 0.5
snapshots = 0,0.25,   0.5

[hamiltonian]
kind = eikonal

[initial]
kind = tent
width = 0.5
";

    #[test]
    fn round_trip_keeps_the_hash() {
        let a = RunConfig::parse(SAMPLE, ".").unwrap();
        let b = RunConfig::parse(&a.to_ini(), ".").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.get("time", "snapshots"), Some("0, 0.25, 0.5"));
    }

    #[test]
    fn hash_tracks_values() {
        let a = RunConfig::parse(SAMPLE, ".").unwrap();
        let mut b = a.clone();
        b.set("run", "seed", "7").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(matches!(RunConfig::parse("[grid]\nlo = 0\nspacing = 1\n", "."), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("[mesh]\nh = 1\n", "."), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("h = 1\n", "."), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("[initial]\nkind = csv\npath = /nonexistent.csv\n", "."), Err(Error::Config(_))));
    }

    #[test]
    fn builds_problem_pieces() {
        let c = RunConfig::parse(SAMPLE, ".").unwrap();
        let f = c.initial().unwrap();
        assert_eq!(f.len(), 9);
        assert_eq!(f.max_value(), 1.0);
        assert_eq!(c.hamiltonian(1).unwrap(), Hamiltonian::Eikonal);
        assert_eq!(c.times().unwrap(), (0.5, vec![0.0, 0.25, 0.5]));
        assert_eq!(c.scheme().unwrap(), SchemeConfig::default());
    }

    #[test]
    fn product_controls() {
        let c = RunConfig::parse("[hamiltonian]\nkind = controlled\ndrifts = 1, 3\ndiffusions = 2, 5\n", ".").unwrap();
        let Hamiltonian::Controlled(op) = c.hamiltonian(1).unwrap() else { panic!() };
        assert_eq!(op.controls().len(), 4);
        let c2 = RunConfig::parse("[hamiltonian]\nkind = controlled\ncontrols = 0 0 1 0 2; 0 0 2 0 1\n", ".").unwrap();
        let Hamiltonian::Controlled(op2) = c2.hamiltonian(2).unwrap() else { panic!() };
        assert_eq!(op2.dim(), 2);
    }

    #[test]
    fn seeds_parse_hex_and_decimal() {
        assert_eq!(parse_seed("0xD0A1").unwrap(), DEFAULT_SEED);
        assert_eq!(parse_seed("53409").unwrap(), DEFAULT_SEED);
        assert!(parse_seed("-1").is_err());
    }
}

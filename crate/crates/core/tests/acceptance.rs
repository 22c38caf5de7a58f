//! Acceptance run: the default verification suite plus direct oracle checks,
//! one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use intstab_core::report::strip_timestamp;
use intstab_core::verify::VerifyOptions;
use intstab_core::{evolve, GridField, Hamiltonian, HjbProblem, Report, SchemeConfig, Suite, VerificationRecord, Verifier};

type Results = Vec<(Suite, Vec<VerificationRecord>)>;

struct Run {
    results: Results,
    json: String,
    wall: Duration,
}

fn run_default(options: VerifyOptions, threads: usize) -> Run {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    let start = Instant::now();
    let results = pool.install(|| Verifier::new(options).and_then(|v| v.run(&Suite::ALL))).expect("suites run");
    let wall = start.elapsed();
    let json = Report::new("acceptance", options.seed, results.clone()).to_json();
    Run { results, json: strip_timestamp(&json), wall }
}

struct Outcome {
    failed: usize,
}

impl Outcome {
    fn report(&mut self, id: &str, ok: bool, what: &str, detail: String) {
        println!("criterion {id:>2} {} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.failed += usize::from(!ok);
    }
}

fn suite(r: &Results, s: Suite) -> &[VerificationRecord] {
    &r.iter().find(|(x, _)| *x == s).expect("suite ran").1
}

fn named<'a>(recs: &'a [VerificationRecord], name: &str) -> Vec<&'a VerificationRecord> {
    recs.iter().filter(|r| r.name == name).collect()
}

fn seconds(recs: &[VerificationRecord]) -> f64 {
    recs.iter().map(|r| r.runtime.as_secs_f64()).sum()
}

fn all_pass(recs: &[VerificationRecord]) -> bool {
    !recs.is_empty() && recs.iter().all(VerificationRecord::passed)
}

fn min_slack(recs: &[&VerificationRecord]) -> f64 {
    recs.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// `U(r) = erfc(r/2)`.
fn u(r: f64) -> f64 {
    libm::erfc(0.5 * r)
}

/// Sup-norm error of the split scheme against `U((|x| − ηt)⁺/√(νt))`, η = ν = 1,
/// started from the exact profile at `t₀ = 0.25` and marched to `t = 1`.
fn self_similar_error(h: f64) -> f64 {
    let exact = |x: f64, t: f64| u((x.abs() - t).max(0.0) / t.sqrt());
    let init = GridField::from_fn_1d(-12.0, 12.0, h, |x| exact(x, 0.25));
    let cfg = SchemeConfig { gradient_splitting: true, ..Default::default() };
    let p = HjbProblem::new(Hamiltonian::EtaNu { eta: 1.0, nu: 1.0 }, init).unwrap();
    let f = evolve(&p, 0.75, &cfg, &[0.75]).unwrap().remove(0);
    f.coords().zip(f.values()).map(|(x, v)| (v - exact(x[0], 1.0)).abs()).fold(0.0, f64::max)
}

fn criteria(r: &Results, out: &mut Outcome) {
    // 1
    let start = Instant::now();
    let (e1, e2) = (self_similar_error(1.0 / 160.0), self_similar_error(1.0 / 320.0));
    let secs = start.elapsed().as_secs_f64();
    let recs = suite(r, Suite::SelfSimilar);
    out.report(
        "1",
        e1 <= 2e-2 && e1 / e2 >= 1.3 && secs < 30.0 && all_pass(recs),
        "self-similar oracle",
        format!("error {e1:.3e} <= 2e-2, ratio {:.2} >= 1.3, {secs:.1} s < 30 s, suite records pass", e1 / e2),
    );

    // 2
    let recs = suite(r, Suite::Eikonal);
    let budget_ok = recs.iter().all(|x| close(x.rhs, 5.0 * x.params["h"] * x.params["lip"], 1e-12) && x.params["h"] == 0.005);
    let worst = recs.iter().map(|x| x.lhs / x.rhs).fold(0.0, f64::max);
    out.report(
        "2",
        recs.len() == 20 && all_pass(recs) && budget_ok && seconds(recs) < 10.0,
        "eikonal equals dilation",
        format!("{} fields, worst L1 / (5 h Lip) = {worst:.3}, {:.2} s < 10 s", recs.len(), seconds(recs)),
    );

    // 3
    let recs = suite(r, Suite::Window);
    let ineq = named(recs, "window-inequality");
    let delta = named(recs, "window-delta");
    let ineq_ok = ineq.iter().all(|x| {
        let (rr, eps) = (x.params["r"], x.params["eps"]);
        x.params["functions"] == 200.0 && x.lhs <= (rr + eps) / rr + 1e-12
    });
    let delta_ok = delta.iter().all(|x| close(x.params["ratio"], 1.0 + x.params["eps"], 2.0 * x.params["h"]));
    out.report(
        "3",
        ineq.len() == 3 && delta.len() == 3 && ineq_ok && delta_ok && all_pass(recs),
        "window inequality",
        format!("200 step functions x eps in {{0.25, 0.5, 1}}, worst ratio {:.4}, delta within 2h", ineq.iter().map(|x| x.lhs).fold(0.0, f64::max)),
    );

    // 4
    let recs = suite(r, Suite::Seminorms);
    let conv = named(recs, "seminorm-conv-product")[0].params["value"];
    let diff = named(recs, "seminorm-diff-product")[0].params["value"];
    let inv = recs.iter().filter(|x| x.name.starts_with("seminorm-invariance")).map(|x| x.lhs).fold(0.0, f64::max);
    out.report(
        "4",
        close(conv, (1.0f64 - 3.0).abs() / 2.0, 1e-9) && close(diff, 5.0 - 2.0, 1e-8) && inv <= 1e-8 && all_pass(recs),
        "seminorm fixtures",
        format!("conv {conv}, diff {diff}, invariance drift {inv:.1e}"),
    );

    // 5
    let recs = suite(r, Suite::Contraction);
    let hjb = named(recs, "hjb-linf-contraction");
    let claw = named(recs, "claw-l1-contraction");
    out.report(
        "5",
        hjb.len() == 50 && claw.len() == 50 && min_slack(&hjb) >= -1e-12 && min_slack(&claw) >= -1e-12,
        "discrete contraction",
        format!("min slack HJB {:.2e}, claw {:.2e} over 50 pairs each", min_slack(&hjb), min_slack(&claw)),
    );

    // 6
    let recs = suite(r, Suite::Weighted);
    let rel_ok = recs.iter().all(|x| x.slack >= -0.05 * x.rhs);
    let pairs = recs.iter().map(|x| x.params["trial"] as usize).max().map_or(0, |m| m + 1);
    out.report(
        "6",
        all_pass(recs) && rel_ok && pairs == 50 && seconds(recs) < 300.0,
        "weighted L1 contraction",
        format!("{} records over {pairs} pairs, slack >= -0.05 RHS, {:.1} s < 300 s", recs.len(), seconds(recs)),
    );

    // 7
    let recs = suite(r, Suite::Duality);
    let shifted = recs.iter().filter(|x| x.params.get("s").is_some_and(|&s| s > 0.0)).count();
    out.report(
        "7",
        all_pass(recs) && shifted > 0,
        "duality and time-shifted form",
        format!("{} records ({shifted} shifted), all within the weighted tolerance", recs.len()),
    );

    // 8
    let recs = suite(r, Suite::ExpWeight);
    let rel_ok = recs.iter().all(|x| x.slack >= -0.05 * x.rhs);
    out.report(
        "8",
        all_pass(recs) && rel_ok,
        "exponential-weight contraction",
        format!("{} records, rate {:.4}, slack >= -0.05 RHS", recs.len(), recs.first().map_or(f64::NAN, |x| x.params["rate"])),
    );

    // 9
    let recs = suite(r, Suite::Modulus);
    let lower = named(recs, "modulus-lower-closed-form");
    let closed_ok = lower.iter().all(|x| close(x.params["lower"], 2.0 / PI.sqrt() * x.params["r"].sqrt(), 1e-6));
    let dominates = named(recs, "modulus-upper-dominates");
    let (xs, ys): (Vec<f64>, Vec<f64>) = lower.iter().map(|x| (x.params["r"].ln(), x.params["lower"].ln())).unzip();
    let slope = fit_slope(&xs, &ys);
    out.report(
        "9",
        lower.len() == 20 && closed_ok && dominates.len() == 20 && all_pass(recs) && (0.45..=0.55).contains(&slope),
        "modulus",
        format!("lower = (2/sqrt(pi)) sqrt(r) within 1e-6 at 20 points, upper >= lower, exponent {slope:.4}"),
    );

    // 10
    let recs = suite(r, Suite::Instability);
    let limit = named(recs, "instability-eikonal-limit")[0];
    let data = named(recs, "instability-eikonal-data")[0];
    let gaps = named(recs, "instability-nonpositive-discontinuous");
    let gap_ok = gaps.iter().all(|x| x.rhs >= 2.0 * 0.2 - 0.05) && gaps.len() == 4;
    let blow: Vec<f64> = named(recs, "instability-blowup-lower").iter().map(|x| x.rhs).collect();
    let blow_ok = blow.len() == 4 && blow.windows(2).all(|w| w[1] > w[0]) && blow[3] > 5.0 * blow[0];
    out.report(
        "10",
        close(limit.params["mass"], 1.0, 0.05) && data.lhs <= 0.02 && gap_ok && blow_ok && all_pass(recs),
        "instability demos",
        format!(
            "mass {:.4} (data {:.4}), min gap {:.4} >= 0.35, blow-up {:.3} -> {:.3}",
            limit.params["mass"],
            data.lhs,
            gaps.iter().map(|x| x.rhs).fold(f64::INFINITY, f64::min),
            blow[0],
            blow[blow.len() - 1]
        ),
    );

    // 11
    let recs = suite(r, Suite::Lip);
    let formula = named(recs, "lip-norm-formula");
    let lip_ok = formula.iter().all(|x| {
        let (eta, nu, t, h) = (x.params["eta"], x.params["nu"], x.params["t"], x.params["h"]);
        // ‖U((|x|−ηt)⁺/√(νt))‖_int / 2.
        let exact = 1.0 + eta * t + 2.0 / PI.sqrt() * (nu * t).sqrt();
        let lower_ok = x.params["ratio"] >= 1.0 + eta * t - 3.0 * h;
        close(x.params["ratio"], exact, 3.0 * h) && lower_ok
    });
    let key = formula.iter().find(|x| x.params["eta"] == 1.0 && x.params["nu"] == 0.0).map(|x| x.params["ratio"]);
    out.report(
        "11",
        formula.len() == 4 && lip_ok && all_pass(recs),
        "Lipschitz lower bound",
        format!("eta=1 nu=0 ratio {:.4} >= 1.25 - 3h, all (eta, nu) match the closed form within 3h", key.unwrap_or(f64::NAN)),
    );

    // 12
    let recs = suite(r, Suite::Quasicontraction);
    let bound_ok = recs.iter().all(|x| {
        let rate = x.params["eta"].max(x.params["nu"]);
        // rhs = e^{rate t}|||φ₀−ψ₀|||; the criterion allows a factor 1.05.
        x.lhs <= 1.05 * x.rhs && x.rhs > 0.0 && rate <= 1.0
    });
    let pairs = recs.iter().map(|x| x.params["trial"] as usize).max().map_or(0, |m| m + 1);
    out.report(
        "12",
        recs.len() == 160 && pairs == 20 && bound_ok && all_pass(recs),
        "quasicontraction",
        format!("{} records, worst ratio {:.4} <= 1.05", recs.len(), recs.iter().map(|x| x.lhs / x.rhs).fold(0.0, f64::max)),
    );

    // 13
    let recs = suite(r, Suite::Kato);
    let kato = named(recs, "kato-residual");
    out.report(
        "13",
        kato.len() == 20 && min_slack(&kato) >= -0.02 && kato.iter().all(|x| x.params["h"] == 1.0 / 200.0),
        "Kato residual",
        format!("min residual {:.3e} >= -0.02 over 20 pairs at h = 1/200", min_slack(&kato)),
    );
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Records that pass on the coarse lattice must still pass on the fine one.
fn refinement_flips(coarse: &Results, fine: &Results) -> Vec<String> {
    let mut by_key: BTreeMap<(String, usize), &VerificationRecord> = BTreeMap::new();
    for (s, recs) in fine {
        for (k, rec) in recs.iter().enumerate() {
            by_key.insert((s.name().to_string(), k), rec);
        }
    }
    let mut flips = Vec::new();
    for (s, recs) in coarse {
        for (k, rec) in recs.iter().enumerate() {
            match by_key.get(&(s.name().to_string(), k)) {
                Some(f) if f.name == rec.name => {
                    if rec.passed() && !f.passed() {
                        flips.push(format!("{}#{k} {}", s.name(), rec.name));
                    }
                }
                _ => flips.push(format!("{}#{k} {} has no fine counterpart", s.name(), rec.name)),
            }
        }
    }
    flips
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut out = Outcome { failed: 0 };
    let base = run_default(VerifyOptions::default(), 1);
    criteria(&base.results, &mut out);

    let other = run_default(VerifyOptions::default(), 4);
    let total = base.results.iter().map(|(_, r)| r.len()).sum::<usize>();
    let identical = base.json == other.json;
    out.report(
        "14",
        identical && base.wall < Duration::from_secs(15 * 60),
        "determinism",
        format!(
            "{total} records, report identical across runs with 1 and 4 threads: {identical}, default suite {:.1} s < 900 s",
            base.wall.as_secs_f64()
        ),
    );

    let coarse = run_default(VerifyOptions { h_scale: 2.0, ..Default::default() }, 1);
    let flips = refinement_flips(&coarse.results, &base.results);
    let line = format!(
        "refinement    {} halving h flips no pass to fail: {} flips{}",
        if flips.is_empty() { "PASS" } else { "FAIL" },
        flips.len(),
        flips.first().map(|f| format!(", first {f}")).unwrap_or_default()
    );
    println!("{line}");
    out.failed += usize::from(!flips.is_empty());

    println!("acceptance: {} of 15 checks failed", out.failed);
    if out.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

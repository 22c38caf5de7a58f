//! Checks that need no time stepping: seminorm fixtures and the window bound.

use super::fixtures::{random_steps, seeded_rng};
use super::VerifyOptions;
use crate::controls::{seminorm_conv, seminorm_diff, Control, ControlledOperator, Minimizer};
use crate::error::Result;
use crate::field::{check_window_inequality, norm_int, GridField};
use crate::linalg::Sym2;
use crate::record::VerificationRecord;

fn seminorms(op: &ControlledOperator) -> Result<(f64, f64)> {
    Ok((seminorm_conv(op).value, seminorm_diff(op)?.value))
}

/// The product family `{1, 3} × {2, 5}`, its closed forms, and invariance
/// under duplication, permutation and interior points.
pub fn check_seminorm_fixtures() -> Result<Vec<VerificationRecord>> {
    let base: Vec<(f64, f64)> = [1.0, 3.0].iter().flat_map(|&b| [2.0, 5.0].map(|a| (b, a))).collect();
    let op = ControlledOperator::scalar(&base)?;
    let (conv, diff) = seminorms(&op)?;
    let mut out = vec![
        VerificationRecord::new("seminorm-conv-product", "product control set", (conv - 1.0).abs(), 0.0, 1e-9, "1e-9")
            .param("value", conv),
        VerificationRecord::new("seminorm-diff-product", "product control set", (diff - 3.0).abs(), 0.0, 1e-8, "1e-8")
            .param("value", diff),
    ];

    let mut dup = base.clone();
    dup.extend_from_slice(&base[..2]);
    let mut perm = base.clone();
    perm.reverse();
    let mut interior = base.clone();
    interior.push((2.0, 3.5));
    for (name, pairs) in [("duplicate", dup), ("permute", perm), ("interior", interior)] {
        let (c, d) = seminorms(&ControlledOperator::scalar(&pairs)?)?;
        let dev = (c - conv).abs().max((d - diff).abs());
        out.push(VerificationRecord::new(format!("seminorm-invariance-{name}"), "hull invariance", dev, 0.0, 1e-8, "1e-8"));
    }

    let square = ControlledOperator::new(
        2,
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]].map(|b| Control::new(b, Sym2::ZERO)).to_vec(),
    )?;
    let c = seminorm_conv(&square).value;
    out.push(
        VerificationRecord::new("seminorm-conv-square", "minimum enclosing ball", (c - 0.5f64.sqrt()).abs(), 0.0, 1e-9, "1e-9")
            .param("value", c),
    );
    let diag = ControlledOperator::new(
        2,
        vec![Control::new([0.0; 2], Sym2::diag(1.0, 2.0)), Control::new([0.0; 2], Sym2::diag(2.0, 1.0))],
    )?;
    let res = seminorm_diff(&diag)?;
    let tr_a0 = match res.minimizer {
        Minimizer::Diffusion(a0) => a0.trace(),
        Minimizer::Drift(_) => f64::NAN,
    };
    // a₀ = I: T* = 2 and the seminorm is 3 − 2.
    out.push(
        VerificationRecord::new("seminorm-diff-diagonal", "Loewner lower bound", (res.value - 1.0).abs().max((tr_a0 - 2.0).abs()), 0.0, 1e-8, "1e-8")
            .param("value", res.value)
            .param("trace_a0", tr_a0),
    );
    Ok(out)
}

/// `∫ sup_{Q_{r+ε}} |f| / ∫ sup_{Q_r} |f| ≤ (r+ε)/r` over random step
/// functions (one record per `ε`, worst case), and attainment by a delta.
pub fn check_window_suite(o: &VerifyOptions) -> Result<Vec<VerificationRecord>> {
    let h = o.h(0.01);
    let r = 1.0;
    let n_fns = 4 * o.trials;
    let fields: Vec<GridField> = (0..n_fns)
        .map(|k| {
            let mut rng = seeded_rng(o.seed, "window", k);
            let s = random_steps(&mut rng, -2.0, 2.0, 8, -1.0, 1.0, 0.0);
            GridField::from_fn_1d(-5.0, 5.0, h, |x| s.eval(x))
        })
        .collect();
    let mut out = Vec::new();
    for eps in [0.25, 0.5, 1.0] {
        let bound = (r + eps) / r;
        let mut worst = 0.0f64;
        let mut failures = 0usize;
        for f in &fields {
            let rec = check_window_inequality(f, r, eps);
            worst = worst.max(rec.params["ratio"]);
            failures += usize::from(!rec.passed());
        }
        out.push(
            VerificationRecord::new("window-inequality", "window enlargement bound", worst, bound, 1e-12, "1e-12")
                .param("r", r)
                .param("eps", eps)
                .param("h", h)
                .param("functions", n_fns as f64)
                .param("failures", failures as f64),
        );

        let mut delta = GridField::from_fn_1d(-5.0, 5.0, h, |_| 0.0);
        let k0 = delta.nearest_index([0.0, 0.0]);
        delta.values_mut()[k0] = 1.0;
        let ratio = norm_int(&delta, r + eps).value / norm_int(&delta, r).value;
        out.push(
            VerificationRecord::new("window-delta", "window bound is attained", (ratio - bound).abs(), 0.0, 2.0 * h, "2 h")
                .param("eps", eps)
                .param("ratio", ratio)
                .param("h", h),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_pass() {
        for r in check_seminorm_fixtures().unwrap() {
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn window_suite_passes_small() {
        let o = VerifyOptions { trials: 2, ..Default::default() };
        let recs = check_window_suite(&o).unwrap();
        assert_eq!(recs.len(), 6);
        assert!(recs.iter().all(|r| r.passed()), "{recs:?}");
    }
}

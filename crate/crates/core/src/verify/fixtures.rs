//! Seeded random data for the randomized suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for trial `trial` of the experiment `label`; independent of the
/// order in which trials run.
pub fn seeded_rng(seed: u64, label: &str, trial: usize) -> ChaCha8Rng {
    // FNV-1a of the label keeps streams of different experiments apart.
    let mut key = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        key ^= b as u64;
        key = key.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ key);
    rng.set_stream(trial as u64);
    rng
}

/// Knots `(x, y)` of a continuous piecewise-linear function on `[-1, 1]`,
/// zero at both ends, with values in `[0, amp]`.
pub fn random_piecewise_linear(rng: &mut impl Rng, pieces: usize, amp: f64) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> = (0..pieces.saturating_sub(1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    xs.sort_by(f64::total_cmp);
    let mut knots = vec![(-1.0, 0.0)];
    knots.extend(xs.into_iter().map(|x| (x, rng.gen_range(0.0..amp))));
    knots.push((1.0, 0.0));
    knots
}

/// Linear interpolation through `knots`, zero outside.
pub fn eval_piecewise_linear(knots: &[(f64, f64)], x: f64) -> f64 {
    if x <= knots[0].0 || x >= knots[knots.len() - 1].0 {
        return 0.0;
    }
    for w in knots.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            if x1 - x0 <= 0.0 {
                return y1;
            }
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    0.0
}

/// Largest slope of a piecewise-linear function.
pub fn lipschitz(knots: &[(f64, f64)]) -> f64 {
    knots
        .windows(2)
        .filter(|w| w[1].0 > w[0].0)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
        .fold(0.0, f64::max)
}

/// Piecewise-constant function: `values[k]` on `[breaks[k], breaks[k+1])`,
/// `outside` elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct Steps {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
    pub outside: f64,
}

impl Steps {
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.breaks[0] || x >= self.breaks[self.breaks.len() - 1] {
            return self.outside;
        }
        let k = self.breaks.partition_point(|&b| b <= x) - 1;
        self.values[k.min(self.values.len() - 1)]
    }
}

/// `pieces` random steps on `[a, b]` with values in `[lo, hi]`.
pub fn random_steps(rng: &mut impl Rng, a: f64, b: f64, pieces: usize, lo: f64, hi: f64, outside: f64) -> Steps {
    let mut inner: Vec<f64> = (0..pieces.saturating_sub(1)).map(|_| rng.gen_range(a..b)).collect();
    inner.sort_by(f64::total_cmp);
    let mut breaks = vec![a];
    breaks.extend(inner);
    breaks.push(b);
    let values = (0..pieces).map(|_| rng.gen_range(lo..=hi)).collect();
    Steps { breaks, values, outside }
}

//! Randomized audit of the causality property of an update operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, Default, Serialize)]
pub struct CausalityReport {
    pub trials: usize,
    /// Node evaluations where the property was actually tested.
    pub checks: usize,
    pub violations: usize,
    /// `(node, threshold, Λu, Λv)` of the first violation.
    pub witness: Option<(usize, f64, f64, f64)>,
}

/// Draws random `u`, a threshold `t` and a perturbation `v` that agrees with
/// `u` below `t`, then checks `(Λu)^{≤t} = (Λv)^{≤t}` on `probe` nodes
/// (sampled four per trial).
///
/// Values are uniform in `[0, scale]`, with one in ten set to `+∞`.
pub fn check_causality<F>(op: F, nodes: usize, probe: &[usize], scale: f64, trials: usize, seed: u64) -> CausalityReport
where
    F: Fn(usize, &[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CausalityReport { trials, ..Default::default() };
    let mut u = vec![0.0; nodes];
    let mut v = vec![0.0; nodes];
    for _ in 0..trials {
        for x in u.iter_mut() {
            *x = if rng.gen_bool(0.1) { f64::INFINITY } else { rng.gen_range(0.0..scale) };
        }
        let t = rng.gen_range(0.0..scale);
        for (a, b) in v.iter_mut().zip(&u) {
            *a = if *b >= t {
                if rng.gen_bool(0.2) {
                    f64::INFINITY
                } else {
                    t + rng.gen_range(0.0..scale)
                }
            } else {
                *b
            };
        }
        for _ in 0..4 {
            let p = if probe.is_empty() { rng.gen_range(0..nodes) } else { probe[rng.gen_range(0..probe.len())] };
            let (lu, lv) = (op(p, &u), op(p, &v));
            if lu > t && lv > t {
                continue;
            }
            report.checks += 1;
            if (lu - lv).abs() > 1e-12 * (1.0 + lu.abs().min(lv.abs())) || lu.is_infinite() != lv.is_infinite() {
                report.violations += 1;
                report.witness.get_or_insert((p, t, lu, lv));
            }
        }
    }
    report
}

//! Seeded Monte Carlo sampling of measurement schemes.
//!
//! Random numbers come from SplitMix64. A run is cut into fixed-size blocks
//! and every block draws from its own generator, seeded by mixing
//! `(seed, stream, block)` through the SplitMix64 finalizer. Results are
//! therefore identical for any number of worker threads.
//!
//! A uniform variate is `(x >> 11)·2⁻⁵³` for a raw draw `x`. Each round uses
//! two variates: the first picks the true state (Ψ₀ if below its prior), the
//! second picks an outcome cell by inverse CDF over cells in lexicographic
//! order `(a, b)`.

use std::collections::BTreeMap;

pub use rand_xoshiro::rand_core::Rng;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;

use crate::qlin::TwoQubitState;
use crate::scheme::{Label, Scheme};
use crate::states::StatePair;

/// Rounds per independently seeded block.
pub const BLOCK: u64 = 1 << 16;
/// Cell probabilities below this are sampled as exact zeros.
pub const SNAP_TOL: f64 = 1e-14;
/// Pass threshold of [`verify_scheme`].
pub const VERIFY_TOL: f64 = 1e-8;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        RngSpec { stream, ..self }
    }

    /// Generator for one block of rounds.
    pub fn block_rng(&self, block: u64) -> SplitMix64 {
        let k = mix64(self.seed ^ mix64(self.stream.wrapping_add(1).wrapping_mul(GAMMA)));
        let k = mix64(k ^ block.wrapping_add(1).wrapping_mul(GAMMA).rotate_left(17));
        SplitMix64::from_seed(k.to_le_bytes())
    }
}

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform variate in `[0, 1)` with 53 random bits.
pub fn uniform(rng: &mut impl Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Index drawn from `probs` by inverse CDF. The last non-zero cell absorbs
/// rounding so a draw never lands on a zero-probability cell.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Cell probabilities snapped below [`SNAP_TOL`].
pub fn snapped(mut probs: Vec<f64>) -> Vec<f64> {
    for p in probs.iter_mut() {
        if *p < SNAP_TOL {
            *p = 0.0;
        }
    }
    probs
}

/// Probability of every outcome cell `(a, b)` in lexicographic order.
pub fn outcome_distribution(scheme: &Scheme, state: &TwoQubitState) -> Vec<((usize, usize), f64)> {
    scheme
        .cells()
        .map(|(a, b, _)| ((a, b), scheme.cell_probability(a, b, state)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    #[serde(rename = "n")]
    pub n_rounds: u64,
    /// Counts keyed by true state (`"0"`, `"1"`) and reported label.
    pub counts: BTreeMap<String, BTreeMap<Label, u64>>,
    /// Counts per true state and outcome cell, cells in lexicographic order.
    #[serde(skip)]
    pub cell_counts: [Vec<u64>; 2],
    pub error_count: u64,
    pub fail_rate: f64,
    pub fail_rate_stderr: f64,
    pub seed: u64,
}

impl EmpiricalStats {
    pub fn count(&self, state: usize, label: Label) -> u64 {
        self.counts
            .get(&state.to_string())
            .and_then(|m| m.get(&label))
            .copied()
            .unwrap_or(0)
    }

    pub fn state_rounds(&self, state: usize) -> u64 {
        self.cell_counts[state].iter().sum()
    }
}

/// Samples `n` rounds of `scheme` on `pair`.
pub fn run_trials(scheme: &Scheme, pair: &StatePair, n: u64, rng: RngSpec) -> EmpiricalStats {
    let cells: Vec<(usize, usize, Label)> = scheme.cells().collect();
    let dists: [Vec<f64>; 2] = std::array::from_fn(|s| {
        snapped(
            cells
                .iter()
                .map(|&(a, b, _)| scheme.cell_probability(a, b, pair.state(s)))
                .collect(),
        )
    });
    let blocks = n.div_ceil(BLOCK);
    let cell_counts = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut gen = rng.block_rng(block);
            let len = BLOCK.min(n - block * BLOCK);
            let mut counts = [vec![0u64; cells.len()], vec![0u64; cells.len()]];
            for _ in 0..len {
                let state = if uniform(&mut gen) < pair.prior0 { 0 } else { 1 };
                let cell = sample_index(&dists[state], uniform(&mut gen));
                counts[state][cell] += 1;
            }
            counts
        })
        .reduce(
            || [vec![0u64; cells.len()], vec![0u64; cells.len()]],
            |mut x, y| {
                for s in 0..2 {
                    for (a, b) in x[s].iter_mut().zip(&y[s]) {
                        *a += b;
                    }
                }
                x
            },
        );

    let mut counts: BTreeMap<String, BTreeMap<Label, u64>> = BTreeMap::new();
    let mut error_count = 0;
    let mut fails = 0;
    for (s, row) in cell_counts.iter().enumerate() {
        let entry = counts.entry(s.to_string()).or_default();
        for label in [Label::S0, Label::S1, Label::Fail] {
            entry.insert(label, 0);
        }
        for (k, &cnt) in row.iter().enumerate() {
            let label = cells[k].2;
            *entry.get_mut(&label).expect("pre-filled") += cnt;
            match label.state() {
                Some(named) if named != s => error_count += cnt,
                None => fails += cnt,
                _ => {}
            }
        }
    }
    let (fail_rate, fail_rate_stderr) = if n == 0 {
        (0.0, 0.0)
    } else {
        let f = fails as f64 / n as f64;
        (f, (f * (1.0 - f) / n as f64).sqrt())
    };
    EmpiricalStats {
        n_rounds: n,
        counts,
        cell_counts,
        error_count,
        fail_rate,
        fail_rate_stderr,
        seed: rng.seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyReport {
    pub completeness_residual: f64,
    pub zero_error_residual: f64,
    pub p_f: f64,
    pub p_fidp: f64,
    pub pass: bool,
}

/// Completeness and zero-error residuals (max-norm, amplitude level) with
/// the scheme's failure probability.
pub fn verify_scheme(scheme: &Scheme, pair: &StatePair) -> VerifyReport {
    let completeness_residual = scheme.completeness_residual();
    let zero_error_residual = scheme.zero_error_residual(pair);
    let rep = scheme.failure_report(pair);
    VerifyReport {
        completeness_residual,
        zero_error_residual,
        p_f: rep.p_f,
        p_fidp: rep.p_fidp,
        pass: completeness_residual < VERIFY_TOL && zero_error_residual < VERIFY_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onefail;
    use crate::states::family;
    use crate::twofail;
    use crate::QubitVec;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn two_fail_distribution() {
        let pair = family::same_basis(PI / 6.0, PI / 3.0).unwrap();
        let scheme = twofail::optimize_same_basis(&pair).unwrap();
        let d = outcome_distribution(&scheme, &pair.psi0);
        let p: Vec<f64> = d.iter().map(|x| x.1).collect();
        assert_abs_diff_eq!(p[0], 1.0 - 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1] + p[2], 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[3], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn one_fail_distribution_at_quarter() {
        let pair = onefail::same_basis_pair(FRAC_PI_4).unwrap();
        let scheme = onefail::solve_one_fail_same_basis(FRAC_PI_4).unwrap();
        let d = outcome_distribution(&scheme, &pair.psi0);
        assert!(d[1].1 < 1e-15);
    }

    #[test]
    fn empty_run() {
        let pair = family::same_basis(PI / 6.0, PI / 3.0).unwrap();
        let scheme = twofail::optimize_same_basis(&pair).unwrap();
        let s = run_trials(&scheme, &pair, 0, RngSpec::new(1));
        assert_eq!(s.n_rounds, 0);
        assert_eq!(s.error_count, 0);
        assert_eq!(s.fail_rate, 0.0);
    }

    #[test]
    fn runs_are_reproducible() {
        let pair = family::same_basis(PI / 6.0, PI / 3.0).unwrap();
        let scheme = twofail::optimize_same_basis(&pair).unwrap();
        let a = run_trials(&scheme, &pair, 150_000, RngSpec::new(9));
        let b = run_trials(&scheme, &pair, 150_000, RngSpec::new(9));
        let c = run_trials(&scheme, &pair, 150_000, RngSpec::new(9).with_stream(1));
        assert_eq!(a, b);
        assert_ne!(a.cell_counts, c.cell_counts);
        assert_eq!(a.state_rounds(0) + a.state_rounds(1), 150_000);
    }

    #[test]
    fn inverse_cdf_skips_empty_cells() {
        assert_eq!(sample_index(&[0.5, 0.0, 0.5], 0.5), 2);
        assert_eq!(sample_index(&[0.5, 0.5, 0.0], 1.0 - 1e-17), 1);
        assert_eq!(sample_index(&[0.0, 1.0], 0.0), 1);
    }

    #[test]
    fn verify_detects_perturbation() {
        let pair = family::same_basis(PI / 6.0, PI / 3.0).unwrap();
        let mut scheme = twofail::optimize_same_basis(&pair).unwrap();
        assert!(verify_scheme(&scheme, &pair).pass);
        let v = scheme.ops_a[0].in_bra;
        let (c, s) = (1e-3f64.cos(), 1e-3f64.sin());
        let rot = QubitVec::new(v.0[0] * c - v.0[1] * s, v.0[0] * s + v.0[1] * c);
        scheme.ops_a[0] = crate::KrausOp::projector(rot);
        scheme.ops_a[1] = crate::KrausOp::projector(rot.perp());
        let rep = verify_scheme(&scheme, &pair);
        assert!(rep.zero_error_residual > 1e-4);
        assert!(!rep.pass);
        scheme.ops_a.pop();
        let rep = verify_scheme(&scheme, &pair);
        assert!(rep.completeness_residual > 0.5);
        assert!(!rep.pass);
    }
}

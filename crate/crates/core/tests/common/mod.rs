//! Test-side oracles, independent of the library's solvers.
#![allow(dead_code)]

use num_complex::Complex64;
use usd_core::{QubitVec, StatePair, TwoQubitState};

/// Plain Nelder–Mead on `f`, starting from `x0` with initial step `step`.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(x);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    for _ in 0..iters {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() < 1e-15 {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let xc = if fr < vals[n] { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (simplex[best].clone(), vals[best])
}

pub fn qubit(alpha: f64, phase: f64) -> QubitVec {
    QubitVec::new(Complex64::new(alpha.cos(), 0.0), Complex64::from_polar(alpha.sin(), phase))
}

/// Two-failure outcome probabilities for bases given by four angles
/// `(α, φ, β, χ)`: returns `(p_f, zero-error violation)`.
pub fn two_fail_eval(pair: &StatePair, x: &[f64]) -> (f64, f64) {
    let ra = qubit(x[0], x[1]);
    let rb = qubit(x[2], x[3]);
    let (rap, rbp) = (ra.perp(), rb.perp());
    let p = |a: &QubitVec, b: &QubitVec, s: &TwoQubitState| s.project(a, b).norm_sqr();
    let fail = |s: &TwoQubitState| p(&ra, &rbp, s) + p(&rap, &rb, s);
    let p_f = pair.prior0 * fail(&pair.psi0) + pair.prior1 * fail(&pair.psi1);
    let violation = p(&ra, &rb, &pair.psi1) + p(&rap, &rbp, &pair.psi0);
    (p_f, violation)
}

/// Grid-plus-refinement minimum of the two-failure `p_f` under a zero-error
/// penalty. Returns `(p_f, violation)` at the best point found.
pub fn brute_force_two_fail(pair: &StatePair, grid: usize) -> (f64, f64) {
    use std::f64::consts::PI;
    let pen = |mu: f64| {
        move |x: &[f64]| {
            let (p, v) = two_fail_eval(pair, x);
            p + mu * v
        }
    };
    let coarse = pen(1e3);
    let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
    let ang = |k: usize, span: f64| span * (k as f64 + 0.5) / grid as f64;
    for i in 0..grid {
        for j in 0..grid {
            for k in 0..grid {
                for l in 0..grid {
                    let x = vec![ang(i, PI / 2.0), ang(j, 2.0 * PI), ang(k, PI / 2.0), ang(l, 2.0 * PI)];
                    starts.push((coarse(&x), x));
                }
            }
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (f64::INFINITY, f64::INFINITY);
    for (_, x0) in starts.into_iter().take(12) {
        let mut x = x0;
        for mu in [1e2, 1e4, 1e6, 1e8, 1e10] {
            let f = pen(mu);
            x = nelder_mead(&f, &x, 0.05, 4000).0;
            x = nelder_mead(&f, &x, 1e-3, 4000).0;
        }
        let (p, v) = two_fail_eval(pair, &x);
        if v < 1e-8 && p < best.0 {
            best = (p, v);
        }
    }
    best
}

/// Golden-section minimum of a unimodal `f` on `[lo, hi]`.
pub fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-13 * (1.0 + lo.abs()) {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) <= f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    0.5 * (lo + hi)
}

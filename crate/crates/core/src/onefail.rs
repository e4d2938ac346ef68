//! One-failure-outcome schemes: `{0,0}` and `{1,1}` name Ψ₀, `{1,0}` names
//! Ψ₁, and only `{0,1}` is inconclusive.
//!
//! Zero error needs three conditions:
//!
//! ```text
//! (⟨r_A|⊗⟨r_B|)|Ψ₁⟩ = 0   (⟨r_A⊥|⊗⟨r_B⊥|)|Ψ₁⟩ = 0   (⟨r_A⊥|⊗⟨r_B|)|Ψ₀⟩ = 0
//! ```
//!
//! For entangled Ψ₁ the first fixes Bob's basis from `a = r_A`, the second
//! becomes a holomorphic quadratic in `a`, and the third is sesquilinear in
//! `a`. When the quadratic has isolated roots they are checked directly;
//! when it vanishes identically (maximally entangled Ψ₁) the third condition
//! is solved over the Bloch sphere.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::qlin::{c, r, Amp, QubitVec};
use crate::scheme::{FailureReport, Scheme, SchemeKind, ONE_FAIL_MAP};
use crate::states::{family, StatePair};
use crate::twofail::{
    curve_grid, golden_minimize, is_product, product_factors, projective_roots, quadratic_coefficients, CurveRow,
    LocalBases, RESIDUAL_TOL,
};
use crate::{UsdError, ZERO_TOL};

/// Outcome of the feasibility search. `bases` holds the best candidate found,
/// which is a valid witness only when `feasible` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneFailFeasibility {
    pub feasible: bool,
    pub residual: f64,
    pub bases: Option<LocalBases>,
}

fn one_fail_scheme(b: &LocalBases) -> Scheme {
    b.scheme(SchemeKind::OneFail, ONE_FAIL_MAP)
}

fn direct_bases(pair: &StatePair, a: &QubitVec) -> Option<LocalBases> {
    let phi = pair.psi1.contract_alice(a);
    LocalBases::normalized(*a, a.perp(), phi.perp(), phi)
}

/// `(⟨a⊥|⊗⟨φ(a)⊥|)|Ψ₀⟩` with `φ(a) = (⟨a|⊗I)|Ψ₁⟩`, unnormalized.
fn third_condition(pair: &StatePair, a: &QubitVec) -> Amp {
    pair.psi0.project(&a.perp(), &pair.psi1.contract_alice(a).perp())
}

/// `N` with `third_condition(a) = Σ N_kl a_k a*_l`.
fn sesquilinear_matrix(pair: &StatePair) -> [[Amp; 2]; 2] {
    let at = |x: Amp, y: Amp| third_condition(pair, &QubitVec::new(x, y));
    let n00 = at(r(1.0), r(0.0));
    let n11 = at(r(0.0), r(1.0));
    let s1 = at(r(1.0), r(1.0)) - n00 - n11;
    let s2 = (at(r(1.0), c(0.0, 1.0)) - n00 - n11) / c(0.0, 1.0);
    [[n00, (s1 - s2) * 0.5], [(s1 + s2) * 0.5, n11]]
}

fn alice_at(u: f64, phase: f64) -> QubitVec {
    let t = u.max(0.0).atan();
    QubitVec::new(r(t.cos()), Amp::from_polar(t.sin(), phase))
}

/// Real non-negative moduli `u = |a₁/a₀|` solving the third condition at a
/// fixed relative phase, each with its residual.
fn moduli_at(n: &[[Amp; 2]; 2], phase: f64) -> Vec<f64> {
    let w = Amp::from_polar(1.0, phase);
    let (a, b, cc) = (n[1][1], n[0][1] * w.conj() + n[1][0] * w, n[0][0]);
    if a.norm() < ZERO_TOL {
        if b.norm() < ZERO_TOL {
            return vec![];
        }
        return vec![(-cc / b).re];
    }
    let disc = (b * b - a * cc * 4.0).sqrt();
    vec![((-b + disc) / (a * 2.0)).re, ((-b - disc) / (a * 2.0)).re]
}

/// Candidates on the sphere when the second condition holds identically.
fn sphere_candidates(pair: &StatePair) -> Vec<QubitVec> {
    let n = sesquilinear_matrix(pair);
    let mut out = vec![QubitVec::zero(), QubitVec::one()];
    let resid = |phase: f64| {
        moduli_at(&n, phase)
            .into_iter()
            .map(|u| third_condition(pair, &alice_at(u, phase)).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let phase = golden_minimize(resid, -PI, PI, 1024, 1e-14);
    out.extend(moduli_at(&n, phase).into_iter().map(|u| alice_at(u, phase)));
    out
}

/// Whether a zero-error one-failure scheme exists for the pair.
pub fn one_fail_feasible(pair: &StatePair) -> OneFailFeasibility {
    let candidates: Vec<LocalBases> = if is_product(&pair.psi1) {
        let (ap, bp) = product_factors(&pair.psi1);
        // Ψ₁ = a'⊗b' vanishes on {0,0} and {1,1} only if r_A ⟂ a' with
        // r_B⊥ ⟂ b', or r_B ⟂ b' with r_A⊥ ⟂ a'.
        [
            LocalBases::normalized(ap.perp(), ap, bp, bp.perp()),
            LocalBases::normalized(ap, ap.perp(), bp.perp(), bp),
        ]
        .into_iter()
        .flatten()
        .collect()
    } else {
        let alices = projective_roots(quadratic_coefficients(&pair.psi1, &pair.psi1))
            .unwrap_or_else(|| sphere_candidates(pair));
        alices.iter().filter_map(|a| direct_bases(pair, a)).collect()
    };

    let mut best: Option<(f64, f64, LocalBases)> = None;
    for b in candidates {
        let scheme = one_fail_scheme(&b);
        let res = scheme.zero_error_residual(pair);
        let p_f = scheme.failure_report(pair).p_f;
        let better = match &best {
            None => true,
            Some((r0, p0, _)) => {
                let (ok, ok0) = (res < RESIDUAL_TOL, *r0 < RESIDUAL_TOL);
                (ok && !ok0) || (ok == ok0 && if ok { p_f < *p0 } else { res < *r0 })
            }
        };
        if better {
            best = Some((res, p_f, b));
        }
    }
    match best {
        Some((residual, _, b)) => OneFailFeasibility {
            feasible: residual < RESIDUAL_TOL,
            residual,
            bases: Some(b),
        },
        None => OneFailFeasibility {
            feasible: false,
            residual: f64::INFINITY,
            bases: None,
        },
    }
}

/// Scheme for `Ψ₀ = cos θ₀|00⟩ + sin θ₀|11⟩` against `Ψ₁ = (|00⟩ − |11⟩)/√2`.
///
/// `r_A ∝ |0⟩ + √tanθ₀|1⟩` and `r_B⊥ ∝ |0⟩ − √tanθ₀|1⟩`. The angle may reach
/// π/2, where both collapse onto `|1⟩`.
pub fn solve_one_fail_same_basis(theta0: f64) -> Result<Scheme, UsdError> {
    if !(theta0 > 0.0 && theta0 <= FRAC_PI_2) {
        return Err(UsdError::DomainError(theta0));
    }
    if theta0 < 1e-6 {
        log::warn!("theta0 = {theta0:e} is close to the product limit |00⟩");
    }
    let (sc, ss) = (theta0.cos().max(0.0).sqrt(), theta0.sin().sqrt());
    let r_a = QubitVec::real(sc, ss);
    let r_b_perp = QubitVec::real(sc, -ss);
    let b = LocalBases::normalized(r_a, r_a.perp(), r_b_perp.perp(), r_b_perp).expect("unit vectors");
    Ok(one_fail_scheme(&b))
}

/// The same-basis pair of the one-failure example.
pub fn same_basis_pair(theta0: f64) -> Result<StatePair, UsdError> {
    family::same_basis(theta0, -FRAC_PI_4)
}

pub fn one_fail_closed_form(theta0: f64) -> f64 {
    0.5 * (theta0.cos() - theta0.sin()).powi(2) + 0.25
}

pub fn one_fail_report(scheme: &Scheme, pair: &StatePair) -> FailureReport {
    scheme.failure_report(pair)
}

/// Failure curve of the same-basis example over `θ₀ ∈ (0, π/2]`.
pub fn curve_fig2(steps: usize) -> Result<Vec<CurveRow>, UsdError> {
    if steps < 2 {
        return Err(UsdError::ConfigError(format!("steps must be at least 2, got {steps}")));
    }
    curve_grid(steps, false)
        .into_par_iter()
        .map(|theta| {
            let pair = same_basis_pair(theta)?;
            let rep = solve_one_fail_same_basis(theta)?.failure_report(&pair);
            Ok(CurveRow {
                theta,
                p_f: rep.p_f,
                p_fidp: rep.p_fidp,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TwoQubitState;
    use approx::assert_abs_diff_eq;

    #[test]
    fn feasibility_examples() {
        let f = one_fail_feasible(&same_basis_pair(0.9).unwrap());
        assert!(f.feasible, "{f:?}");
        let f = one_fail_feasible(&family::same_basis(PI / 6.0, PI / 3.0).unwrap());
        assert!(!f.feasible);
        assert!(f.residual > 1e-3);
        let pair = StatePair::new(
            TwoQubitState::from_real([1.0, 0.0, 0.0, 0.0]).unwrap(),
            TwoQubitState::from_real([0.0, 0.0, 0.0, 1.0]).unwrap(),
        );
        assert!(one_fail_feasible(&pair).feasible);
    }

    #[test]
    fn feasibility_witness_matches_paper_scheme() {
        let t0: f64 = 0.9;
        let pair = same_basis_pair(t0).unwrap();
        let b = one_fail_feasible(&pair).bases.unwrap();
        let p = one_fail_scheme(&b).failure_report(&pair).p_f;
        assert_abs_diff_eq!(p, one_fail_closed_form(t0), epsilon = 1e-9);
    }

    #[test]
    fn explicit_vectors() {
        let s = solve_one_fail_same_basis(FRAC_PI_4).unwrap();
        assert!(s.ops_a[0].in_bra.parallel_to(&QubitVec::plus(), 1e-12));
        assert!(s.ops_b[1].in_bra.parallel_to(&QubitVec::minus(), 1e-12));
        let s = solve_one_fail_same_basis(PI / 3.0).unwrap();
        let want = QubitVec::real(1.0, 3f64.powf(0.25)).normalized().unwrap();
        assert!(s.ops_a[0].in_bra.parallel_to(&want, 1e-12));
        assert!(matches!(solve_one_fail_same_basis(0.0), Err(UsdError::DomainError(_))));
        assert!(matches!(solve_one_fail_same_basis(1.6), Err(UsdError::DomainError(_))));
    }

    #[test]
    fn report_examples() {
        for (t0, pf, pidp) in [
            (FRAC_PI_4, 0.25, 0.0),
            (FRAC_PI_2, 0.75, 0.5f64.sqrt()),
            (3.0 * PI / 8.0, 0.396_446_609_4, 0.382_683_432_4),
        ] {
            let pair = same_basis_pair(t0).unwrap();
            let s = solve_one_fail_same_basis(t0).unwrap();
            assert!(s.zero_error_residual(&pair) < 1e-12);
            let rep = one_fail_report(&s, &pair);
            assert_abs_diff_eq!(rep.p_f, pf, epsilon = 1e-9);
            assert_abs_diff_eq!(rep.p_fidp, pidp, epsilon = 1e-9);
        }
    }

    #[test]
    fn fig2_rows() {
        let rows = curve_fig2(4).unwrap();
        assert_eq!(rows.len(), 4);
        assert_abs_diff_eq!(rows[1].p_f, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[3].p_f, 0.75, epsilon = 1e-12);
        assert!(rows.iter().all(|r| r.p_f >= r.p_fidp - 1e-12));
    }
}

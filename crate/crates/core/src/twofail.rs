//! Two-failure-outcome schemes: `{0,0}` names Ψ₀, `{1,1}` names Ψ₁, and the
//! mixed outcomes are inconclusive.
//!
//! Both parties measure projectively, Alice in `{r_A, r_A⊥}` and Bob in
//! `{r_B, r_B⊥}`. Zero error means
//!
//! ```text
//! (⟨r_A|⊗⟨r_B|)|Ψ₁⟩ = 0        (⟨r_A⊥|⊗⟨r_B⊥|)|Ψ₀⟩ = 0
//! ```
//!
//! For an entangled Ψ₁ the first condition fixes Bob's basis from Alice's
//! vector `a = r_A`: `r_B⊥ ∝ (⟨a|⊗I)|Ψ₁⟩`. Substituting into the second
//! condition leaves a form that is quadratic and holomorphic in the
//! components of `a`, so the admissible Alice vectors are the roots of a
//! binary quadratic. When the quadratic vanishes identically every `a` works
//! and the failure probability is minimized over the free modulus instead.
//! The solutions are reported as the coefficient ratios `z₁…z₄` of
//! `r_A, r_B, r_A⊥, r_B⊥` in the Schmidt frames of the pair.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rayon::prelude::*;
use serde::Serialize;

use crate::qlin::{r, schmidt_decompose, Amp, QubitVec, TwoQubitState};
use crate::scheme::{FailureReport, Scheme, SchemeKind, TWO_FAIL_MAP};
use crate::states::{family, idp_bound, StatePair};
use crate::{UsdError, ZERO_TOL};

/// Quadratic coefficients below this are treated as an identically vanishing form.
const FREE_TOL: f64 = 1e-9;
/// Largest wrong-cell amplitude accepted for a built scheme.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Zero failure is possible only for orthogonal states.
pub fn zero_failure_feasible(pair: &StatePair) -> bool {
    idp_bound(pair).p_fidp < ZERO_TOL
}

/// Orthonormal local bases of a two-outcome scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalBases {
    pub r_a: QubitVec,
    pub r_a_perp: QubitVec,
    pub r_b: QubitVec,
    pub r_b_perp: QubitVec,
}

impl LocalBases {
    pub(crate) fn normalized(r_a: QubitVec, r_a_perp: QubitVec, r_b: QubitVec, r_b_perp: QubitVec) -> Option<Self> {
        Some(LocalBases {
            r_a: r_a.normalized()?.phase_fixed(),
            r_a_perp: r_a_perp.normalized()?.phase_fixed(),
            r_b: r_b.normalized()?.phase_fixed(),
            r_b_perp: r_b_perp.normalized()?.phase_fixed(),
        })
    }

    pub fn scheme(&self, kind: SchemeKind, map: [[crate::Label; 2]; 2]) -> Scheme {
        Scheme::projective(kind, [self.r_a, self.r_a_perp], [self.r_b, self.r_b_perp], map)
    }
}

/// One solution of the zero-error conditions, expressed as coefficient ratios.
///
/// `z₁ = c₁*/c₀*` with `r_A = Σ cⱼ* |v_Aj⟩` in Ψ₁'s frame, `z₂` likewise for
/// `r_B`, and `z₃`, `z₄` for `r_A⊥`, `r_B⊥` in Ψ₀'s frame. A ratio is `None`
/// when its leading coefficient vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSolution {
    pub z1: Option<Amp>,
    pub z2: Option<Amp>,
    pub z3: Option<Amp>,
    pub z4: Option<Amp>,
    pub c0_mag: f64,
    pub d0_mag: f64,
    pub e0_mag: f64,
    pub f0_mag: f64,
    /// Same-basis family: `|z₁|` is a free parameter. The other fields hold
    /// the equal-prior optimum `|z₁|² = √(λ₁₀/λ₁₁)`.
    pub free_modulus: bool,
    pub bases: LocalBases,
}

fn ratio(lead: Amp, next: Amp) -> Option<Amp> {
    if lead.norm() < ZERO_TOL {
        None
    } else {
        Some(next / lead)
    }
}

impl RatioSolution {
    pub(crate) fn from_bases(pair: &StatePair, bases: LocalBases, free_modulus: bool) -> Self {
        let [f0, f1] = pair.frames();
        let coeff = |basis: &[QubitVec; 2], v: &QubitVec| [basis[0].inner(v), basis[1].inner(v)];
        let c = coeff(&f1.basis_a, &bases.r_a);
        let d = coeff(&f1.basis_b, &bases.r_b);
        let e = coeff(&f0.basis_a, &bases.r_a_perp);
        let f = coeff(&f0.basis_b, &bases.r_b_perp);
        RatioSolution {
            z1: ratio(c[0], c[1]),
            z2: ratio(d[0], d[1]),
            z3: ratio(e[0], e[1]),
            z4: ratio(f[0], f[1]),
            c0_mag: c[0].norm(),
            d0_mag: d[0].norm(),
            e0_mag: e[0].norm(),
            f0_mag: f[0].norm(),
            free_modulus,
            bases,
        }
    }

    /// Residuals of the four zero-error and orthogonality conditions in
    /// undivided form, evaluated in the pair's Schmidt frames:
    /// `Σ √λ₀ⱼ eⱼfⱼ`, `Σ √λ₁ⱼ cⱼdⱼ`, `Σ cⱼ e*ₖ ⟨v_Aj|u_Ak⟩`, `Σ dⱼ f*ₖ ⟨v_Bj|u_Bk⟩`.
    pub fn residuals(&self, pair: &StatePair) -> [f64; 4] {
        let [u, v] = pair.frames();
        let b = &self.bases;
        // cⱼ = ⟨r|basisⱼ⟩ so that r = Σ cⱼ* basisⱼ.
        let coeff = |basis: &[QubitVec; 2], x: &QubitVec| [x.inner(&basis[0]), x.inner(&basis[1])];
        let c = coeff(&v.basis_a, &b.r_a);
        let d = coeff(&v.basis_b, &b.r_b);
        let e = coeff(&u.basis_a, &b.r_a_perp);
        let f = coeff(&u.basis_b, &b.r_b_perp);
        let stat0: Amp = (0..2).map(|j| e[j] * f[j] * u.lam[j].sqrt()).sum();
        let stat1: Amp = (0..2).map(|j| c[j] * d[j] * v.lam[j].sqrt()).sum();
        let mut perp_a = Amp::new(0.0, 0.0);
        let mut perp_b = Amp::new(0.0, 0.0);
        for j in 0..2 {
            for k in 0..2 {
                perp_a += c[j] * e[k].conj() * v.basis_a[j].inner(&u.basis_a[k]);
                perp_b += d[j] * f[k].conj() * v.basis_b[j].inner(&u.basis_b[k]);
            }
        }
        [stat0.norm(), stat1.norm(), perp_a.norm(), perp_b.norm()]
    }

    pub fn failure_report(&self, pair: &StatePair) -> FailureReport {
        self.bases.scheme(SchemeKind::TwoFail, TWO_FAIL_MAP).failure_report(pair)
    }
}

/// Which state fixes Bob's basis from Alice's unknown vector.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    /// Unknown is `r_A`; Ψ₁ fixes `r_B`, Ψ₀ carries the quadratic.
    Direct,
    /// Unknown is `r_A⊥`; Ψ₀ fixes `r_B⊥`, Ψ₁ carries the quadratic.
    Mirrored,
}

fn bases_from(role: Role, pair: &StatePair, x: &QubitVec) -> Option<LocalBases> {
    match role {
        Role::Direct => {
            let phi = pair.psi1.contract_alice(x);
            LocalBases::normalized(*x, x.perp(), phi.perp(), phi)
        }
        Role::Mirrored => {
            let phi = pair.psi0.contract_alice(x);
            LocalBases::normalized(x.perp(), *x, phi, phi.perp())
        }
    }
}

/// `(⟨x⊥|⊗⟨φ(x)|)|cond⟩` with `φ(x) = (⟨x|⊗I)|fix⟩`, holomorphic and
/// quadratic in the components of `x` (no normalization applied).
fn quadratic_form(fix: &TwoQubitState, cond: &TwoQubitState, x: [Amp; 2]) -> Amp {
    // ⟨x⊥| has components (−x₁, x₀); ⟨φ| has components Σᵢ xᵢ fix*ᵢⱼ.
    let bra_a = [-x[1], x[0]];
    let bra_b: [Amp; 2] =
        std::array::from_fn(|j| (0..2).map(|i| x[i] * fix.amp(i, j).conj()).sum());
    let mut acc = Amp::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += bra_a[i] * bra_b[j] * cond.amp(i, j);
        }
    }
    acc
}

/// Coefficients `(A, B, C)` of `A x₀² + B x₀x₁ + C x₁²`.
pub(crate) fn quadratic_coefficients(fix: &TwoQubitState, cond: &TwoQubitState) -> [Amp; 3] {
    let one = r(1.0);
    let zero = r(0.0);
    let a = quadratic_form(fix, cond, [one, zero]);
    let c = quadratic_form(fix, cond, [zero, one]);
    let b = quadratic_form(fix, cond, [one, one]) - a - c;
    [a, b, c]
}

/// Projective roots of `A x₀² + B x₀x₁ + C x₁²`, or `None` if it vanishes identically.
pub(crate) fn projective_roots(coef: [Amp; 3]) -> Option<Vec<QubitVec>> {
    let [a, b, c] = coef;
    let scale = a.norm().max(b.norm()).max(c.norm());
    if scale < FREE_TOL {
        return None;
    }
    // Dehomogenize on the larger end coefficient for stability.
    let (lead, mid, tail, flip) = if a.norm() >= c.norm() { (a, b, c, false) } else { (c, b, a, true) };
    let mut ts: Vec<Amp> = Vec::with_capacity(2);
    if lead.norm() < ZERO_TOL * scale {
        // Both end coefficients vanish: B x₀x₁ = 0.
        return Some(vec![QubitVec::zero(), QubitVec::one()]);
    }
    let disc = (mid * mid - lead * tail * 4.0).sqrt();
    let q1 = mid + disc;
    let q2 = mid - disc;
    let q = if q1.norm() >= q2.norm() { q1 } else { q2 } * -0.5;
    if q.norm() < ZERO_TOL * scale {
        ts.push(r(0.0));
    } else {
        ts.push(q / lead);
        ts.push(tail / q);
    }
    Some(
        ts.into_iter()
            .map(|t| {
                let v = if flip { QubitVec::new(r(1.0), t) } else { QubitVec::new(t, r(1.0)) };
                v.normalized().expect("nonzero projective point")
            })
            .collect(),
    )
}

pub(crate) fn is_product(s: &TwoQubitState) -> bool {
    schmidt_decompose(s).min_lambda().sqrt() < ZERO_TOL
}

pub(crate) fn product_factors(s: &TwoQubitState) -> (QubitVec, QubitVec) {
    let d = schmidt_decompose(s);
    (d.basis_a[0], d.basis_b[0])
}

/// Best Bob vector when Alice's outcome alone settles which state is present:
/// maximizes `π₀|⟨r|b⟩|² + π₁|⟨r⊥|b'⟩|²`, the top eigenvector of
/// `π₀|b⟩⟨b| − π₁|b'⟩⟨b'|`.
fn best_free_vector(b: &QubitVec, b_prime: &QubitVec, w0: f64, w1: f64) -> QubitVec {
    let h = |i: usize, j: usize| b.0[i] * b.0[j].conj() * w0 - b_prime.0[i] * b_prime.0[j].conj() * w1;
    let (h00, h11, h01) = (h(0, 0).re, h(1, 1).re, h(0, 1));
    let mean = 0.5 * (h00 + h11);
    let rad = (0.25 * (h00 - h11).powi(2) + h01.norm_sqr()).sqrt();
    let top = mean + rad;
    if h01.norm() < ZERO_TOL {
        return if h00 >= h11 { QubitVec::zero() } else { QubitVec::one() };
    }
    let v1 = QubitVec::new(h01, r(top - h00));
    let v2 = QubitVec::new(r(top - h11), h01.conj());
    let v = if v1.norm_sqr() >= v2.norm_sqr() { v1 } else { v2 };
    v.normalized().unwrap_or(QubitVec::zero())
}

/// Zero-error bases for a pair of product states `a⊗b`, `a'⊗b'`.
fn product_pair_candidates(pair: &StatePair) -> Vec<LocalBases> {
    let (a, b) = product_factors(&pair.psi0);
    let (ap, bp) = product_factors(&pair.psi1);
    let mut out = Vec::new();
    // r_A ⟂ a' kills Ψ₁ on {0,0}; r_B⊥ ⟂ b kills Ψ₀ on {1,1}.
    out.extend(LocalBases::normalized(ap.perp(), ap, b, b.perp()));
    // r_B ⟂ b' and r_A⊥ ⟂ a.
    out.extend(LocalBases::normalized(a, a.perp(), bp.perp(), bp));
    if a.inner(&ap).norm() < ZERO_TOL {
        // Alice alone separates the states; Bob's basis is free.
        let rb = best_free_vector(&b, &bp, pair.prior0, pair.prior1);
        out.extend(LocalBases::normalized(a, ap, rb, rb.perp()));
    }
    if b.inner(&bp).norm() < ZERO_TOL {
        let ra = best_free_vector(&a, &ap, pair.prior0, pair.prior1);
        out.extend(LocalBases::normalized(ra, ra.perp(), b, bp));
    }
    out
}

/// Alice's vector on the free family at `|z₁| = tan t`, phase of `z₁` zero.
fn free_alice_vector(pair: &StatePair, t: f64) -> QubitVec {
    let v = pair.frames()[1];
    let (c, s) = (t.cos(), t.sin());
    QubitVec::new(v.basis_a[0].0[0] * c + v.basis_a[1].0[0] * s, v.basis_a[0].0[1] * c + v.basis_a[1].0[1] * s)
}

fn free_bases(pair: &StatePair, t: f64) -> LocalBases {
    bases_from(Role::Direct, pair, &free_alice_vector(pair, t)).expect("entangled Ψ₁ contracts to a nonzero vector")
}

/// Angle `t = atan|z₁|` of the failure-minimizing point of the free family.
fn free_optimum(pair: &StatePair) -> f64 {
    if pair.has_equal_priors() {
        let lam = pair.frames()[1].lam;
        // |z₁|² = √(λ₁₀/λ₁₁)
        return (lam[0] / lam[1]).sqrt().sqrt().atan();
    }
    let pf = |t: f64| {
        free_bases(pair, t)
            .scheme(SchemeKind::TwoFail, TWO_FAIL_MAP)
            .failure_report(pair)
            .p_f
    };
    golden_minimize(pf, 1e-6, FRAC_PI_2 - 1e-6, 128, 1e-12)
}

/// Scans `n` points, then golden-section refines around the best bracket.
pub(crate) fn golden_minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, tol: f64) -> f64 {
    let step = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|k| lo + step * k as f64)
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap_or(lo);
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

fn check_solvable(pair: &StatePair) -> Result<(), UsdError> {
    if pair.are_identical() {
        return Err(UsdError::IdenticalStates);
    }
    Ok(())
}

/// Whether the zero-error conditions leave `|z₁|` free (same Schmidt bases and
/// `λ₀₀λ₁₀ = λ₀₁λ₁₁` in matching order).
pub fn is_free_family(pair: &StatePair) -> bool {
    if is_product(&pair.psi1) || is_product(&pair.psi0) {
        return false;
    }
    projective_roots(quadratic_coefficients(&pair.psi1, &pair.psi0)).is_none()
}

/// All admissible solutions, best failure probability first.
///
/// Solutions that never give a conclusive answer (`p_f = 1`) are discarded;
/// if nothing else remains the pair is infeasible.
pub fn solve_ratios(pair: &StatePair) -> Result<Vec<RatioSolution>, UsdError> {
    check_solvable(pair)?;
    let prod0 = is_product(&pair.psi0);
    let prod1 = is_product(&pair.psi1);

    let candidates: Vec<LocalBases> = if prod0 && prod1 {
        product_pair_candidates(pair)
    } else {
        let (role, fix, cond) = if !prod1 {
            (Role::Direct, &pair.psi1, &pair.psi0)
        } else {
            (Role::Mirrored, &pair.psi0, &pair.psi1)
        };
        match projective_roots(quadratic_coefficients(fix, cond)) {
            None => {
                let t = free_optimum(pair);
                return Ok(vec![RatioSolution::from_bases(pair, free_bases(pair, t), true)]);
            }
            Some(roots) => roots.iter().filter_map(|x| bases_from(role, pair, x)).collect(),
        }
    };

    let mut sols: Vec<(f64, RatioSolution)> = Vec::new();
    for bases in candidates {
        let sol = RatioSolution::from_bases(pair, bases, false);
        let p_f = sol.failure_report(pair).p_f;
        let res = sol.residuals(pair);
        if p_f > 1.0 - ZERO_TOL || res[0].max(res[1]) > RESIDUAL_TOL {
            continue;
        }
        if sols.iter().any(|(_, s)| s.bases.r_a.parallel_to(&bases.r_a, 1e-12) && s.bases.r_b.parallel_to(&bases.r_b, 1e-12)) {
            continue;
        }
        sols.push((p_f, sol));
    }
    if sols.is_empty() {
        let why = if same_basis_violation(pair) {
            "same Schmidt bases but the constraint tanθ₀·tanθ₁ = 1 does not hold"
        } else {
            "every zero-error solution fails with certainty"
        };
        return Err(UsdError::Infeasible(why.to_string()));
    }
    let modulus = |s: &RatioSolution| s.z1.map_or(f64::INFINITY, |z| z.norm());
    sols.sort_by(|(pa, a), (pb, b)| {
        if (pa - pb).abs() <= 1e-12 {
            modulus(a).total_cmp(&modulus(b))
        } else {
            pa.total_cmp(pb)
        }
    });
    Ok(sols.into_iter().map(|(_, s)| s).collect())
}

fn same_basis_violation(pair: &StatePair) -> bool {
    crate::states::same_schmidt_basis(pair).same && !is_free_family(pair)
}

/// Projective scheme for a solution, checked against the zero-error conditions.
pub fn build_scheme(sol: &RatioSolution, pair: &StatePair) -> Result<Scheme, UsdError> {
    let scheme = sol.bases.scheme(SchemeKind::TwoFail, TWO_FAIL_MAP);
    let residual = scheme.zero_error_residual(pair);
    if residual > RESIDUAL_TOL {
        return Err(UsdError::ResidualTooLarge { residual });
    }
    Ok(scheme)
}

/// Failure probabilities of a two-failure scheme.
pub fn failure_report(scheme: &Scheme, pair: &StatePair) -> FailureReport {
    scheme.failure_report(pair)
}

/// Optimal scheme of the free (same-basis) family.
pub fn optimize_same_basis(pair: &StatePair) -> Result<Scheme, UsdError> {
    check_solvable(pair)?;
    if !is_free_family(pair) {
        return Err(UsdError::ConstraintViolated(
            "the states do not share Schmidt bases with tanθ₀·tanθ₁ = 1".to_string(),
        ));
    }
    let sol = RatioSolution::from_bases(pair, free_bases(pair, free_optimum(pair)), true);
    build_scheme(&sol, pair)
}

/// Everything the solver reports for one pair.
#[derive(Debug, Clone, Serialize)]
pub struct TwoFailSolution {
    pub ratios: RatioSolution,
    pub scheme: Scheme,
    pub report: FailureReport,
}

/// Best two-failure scheme for the pair.
pub fn solve(pair: &StatePair) -> Result<TwoFailSolution, UsdError> {
    let best = solve_ratios(pair)?.into_iter().next().expect("non-empty on success");
    let scheme = build_scheme(&best, pair)?;
    let report = scheme.failure_report(pair);
    Ok(TwoFailSolution {
        ratios: best,
        scheme,
        report,
    })
}

/// One point of a failure-probability curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub theta: f64,
    pub p_f: f64,
    pub p_fidp: f64,
}

/// `θᵢ = i·(π/2)/steps` for `i = 1..=steps`. With `avoid_quarter`, a point
/// landing on π/4 moves up by half a step.
pub fn curve_grid(steps: usize, avoid_quarter: bool) -> Vec<f64> {
    let h = FRAC_PI_2 / steps as f64;
    (1..=steps)
        .map(|i| {
            let t = FRAC_PI_2 * i as f64 / steps as f64;
            if avoid_quarter && (t - FRAC_PI_4).abs() < 1e-12 {
                t + 0.5 * h
            } else {
                t
            }
        })
        .collect()
}

/// Closed-form failure probability of the θ₀ = π/2 x/z family.
pub fn fig1_closed_form(theta1: f64) -> f64 {
    let cot = theta1.cos() / theta1.sin();
    1.0 - ((1.0 - cot).powi(2) + (theta1.cos() * cot - theta1.sin()).powi(2)) / (4.0 * (1.0 + cot * cot))
}

/// Failure curve of the θ₀ = π/2 x/z family, solved pointwise.
///
/// The point θ₁ = π/4, where `z₃` diverges, is replaced by a half-step offset.
pub fn curve_fig1(steps: usize) -> Result<Vec<CurveRow>, UsdError> {
    if steps < 2 {
        return Err(UsdError::ConfigError(format!("steps must be at least 2, got {steps}")));
    }
    curve_grid(steps, true)
        .into_par_iter()
        .map(|theta| {
            let pair = family::xz_mixed(FRAC_PI_2, theta)?;
            let sol = solve(&pair)?;
            Ok(CurveRow {
                theta,
                p_f: sol.report.p_f,
                p_fidp: sol.report.p_fidp,
            })
        })
        .collect()
}

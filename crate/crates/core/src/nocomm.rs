//! Discrimination without any classical communication.
//!
//! Each party maps its qubit to one of three outcomes `{0, 1, f}`, and a
//! conclusive answer requires both to report the same index. Writing each
//! state in its Schmidt frame (`u` for Ψ₀, `v` for Ψ₁), at most one state can
//! ever be identified unless both are product states with orthogonal factors
//! on each side.
//!
//! Branch labels: (i) Ψ₁ entangled, (ii) Ψ₁ product, (iii) Ψ₀ entangled,
//! (iv) Ψ₀ product.

use serde::Serialize;

use crate::qlin::{schmidt_decompose, QubitVec, TwoQubitState};
use crate::scheme::KrausOp;
use crate::states::StatePair;
use crate::{UsdError, ZERO_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoCommCase {
    AlwaysFail,
    PerfectOrthogonalProduct,
    OneStateDetector { detected: usize },
}

impl NoCommCase {
    pub fn name(&self) -> &'static str {
        match self {
            NoCommCase::AlwaysFail => "AlwaysFail",
            NoCommCase::PerfectOrthogonalProduct => "PerfectOrthogonalProduct",
            NoCommCase::OneStateDetector { .. } => "OneStateDetector",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoCommClassification {
    pub case: NoCommCase,
    pub detail: String,
}

/// Three-outcome local measurements. Slot `k` holds the operators reporting
/// outcome `k` (`0`, `1`, then `f`); an empty slot is the zero operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoCommScheme {
    pub ops_a: [Vec<KrausOp>; 3],
    pub ops_b: [Vec<KrausOp>; 3],
    pub detect_prob: f64,
}

pub const FAIL_SLOT: usize = 2;

fn is_product(s: &TwoQubitState) -> bool {
    schmidt_decompose(s).min_lambda() < ZERO_TOL
}

fn factors(s: &TwoQubitState) -> (QubitVec, QubitVec) {
    let d = schmidt_decompose(s);
    (d.basis_a[0], d.basis_b[0])
}

/// Detector for the entangled state `ent` against the product `a⊗b`:
/// the local failure outcomes project onto `a` and `b`, the detecting
/// outcomes onto their complements.
fn detector_conditions(a: &QubitVec, b: &QubitVec, ent: &TwoQubitState) -> f64 {
    ent.project(&a.perp(), b).norm().max(ent.project(a, &b.perp()).norm())
}

pub fn classify(pair: &StatePair) -> NoCommClassification {
    let prod0 = is_product(&pair.psi0);
    let prod1 = is_product(&pair.psi1);
    let (case, detail) = match (prod0, prod1) {
        (false, false) => (NoCommCase::AlwaysFail, "(i)&(iii)".to_string()),
        (true, true) => {
            let (a, b) = factors(&pair.psi0);
            let (ap, bp) = factors(&pair.psi1);
            if a.inner(&ap).norm() < ZERO_TOL && b.inner(&bp).norm() < ZERO_TOL {
                (NoCommCase::PerfectOrthogonalProduct, "(ii)&(iv)".to_string())
            } else {
                (NoCommCase::AlwaysFail, "(ii)&(iv)".to_string())
            }
        }
        (true, false) | (false, true) => {
            let (prod, ent, detected, label) = if prod0 {
                (&pair.psi0, &pair.psi1, 1, "(i)&(iv)")
            } else {
                (&pair.psi1, &pair.psi0, 0, "(ii)&(iii)")
            };
            let (a, b) = factors(prod);
            if detector_conditions(&a, &b, ent) < ZERO_TOL {
                (NoCommCase::OneStateDetector { detected }, label.to_string())
            } else {
                // Bob's product factor coinciding with the entangled state's
                // leading Schmidt vector is the boundary branch of the
                // derivation; it also ends in certain failure.
                let lead = schmidt_decompose(ent).basis_b[0];
                let note = if (b.inner(&lead).norm() - 1.0).abs() < ZERO_TOL {
                    "; u_B0 = v_B0"
                } else {
                    ""
                };
                (NoCommCase::AlwaysFail, format!("{label}{note}"))
            }
        }
    };
    NoCommClassification { case, detail }
}

fn empty() -> [Vec<KrausOp>; 3] {
    [Vec::new(), Vec::new(), Vec::new()]
}

/// One-state detector; fails with `NotDetectorCase` for any other class.
pub fn build_detector(pair: &StatePair) -> Result<NoCommScheme, UsdError> {
    let cls = classify(pair);
    let NoCommCase::OneStateDetector { detected } = cls.case else {
        return Err(UsdError::NotDetectorCase(format!("{} {}", cls.case.name(), cls.detail)));
    };
    let (a, b) = factors(pair.state(1 - detected));
    let mut ops_a = empty();
    let mut ops_b = empty();
    ops_a[detected].push(KrausOp::projector(a.perp()));
    ops_a[FAIL_SLOT].push(KrausOp::projector(a));
    ops_b[detected].push(KrausOp::projector(b.perp()));
    ops_b[FAIL_SLOT].push(KrausOp::projector(b));
    let detect_prob = pair.state(detected).project(&a.perp(), &b.perp()).norm_sqr();
    Ok(NoCommScheme {
        ops_a,
        ops_b,
        detect_prob,
    })
}

/// Scheme for any classification; the always-fail scheme reports `f` on
/// every input.
pub fn build_scheme(pair: &StatePair) -> NoCommScheme {
    let cls = classify(pair);
    match cls.case {
        NoCommCase::OneStateDetector { .. } => build_detector(pair).expect("classified as detector"),
        NoCommCase::PerfectOrthogonalProduct => {
            let (a, b) = factors(&pair.psi0);
            let (ap, bp) = factors(&pair.psi1);
            let mut ops_a = empty();
            let mut ops_b = empty();
            ops_a[0].push(KrausOp::projector(a));
            ops_a[1].push(KrausOp::projector(ap));
            ops_b[0].push(KrausOp::projector(b));
            ops_b[1].push(KrausOp::projector(bp));
            NoCommScheme {
                ops_a,
                ops_b,
                detect_prob: 1.0,
            }
        }
        NoCommCase::AlwaysFail => {
            let comp = || vec![KrausOp::projector(QubitVec::zero()), KrausOp::projector(QubitVec::one())];
            let mut ops_a = empty();
            let mut ops_b = empty();
            ops_a[FAIL_SLOT] = comp();
            ops_b[FAIL_SLOT] = comp();
            NoCommScheme {
                ops_a,
                ops_b,
                detect_prob: 0.0,
            }
        }
    }
}

impl NoCommScheme {
    /// Probability that Alice reports `j` and Bob reports `k` on `s`.
    pub fn joint(&self, j: usize, k: usize, s: &TwoQubitState) -> f64 {
        let mut p = 0.0;
        for oa in &self.ops_a[j] {
            for ob in &self.ops_b[k] {
                p += s.project(&oa.in_bra, &ob.in_bra).norm_sqr();
            }
        }
        p
    }

    pub fn completeness_residual(&self) -> f64 {
        let flat = |ops: &[Vec<KrausOp>; 3]| ops.iter().flatten().copied().collect::<Vec<_>>();
        crate::scheme::completeness_residual(&flat(&self.ops_a))
            .max(crate::scheme::completeness_residual(&flat(&self.ops_b)))
    }

    /// Total probability of mismatched reports over both states.
    pub fn disagreement(&self, pair: &StatePair) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..2 {
            let mut p = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    if j != k {
                        p += self.joint(j, k, pair.state(n));
                    }
                }
            }
            worst = worst.max(p);
        }
        worst
    }

    /// Largest probability of naming the wrong state.
    pub fn error_mass(&self, pair: &StatePair) -> f64 {
        self.joint(1, 1, &pair.psi0).max(self.joint(0, 0, &pair.psi1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionProbabilities {
    pub p_detect_0: f64,
    pub p_detect_1: f64,
    pub p_fail_0: f64,
    pub p_fail_1: f64,
}

pub fn detection_probability(scheme: &NoCommScheme, pair: &StatePair) -> DetectionProbabilities {
    let f = FAIL_SLOT;
    DetectionProbabilities {
        p_detect_0: scheme.joint(0, 0, &pair.psi0),
        p_detect_1: scheme.joint(1, 1, &pair.psi1),
        p_fail_0: scheme.joint(f, f, &pair.psi0),
        p_fail_1: scheme.joint(f, f, &pair.psi1),
    }
}

/// Machine-readable summary of the classification and its scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoCommResult {
    pub case: String,
    pub detail: String,
    pub detect_prob: f64,
    pub p_fail_0: f64,
    pub p_fail_1: f64,
}

pub fn analyze(pair: &StatePair) -> (NoCommClassification, NoCommScheme, NoCommResult) {
    let cls = classify(pair);
    let scheme = build_scheme(pair);
    let d = detection_probability(&scheme, pair);
    let result = NoCommResult {
        case: cls.case.name().to_string(),
        detail: cls.detail.clone(),
        detect_prob: scheme.detect_prob,
        p_fail_0: d.p_fail_0,
        p_fail_1: d.p_fail_1,
    };
    (cls, scheme, result)
}

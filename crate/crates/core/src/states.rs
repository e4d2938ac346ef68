//! Candidate state pairs and the joint-measurement failure bound.

use serde::Serialize;

use crate::qlin::{r, schmidt_decompose, Amp, QubitVec, SchmidtDecomposition, TwoQubitState};
use crate::{UsdError, ZERO_TOL};

/// Normalizes four amplitudes into a state.
pub fn make_state(amps: [Amp; 4]) -> Result<TwoQubitState, UsdError> {
    TwoQubitState::new(amps)
}

/// The two states to be told apart, with their prior probabilities.
///
/// A pair may carry hand-labelled Schmidt frames. Ratio-based reporting in
/// [`crate::twofail`] is expressed in these frames; without them the
/// canonical decomposition (largest Schmidt value first) is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatePair {
    pub psi0: TwoQubitState,
    pub psi1: TwoQubitState,
    pub prior0: f64,
    pub prior1: f64,
    #[serde(skip)]
    frames: Option<[SchmidtDecomposition; 2]>,
}

impl StatePair {
    /// Equal priors.
    pub fn new(psi0: TwoQubitState, psi1: TwoQubitState) -> Self {
        StatePair {
            psi0,
            psi1,
            prior0: 0.5,
            prior1: 0.5,
            frames: None,
        }
    }

    pub fn with_priors(mut self, prior0: f64) -> Result<Self, UsdError> {
        if !(0.0..=1.0).contains(&prior0) || !prior0.is_finite() {
            return Err(UsdError::InvalidPriors);
        }
        self.prior0 = prior0;
        self.prior1 = 1.0 - prior0;
        Ok(self)
    }

    /// Attaches labelled Schmidt frames; each must reconstruct its state.
    pub fn with_frames(mut self, f0: SchmidtDecomposition, f1: SchmidtDecomposition) -> Result<Self, UsdError> {
        let r0 = self.psi0.max_abs_diff(&f0.reconstruct());
        let r1 = self.psi1.max_abs_diff(&f1.reconstruct());
        if r0.max(r1) > 1e-10 {
            return Err(UsdError::InvalidSchmidtFrame { residual: r0.max(r1) });
        }
        self.frames = Some([f0, f1]);
        Ok(self)
    }

    /// Schmidt frames for `(Ψ₀, Ψ₁)`: the labelled ones if present, else canonical.
    pub fn frames(&self) -> [SchmidtDecomposition; 2] {
        self.frames
            .unwrap_or_else(|| [schmidt_decompose(&self.psi0), schmidt_decompose(&self.psi1)])
    }

    pub fn has_equal_priors(&self) -> bool {
        (self.prior0 - 0.5).abs() < 1e-12
    }

    pub fn state(&self, n: usize) -> &TwoQubitState {
        if n == 0 {
            &self.psi0
        } else {
            &self.psi1
        }
    }

    pub fn prior(&self, n: usize) -> f64 {
        if n == 0 {
            self.prior0
        } else {
            self.prior1
        }
    }

    /// Same states with the labels 0 and 1 exchanged.
    pub fn swapped(&self) -> StatePair {
        StatePair {
            psi0: self.psi1,
            psi1: self.psi0,
            prior0: self.prior1,
            prior1: self.prior0,
            frames: self.frames.map(|[a, b]| [b, a]),
        }
    }

    pub fn are_identical(&self) -> bool {
        self.psi0.inner(&self.psi1).norm() > 1.0 - ZERO_TOL
    }
}

/// Overlap and failure probability of the optimal joint measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdpBound {
    pub overlap: Amp,
    pub p_fidp: f64,
}

pub fn idp_bound(pair: &StatePair) -> IdpBound {
    let overlap = pair.psi0.inner(&pair.psi1);
    IdpBound {
        overlap,
        p_fidp: overlap.norm().min(1.0),
    }
}

/// Outcome of [`same_schmidt_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BasisMatch {
    pub same: bool,
    /// The match relied on the freedom of a degenerate (maximally entangled) decomposition.
    pub via_degenerate: bool,
}

const BASIS_TOL: f64 = 1e-9;

/// Whether both states are diagonal in one common pair of local bases.
pub fn same_schmidt_basis(pair: &StatePair) -> BasisMatch {
    let d0 = schmidt_decompose(&pair.psi0);
    let d1 = schmidt_decompose(&pair.psi1);
    match (d0.degenerate, d1.degenerate) {
        (false, false) => BasisMatch {
            same: frames_match(&d0, &d1),
            via_degenerate: false,
        },
        (true, false) => BasisMatch {
            same: degenerate_admits(&pair.psi0, &d1),
            via_degenerate: true,
        },
        (false, true) => BasisMatch {
            same: degenerate_admits(&pair.psi1, &d0),
            via_degenerate: true,
        },
        // M₀ M₁⁻¹ is a multiple of a unitary, so it always has an orthonormal
        // eigenbasis that diagonalizes both states at once.
        (true, true) => BasisMatch {
            same: true,
            via_degenerate: true,
        },
    }
}

fn frames_match(d0: &SchmidtDecomposition, d1: &SchmidtDecomposition) -> bool {
    [[0usize, 1], [1, 0]].iter().any(|perm| {
        (0..2).all(|j| {
            d0.basis_a[j].parallel_to(&d1.basis_a[perm[j]], BASIS_TOL)
                && d0.basis_b[j].parallel_to(&d1.basis_b[perm[j]], BASIS_TOL)
        })
    })
}

/// A maximally entangled `psi` is diagonal in `other`'s bases iff contracting
/// with each of `other`'s Alice vectors leaves the matching Bob vector.
fn degenerate_admits(psi: &TwoQubitState, other: &SchmidtDecomposition) -> bool {
    (0..2).all(|j| {
        psi.contract_alice(&other.basis_a[j])
            .normalized()
            .is_some_and(|b| b.parallel_to(&other.basis_b[j], BASIS_TOL))
    })
}

/// Builds a labelled frame from signed coefficients; negative coefficients are
/// folded into Bob's vectors so that the Schmidt values stay non-negative.
fn signed_frame(
    state: &TwoQubitState,
    coeffs: [f64; 2],
    basis_a: [QubitVec; 2],
    basis_b: [QubitVec; 2],
) -> Result<SchmidtDecomposition, UsdError> {
    let sign = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    SchmidtDecomposition::labelled(
        state,
        coeffs.map(|x| x * x),
        basis_a,
        [basis_b[0].scale(r(sign(coeffs[0]))), basis_b[1].scale(r(sign(coeffs[1])))],
    )
}

/// Named state families used throughout the examples.
pub mod family {
    use super::*;

    fn diag(theta: f64) -> Result<TwoQubitState, UsdError> {
        TwoQubitState::from_real([theta.cos(), 0.0, 0.0, theta.sin()])
    }

    fn diag_frame(s: &TwoQubitState, theta: f64) -> Result<SchmidtDecomposition, UsdError> {
        let comp = [QubitVec::zero(), QubitVec::one()];
        signed_frame(s, [theta.cos(), theta.sin()], comp, comp)
    }

    /// `Ψₙ = cos θₙ|00⟩ + sin θₙ|11⟩`, framed in the computational basis.
    pub fn same_basis(theta0: f64, theta1: f64) -> Result<StatePair, UsdError> {
        let psi0 = diag(theta0)?;
        let psi1 = diag(theta1)?;
        let f0 = diag_frame(&psi0, theta0)?;
        let f1 = diag_frame(&psi1, theta1)?;
        StatePair::new(psi0, psi1).with_frames(f0, f1)
    }

    /// `Ψ₀ = cos θ₀|00⟩ + sin θ₀|11⟩`, `Ψ₁ = cos θ₁|+x+x⟩ + sin θ₁|−x−x⟩`.
    pub fn xz_mixed(theta0: f64, theta1: f64) -> Result<StatePair, UsdError> {
        let psi0 = diag(theta0)?;
        let (p, m) = (QubitVec::plus(), QubitVec::minus());
        let pp = crate::qlin::tensor(&p, &p);
        let mm = crate::qlin::tensor(&m, &m);
        let (c1, s1) = (theta1.cos(), theta1.sin());
        let psi1 = TwoQubitState::new(std::array::from_fn(|k| pp[k] * c1 + mm[k] * s1))?;
        let f0 = diag_frame(&psi0, theta0)?;
        let f1 = signed_frame(&psi1, [c1, s1], [p, m], [p, m])?;
        StatePair::new(psi0, psi1).with_frames(f0, f1)
    }

    /// Secret-sharing pair `Ψ₀ = sin θ|00⟩ + cos θ|11⟩`, `Ψ₁ = cos θ|00⟩ + sin θ|11⟩`.
    pub fn qss(theta: f64) -> Result<StatePair, UsdError> {
        same_basis(std::f64::consts::FRAC_PI_2 - theta, theta)
    }
}

/// Parses one amplitude: `re`, `re+imi`, `re-imi` or `imi`.
pub fn parse_amp(token: &str) -> Result<Amp, UsdError> {
    let bad = || UsdError::InvalidStateLiteral(token.to_string());
    let t: String = token.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let num = |s: &str| -> Result<f64, UsdError> {
        let v: f64 = s.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Amp::new(num(&t)?, 0.0));
    };
    // Split at the last sign that is not leading and not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let im_of = |s: &str| -> Result<f64, UsdError> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => num(s),
        }
    };
    match split {
        Some(k) => Ok(Amp::new(num(&body[..k])?, im_of(&body[k..])?)),
        None => Ok(Amp::new(0.0, im_of(body)?)),
    }
}

/// Parses `a00,a01,a10,a11` into a normalized state.
pub fn parse_state_literal(text: &str) -> Result<TwoQubitState, UsdError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(UsdError::InvalidStateLiteral(text.to_string()));
    }
    let mut amps = [Amp::new(0.0, 0.0); 4];
    for (a, p) in amps.iter_mut().zip(parts) {
        *a = parse_amp(p)?;
    }
    make_state(amps)
}

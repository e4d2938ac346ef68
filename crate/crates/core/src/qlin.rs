//! Fixed-size complex linear algebra for one and two qubits.
//!
//! Two-qubit amplitudes are stored in the order `|00⟩, |01⟩, |10⟩, |11⟩` with
//! Alice's index first, so the amplitude of `|i⟩|j⟩` sits at `2 * i + j` and
//! the same array read row-major is the 2×2 amplitude matrix `M[i][j]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{UsdError, ZERO_TOL};

/// Complex amplitude scalar.
pub type Amp = Complex64;

const NORM_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Amp {
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn r(re: f64) -> Amp {
    Complex64::new(re, 0.0)
}

/// A vector in a single qubit's Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitVec(pub [Amp; 2]);

impl QubitVec {
    pub const fn new(a0: Amp, a1: Amp) -> Self {
        QubitVec([a0, a1])
    }

    pub fn real(a0: f64, a1: f64) -> Self {
        QubitVec([r(a0), r(a1)])
    }

    /// `|0⟩`
    pub fn zero() -> Self {
        Self::real(1.0, 0.0)
    }

    /// `|1⟩`
    pub fn one() -> Self {
        Self::real(0.0, 1.0)
    }

    /// `|+x⟩ = (|0⟩ + |1⟩)/√2`
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::real(h, h)
    }

    /// `|−x⟩ = (|0⟩ − |1⟩)/√2`
    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::real(h, -h)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() < NORM_TOL
    }

    pub fn scale(&self, k: Amp) -> Self {
        QubitVec([self.0[0] * k, self.0[1] * k])
    }

    /// Unit vector along `self`. Returns `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n < NORM_TOL {
            None
        } else {
            Some(self.scale(r(1.0 / n)))
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &QubitVec) -> Amp {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    /// The vector `(−a₁*, a₀*)`, orthogonal to `self` and of equal norm.
    pub fn perp(&self) -> Self {
        QubitVec([-self.0[1].conj(), self.0[0].conj()])
    }

    /// Complex conjugate of every component.
    pub fn conj(&self) -> Self {
        QubitVec([self.0[0].conj(), self.0[1].conj()])
    }

    /// Rescale by a unit phase so that the first component with magnitude
    /// above [`ZERO_TOL`] is real and positive.
    pub fn phase_fixed(&self) -> Self {
        for a in self.0 {
            let m = a.norm();
            if m > ZERO_TOL {
                return self.scale(a.conj() / m);
            }
        }
        *self
    }

    /// `|⟨self|other⟩|` for unit vectors is 1 exactly when they agree up to phase.
    pub fn parallel_to(&self, other: &QubitVec, tol: f64) -> bool {
        self.inner(other).norm() > 1.0 - tol
    }

    pub fn max_abs_diff(&self, other: &QubitVec) -> f64 {
        (self.0[0] - other.0[0])
            .norm()
            .max((self.0[1] - other.0[1]).norm())
    }
}

/// `a ⊗ b` as a four-component amplitude array.
pub fn tensor(a: &QubitVec, b: &QubitVec) -> [Amp; 4] {
    [
        a.0[0] * b.0[0],
        a.0[0] * b.0[1],
        a.0[1] * b.0[0],
        a.0[1] * b.0[1],
    ]
}

/// A normalized pure state of two qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Amp; 4]", into = "[Amp; 4]")]
pub struct TwoQubitState([Amp; 4]);

impl TwoQubitState {
    /// Normalizes `amps`; fails with [`UsdError::ZeroVector`] when the norm is below 1e-12.
    pub fn new(amps: [Amp; 4]) -> Result<Self, UsdError> {
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !n.is_finite() || n < NORM_TOL {
            return Err(UsdError::ZeroVector);
        }
        Ok(TwoQubitState(amps.map(|a| a / n)))
    }

    pub fn from_real(amps: [f64; 4]) -> Result<Self, UsdError> {
        Self::new(amps.map(r))
    }

    /// `a ⊗ b` normalized.
    pub fn product(a: &QubitVec, b: &QubitVec) -> Result<Self, UsdError> {
        Self::new(tensor(a, b))
    }

    pub fn amps(&self) -> &[Amp; 4] {
        &self.0
    }

    /// Amplitude of `|i⟩|j⟩`.
    pub fn amp(&self, i: usize, j: usize) -> Amp {
        self.0[2 * i + j]
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &TwoQubitState) -> Amp {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `(⟨a|⊗⟨b|)|self⟩`
    pub fn project(&self, a: &QubitVec, b: &QubitVec) -> Amp {
        let mut acc = Amp::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += a.0[i].conj() * b.0[j].conj() * self.amp(i, j);
            }
        }
        acc
    }

    /// `(⟨a|⊗I)|self⟩`, the unnormalized vector left on Bob's side.
    pub fn contract_alice(&self, a: &QubitVec) -> QubitVec {
        QubitVec([
            a.0[0].conj() * self.amp(0, 0) + a.0[1].conj() * self.amp(1, 0),
            a.0[0].conj() * self.amp(0, 1) + a.0[1].conj() * self.amp(1, 1),
        ])
    }

    /// `(I⊗⟨b|)|self⟩`, the unnormalized vector left on Alice's side.
    pub fn contract_bob(&self, b: &QubitVec) -> QubitVec {
        QubitVec([
            b.0[0].conj() * self.amp(0, 0) + b.0[1].conj() * self.amp(0, 1),
            b.0[0].conj() * self.amp(1, 0) + b.0[1].conj() * self.amp(1, 1),
        ])
    }

    /// Applies `ua ⊗ ub` where each unitary is given row-major.
    pub fn apply_local(&self, ua: &[[Amp; 2]; 2], ub: &[[Amp; 2]; 2]) -> TwoQubitState {
        let mut out = [Amp::new(0.0, 0.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out[2 * i + j] += ua[i][k] * ub[j][l] * self.amp(k, l);
                    }
                }
            }
        }
        TwoQubitState(out)
    }

    pub fn max_abs_diff(&self, other: &[Amp; 4]) -> f64 {
        self.0
            .iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<[Amp; 4]> for TwoQubitState {
    type Error = UsdError;

    fn try_from(amps: [Amp; 4]) -> Result<Self, Self::Error> {
        TwoQubitState::new(amps)
    }
}

impl From<TwoQubitState> for [Amp; 4] {
    fn from(s: TwoQubitState) -> Self {
        s.0
    }
}

/// Biorthogonal form `Σⱼ √λⱼ |aⱼ⟩⊗|bⱼ⟩` of a two-qubit state.
///
/// [`schmidt_decompose`] returns the canonical form with `λ₀ ≥ λ₁` and Alice's
/// vectors phase-fixed; Bob's vectors carry whatever phase is left so that the
/// real coefficients reconstruct the state. Hand-labelled forms (for instance
/// with the `|0⟩|0⟩` term always first) can be built with
/// [`SchmidtDecomposition::labelled`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchmidtDecomposition {
    pub lam: [f64; 2],
    pub basis_a: [QubitVec; 2],
    pub basis_b: [QubitVec; 2],
    pub degenerate: bool,
}

impl SchmidtDecomposition {
    /// Validates a caller-chosen labelling of a state's Schmidt form.
    ///
    /// The bases must be orthonormal and `Σ √λⱼ aⱼ⊗bⱼ` must reproduce `state`
    /// to within 1e-10; the ordering of the terms is left to the caller.
    pub fn labelled(
        state: &TwoQubitState,
        lam: [f64; 2],
        basis_a: [QubitVec; 2],
        basis_b: [QubitVec; 2],
    ) -> Result<Self, UsdError> {
        let d = SchmidtDecomposition {
            lam,
            basis_a,
            basis_b,
            degenerate: (lam[0] - lam[1]).abs() < ZERO_TOL,
        };
        let ortho = d.orthonormality_residual();
        let rec = state.max_abs_diff(&d.reconstruct());
        if ortho > 1e-10 || rec > 1e-10 || lam.iter().any(|&l| l < 0.0) {
            return Err(UsdError::InvalidSchmidtFrame {
                residual: ortho.max(rec),
            });
        }
        Ok(d)
    }

    pub fn reconstruct(&self) -> [Amp; 4] {
        let mut out = [Amp::new(0.0, 0.0); 4];
        for j in 0..2 {
            let t = tensor(&self.basis_a[j], &self.basis_b[j]);
            let s = self.lam[j].sqrt();
            for (o, v) in out.iter_mut().zip(t) {
                *o += v * s;
            }
        }
        out
    }

    /// Smaller Schmidt value; zero for product states.
    pub fn min_lambda(&self) -> f64 {
        self.lam[0].min(self.lam[1])
    }

    pub fn is_product(&self) -> bool {
        self.min_lambda() < ZERO_TOL
    }

    pub(crate) fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for basis in [&self.basis_a, &self.basis_b] {
            worst = worst
                .max((basis[0].norm() - 1.0).abs())
                .max((basis[1].norm() - 1.0).abs())
                .max(basis[0].inner(&basis[1]).norm());
        }
        worst
    }
}

/// Schmidt decomposition through the closed-form SVD of the 2×2 amplitude matrix.
///
/// The left singular vectors come from the eigenvectors of `M M†`, whose
/// larger eigenvalue is `(h₀₀ + h₁₁ + gap)/2` with `gap = √((h₀₀ − h₁₁)² + 4|h₀₁|²)`.
/// The smaller one is `|det M|²/λ₀`, which avoids cancellation near product
/// states. Bob's vectors are then `Mᵀ ā / √λ`.
pub fn schmidt_decompose(s: &TwoQubitState) -> SchmidtDecomposition {
    let m = |i: usize, j: usize| s.amp(i, j);
    let det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);

    // H = M M†
    let h00 = m(0, 0).norm_sqr() + m(0, 1).norm_sqr();
    let h11 = m(1, 0).norm_sqr() + m(1, 1).norm_sqr();
    let h01 = m(0, 0) * m(1, 0).conj() + m(0, 1) * m(1, 1).conj();

    // Eigenvalue gap without the cancellation in 1 − 4|det M|².
    let disc = ((h00 - h11).powi(2) + 4.0 * h01.norm_sqr()).sqrt();
    let lam0 = ((h00 + h11 + disc) / 2.0).min(1.0);
    let lam1 = det.norm_sqr() / lam0;

    let degenerate = disc < ZERO_TOL;
    let a0 = if degenerate || h01.norm() < ZERO_TOL {
        if degenerate || h00 >= h11 {
            QubitVec::zero()
        } else {
            QubitVec::one()
        }
    } else {
        // Two equivalent eigenvector forms; take the better-conditioned one.
        let v1 = QubitVec::new(h01, r(lam0 - h00));
        let v2 = QubitVec::new(r(lam0 - h11), h01.conj());
        let v = if v1.norm_sqr() >= v2.norm_sqr() { v1 } else { v2 };
        v.normalized().expect("eigenvector of a nonzero Hermitian matrix")
    }
    .phase_fixed();
    let a1 = a0.perp().phase_fixed();

    let bob = |a: &QubitVec, lam: f64| -> Option<QubitVec> {
        if lam < ZERO_TOL * ZERO_TOL {
            return None;
        }
        let v = s.contract_alice(a);
        Some(v.scale(r(1.0 / lam.sqrt())))
    };
    let b0 = bob(&a0, lam0).expect("largest Schmidt value is at least 1/2");
    // Renormalize to absorb rounding in √λ.
    let b0 = b0.normalized().unwrap_or(b0);
    let b1 = match bob(&a1, lam1) {
        Some(v) if lam1 > ZERO_TOL => v.normalized().unwrap_or(v),
        _ => b0.perp().phase_fixed(),
    };

    SchmidtDecomposition {
        lam: [lam0, lam1],
        basis_a: [a0, a1],
        basis_b: [b0, b1],
        degenerate,
    }
}

/// `|(⟨a|⊗⟨b|)|s⟩|²`
pub fn joint_probability(a: &QubitVec, b: &QubitVec, s: &TwoQubitState) -> f64 {
    s.project(a, b).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn bell() -> TwoQubitState {
        TwoQubitState::from_real([1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn tensor_basis_products() {
        let t = tensor(&QubitVec::zero(), &QubitVec::zero());
        assert_eq!(t, [r(1.0), r(0.0), r(0.0), r(0.0)]);
        let t = tensor(&QubitVec::one(), &QubitVec::one());
        assert_eq!(t, [r(0.0), r(0.0), r(0.0), r(1.0)]);
        let t = tensor(&QubitVec::plus(), &QubitVec::minus());
        for (got, want) in t.iter().zip([0.5, -0.5, 0.5, -0.5]) {
            assert_abs_diff_eq!(got.re, want, epsilon = 1e-15);
            assert_abs_diff_eq!(got.im, 0.0);
        }
    }

    #[test]
    fn schmidt_of_product_state() {
        let d = schmidt_decompose(&TwoQubitState::from_real([1.0, 0.0, 0.0, 0.0]).unwrap());
        assert_eq!(d.lam, [1.0, 0.0]);
        assert!(d.basis_a[0].max_abs_diff(&QubitVec::zero()) < 1e-15);
        assert!(d.basis_a[1].max_abs_diff(&QubitVec::one()) < 1e-15);
        assert!(d.basis_b[0].max_abs_diff(&QubitVec::zero()) < 1e-15);
        assert!(d.basis_b[1].max_abs_diff(&QubitVec::one()) < 1e-15);
        assert!(d.is_product());
        assert!(!d.degenerate);
    }

    #[test]
    fn schmidt_of_cos_sin_state() {
        let t = PI / 6.0;
        let s = TwoQubitState::from_real([t.cos(), 0.0, 0.0, t.sin()]).unwrap();
        let d = schmidt_decompose(&s);
        assert_abs_diff_eq!(d.lam[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(d.lam[1], 0.25, epsilon = 1e-12);
        assert!(d.basis_a[0].max_abs_diff(&QubitVec::zero()) < 1e-12);
        assert!(d.basis_b[1].max_abs_diff(&QubitVec::one()) < 1e-12);
        assert!(s.max_abs_diff(&d.reconstruct()) < 1e-12);
    }

    #[test]
    fn schmidt_of_bell_is_degenerate() {
        let d = schmidt_decompose(&bell());
        assert_abs_diff_eq!(d.lam[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.lam[1], 0.5, epsilon = 1e-12);
        assert!(d.degenerate);
        assert!(bell().max_abs_diff(&d.reconstruct()) < 1e-12);
    }

    #[test]
    fn alice_basis_is_phase_fixed() {
        let s = TwoQubitState::new([c(0.3, 0.4), c(0.1, -0.2), c(-0.5, 0.1), c(0.2, 0.6)]).unwrap();
        let d = schmidt_decompose(&s);
        for v in d.basis_a {
            let lead = if v.0[0].norm() > ZERO_TOL { v.0[0] } else { v.0[1] };
            assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
        }
        assert!(s.max_abs_diff(&d.reconstruct()) < 1e-12);
    }

    #[test]
    fn joint_probability_examples() {
        let s = TwoQubitState::from_real([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(joint_probability(&QubitVec::zero(), &QubitVec::zero(), &s), 1.0);
        assert_eq!(joint_probability(&QubitVec::zero(), &QubitVec::one(), &bell()), 0.0);

        // One-failure scheme at θ₀ = π/4: r_A = |+x⟩, r_B⊥ = |−x⟩, against (|00⟩ − |11⟩)/√2.
        // ⟨+|⟨−| = (1, −1, 1, −1)/2, so the amplitude is (1 + 1)/(2√2) = 1/√2.
        let s = TwoQubitState::from_real([FRAC_1_SQRT_2, 0.0, 0.0, -FRAC_1_SQRT_2]).unwrap();
        let p = joint_probability(&QubitVec::plus(), &QubitVec::minus(), &s);
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn labelled_frame_rejects_bad_reconstruction() {
        let s = bell();
        let bad = SchmidtDecomposition::labelled(
            &s,
            [0.5, 0.5],
            [QubitVec::zero(), QubitVec::one()],
            [QubitVec::one(), QubitVec::zero()],
        );
        assert!(matches!(bad, Err(UsdError::InvalidSchmidtFrame { .. })));
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(matches!(
            TwoQubitState::from_real([0.0; 4]),
            Err(UsdError::ZeroVector)
        ));
    }
}

//! Local measurement schemes built from rank-one Kraus operators.

use serde::{Deserialize, Serialize};

use crate::qlin::{Amp, QubitVec, TwoQubitState};
use crate::states::{idp_bound, StatePair};

/// Conclusion drawn from a joint outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    S0,
    S1,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Label {
    /// The state this label names, if conclusive.
    pub fn state(self) -> Option<usize> {
        match self {
            Label::S0 => Some(0),
            Label::S1 => Some(1),
            Label::Fail => None,
        }
    }

    pub fn identifying(n: usize) -> Label {
        if n == 0 {
            Label::S0
        } else {
            Label::S1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeKind {
    TwoFail,
    OneFail,
    NoComm,
}

/// The operator `|out⟩⟨in_bra|` with both vectors unit-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrausOp {
    pub out: QubitVec,
    pub in_bra: QubitVec,
}

impl KrausOp {
    /// The projector `|v⟩⟨v|`.
    pub fn projector(v: QubitVec) -> Self {
        KrausOp { out: v, in_bra: v }
    }

    /// Matrix elements of `K†K = |in⟩⟨in|`.
    fn effect(&self) -> [[Amp; 2]; 2] {
        let v = &self.in_bra.0;
        std::array::from_fn(|i| std::array::from_fn(|j| v[i] * v[j].conj()))
    }
}

/// Max-norm deviation of `Σ K†K` from the identity.
pub fn completeness_residual(ops: &[KrausOp]) -> f64 {
    let mut sum = [[Amp::new(0.0, 0.0); 2]; 2];
    for op in ops {
        let e = op.effect();
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += e[i][j];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (i, row) in sum.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).norm());
        }
    }
    worst
}

/// Per-party measurements and the map from joint outcomes to conclusions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub ops_a: Vec<KrausOp>,
    pub ops_b: Vec<KrausOp>,
    /// `outcome_map[a][b]` is the conclusion for Alice's outcome `a` and Bob's `b`.
    pub outcome_map: Vec<Vec<Label>>,
}

/// Failure probabilities of a scheme on a pair, next to the joint-measurement bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailureReport {
    pub p_fail_given_0: f64,
    pub p_fail_given_1: f64,
    pub p_f: f64,
    pub p_fidp: f64,
    pub gap: f64,
}

impl Scheme {
    /// Two-outcome von Neumann measurements onto `{r, r⊥}` for each party.
    pub fn projective(kind: SchemeKind, alice: [QubitVec; 2], bob: [QubitVec; 2], map: [[Label; 2]; 2]) -> Self {
        Scheme {
            kind,
            ops_a: alice.iter().copied().map(KrausOp::projector).collect(),
            ops_b: bob.iter().copied().map(KrausOp::projector).collect(),
            outcome_map: map.iter().map(|row| row.to_vec()).collect(),
        }
    }

    /// `(⟨in_a|⊗⟨in_b|)|s⟩`; the output vectors are unit and drop out of probabilities.
    pub fn cell_amplitude(&self, a: usize, b: usize, s: &TwoQubitState) -> Amp {
        s.project(&self.ops_a[a].in_bra, &self.ops_b[b].in_bra)
    }

    pub fn cell_probability(&self, a: usize, b: usize, s: &TwoQubitState) -> f64 {
        self.cell_amplitude(a, b, s).norm_sqr()
    }

    pub fn label(&self, a: usize, b: usize) -> Label {
        self.outcome_map[a][b]
    }

    /// Every `(a, b)` pair with its label, Alice's index varying slowest.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, Label)> + '_ {
        (0..self.ops_a.len())
            .flat_map(move |a| (0..self.ops_b.len()).map(move |b| (a, b, self.label(a, b))))
    }

    /// Largest completeness deviation over both parties.
    pub fn completeness_residual(&self) -> f64 {
        completeness_residual(&self.ops_a).max(completeness_residual(&self.ops_b))
    }

    /// Probability that state `n` is reported as the other state.
    pub fn wrong_label_mass(&self, n: usize, s: &TwoQubitState) -> f64 {
        let wrong = Label::identifying(1 - n);
        self.cells()
            .filter(|&(_, _, l)| l == wrong)
            .map(|(a, b, _)| self.cell_probability(a, b, s))
            .sum()
    }

    /// Largest amplitude on a wrongly labelled cell for either state.
    pub fn zero_error_residual(&self, pair: &StatePair) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..2 {
            let wrong = Label::identifying(1 - n);
            for (a, b, l) in self.cells() {
                if l == wrong {
                    worst = worst.max(self.cell_amplitude(a, b, pair.state(n)).norm());
                }
            }
        }
        worst
    }

    /// `⟨Ψ₁|F|Ψ₀⟩` with `F` the sum of the FAIL-cell effects.
    pub fn failure_overlap(&self, pair: &StatePair) -> Amp {
        self.cells()
            .filter(|&(_, _, l)| l == Label::Fail)
            .map(|(a, b, _)| self.cell_amplitude(a, b, &pair.psi1).conj() * self.cell_amplitude(a, b, &pair.psi0))
            .sum()
    }

    pub fn fail_probability(&self, s: &TwoQubitState) -> f64 {
        self.cells()
            .filter(|&(_, _, l)| l == Label::Fail)
            .map(|(a, b, _)| self.cell_probability(a, b, s))
            .sum()
    }

    /// Failure probabilities summed over the FAIL-labelled outcomes.
    pub fn failure_report(&self, pair: &StatePair) -> FailureReport {
        let p0 = self.fail_probability(&pair.psi0);
        let p1 = self.fail_probability(&pair.psi1);
        let p_f = pair.prior0 * p0 + pair.prior1 * p1;
        let p_fidp = idp_bound(pair).p_fidp;
        FailureReport {
            p_fail_given_0: p0,
            p_fail_given_1: p1,
            p_f,
            p_fidp,
            gap: p_f - p_fidp,
        }
    }

    /// Checks completeness below 1e-12 and wrong-label mass below 1e-10.
    pub fn is_valid_for(&self, pair: &StatePair) -> bool {
        self.completeness_residual() < 1e-12
            && self.wrong_label_mass(0, &pair.psi0) < 1e-10
            && self.wrong_label_mass(1, &pair.psi1) < 1e-10
    }
}

/// Two-failure outcome map: `{0,0}` names Ψ₀, `{1,1}` names Ψ₁.
pub const TWO_FAIL_MAP: [[Label; 2]; 2] = [[Label::S0, Label::Fail], [Label::Fail, Label::S1]];

/// One-failure outcome map: `{0,0}` and `{1,1}` name Ψ₀, `{1,0}` names Ψ₁, `{0,1}` fails.
pub const ONE_FAIL_MAP: [[Label; 2]; 2] = [[Label::S0, Label::Fail], [Label::S1, Label::S0]];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn computational_scheme_on_orthogonal_products() {
        let comp = [QubitVec::zero(), QubitVec::one()];
        let s = Scheme::projective(SchemeKind::TwoFail, comp, comp, TWO_FAIL_MAP);
        let pair = StatePair::new(
            TwoQubitState::from_real([1.0, 0.0, 0.0, 0.0]).unwrap(),
            TwoQubitState::from_real([0.0, 0.0, 0.0, 1.0]).unwrap(),
        );
        assert!(s.is_valid_for(&pair));
        let rep = s.failure_report(&pair);
        assert_eq!(rep.p_f, 0.0);
        assert_eq!(rep.gap, 0.0);
    }

    #[test]
    fn dropped_operator_breaks_completeness() {
        let comp = [QubitVec::zero(), QubitVec::one()];
        let mut s = Scheme::projective(SchemeKind::TwoFail, comp, comp, TWO_FAIL_MAP);
        s.ops_a.pop();
        assert!((s.completeness_residual() - 1.0).abs() < 1e-15);
    }
}

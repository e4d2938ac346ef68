//! Three-party secret sharing on top of the two-failure scheme.
//!
//! Charlie sends `Ψ₀ = sin θ|00⟩ + cos θ|11⟩` or `Ψ₁ = cos θ|00⟩ + sin θ|11⟩`,
//! one qubit to Alice and one to Bob. Each party measures either in the
//! computational check basis (probability `q_check`) or in its
//! discrimination basis. Rounds where both used the discrimination bases
//! are key rounds and are decoded with the two-failure outcome map; rounds
//! where both used the check basis must agree; mixed rounds are discarded.
//! A fixed fraction of conclusive key rounds is compared with Charlie's record.

use std::io::Write;

use rand_xoshiro::rand_core::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qlin::{QubitVec, TwoQubitState};
use crate::sampler::{sample_index, snapped, uniform, RngSpec, BLOCK};
use crate::scheme::{Label, TWO_FAIL_MAP};
use crate::states::family;
use crate::UsdError;

pub const DEFAULT_Q_CHECK: f64 = 0.25;
pub const DEFAULT_AUDIT_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Adversary {
    None,
    /// Eve measures both qubits in the discrimination bases and resends the
    /// product of the vectors she found.
    EveProductResend,
    /// Eve measures the same way and resends Ψ₀ or Ψ₁.
    EveSubspaceResend,
    /// Bob holds both qubits and feeds Alice a substitute.
    BobCapture,
    /// Bob's attack when Charlie alternates which party receives first.
    BobCaptureSequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QssConfig {
    pub theta: f64,
    pub q_check: f64,
    pub n_rounds: u64,
    pub adversary: Adversary,
    pub rng: RngSpec,
    pub audit_fraction: f64,
}

impl QssConfig {
    pub fn new(theta: f64, n_rounds: u64, adversary: Adversary, rng: RngSpec) -> Self {
        QssConfig {
            theta,
            q_check: DEFAULT_Q_CHECK,
            n_rounds,
            adversary,
            rng,
            audit_fraction: DEFAULT_AUDIT_FRACTION,
        }
    }

    pub fn validate(&self) -> Result<(), UsdError> {
        let t = self.theta;
        if !(t > 0.0 && t < std::f64::consts::FRAC_PI_2) || (t - std::f64::consts::FRAC_PI_4).abs() < 1e-12 {
            return Err(UsdError::ConfigError(format!("theta must lie in (0, π/2) and differ from π/4, got {t}")));
        }
        if !(0.0..1.0).contains(&self.q_check) {
            return Err(UsdError::ConfigError(format!("q_check must lie in [0, 1), got {}", self.q_check)));
        }
        if !(0.0..=1.0).contains(&self.audit_fraction) {
            return Err(UsdError::ConfigError(format!(
                "audit fraction must lie in [0, 1], got {}",
                self.audit_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Clean,
    EavesdropperSuspected,
    CheatSuspected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionStats {
    pub n_rounds: u64,
    /// Rounds where both parties used the discrimination bases.
    pub key_rounds: u64,
    /// Conclusive key rounds.
    pub key_bits: u64,
    pub fail_rate_key_rounds: f64,
    pub fail_rate_expected: f64,
    /// Rounds where both parties used the check basis.
    pub check_rounds: u64,
    pub check_disagreements: u64,
    pub audited_rounds: u64,
    pub state_mismatches: u64,
    /// Conclusive key bits the adversary holds correctly.
    pub adversary_known_bits: u64,
    pub verdict: Verdict,
}

/// Basis choice of one party in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Basis {
    Check,
    Disc,
}

impl Basis {
    fn name(self) -> &'static str {
        match self {
            Basis::Check => "check",
            Basis::Disc => "disc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u64,
    pub true_state: usize,
    pub alice_basis: Basis,
    pub bob_basis: Basis,
    pub alice_outcome: usize,
    pub bob_outcome: usize,
    /// Decoded label for key rounds.
    pub label: Option<Label>,
    /// The adversary's guess of Charlie's state, if any.
    #[serde(skip)]
    pub adversary_guess: Option<usize>,
}

/// States and local bases of the protocol at one angle.
#[derive(Debug, Clone, Copy)]
pub struct Protocol {
    pub psi: [TwoQubitState; 2],
    pub alice: [QubitVec; 2],
    pub bob: [QubitVec; 2],
}

impl Protocol {
    pub fn new(theta: f64) -> Result<Self, UsdError> {
        let pair = family::qss(theta)?;
        let (cot, tan) = (1.0 / theta.tan(), theta.tan());
        let unit = |a: f64, b: f64| QubitVec::real(a, b).normalized().expect("nonzero");
        Ok(Protocol {
            psi: [pair.psi0, pair.psi1],
            alice: [unit(1.0, cot.sqrt()), unit(1.0, -tan.sqrt())],
            bob: [unit(1.0, -cot.sqrt()), unit(1.0, tan.sqrt())],
        })
    }

    pub fn basis_a(&self, b: Basis) -> [QubitVec; 2] {
        match b {
            Basis::Check => [QubitVec::zero(), QubitVec::one()],
            Basis::Disc => self.alice,
        }
    }

    pub fn basis_b(&self, b: Basis) -> [QubitVec; 2] {
        match b {
            Basis::Check => [QubitVec::zero(), QubitVec::one()],
            Basis::Disc => self.bob,
        }
    }

    /// Joint outcome probabilities `[p00, p01, p10, p11]`.
    pub fn joint(&self, s: &TwoQubitState, ba: Basis, bb: Basis) -> [f64; 4] {
        let (x, y) = (self.basis_a(ba), self.basis_b(bb));
        std::array::from_fn(|k| s.project(&x[k / 2], &y[k % 2]).norm_sqr())
    }

    fn measure(&self, s: &TwoQubitState, ba: Basis, bb: Basis, rng: &mut impl Rng) -> (usize, usize) {
        let k = sample_index(&snapped(self.joint(s, ba, bb).to_vec()), uniform(rng));
        (k / 2, k % 2)
    }

    /// Discrimination measurement on both qubits, decoded.
    fn identify(&self, s: &TwoQubitState, rng: &mut impl Rng) -> (usize, usize, Label) {
        let (a, b) = self.measure(s, Basis::Disc, Basis::Disc, rng);
        (a, b, TWO_FAIL_MAP[a][b])
    }
}

/// Analytic failure rate of honest key rounds.
pub fn expected_fail_rate(theta: f64) -> f64 {
    (2.0 * theta).sin()
}

/// Probability that a both-check round disagrees after Eve resends the
/// product `r_A⊗r_B` or `r_A⊥⊗r_B⊥`; both give `2cotθ/(1+cotθ)²`.
pub fn product_resend_disagreement(theta: f64) -> f64 {
    let cot = 1.0 / theta.tan();
    2.0 * cot / (1.0 + cot).powi(2)
}

fn pick(rng: &mut impl Rng, p: f64) -> bool {
    uniform(rng) < p
}

fn choose_basis(rng: &mut impl Rng, q: f64) -> Basis {
    if pick(rng, q) {
        Basis::Check
    } else {
        Basis::Disc
    }
}

/// Eve's resend after measuring Charlie's state: the delivered state and her guess.
pub fn adversary_transform(
    proto: &Protocol,
    state: &TwoQubitState,
    strategy: Adversary,
    rng: &mut impl Rng,
) -> (TwoQubitState, Option<usize>) {
    match strategy {
        Adversary::EveProductResend | Adversary::EveSubspaceResend => {
            let (_, _, label) = proto.identify(state, rng);
            let guess = label.state().unwrap_or_else(|| usize::from(pick(rng, 0.5)));
            let sent = if strategy == Adversary::EveProductResend {
                TwoQubitState::product(&proto.alice[guess], &proto.bob[guess]).expect("unit vectors")
            } else {
                proto.psi[guess]
            };
            (sent, label.state())
        }
        _ => (*state, None),
    }
}

/// One round with Bob holding both of Charlie's qubits. Alice measures the
/// substitute Bob sent; Bob announces whatever keeps the public record clean.
fn bob_capture_round(proto: &Protocol, cfg: &QssConfig, state: &TwoQubitState, rng: &mut impl Rng) -> RoundRecord {
    let bob_basis = choose_basis(rng, cfg.q_check);
    let alice_basis = choose_basis(rng, cfg.q_check);
    let (sent, guess, announce): (QubitVec, Option<usize>, Box<dyn Fn(usize) -> usize>) = match bob_basis {
        Basis::Check => {
            let bit = usize::from(pick(rng, 0.5));
            (proto.basis_a(Basis::Check)[bit], None, Box::new(move |_| bit))
        }
        Basis::Disc => {
            let (_, _, label) = proto.identify(state, rng);
            let sent_idx = label.state().unwrap_or_else(|| usize::from(pick(rng, 0.5)));
            // Success: the matching outcome. Failure: the opposite, which decodes to FAIL.
            let success = label.state().is_some();
            let f = move |_alice: usize| if success { sent_idx } else { 1 - sent_idx };
            (proto.alice[sent_idx], label.state(), Box::new(f))
        }
    };
    let alice_outcome = measure_single(&sent, &proto.basis_a(alice_basis), rng);
    finish(alice_basis, bob_basis, alice_outcome, announce(alice_outcome), guess)
}

/// Alice-first round of the alternating protocol: Bob must commit to
/// Alice's substitute before he can identify Charlie's state.
fn bob_sequential_round(
    proto: &Protocol,
    cfg: &QssConfig,
    state: &TwoQubitState,
    rng: &mut impl Rng,
) -> RoundRecord {
    let bob_basis = choose_basis(rng, cfg.q_check);
    let alice_basis = choose_basis(rng, cfg.q_check);
    let sent_idx = usize::from(pick(rng, 0.5));
    let (sent, guess, bob_outcome_for) = match bob_basis {
        Basis::Check => (proto.basis_a(Basis::Check)[sent_idx], None, None),
        Basis::Disc => {
            let (_, _, label) = proto.identify(state, rng);
            (proto.alice[sent_idx], label.state(), Some(label))
        }
    };
    let alice_outcome = measure_single(&sent, &proto.basis_a(alice_basis), rng);
    let bob_outcome = match bob_outcome_for {
        None => sent_idx,
        // Matching identification: confirm it. Anything else: announce failure.
        Some(label) if label.state() == Some(sent_idx) => sent_idx,
        Some(_) => 1 - sent_idx,
    };
    finish(alice_basis, bob_basis, alice_outcome, bob_outcome, guess)
}

fn measure_single(v: &QubitVec, basis: &[QubitVec; 2], rng: &mut impl Rng) -> usize {
    let probs = snapped(basis.iter().map(|x| x.inner(v).norm_sqr()).collect());
    sample_index(&probs, uniform(rng))
}

fn finish(ba: Basis, bb: Basis, a: usize, b: usize, guess: Option<usize>) -> RoundRecord {
    RoundRecord {
        round: 0,
        true_state: 0,
        alice_basis: ba,
        bob_basis: bb,
        alice_outcome: a,
        bob_outcome: b,
        label: (ba == Basis::Disc && bb == Basis::Disc).then(|| TWO_FAIL_MAP[a][b]),
        adversary_guess: guess,
    }
}

fn play_round(proto: &Protocol, cfg: &QssConfig, round: u64, rng: &mut impl Rng) -> RoundRecord {
    let bit = usize::from(pick(rng, 0.5));
    let state = proto.psi[bit];
    let mut rec = match cfg.adversary {
        Adversary::BobCapture => bob_capture_round(proto, cfg, &state, rng),
        Adversary::BobCaptureSequential if round.is_multiple_of(2) => bob_sequential_round(proto, cfg, &state, rng),
        _ => {
            let (delivered, guess) = adversary_transform(proto, &state, cfg.adversary, rng);
            let ba = choose_basis(rng, cfg.q_check);
            let bb = choose_basis(rng, cfg.q_check);
            let (a, b) = proto.measure(&delivered, ba, bb, rng);
            finish(ba, bb, a, b, guess)
        }
    };
    rec.round = round;
    rec.true_state = bit;
    rec
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Tally {
    key_rounds: u64,
    key_bits: u64,
    fails: u64,
    check_rounds: u64,
    check_disagreements: u64,
    audited: u64,
    mismatches: u64,
    known: u64,
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        self.key_rounds += o.key_rounds;
        self.key_bits += o.key_bits;
        self.fails += o.fails;
        self.check_rounds += o.check_rounds;
        self.check_disagreements += o.check_disagreements;
        self.audited += o.audited;
        self.mismatches += o.mismatches;
        self.known += o.known;
        self
    }

    fn record(&mut self, rec: &RoundRecord, audit: bool) {
        match (rec.alice_basis, rec.bob_basis) {
            (Basis::Check, Basis::Check) => {
                self.check_rounds += 1;
                if rec.alice_outcome != rec.bob_outcome {
                    self.check_disagreements += 1;
                }
            }
            (Basis::Disc, Basis::Disc) => {
                self.key_rounds += 1;
                match rec.label.and_then(Label::state) {
                    None => self.fails += 1,
                    Some(named) => {
                        self.key_bits += 1;
                        if rec.adversary_guess == Some(rec.true_state) {
                            self.known += 1;
                        }
                        if audit {
                            self.audited += 1;
                            if named != rec.true_state {
                                self.mismatches += 1;
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

fn simulate(cfg: &QssConfig, keep_log: bool) -> Result<(SessionStats, Vec<RoundRecord>), UsdError> {
    cfg.validate()?;
    let proto = Protocol::new(cfg.theta)?;
    let n = cfg.n_rounds;
    let blocks: Vec<(Tally, Vec<RoundRecord>)> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|block| {
            let mut rng = cfg.rng.block_rng(block);
            let start = block * BLOCK;
            let end = (start + BLOCK).min(n);
            let mut tally = Tally::default();
            let mut log = Vec::new();
            for round in start..end {
                let rec = play_round(&proto, cfg, round, &mut rng);
                let audit = pick(&mut rng, cfg.audit_fraction);
                tally.record(&rec, audit);
                if keep_log {
                    log.push(rec);
                }
            }
            (tally, log)
        })
        .collect();
    let mut tally = Tally::default();
    let mut log = Vec::new();
    for (t, l) in blocks {
        tally = tally.add(t);
        log.extend(l);
    }
    let mut stats = SessionStats {
        n_rounds: n,
        key_rounds: tally.key_rounds,
        key_bits: tally.key_bits,
        fail_rate_key_rounds: if tally.key_rounds == 0 {
            0.0
        } else {
            tally.fails as f64 / tally.key_rounds as f64
        },
        fail_rate_expected: expected_fail_rate(cfg.theta),
        check_rounds: tally.check_rounds,
        check_disagreements: tally.check_disagreements,
        audited_rounds: tally.audited,
        state_mismatches: tally.mismatches,
        adversary_known_bits: tally.known,
        verdict: Verdict::Clean,
    };
    stats.verdict = analyze_session(&stats, DEFAULT_SIGMA);
    Ok((stats, log))
}

pub const DEFAULT_SIGMA: f64 = 3.0;

pub fn run_session(cfg: &QssConfig) -> Result<SessionStats, UsdError> {
    simulate(cfg, false).map(|(s, _)| s)
}

/// As [`run_session`], also returning every round in order.
pub fn run_session_logged(cfg: &QssConfig) -> Result<(SessionStats, Vec<RoundRecord>), UsdError> {
    simulate(cfg, true)
}

/// `true` if `count` of `n` sits more than `sigma` binomial standard errors above zero.
pub fn excess_over_zero(count: u64, n: u64, sigma: f64) -> bool {
    if n == 0 || count == 0 {
        return false;
    }
    let r = count as f64 / n as f64;
    r > sigma * (r * (1.0 - r) / n as f64).sqrt()
}

pub fn analyze_session(stats: &SessionStats, sigma_threshold: f64) -> Verdict {
    if excess_over_zero(stats.check_disagreements, stats.check_rounds, sigma_threshold)
        || excess_over_zero(stats.state_mismatches, stats.audited_rounds, sigma_threshold)
    {
        return Verdict::EavesdropperSuspected;
    }
    if stats.key_rounds > 0 {
        let p = stats.fail_rate_expected;
        let se = (p * (1.0 - p) / stats.key_rounds as f64).sqrt();
        if stats.fail_rate_key_rounds - p > sigma_threshold * se {
            return Verdict::CheatSuspected;
        }
    }
    Verdict::Clean
}

/// Session report: configuration echo plus statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionReport {
    pub config: QssConfig,
    pub seed: u64,
    #[serde(flatten)]
    pub stats: SessionStats,
}

/// CSV round log with header `round,true_state,alice_basis,bob_basis,alice_outcome,bob_outcome,label`.
pub fn write_round_log<W: Write>(out: W, rounds: &[RoundRecord]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record([
        "round",
        "true_state",
        "alice_basis",
        "bob_basis",
        "alice_outcome",
        "bob_outcome",
        "label",
    ])?;
    for r in rounds {
        let label = match r.label {
            Some(Label::S0) => "S0",
            Some(Label::S1) => "S1",
            Some(Label::Fail) => "FAIL",
            None => "",
        };
        w.write_record([
            r.round.to_string(),
            r.true_state.to_string(),
            r.alice_basis.name().to_string(),
            r.bob_basis.name().to_string(),
            r.alice_outcome.to_string(),
            r.bob_outcome.to_string(),
            label.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cfg(adv: Adversary, n: u64) -> QssConfig {
        QssConfig::new(PI / 6.0, n, adv, RngSpec::new(11))
    }

    #[test]
    fn bases_from_protocol_text() {
        let p = Protocol::new(PI / 6.0).unwrap();
        for v in p.alice.iter().chain(p.bob.iter()) {
            assert!(v.is_unit());
        }
        assert_abs_diff_eq!(p.alice[0].inner(&p.alice[1]).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.bob[0].inner(&p.bob[1]).norm(), 0.0, epsilon = 1e-15);
        // Zero error: Ψ₁ never lands on {0,0}, Ψ₀ never on {1,1}.
        assert!(p.joint(&p.psi[1], Basis::Disc, Basis::Disc)[0] < 1e-30);
        assert!(p.joint(&p.psi[0], Basis::Disc, Basis::Disc)[3] < 1e-30);
        for s in &p.psi {
            let j = p.joint(s, Basis::Check, Basis::Check);
            assert_eq!(j[1] + j[2], 0.0);
        }
    }

    #[test]
    fn honest_key_failure_matches_sin_2theta() {
        let p = Protocol::new(PI / 6.0).unwrap();
        for s in &p.psi {
            let j = p.joint(s, Basis::Disc, Basis::Disc);
            assert_abs_diff_eq!(j[1] + j[2], (PI / 3.0).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn alice_marginal_ignores_bob_basis() {
        let p = Protocol::new(0.4).unwrap();
        for s in &p.psi {
            for ba in [Basis::Check, Basis::Disc] {
                let x = p.joint(s, ba, Basis::Check);
                let y = p.joint(s, ba, Basis::Disc);
                assert_abs_diff_eq!(x[0] + x[1], y[0] + y[1], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn product_resend_disagreement_formula() {
        let p = Protocol::new(PI / 6.0).unwrap();
        for k in 0..2 {
            let s = TwoQubitState::product(&p.alice[k], &p.bob[k]).unwrap();
            let j = p.joint(&s, Basis::Check, Basis::Check);
            assert_abs_diff_eq!(j[1] + j[2], product_resend_disagreement(PI / 6.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg(Adversary::None, 10);
        c.theta = PI / 4.0;
        assert!(run_session(&c).is_err());
        c.theta = 0.0;
        assert!(run_session(&c).is_err());
        let mut c = cfg(Adversary::None, 10);
        c.q_check = 1.0;
        assert!(matches!(run_session(&c), Err(UsdError::ConfigError(_))));
    }

    #[test]
    fn honest_session_is_clean() {
        let s = run_session(&cfg(Adversary::None, 20_000)).unwrap();
        assert_eq!(s.check_disagreements, 0);
        assert_eq!(s.state_mismatches, 0);
        assert_eq!(s.verdict, Verdict::Clean);
        assert_eq!(s.adversary_known_bits, 0);
    }

    #[test]
    fn bob_capture_is_silent_but_informed() {
        let s = run_session(&cfg(Adversary::BobCapture, 20_000)).unwrap();
        assert_eq!(s.check_disagreements, 0);
        assert_eq!(s.state_mismatches, 0);
        assert_eq!(s.adversary_known_bits, s.key_bits);
    }

    #[test]
    fn logged_session_is_reproducible() {
        let c = cfg(Adversary::EveSubspaceResend, 3_000);
        let (a, la) = run_session_logged(&c).unwrap();
        let (b, lb) = run_session_logged(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert_eq!(la.len(), 3_000);
        assert_eq!(run_session(&c).unwrap(), a);
        let mut buf = Vec::new();
        write_round_log(&mut buf, &la[..2]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("round,true_state,alice_basis,bob_basis,alice_outcome,bob_outcome,label\n0,"));
    }

    #[test]
    fn verdict_thresholds() {
        let base = SessionStats {
            n_rounds: 0,
            key_rounds: 10_000,
            key_bits: 0,
            fail_rate_key_rounds: 0.866,
            fail_rate_expected: 0.866,
            check_rounds: 0,
            check_disagreements: 0,
            audited_rounds: 10_000,
            state_mismatches: 0,
            adversary_known_bits: 0,
            verdict: Verdict::Clean,
        };
        assert_eq!(analyze_session(&base, 3.0), Verdict::Clean);
        let eve = SessionStats {
            state_mismatches: 500,
            ..base
        };
        assert_eq!(analyze_session(&eve, 3.0), Verdict::EavesdropperSuspected);
        let cheat = SessionStats {
            fail_rate_key_rounds: 0.93,
            ..base
        };
        assert_eq!(analyze_session(&cheat, 3.0), Verdict::CheatSuspected);
    }
}

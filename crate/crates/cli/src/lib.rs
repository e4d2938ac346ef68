//! Command-line front end for the `usd` binary.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use usd_core::nocomm::{self, NoCommCase};
use usd_core::output::write_curve_csv;
use usd_core::qss::{self, Adversary, QssConfig};
use usd_core::sampler::{self, RngSpec};
use usd_core::states::{family, parse_state_literal};
use usd_core::{idp_bound, onefail, schmidt_decompose, twofail, Scheme, SchemeKind, StatePair, UsdError};

pub mod verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "usd", version, about = "Local unambiguous discrimination of two-qubit states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Schmidt decomposition of the input states.
    Schmidt(PairArgs),
    /// Overlap and optimal joint-measurement failure probability.
    Idp(PairArgs),
    /// Build a zero-error local scheme.
    Solve {
        #[arg(value_enum)]
        kind: SolveKind,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Failure-probability curve as CSV.
    Curve {
        #[arg(value_enum)]
        which: CurveKind,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// Output path; `-` writes to standard output.
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Monte Carlo run of a solved scheme.
    Mc {
        #[arg(long, value_enum, default_value_t = McScheme::TwoFail)]
        scheme: McScheme,
        #[arg(long, default_value_t = 100_000)]
        rounds: u64,
        #[arg(long, env = "USD_SEED", default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Secret-sharing session simulation.
    Qss {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        deg: bool,
        #[arg(long, default_value_t = qss::DEFAULT_Q_CHECK)]
        q_check: f64,
        #[arg(long, default_value_t = 100_000)]
        rounds: u64,
        #[arg(long, value_enum, default_value_t = AdversaryArg::None)]
        adversary: AdversaryArg,
        #[arg(long, default_value_t = qss::DEFAULT_AUDIT_FRACTION)]
        audit_fraction: f64,
        #[arg(long, default_value_t = qss::DEFAULT_SIGMA)]
        sigma: f64,
        #[arg(long, env = "USD_SEED", default_value_t = 1)]
        seed: u64,
        /// Write a per-round CSV log to this path.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run the built-in verification checks.
    Verify {
        #[arg(long, default_value_t = 100_000)]
        mc_rounds: u64,
        #[arg(long, env = "USD_SEED", default_value_t = 1)]
        seed: u64,
        /// Restrict to one check group.
        #[arg(long, value_enum)]
        only: Option<verify::Group>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveKind {
    TwoFail,
    OneFail,
    NoComm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    Fig1,
    Fig2,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum McScheme {
    TwoFail,
    OneFail,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyArg {
    SameBasis,
    XzMixed,
    Qss,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdversaryArg {
    None,
    EveProduct,
    EveSubspace,
    BobCapture,
    BobSequential,
}

impl From<AdversaryArg> for Adversary {
    fn from(a: AdversaryArg) -> Self {
        match a {
            AdversaryArg::None => Adversary::None,
            AdversaryArg::EveProduct => Adversary::EveProductResend,
            AdversaryArg::EveSubspace => Adversary::EveSubspaceResend,
            AdversaryArg::BobCapture => Adversary::BobCapture,
            AdversaryArg::BobSequential => Adversary::BobCaptureSequential,
        }
    }
}

/// The two ways of naming a state pair: a family shortcut or explicit amplitudes.
#[derive(Args, Debug, Clone)]
pub struct PairArgs {
    #[arg(long, value_enum, conflicts_with_all = ["state0", "state1"])]
    pub family: Option<FamilyArg>,
    #[arg(long, allow_hyphen_values = true, requires = "family")]
    pub theta0: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "family")]
    pub theta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "family")]
    pub theta: Option<f64>,
    /// Amplitudes `a00,a01,a10,a11`; each `re`, `re+imi` or `imi`.
    #[arg(long, allow_hyphen_values = true)]
    pub state0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub state1: Option<String>,
    /// Prior probability of Ψ₀.
    #[arg(long, default_value_t = 0.5)]
    pub prior0: f64,
    /// Read angles in degrees.
    #[arg(long)]
    pub deg: bool,
}

/// Failure with its exit code; the message goes to the error stream.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: msg.into(),
        }
    }

    fn io(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("I/O error: {e}"),
        }
    }
}

impl From<UsdError> for Failure {
    fn from(e: UsdError) -> Self {
        let code = match e {
            UsdError::Infeasible(_) | UsdError::ConstraintViolated(_) | UsdError::NotDetectorCase(_) => EXIT_INFEASIBLE,
            UsdError::ResidualTooLarge { .. } => EXIT_VERIFY,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// The pair plus what the family shortcut said about it.
struct Resolved {
    pair: StatePair,
    family: Option<(FamilyArg, f64, f64)>,
}

impl PairArgs {
    fn angle(&self, v: Option<f64>, name: &str) -> Result<f64, Failure> {
        let v = v.ok_or_else(|| Failure::input(format!("--{name} is required for this family")))?;
        Ok(if self.deg { v.to_radians() } else { v })
    }

    fn resolve(&self, need_two: bool) -> Result<Resolved, Failure> {
        let (pair, fam) = match self.family {
            Some(f) => {
                let (t0, t1) = match f {
                    FamilyArg::Qss => {
                        let t = self.angle(self.theta, "theta")?;
                        (FRAC_PI_2 - t, t)
                    }
                    _ => (self.angle(self.theta0, "theta0")?, self.angle(self.theta1, "theta1")?),
                };
                let pair = match f {
                    FamilyArg::XzMixed => family::xz_mixed(t0, t1)?,
                    _ => family::same_basis(t0, t1)?,
                };
                (pair, Some((f, t0, t1)))
            }
            None => {
                let s0 = self
                    .state0
                    .as_deref()
                    .ok_or_else(|| Failure::input("give --family or --state0/--state1"))?;
                let s0 = parse_state_literal(s0)?;
                let s1 = match self.state1.as_deref() {
                    Some(t) => parse_state_literal(t)?,
                    None if need_two => return Err(Failure::input("--state1 is required")),
                    None => s0,
                };
                (StatePair::new(s0, s1), None)
            }
        };
        let pair = pair.with_priors(self.prior0)?;
        Ok(Resolved { pair, family: fam })
    }
}

/// Same-basis angles typed to a few digits rarely satisfy `θ₀ + θ₁ = π/2`
/// exactly; snap them when they are within input precision.
const SNAP_TOL: f64 = 1e-6;

fn snap_same_basis(r: Resolved, prior0: f64, err: &mut dyn Write) -> Result<Resolved, Failure> {
    let Some((FamilyArg::SameBasis, t0, t1)) = r.family else {
        return Ok(r);
    };
    let off = t0 + t1 - FRAC_PI_2;
    if off == 0.0 || off.abs() > SNAP_TOL {
        return Ok(r);
    }
    let t0s = FRAC_PI_2 - t1;
    let _ = writeln!(err, "note: theta0 snapped from {t0} to π/2 − theta1 = {t0s} (offset {off:e})");
    let pair = family::same_basis(t0s, t1)?.with_priors(prior0)?;
    Ok(Resolved {
        pair,
        family: Some((FamilyArg::SameBasis, t0s, t1)),
    })
}

fn emit_json(out: &mut dyn Write, v: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).map_err(Failure::io)?;
    writeln!(out, "{text}").map_err(Failure::io)
}

fn schmidt_json(s: &usd_core::TwoQubitState) -> Value {
    let d = schmidt_decompose(s);
    json!({
        "lambda": d.lam,
        "basis_a": d.basis_a,
        "basis_b": d.basis_b,
        "degenerate": d.degenerate,
        "product": d.is_product(),
    })
}

/// Best one-failure scheme for the pair, if one exists.
fn one_fail_scheme(r: &Resolved) -> Result<(Scheme, f64), Failure> {
    if let Some((FamilyArg::SameBasis, t0, t1)) = r.family {
        if (t1 + FRAC_PI_4).abs() < SNAP_TOL {
            let scheme = onefail::solve_one_fail_same_basis(t0)?;
            let res = scheme.zero_error_residual(&r.pair);
            return Ok((scheme, res));
        }
    }
    let f = onefail::one_fail_feasible(&r.pair);
    match (f.feasible, f.bases) {
        (true, Some(b)) => Ok((b.scheme(SchemeKind::OneFail, usd_core::scheme::ONE_FAIL_MAP), f.residual)),
        _ => Err(UsdError::Infeasible(format!("no one-failure scheme; best residual {:.3e}", f.residual)).into()),
    }
}

fn cmd_solve(kind: SolveKind, args: &PairArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let r = args.resolve(true)?;
    match kind {
        SolveKind::TwoFail => {
            let r = snap_same_basis(r, args.prior0, err)?;
            match twofail::solve(&r.pair) {
                Ok(sol) => {
                    emit_json(out, &json!({
                        "scheme_kind": "two-fail",
                        "feasible": true,
                        "p_f": sol.report.p_f,
                        "p_fidp": sol.report.p_fidp,
                        "report": sol.report,
                        "ratios": sol.ratios,
                        "scheme": sol.scheme,
                    }))?;
                    Ok(EXIT_OK)
                }
                Err(e @ (UsdError::Infeasible(_) | UsdError::ConstraintViolated(_))) => {
                    emit_json(out, &json!({"scheme_kind": "two-fail", "feasible": false, "reason": e.to_string()}))?;
                    let _ = writeln!(err, "{e}");
                    Ok(EXIT_INFEASIBLE)
                }
                Err(e) => Err(e.into()),
            }
        }
        SolveKind::OneFail => match one_fail_scheme(&r) {
            Ok((scheme, residual)) => {
                let report = scheme.failure_report(&r.pair);
                emit_json(out, &json!({
                    "scheme_kind": "one-fail",
                    "feasible": true,
                    "residual": residual,
                    "p_f": report.p_f,
                    "p_fidp": report.p_fidp,
                    "report": report,
                    "scheme": scheme,
                }))?;
                Ok(EXIT_OK)
            }
            Err(f) if f.code == EXIT_INFEASIBLE => {
                emit_json(out, &json!({"scheme_kind": "one-fail", "feasible": false, "reason": f.message}))?;
                let _ = writeln!(err, "{}", f.message);
                Ok(EXIT_INFEASIBLE)
            }
            Err(f) => Err(f),
        },
        SolveKind::NoComm => {
            let (cls, scheme, result) = nocomm::analyze(&r.pair);
            emit_json(out, &json!({
                "case": result.case,
                "detail": result.detail,
                "detect_prob": result.detect_prob,
                "p_fail_0": result.p_fail_0,
                "p_fail_1": result.p_fail_1,
                "scheme": scheme,
            }))?;
            Ok(if cls.case == NoCommCase::AlwaysFail { EXIT_INFEASIBLE } else { EXIT_OK })
        }
    }
}

fn open_out(path: &str) -> Result<Box<dyn Write>, Failure> {
    if path == "-" {
        Ok(Box::new(io::stdout()))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path).map_err(|e| Failure::io(format!("{path}: {e}")))?)))
    }
}

fn cmd_curve(which: CurveKind, steps: usize, path: &str, out: &mut dyn Write) -> Result<i32, Failure> {
    if steps < 2 {
        return Err(Failure::input(format!("--steps must be at least 2, got {steps}")));
    }
    let (rows, name) = match which {
        CurveKind::Fig1 => (twofail::curve_fig1(steps)?, "theta1"),
        CurveKind::Fig2 => (onefail::curve_fig2(steps)?, "theta0"),
    };
    if path == "-" {
        write_curve_csv(out, name, &rows).map_err(Failure::io)?;
    } else {
        let w = open_out(path)?;
        write_curve_csv(w, name, &rows).map_err(Failure::io)?;
    }
    Ok(EXIT_OK)
}

fn cmd_mc(kind: McScheme, rounds: u64, seed: u64, args: &PairArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let r = args.resolve(true)?;
    let scheme = match kind {
        McScheme::TwoFail => {
            let r2 = snap_same_basis(r, args.prior0, err)?;
            let s = twofail::solve(&r2.pair)?.scheme;
            return mc_report(&s, &r2.pair, rounds, seed, out);
        }
        McScheme::OneFail => one_fail_scheme(&r)?.0,
    };
    mc_report(&scheme, &r.pair, rounds, seed, out)
}

fn mc_report(scheme: &Scheme, pair: &StatePair, rounds: u64, seed: u64, out: &mut dyn Write) -> Result<i32, Failure> {
    let stats = sampler::run_trials(scheme, pair, rounds, RngSpec::new(seed));
    let p = scheme.failure_report(pair).p_f;
    let sigma = (p * (1.0 - p) / rounds.max(1) as f64).sqrt();
    let z = if sigma > 0.0 { (stats.fail_rate - p) / sigma } else { 0.0 };
    emit_json(out, &json!({
        "stats": stats,
        "p_f_analytic": p,
        "z_score": z,
    }))?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_qss(
    theta: f64,
    q_check: f64,
    rounds: u64,
    adversary: AdversaryArg,
    audit_fraction: f64,
    sigma: f64,
    seed: u64,
    log: Option<&PathBuf>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = QssConfig {
        theta,
        q_check,
        n_rounds: rounds,
        adversary: adversary.into(),
        rng: RngSpec::new(seed),
        audit_fraction,
    };
    let (mut stats, records) = if log.is_some() {
        qss::run_session_logged(&cfg)?
    } else {
        (qss::run_session(&cfg)?, Vec::new())
    };
    stats.verdict = qss::analyze_session(&stats, sigma);
    if let Some(path) = log {
        let f = File::create(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        qss::write_round_log(BufWriter::new(f), &records).map_err(Failure::io)?;
    }
    emit_json(out, &qss::SessionReport { config: cfg, seed, stats })?;
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Schmidt(args) => {
            let r = args.resolve(false)?;
            let mut v = json!({"state0": schmidt_json(&r.pair.psi0)});
            if args.state1.is_some() || args.family.is_some() {
                v["state1"] = schmidt_json(&r.pair.psi1);
            }
            emit_json(out, &v)?;
            Ok(EXIT_OK)
        }
        Command::Idp(args) => {
            let r = args.resolve(true)?;
            let b = idp_bound(&r.pair);
            emit_json(out, &json!({"overlap": [b.overlap.re, b.overlap.im], "overlap_abs": b.overlap.norm(), "p_fidp": b.p_fidp}))?;
            Ok(EXIT_OK)
        }
        Command::Solve { kind, pair } => cmd_solve(kind, &pair, out, err),
        Command::Curve { which, steps, out: path } => cmd_curve(which, steps, &path, out),
        Command::Mc {
            scheme,
            rounds,
            seed,
            pair,
        } => cmd_mc(scheme, rounds, seed, &pair, out, err),
        Command::Qss {
            theta,
            deg,
            q_check,
            rounds,
            adversary,
            audit_fraction,
            sigma,
            seed,
            log,
        } => {
            let theta = if deg { theta.to_radians() } else { theta };
            cmd_qss(theta, q_check, rounds, adversary, audit_fraction, sigma, seed, log.as_ref(), out)
        }
        Command::Verify { mc_rounds, seed, only } => {
            let checks = verify::run_suite(&verify::SuiteOptions { mc_rounds, seed, only });
            let passed = checks.iter().all(|c| c.pass);
            for c in checks.iter().filter(|c| !c.pass) {
                let _ = writeln!(err, "FAIL {}: {}", c.name, c.detail);
            }
            emit_json(out, &json!({"passed": passed, "checks": checks}))?;
            Ok(if passed { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_INPUT,
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

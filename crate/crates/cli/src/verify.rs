//! Built-in self checks behind `usd verify`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use clap::ValueEnum;
use serde::Serialize;

use usd_core::nocomm::{self, NoCommCase};
use usd_core::qss::{self, Adversary, QssConfig};
use usd_core::sampler::{self, RngSpec};
use usd_core::states::family;
use usd_core::{onefail, schmidt_decompose, twofail, TwoQubitState};

const TOL: f64 = 1e-9;
const MC_SIGMA: f64 = 4.0;

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Qlin,
    Twofail,
    Onefail,
    Nocomm,
    Sampler,
    Qss,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub group: Group,
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tol: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub mc_rounds: u64,
    pub seed: u64,
    pub only: Option<Group>,
}

struct Suite {
    group: Group,
    checks: Vec<Check>,
}

impl Suite {
    /// Records `value <= tol`.
    fn bound(&mut self, name: &str, value: f64, tol: f64) {
        let pass = value.is_finite() && value <= tol;
        self.checks.push(Check {
            group: self.group,
            name: name.to_string(),
            pass,
            value,
            tol,
            detail: format!("{value:.3e} vs {tol:.1e}"),
        });
    }

    fn flag(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check {
            group: self.group,
            name: name.to_string(),
            pass,
            value: if pass { 0.0 } else { 1.0 },
            tol: 0.0,
            detail,
        });
    }

    fn error(&mut self, name: &str, e: impl std::fmt::Display) {
        self.flag(name, false, e.to_string());
    }
}

fn qlin(s: &mut Suite) {
    for (name, amps) in [
        ("schmidt_product", [1.0, 0.0, 0.0, 0.0]),
        ("schmidt_bell", [FRAC_PI_4.cos(), 0.0, 0.0, FRAC_PI_4.sin()]),
        ("schmidt_generic", [0.5, 0.1, -0.3, 0.8]),
    ] {
        let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        let st = TwoQubitState::from_real(amps.map(|a| a / norm)).expect("nonzero literal");
        let d = schmidt_decompose(&st);
        s.bound(name, st.max_abs_diff(&d.reconstruct()), 1e-10);
    }
    let d = schmidt_decompose(&TwoQubitState::from_real([(PI / 6.0).cos(), 0.0, 0.0, (PI / 6.0).sin()]).expect("unit"));
    s.bound("schmidt_values_pi6", (d.lam[0] - 0.75).abs().max((d.lam[1] - 0.25).abs()), 1e-12);
}

fn twofail_checks(s: &mut Suite) {
    for t1 in [0.3, 0.5, 0.9, 1.2] {
        let name = format!("same_basis_theta1_{t1}");
        match family::same_basis(FRAC_PI_2 - t1, t1).and_then(|p| twofail::solve(&p).map(|sol| (p, sol))) {
            Ok((p, sol)) => {
                s.bound(&format!("{name}_completeness"), sol.scheme.completeness_residual(), 1e-12);
                s.bound(&format!("{name}_zero_error"), sol.scheme.zero_error_residual(&p), 1e-10);
                s.bound(&format!("{name}_closed_form"), (sol.report.p_f - (2.0 * t1).sin()).abs(), TOL);
            }
            Err(e) => s.error(&name, e),
        }
    }
    match twofail::curve_fig1(50) {
        Ok(rows) => {
            let worst = rows
                .iter()
                .map(|r| (r.p_f - twofail::fig1_closed_form(r.theta)).abs())
                .fold(0.0, f64::max);
            s.bound("fig1_closed_form", worst, TOL);
            let below = rows.iter().filter(|r| r.p_f < r.p_fidp - TOL).count();
            s.flag("fig1_above_idp", below == 0, format!("{below} rows below the joint bound"));
        }
        Err(e) => s.error("fig1_closed_form", e),
    }
}

fn onefail_checks(s: &mut Suite) {
    for t0 in [0.2, FRAC_PI_4, 1.0, FRAC_PI_2] {
        let name = format!("same_basis_theta0_{t0:.4}");
        match onefail::solve_one_fail_same_basis(t0).and_then(|sc| onefail::same_basis_pair(t0).map(|p| (sc, p))) {
            Ok((sc, p)) => {
                s.bound(&format!("{name}_zero_error"), sc.zero_error_residual(&p), 1e-10);
                let rep = onefail::one_fail_report(&sc, &p);
                s.bound(&format!("{name}_closed_form"), (rep.p_f - onefail::one_fail_closed_form(t0)).abs(), TOL);
            }
            Err(e) => s.error(&name, e),
        }
    }
}

fn nocomm_checks(s: &mut Suite) {
    let cases = [
        ("product_vs_bell", [1.0, 0.0, 0.0, 0.0], [FRAC_PI_4.cos(), 0.0, 0.0, FRAC_PI_4.sin()], Some(0.5)),
        ("orthogonal_products", [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], Some(1.0)),
        ("both_entangled", [0.6, 0.0, 0.0, 0.8], [0.8, 0.0, 0.0, -0.6], None),
    ];
    for (name, a, b, expect) in cases {
        let pair = usd_core::StatePair::new(
            TwoQubitState::from_real(a).expect("unit"),
            TwoQubitState::from_real(b).expect("unit"),
        );
        let (cls, scheme, res) = nocomm::analyze(&pair);
        s.bound(&format!("{name}_completeness"), scheme.completeness_residual(), 1e-12);
        s.bound(&format!("{name}_error_mass"), scheme.error_mass(&pair), 1e-10);
        match expect {
            Some(p) => s.bound(&format!("{name}_detect_prob"), (res.detect_prob - p).abs(), TOL),
            None => s.flag(
                &format!("{name}_always_fail"),
                cls.case == NoCommCase::AlwaysFail,
                cls.case.name().to_string(),
            ),
        }
    }
}

fn sampler_checks(s: &mut Suite, opts: &SuiteOptions) {
    let t1 = 0.6;
    let built = family::same_basis(FRAC_PI_2 - t1, t1).and_then(|p| twofail::solve(&p).map(|sol| (p, sol)));
    let (pair, sol) = match built {
        Ok(v) => v,
        Err(e) => return s.error("mc_setup", e),
    };
    let v = sampler::verify_scheme(&sol.scheme, &pair);
    s.flag("verify_scheme", v.pass, format!("zero-error residual {:.3e}", v.zero_error_residual));
    let n = opts.mc_rounds.max(1);
    let stats = sampler::run_trials(&sol.scheme, &pair, n, RngSpec::new(opts.seed));
    s.flag("mc_no_errors", stats.error_count == 0, format!("{} wrong labels", stats.error_count));
    let p = sol.report.p_f;
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    let z = (stats.fail_rate - p).abs() / sd;
    s.checks.push(Check {
        group: s.group,
        name: format!("mc_fail_rate_{MC_SIGMA}sigma"),
        pass: z <= MC_SIGMA,
        value: z,
        tol: MC_SIGMA,
        detail: format!("observed {:.6} expected {:.6} ({z:.2}σ)", stats.fail_rate, p),
    });
}

fn qss_checks(s: &mut Suite, opts: &SuiteOptions) {
    let theta = 0.5;
    let n = opts.mc_rounds.max(1000);
    let run = |adv: Adversary| {
        let cfg = QssConfig::new(theta, n, adv, RngSpec::new(opts.seed));
        qss::run_session(&cfg).map(|st| (st, qss::analyze_session(&st, qss::DEFAULT_SIGMA)))
    };
    match run(Adversary::None) {
        Ok((st, verdict)) => {
            s.flag("honest_clean", verdict == qss::Verdict::Clean, format!("{verdict:?}"));
            let sd = (st.fail_rate_expected * (1.0 - st.fail_rate_expected) / st.key_rounds.max(1) as f64).sqrt();
            let z = (st.fail_rate_key_rounds - st.fail_rate_expected).abs() / sd;
            s.flag(
                "honest_fail_rate",
                z <= MC_SIGMA,
                format!("observed {:.6} expected {:.6} ({z:.2}σ)", st.fail_rate_key_rounds, st.fail_rate_expected),
            );
        }
        Err(e) => s.error("honest_session", e),
    }
    match run(Adversary::EveProductResend) {
        Ok((_, verdict)) => s.flag(
            "eve_detected",
            verdict == qss::Verdict::EavesdropperSuspected,
            format!("{verdict:?}"),
        ),
        Err(e) => s.error("eve_session", e),
    }
}

/// Runs every check in the selected groups, in a fixed order.
pub fn run_suite(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = Vec::new();
    let groups = [Group::Qlin, Group::Twofail, Group::Onefail, Group::Nocomm, Group::Sampler, Group::Qss];
    for g in groups {
        if opts.only.is_some_and(|o| o != g) {
            continue;
        }
        let mut s = Suite { group: g, checks: Vec::new() };
        match g {
            Group::Qlin => qlin(&mut s),
            Group::Twofail => twofail_checks(&mut s),
            Group::Onefail => onefail_checks(&mut s),
            Group::Nocomm => nocomm_checks(&mut s),
            Group::Sampler => sampler_checks(&mut s, opts),
            Group::Qss => qss_checks(&mut s, opts),
        }
        out.extend(s.checks);
    }
    out
}

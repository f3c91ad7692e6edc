//! Command-line front end: `stationary`, `distribution`, `verify`, `sweep-theta`, `sample-tpm`.
//!
//! Exit codes: 0 when every check passes, 1 for usage or configuration errors, 2 for
//! mathematical failures (channel pathologies or residuals above tolerance).
//!
//! `QFLUCT_TOLERANCE` overrides the residual tolerance of `verify` and `sweep-theta`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::channels::{check_covariance, stationary_state_with, superoperator_distance, StationaryState};
use crate::config::{Builder, ConfigError, ConfigOrMath, ExperimentConfig};
use crate::fluctuation::{
    average_entropy_production, crooks_check, forward_distribution, integral_ft, marginal_identity_residuals,
    marginalize_real, relative_entropy, reverse_distribution, transition_amplitudes, Direction, ProcessContext,
    QuasiProbDistribution,
};
use crate::reversal::ReversalFamily;
use crate::state::DensityMatrix;
use crate::tpm::{exact_joint, reconstruct, sample};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TOLERANCE_ENV: &str = "QFLUCT_TOLERANCE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MATH: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qfluct",
    version,
    about = "Quasi-probability fluctuation theorems for quantum channels"
)]
pub struct Cli {
    /// JSON experiment configuration; defaults reproduce the reference scenario.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Single θ, overriding the configured list or sweep.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Shot count for sampling; 0 means exact.
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for CSV and JSON files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Crooks,
    Integral,
    Secondlaw,
    Marginals,
    Tpm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary state, its spectrum and the covariance class of the channel.
    Stationary,
    /// Quasi-probability distribution and its real marginal.
    Distribution {
        #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
        direction: DirectionArg,
    },
    /// Run one verifier and report its residuals.
    Verify {
        #[arg(value_enum)]
        check: Check,
    },
    /// Integral fluctuation theorem and reversal distance over θ.
    SweepTheta,
    /// Joint outcome table of the measurement protocol, exact or sampled, and its reconstruction.
    SampleTpm {
        #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
        direction: DirectionArg,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Math(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<ConfigOrMath> for Failure {
    fn from(e: ConfigOrMath) -> Self {
        match e {
            ConfigOrMath::Config(c) => Failure::Usage(c.to_string()),
            ConfigOrMath::Math(m) => Failure::Math(m.to_string()),
        }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Math(e.to_string())
    }
}

/// Resolved inputs of one invocation.
struct Session {
    config: ExperimentConfig,
    hash: String,
    thetas: Vec<f64>,
    theta_override: Option<f64>,
    shots: u64,
    seed: u64,
    out: Option<PathBuf>,
    residual_tol: Option<f64>,
}

impl Session {
    fn new(cli: &Cli) -> Result<Self, Failure> {
        let config = match &cli.config {
            Some(path) => ExperimentConfig::load(path)?.0,
            None => ExperimentConfig::default(),
        };
        let hash = hex(&Sha256::digest(serde_json::to_vec(&config).expect("config serializes")));
        let residual_tol = match std::env::var(TOLERANCE_ENV) {
            Ok(text) => match text.trim().parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Some(v),
                _ => {
                    return Err(Failure::Usage(format!(
                        "{TOLERANCE_ENV}={text} is not a positive number"
                    )))
                }
            },
            Err(_) => None,
        };
        let thetas = match cli.theta {
            Some(t) => vec![t],
            None => config.thetas(),
        };
        Ok(Self {
            thetas,
            theta_override: cli.theta,
            shots: cli.shots.or(config.shots).unwrap_or(0),
            seed: cli.seed.or(config.seed).unwrap_or(0),
            out: cli.out.clone().or_else(|| config.output_dir.clone()),
            residual_tol,
            hash,
            config,
        })
    }

    fn context(&self) -> Result<ProcessContext, Failure> {
        let channel = self.config.channel()?;
        let state = self.config.initial_state()?;
        if self.config.channel.builder == Some(Builder::Identity) {
            // every state is fixed; pick the maximally mixed one
            let gamma = StationaryState::from_density(DensityMatrix::maximally_mixed(channel.dim()));
            return Ok(ProcessContext::with_stationary(channel, gamma, state)?);
        }
        Ok(ProcessContext::with_tolerances(channel, state, self.config.tolerances)?)
    }

    fn tol(&self, default: f64) -> f64 {
        self.residual_tol.unwrap_or(default)
    }

    fn meta(&self, command: &str) -> Value {
        json!({
            "tool": "qfluct",
            "version": VERSION,
            "config_sha256": self.hash,
            "command": command,
        })
    }

    fn csv_header(&self) -> String {
        format!("# qfluct {VERSION} config-sha256={}\n", self.hash)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), Failure> {
        if let Some(dir) = &self.out {
            write_file(dir, name, contents)?;
        }
        Ok(())
    }

    fn write_csv(&self, name: &str, body: &str) -> Result<(), Failure> {
        self.write(name, &format!("{}{body}", self.csv_header()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn distribution_csv(dist: &QuasiProbDistribution) -> String {
    let mut out = String::from("omega_re,omega_im,q_re,q_im\n");
    for a in dist.support() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(a.omega.re),
            num(a.omega.im),
            num(a.q.re),
            num(a.q.im)
        );
    }
    out
}

fn distribution_json(dist: &QuasiProbDistribution) -> Value {
    json!(dist
        .support()
        .map(|a| json!({"omega_re": a.omega.re, "omega_im": a.omega.im, "q_re": a.q.re, "q_im": a.q.im}))
        .collect::<Vec<_>>())
}

struct Report {
    name: String,
    body: Value,
    pass: bool,
}

fn finish(session: &Session, report: Report, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let mut body = report.body;
    body["meta"] = session.meta(&report.name);
    body["pass"] = json!(report.pass);
    let text = serde_json::to_string_pretty(&body).expect("report serializes") + "\n";
    session.write(&format!("{}.json", report.name), &text)?;
    let _ = stdout.write_all(text.as_bytes());
    Ok(if report.pass { EXIT_OK } else { EXIT_MATH })
}

fn cmd_stationary(session: &Session) -> Result<Report, Failure> {
    let channel = session.config.channel()?;
    let gamma = stationary_state_with(&channel, &session.config.tolerances)?;
    let matrix: Vec<Vec<[f64; 2]>> = (0..gamma.dim())
        .map(|r| {
            (0..gamma.dim())
                .map(|c| [gamma.gamma()[(r, c)].re, gamma.gamma()[(r, c)].im])
                .collect()
        })
        .collect();
    let class = if gamma.is_full_rank() {
        let class = check_covariance(&channel, &gamma)?;
        json!({"name": class.name(), "witness": match class {
            crate::channels::ChannelClass::Incovariant { witness } => json!([witness.0, witness.1, witness.2, witness.3]),
            _ => Value::Null,
        }})
    } else {
        Value::Null
    };
    Ok(Report {
        name: "stationary".into(),
        body: json!({
            "channel": channel.label(),
            "gamma": matrix,
            "populations": gamma.populations(),
            "full_rank": gamma.is_full_rank(),
            "class": class,
        }),
        pass: true,
    })
}

fn direction_of(arg: DirectionArg, session: &Session) -> Direction {
    match arg {
        DirectionArg::Forward => Direction::Forward,
        DirectionArg::Reverse => Direction::Reverse {
            theta: session.theta_override.unwrap_or(0.0),
        },
    }
}

fn cmd_distribution(session: &Session, direction: DirectionArg) -> Result<Report, Failure> {
    let ctx = session.context()?;
    let direction = direction_of(direction, session);
    let dist = match direction {
        Direction::Reverse { theta } => reverse_distribution(&ctx, theta)?,
        _ => forward_distribution(&ctx)?,
    };
    let marginal = marginalize_real(&dist)?;
    let stem = match direction {
        Direction::Reverse { .. } => "reverse",
        _ => "forward",
    };
    session.write_csv(&format!("distribution_{stem}.csv"), &distribution_csv(&dist))?;
    session.write_csv(&format!("marginal_{stem}.csv"), &distribution_csv(&marginal))?;
    let total = dist.total();
    Ok(Report {
        name: format!("distribution_{stem}"),
        body: json!({
            "direction": direction,
            "degenerate_spectrum": ctx.degenerate(),
            "total": [total.re, total.im],
            "atoms": distribution_json(&dist),
            "marginal": distribution_json(&marginal),
        }),
        pass: true,
    })
}

fn check_crooks(session: &Session, ctx: &ProcessContext) -> Result<(Value, bool), Failure> {
    let tol = session.tol(1e-9);
    let fwd = forward_distribution(ctx)?;
    let mut rows = Vec::new();
    let mut pass = true;
    for &theta in &session.thetas {
        let rev = reverse_distribution(ctx, theta)?;
        let report = crooks_check(&fwd, &rev, theta)?;
        let ok = report.passes(tol);
        pass &= ok;
        rows.push(json!({
            "theta": theta,
            "max_log_residual": report.max_log_residual,
            "max_phase_residual": report.max_phase_residual,
            "magnitude_slope": report.magnitude_slope,
            "phase_slope": report.phase_slope,
            "expected_phase_slope": -2.0 * theta,
            "pairs": report.pairs.len(),
            "unmatched_reverse": report.unmatched_reverse,
            "pass": ok,
        }));
    }
    Ok((json!({"tolerance": tol, "thetas": rows}), pass))
}

fn check_integral(session: &Session, ctx: &ProcessContext) -> Result<(Value, bool), Failure> {
    let tol = session.tol(1e-10);
    let fwd = forward_distribution(ctx)?;
    let worst = session
        .thetas
        .iter()
        .map(|&t| (integral_ft(&fwd, t) - 1.0).norm())
        .fold(0.0, f64::max);
    Ok((
        json!({"tolerance": tol, "points": session.thetas.len(), "max_residual": worst}),
        worst < tol,
    ))
}

fn check_second_law(session: &Session, ctx: &ProcessContext) -> Result<(Value, bool), Failure> {
    let tol = session.tol(1e-10);
    let avg = average_entropy_production(&forward_distribution(ctx)?);
    let gamma = ctx.gamma().state();
    let drop = relative_entropy(ctx.rho_i(), gamma)? - relative_entropy(ctx.rho_f(), gamma)?;
    let identity = (avg.re - drop).abs();
    let pass = avg.re >= -tol && avg.im.abs() < tol && identity < session.tol(1e-9);
    Ok((
        json!({
            "tolerance": tol,
            "average_entropy_production": [avg.re, avg.im],
            "relative_entropy_drop": drop,
            "identity_residual": identity,
        }),
        pass,
    ))
}

fn check_marginals(session: &Session, ctx: &ProcessContext) -> Result<(Value, bool), Failure> {
    let tol = session.tol(1e-10);
    let records = transition_amplitudes(ctx)?;
    let (states, levels) = marginal_identity_residuals(ctx, &records)?;
    let fwd = marginalize_real(&forward_distribution(ctx)?)?;
    let rev = marginalize_real(&reverse_distribution(ctx, 0.0)?)?;
    let crooks = crooks_check(&fwd, &rev, 0.0)?;
    let crooks_tol = session.tol(1e-9);
    let pass = states < tol && levels < tol && crooks.passes(crooks_tol);
    Ok((
        json!({
            "tolerance": tol,
            "state_marginal_residual": states,
            "level_marginal_residual": levels,
            "real_marginal_crooks_residual": crooks.max_residual(),
            "negative_marginal_atoms": fwd.support().filter(|a| a.q.re < 0.0).count(),
        }),
        pass,
    ))
}

fn check_tpm(session: &Session, ctx: &ProcessContext) -> Result<(Value, bool), Failure> {
    let tol = session.tol(1e-10);
    let forward = reconstruct(&exact_joint(ctx, Direction::Forward)?, ctx)?.max_abs_diff(&forward_distribution(ctx)?);
    let theta = session.theta_override.unwrap_or(0.0);
    let reverse = reconstruct(&exact_joint(ctx, Direction::Reverse { theta })?, ctx)?
        .max_abs_diff(&reverse_distribution(ctx, theta)?);
    let mut body = json!({
        "tolerance": tol,
        "forward_reconstruction_residual": forward,
        "reverse_reconstruction_residual": reverse,
        "reverse_theta": theta,
    });
    if session.shots > 0 {
        let exact = forward_distribution(ctx)?;
        let joint = sample(&exact_joint(ctx, Direction::Forward)?, session.shots, session.seed)?;
        body["sampled"] = json!({
            "shots": session.shots,
            "seed": session.seed,
            "total_deviation": reconstruct(&joint, ctx)?.total_deviation(&exact),
        });
    }
    Ok((body, forward < tol && reverse < tol))
}

fn cmd_verify(session: &Session, check: Check) -> Result<Report, Failure> {
    let ctx = session.context()?;
    let (body, pass) = match check {
        Check::Crooks => check_crooks(session, &ctx)?,
        Check::Integral => check_integral(session, &ctx)?,
        Check::Secondlaw => check_second_law(session, &ctx)?,
        Check::Marginals => check_marginals(session, &ctx)?,
        Check::Tpm => check_tpm(session, &ctx)?,
    };
    let name = match check {
        Check::Crooks => "crooks",
        Check::Integral => "integral",
        Check::Secondlaw => "secondlaw",
        Check::Marginals => "marginals",
        Check::Tpm => "tpm",
    };
    Ok(Report {
        name: format!("verify_{name}"),
        body: json!({"check": name, "result": body}),
        pass,
    })
}

fn cmd_sweep_theta(session: &Session) -> Result<Report, Failure> {
    let ctx = session.context()?;
    let tol = session.tol(1e-10);
    let fwd = forward_distribution(&ctx)?;
    let family = ReversalFamily::new(ctx.channel().clone(), ctx.gamma().clone())?;
    let mut csv = String::from("theta,re_integral,im_integral,reversal_distance\n");
    let mut worst: f64 = 0.0;
    let mut max_distance: f64 = 0.0;
    for &theta in &session.thetas {
        let value = integral_ft(&fwd, theta);
        let distance = superoperator_distance(&family.member(theta)?, ctx.channel());
        worst = worst.max((value - 1.0).norm());
        max_distance = max_distance.max(distance);
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            num(theta),
            num(value.re),
            num(value.im),
            num(distance)
        );
    }
    session.write_csv("sweep_theta.csv", &csv)?;
    Ok(Report {
        name: "sweep_theta".into(),
        body: json!({
            "tolerance": tol,
            "points": session.thetas.len(),
            "max_integral_residual": worst,
            "max_reversal_distance": max_distance,
        }),
        pass: worst < tol,
    })
}

fn cmd_sample_tpm(session: &Session, direction: DirectionArg) -> Result<Report, Failure> {
    let ctx = session.context()?;
    let direction = direction_of(direction, session);
    let exact = exact_joint(&ctx, direction)?;
    let joint = if session.shots > 0 {
        sample(&exact, session.shots, session.seed)?
    } else {
        exact
    };
    let direct = match direction {
        Direction::Reverse { theta } => reverse_distribution(&ctx, theta)?,
        _ => forward_distribution(&ctx)?,
    };
    let rebuilt = reconstruct(&joint, &ctx)?;
    let header = format!("qfluct {VERSION} config-sha256={}", session.hash);
    session.write("joint.csv", &joint.to_csv(&[header]))?;
    session.write_csv("reconstructed.csv", &distribution_csv(&rebuilt))?;
    Ok(Report {
        name: "sample_tpm".into(),
        body: json!({
            "direction": direction,
            "shots": joint.shots(),
            "seed": joint.shots().map(|_| session.seed),
            "total_deviation": rebuilt.total_deviation(&direct),
            "max_atom_difference": rebuilt.max_abs_diff(&direct),
            "reconstructed": distribution_json(&rebuilt),
        }),
        pass: true,
    })
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let session = Session::new(cli)?;
    let report = match &cli.command {
        Command::Stationary => cmd_stationary(&session)?,
        Command::Distribution { direction } => cmd_distribution(&session, *direction)?,
        Command::Verify { check } => cmd_verify(&session, *check)?,
        Command::SweepTheta => cmd_sweep_theta(&session)?,
        Command::SampleTpm { direction } => cmd_sample_tpm(&session, *direction)?,
    };
    finish(&session, report, stdout)
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Math(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_MATH
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["qfluct"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn stationary_default() {
        let (code, out, _) = call(&["stationary"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let pops = v["populations"].as_array().unwrap();
        assert!((pops[0].as_f64().unwrap() - 0.5658).abs() < 5e-5);
        assert_eq!(v["class"]["name"], "incovariant");
        assert_eq!(v["meta"]["tool"], "qfluct");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&["frobnicate"]).0, 1);
        assert_eq!(call(&["verify", "nothing"]).0, 1);
        assert_eq!(call(&["--config", "/nonexistent/qfluct.json", "stationary"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn verify_defaults_pass() {
        for check in ["crooks", "integral", "secondlaw", "marginals", "tpm"] {
            let (code, out, err) = call(&["verify", check]);
            assert_eq!(code, 0, "{check}: {out} {err}");
        }
        let (code, out, _) = call(&["verify", "crooks", "--theta=-0.39269908169872414"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let slope = v["result"]["thetas"][0]["phase_slope"].as_f64().unwrap();
        assert!((slope - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn reverse_distribution_uses_theta() {
        let (code, out, _) = call(&["distribution", "--direction", "reverse", "--theta", "-0.5"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["direction"]["kind"], "reverse");
        assert_eq!(v["direction"]["theta"], -0.5);
    }
}

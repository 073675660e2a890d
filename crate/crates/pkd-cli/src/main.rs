//! `pkd` — command-line front end for the PKD session laboratory.
//!
//! Subcommands:
//! * `analyze`        — discrimination/secrecy figures at one working point
//! * `keyrate`        — analytic key-rate evaluation, optionally sweeping one parameter
//! * `simulate`       — seeded Monte Carlo session, writing the public transcript
//! * `entangle-check` — X-basis parity scan of the virtual two-qubit state
//!
//! All defaults equal the published working point (mu = 0.1, m = 1024,
//! eta_d = 0.8, p_d = 1e-8, f = 1.05, eps_cor = 1e-15, eps_sec = 1e-10,
//! s = 10^4, N = 10^9). Exit codes: 0 success, 2 bad parameters, 3 key pool
//! exhausted, 4 negotiation overflow, 5 verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pkd_core::coherent;
use pkd_core::entangle;
use pkd_core::session::{
    self, AccountingFlags, RatePoint, SessionConfig, SessionError, SessionOutcome,
};
use pkd_core::OpticsParams;

const EXIT_BAD_PARAMS: u8 = 2;
const EXIT_KEY_POOL: u8 = 3;
const EXIT_NEGOTIATION: u8 = 4;
const EXIT_VERIFICATION: u8 = 5;

#[derive(Parser)]
#[command(
    name = "pkd",
    version,
    about = "Probability-key-distribution session laboratory",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discrimination and secrecy figures for one (mu, m) working point
    Analyze(AnalyzeArgs),
    /// Analytic detection/error/key-rate pipeline, with optional one-parameter sweep
    Keyrate(KeyrateArgs),
    /// Run one seeded Monte Carlo session and write its transcript
    Simulate(SimulateArgs),
    /// Verify the deterministic X-basis parity of the virtual two-qubit state
    EntangleCheck(EntangleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the record here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for tabular records
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Pulse intensity mu
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    mu: f64,
    /// Phase count m (a power of two)
    #[arg(long, default_value_t = 1024)]
    m: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ProtocolArgs {
    /// Detector efficiency eta_d
    #[arg(long = "eta", default_value_t = 0.8, allow_negative_numbers = true)]
    eta: f64,
    /// Dark count probability p_d
    #[arg(long = "pd", default_value_t = 1e-8, allow_negative_numbers = true)]
    pd: f64,
    /// Error-correction efficiency f
    #[arg(long = "f", default_value_t = 1.05)]
    f: f64,
    /// Correctness failure parameter
    #[arg(long = "eps-cor", default_value_t = 1e-15)]
    eps_cor: f64,
    /// Secrecy failure parameter
    #[arg(long = "eps-sec", default_value_t = 1e-10)]
    eps_sec: f64,
    /// Update-key length s
    #[arg(long = "s", default_value_t = 10_000)]
    s: usize,
    /// Negotiation pad length t (defaults to 5% over the expected volume)
    #[arg(long = "t")]
    t: Option<usize>,
    /// Charge the verification tag pad against the net rate
    #[arg(long)]
    count_verification_key: bool,
    /// Draw the privacy-amplification seed from the pool and charge it
    #[arg(long)]
    count_pa_seed: bool,
}

#[derive(Args)]
struct KeyrateArgs {
    /// Pulse intensity mu; a comma list sweeps it
    #[arg(long, default_value = "0.1")]
    mu: String,
    /// Phase count m (a power of two)
    #[arg(long, default_value_t = 1024)]
    m: usize,
    /// Rounds per session N; a comma list sweeps it
    #[arg(long = "N", default_value = "1000000000")]
    rounds: String,
    /// Detector efficiency eta_d; a comma list sweeps it
    #[arg(long = "eta", default_value = "0.8")]
    eta: String,
    /// Dark count probability p_d; a comma list sweeps it
    #[arg(long = "pd", default_value = "1e-8")]
    pd: String,
    /// Error-correction efficiency f
    #[arg(long = "f", default_value_t = 1.05)]
    f: f64,
    /// Correctness failure parameter
    #[arg(long = "eps-cor", default_value_t = 1e-15)]
    eps_cor: f64,
    /// Secrecy failure parameter
    #[arg(long = "eps-sec", default_value_t = 1e-10)]
    eps_sec: f64,
    /// Update-key length s
    #[arg(long = "s", default_value_t = 10_000)]
    s: usize,
    /// Negotiation pad length t
    #[arg(long = "t")]
    t: Option<usize>,
    /// Charge the verification tag pad against the net rate
    #[arg(long)]
    count_verification_key: bool,
    /// Draw the privacy-amplification seed from the pool and charge it
    #[arg(long)]
    count_pa_seed: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Pulse intensity mu
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    mu: f64,
    /// Phase count m (a power of two)
    #[arg(long, default_value_t = 1024)]
    m: usize,
    /// Rounds per session N (Monte Carlo path, at most 1e8)
    #[arg(long = "N", default_value_t = 1_000_000_000)]
    rounds: u64,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Master seed (PKD_SEED environment variable is the fallback)
    #[arg(long, env = "PKD_SEED", default_value_t = 42)]
    seed: u64,
    /// Modeled pre-shared key pool size in bits (unlimited when absent)
    #[arg(long)]
    pool_bits: Option<u64>,
    /// Transcript path
    #[arg(long, default_value = "pkd_transcript.json")]
    out: PathBuf,
    /// Output format of the summary record
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct EntangleArgs {
    /// Phase count m (must keep photon-number parity per class, i.e. even)
    #[arg(long, default_value_t = 1024)]
    m: usize,
    /// Largest photon number k to verify
    #[arg(long, default_value_t = 4)]
    k_max: usize,
    /// Comma list of phase differences (radians)
    #[arg(long, default_value = "0,0.3,1.5707963267948966,3.141592653589793")]
    dtheta: String,
    #[command(flatten)]
    output: OutputArgs,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn bad_params(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_BAD_PARAMS,
            message: message.into(),
        }
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        let code = match &e {
            SessionError::InsufficientKeyPool { .. } => EXIT_KEY_POOL,
            SessionError::NegotiationOverflow { .. } => EXIT_NEGOTIATION,
            _ => EXIT_BAD_PARAMS,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Keyrate(args) => run_keyrate(args),
        Command::Simulate(args) => run_simulate(args),
        Command::EntangleCheck(args) => run_entangle(args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(output: &OutputArgs, json: String, csv: String) -> Result<(), Failure> {
    let text = match output.format {
        Format::Json => json,
        Format::Csv => csv,
    };
    match &output.out {
        Some(path) => std::fs::write(path, text.as_bytes()).map_err(|e| Failure {
            code: EXIT_BAD_PARAMS,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run_analyze(args: AnalyzeArgs) -> Result<ExitCode, Failure> {
    if !args.m.is_power_of_two() || args.m < 2 {
        return Err(Failure::bad_params(format!(
            "--m must be a power of two >= 2, got {}",
            args.m
        )));
    }
    let report = coherent::analyze(args.mu, args.m)
        .map_err(|e| Failure::bad_params(format!("--mu/--m: {e}")))?;

    let json = serde_json::to_string_pretty(&report).expect("record serializes");
    let csv = {
        let mut s = String::from(
            "mu,m,p_min,random_guess_error,p_usd_sci,p_usd_ln,p_usd_exact,trace_distance_sci,delta_sci,epsilon_sci\n",
        );
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            report.mu,
            report.m,
            report.p_min,
            report.random_guess_error,
            report.p_usd.to_sci_string(),
            report.p_usd.ln_value(),
            report
                .p_usd_exact
                .map(|v| v.to_string())
                .unwrap_or_default(),
            report.trace_distance_k0.to_sci_string(),
            report.delta_k0.to_sci_string(),
            report
                .secrecy_epsilon
                .map(|e| e.to_sci_string())
                .unwrap_or_default(),
        ));
        s
    };
    emit(&args.output, json, csv)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RateRecord {
    param: String,
    value: f64,
    n: f64,
    #[serde(rename = "E")]
    error_rate: f64,
    ell: u64,
    #[serde(rename = "R")]
    net_rate: i64,
}

fn parse_list(name: &str, raw: &str) -> Result<Vec<f64>, Failure> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Failure::bad_params(format!("--{name}: cannot parse '{tok}'")))
        })
        .collect()
}

fn run_keyrate(args: KeyrateArgs) -> Result<ExitCode, Failure> {
    let lists = [
        ("mu", parse_list("mu", &args.mu)?),
        ("N", parse_list("N", &args.rounds)?),
        ("eta", parse_list("eta", &args.eta)?),
        ("pd", parse_list("pd", &args.pd)?),
    ];
    let swept: Vec<&str> = lists
        .iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|(n, _)| *n)
        .collect();
    if swept.len() > 1 {
        return Err(Failure::bad_params(format!(
            "only one parameter may be swept, got lists for {}",
            swept.join(", ")
        )));
    }
    let sweep_name = swept.first().copied().unwrap_or("mu");

    let value_of = |name: &str, i: usize| {
        let list = &lists.iter().find(|(n, _)| *n == name).unwrap().1;
        list[i.min(list.len() - 1)]
    };
    let sweep_len = lists
        .iter()
        .find(|(n, _)| *n == sweep_name)
        .map(|(_, v)| v.len())
        .unwrap_or(1);

    let mut records = Vec::new();
    for i in 0..sweep_len {
        let cfg = SessionConfig {
            rounds: value_of("N", i) as u64,
            m: args.m,
            optics: OpticsParams {
                mu: value_of("mu", i),
                eta_d: value_of("eta", i),
                p_d: value_of("pd", i),
            },
            ec_efficiency: args.f,
            eps_cor: args.eps_cor,
            eps_sec: args.eps_sec,
            update_key_len: args.s,
            negotiation_len: args.t,
            master_seed: 0,
            flags: AccountingFlags {
                count_verification_key: args.count_verification_key,
                count_pa_seed: args.count_pa_seed,
            },
            pool_bits: None,
        };
        let (n, error_rate, ell, net_rate) = if cfg.rounds == 0 {
            (0.0, 0.0, 0, 0)
        } else {
            let point: RatePoint = session::analytic_rate(&cfg)?;
            (point.n, point.error_rate, point.key_len, point.net_rate)
        };
        records.push(RateRecord {
            param: sweep_name.to_string(),
            value: value_of(sweep_name, i),
            n,
            error_rate,
            ell,
            net_rate,
        });
    }

    let json = serde_json::to_string_pretty(&records).expect("records serialize");
    let mut csv = String::from("param,n,E,ell,R\n");
    for r in &records {
        csv.push_str(&format!(
            "{}={},{},{},{},{}\n",
            r.param, r.value, r.n, r.error_rate, r.ell, r.net_rate
        ));
    }
    emit(&args.output, json, csv)?;
    Ok(ExitCode::SUCCESS)
}

/// Monte Carlo cap; bigger sessions are served analytically by `keyrate`.
const MAX_MONTE_CARLO_ROUNDS: u64 = 100_000_000;

#[derive(Serialize)]
struct SimulateSummary<'a> {
    #[serde(flatten)]
    report: &'a session::SessionReport,
    transcript_path: String,
}

fn run_simulate(args: SimulateArgs) -> Result<ExitCode, Failure> {
    if args.rounds > MAX_MONTE_CARLO_ROUNDS {
        return Err(Failure::bad_params(format!(
            "--N {} exceeds the Monte Carlo cap of {MAX_MONTE_CARLO_ROUNDS}; \
             use `pkd keyrate` for the analytic pipeline at that scale",
            args.rounds
        )));
    }
    let cfg = SessionConfig {
        rounds: args.rounds,
        m: args.m,
        optics: OpticsParams {
            mu: args.mu,
            eta_d: args.protocol.eta,
            p_d: args.protocol.pd,
        },
        ec_efficiency: args.protocol.f,
        eps_cor: args.protocol.eps_cor,
        eps_sec: args.protocol.eps_sec,
        update_key_len: args.protocol.s,
        negotiation_len: args.protocol.t,
        master_seed: args.seed,
        flags: AccountingFlags {
            count_verification_key: args.protocol.count_verification_key,
            count_pa_seed: args.protocol.count_pa_seed,
        },
        pool_bits: args.pool_bits,
    };
    let outcome: SessionOutcome = session::run_session(&cfg)?;

    let transcript_json =
        serde_json::to_string_pretty(&outcome.transcript).expect("transcript serializes");
    std::fs::write(&args.out, transcript_json.as_bytes()).map_err(|e| Failure {
        code: EXIT_BAD_PARAMS,
        message: format!("cannot write {}: {e}", args.out.display()),
    })?;

    let summary = SimulateSummary {
        report: &outcome.report,
        transcript_path: args.out.display().to_string(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    let csv = {
        let r = &outcome.report;
        format!(
            "n_alice,n_bob,n_matched,E_emp,lambda,verified,ell,net_R\n{},{},{},{},{},{},{},{}\n",
            r.n_alice,
            r.n_bob,
            r.n_matched,
            r.empirical_error_rate,
            r.disclosed_ec_bits,
            r.verification_passed,
            r.final_key_len,
            r.ledger.net_rate
        )
    };
    match args.format {
        Format::Json => println!("{json}"),
        Format::Csv => println!("{csv}"),
    }
    if outcome.report.verification_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_VERIFICATION))
    }
}

#[derive(Serialize)]
struct EntangleSummary {
    records: Vec<entangle::ParityRecord>,
    max_phase_error: f64,
}

fn run_entangle(args: EntangleArgs) -> Result<ExitCode, Failure> {
    entangle::validate_phase_count(args.m).map_err(|e| Failure::bad_params(format!("--m: {e}")))?;
    let dthetas = parse_list("dtheta", &args.dtheta)?;
    if dthetas.is_empty() {
        return Err(Failure::bad_params("--dtheta needs at least one value"));
    }
    let ks: Vec<usize> = (0..=args.k_max).collect();
    let records = entangle::parity_grid(&ks, &dthetas);
    let max_phase_error = records
        .iter()
        .map(|r| ((1.0 - r.parity.abs()) / 2.0).max(0.0))
        .fold(0.0, f64::max);

    let json = serde_json::to_string_pretty(&EntangleSummary {
        records: records.clone(),
        max_phase_error,
    })
    .expect("records serialize");
    let mut csv = String::from("k,delta_theta,parity,phase_error\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.k,
            r.delta_theta,
            r.parity,
            ((1.0 - r.parity.abs()) / 2.0).max(0.0)
        ));
    }
    emit(&args.output, json, csv)?;
    Ok(ExitCode::SUCCESS)
}

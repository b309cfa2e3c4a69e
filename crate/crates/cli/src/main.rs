use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use xnet_core::analysis::{
    certificate_values, diversity_slope, rank_check_pairs, rank_search, RANK_SEARCH_LIMIT,
};
use xnet_core::constellation::{Constellation, ConstellationKind};
use xnet_core::harness::{emit_csv, parse_csv, run_ber_with, run_verify, SimConfig, Suite, VerifyOptions};
use xnet_core::schemes::SchemeId;
use xnet_core::stbc::{alamouti_code, proposed_3tx_code, sr_4tx_code};
use xnet_core::Error;

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "xnet", version, about = "MIMO X-network space-time coding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER curve, written as CSV.
    Simulate(SimulateArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Exhaustive rank check of all codeword differences.
    RankSearch(RankArgs),
    /// Diversity slope of a BER curve CSV.
    Slope(SlopeArgs),
    /// Determinant certificates of the effective matrices.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<SchemeId>,
    #[arg(long)]
    constellation: Option<ConstellationKind>,
    /// Constellation rotation in radians.
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Comma-separated powers in dB.
    #[arg(long, value_delimiter = ',')]
    pdb: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    target_errors: Option<u64>,
    #[arg(long)]
    max_trials: Option<u64>,
    #[arg(long)]
    noiseless: bool,
    /// Append an a*P^-3 reference column.
    #[arg(long)]
    reference: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of cancellation, certificates, rank-search, alignment, decoder-equivalence, all.
    suite: Suite,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodeArg {
    Proposed,
    Sr,
    Alamouti,
}

#[derive(Clone, Copy, ValueEnum)]
enum Expect {
    Pass,
    Fail,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long, value_enum, default_value = "proposed")]
    code: CodeArg,
    #[arg(long, default_value = "qpsk")]
    constellation: ConstellationKind,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    theta: f64,
    #[arg(long, default_value_t = RANK_SEARCH_LIMIT)]
    limit: f64,
    /// Also check this many random codeword pairs directly.
    #[arg(long, default_value_t = 0)]
    pairs: u64,
    /// Expected verdict; the exit code reports whether it was met.
    #[arg(long, value_enum, default_value = "pass")]
    expect: Expect,
}

#[derive(Args)]
struct SlopeArgs {
    csv: PathBuf,
    #[arg(long, default_value_t = 3)]
    tail: usize,
    /// Fail when the slope is below this value.
    #[arg(long)]
    min: Option<f64>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Single angle; otherwise a uniform grid over [0, 2 pi).
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::ConfigInvalid(_)
        | Error::UnknownConstellation(_)
        | Error::UnsupportedOrder(_)
        | Error::Io(_)
        | Error::Parse(_)
        | Error::InvalidArgument(_)
        | Error::SearchSpaceTooLarge { .. }
        | Error::InsufficientData(_) => USAGE,
        _ => FAIL,
    }
}

fn simulate(a: SimulateArgs) -> Result<u8, Error> {
    let mut cfg = match &a.config {
        Some(p) => SimConfig::from_json_file(p)?,
        None => SimConfig::default(),
    };
    if let Some(v) = a.scheme {
        cfg.scheme = v;
    }
    if let Some(v) = a.constellation {
        cfg.constellation = v;
    }
    if let Some(v) = a.phi {
        cfg.rotation_phi = v;
    }
    if let Some(v) = a.theta {
        cfg.theta = v;
    }
    if let Some(v) = a.pdb {
        cfg.p_db_list = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.workers {
        cfg.workers = v;
    }
    if let Some(v) = a.target_errors {
        cfg.target_bit_errors = v;
    }
    if let Some(v) = a.max_trials {
        cfg.max_trials_per_point = v;
    }
    cfg.noiseless |= a.noiseless;
    cfg.validate()?;
    let curve = run_ber_with(&cfg, |p| {
        eprintln!("P={} dB: {} errors in {} trials, BER {:e}", p.p_db, p.bit_errors, p.trials, p.ber());
    })?;
    let text = emit_csv(&curve, a.reference)?;
    match a.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(PASS)
}

fn verify(a: VerifyArgs) -> Result<u8, Error> {
    let rep = run_verify(a.suite, VerifyOptions { draws: a.draws, seed: a.seed })?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
    } else {
        for c in &rep.checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    Ok(if rep.passed() { PASS } else { FAIL })
}

fn rank(a: RankArgs) -> Result<u8, Error> {
    let code = match a.code {
        CodeArg::Proposed => proposed_3tx_code(a.theta),
        CodeArg::Sr => sr_4tx_code(a.theta),
        CodeArg::Alamouti => alamouti_code(),
    };
    let c = Constellation::new(a.constellation, a.phi)?;
    let rep = rank_search(&code, &c, a.limit)?;
    println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
    let mut consistent = true;
    if a.pairs > 0 {
        let pc = rank_check_pairs(&code, &c, a.pairs, 0)?;
        println!("{}", serde_json::to_string_pretty(&pc).expect("report serializes"));
        consistent = pc.mismatches == 0 && (pc.rank_deficient == 0 || !rep.passed());
    }
    let met = match a.expect {
        Expect::Pass => rep.passed(),
        Expect::Fail => !rep.passed(),
    };
    Ok(if met && consistent { PASS } else { FAIL })
}

fn slope(a: SlopeArgs) -> Result<u8, Error> {
    let curve = parse_csv(&std::fs::read_to_string(&a.csv)?)?;
    let d = diversity_slope(&curve, a.tail)?;
    println!("{d}");
    Ok(match a.min {
        Some(m) if d < m => FAIL,
        _ => PASS,
    })
}

fn certify(a: CertifyArgs) -> Result<u8, Error> {
    if a.grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let thetas: Vec<f64> = match a.theta {
        Some(t) => vec![t],
        None => (0..a.grid).map(|k| 2.0 * std::f64::consts::PI * k as f64 / a.grid as f64).collect(),
    };
    let mut ok = true;
    for t in thetas {
        let r = certificate_values(t)?;
        println!(
            "theta={t:.6} det(R)={:+.12}{:+.12}j [{}] det(S)={:+.12}{:+.12}j want {:+.12}{:+.12}j [{}]",
            r.det_r[0],
            r.det_r[1],
            if r.r_pass { "PASS" } else { "FAIL" },
            r.det_s[0],
            r.det_s[1],
            r.expected_s[0],
            r.expected_s[1],
            if r.s_pass { "PASS" } else { "FAIL" },
        );
        ok &= r.r_pass && r.s_pass;
    }
    Ok(if ok { PASS } else { FAIL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::RankSearch(a) => rank(a),
        Command::Slope(a) => slope(a),
        Command::Certify(a) => certify(a),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

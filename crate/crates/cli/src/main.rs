use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use jc_postselect::harness::{self, Command, Format, RunManifest, SweepRange};
use jc_postselect::{ChannelKind, Complex64, Error, InputSpec};

/// Directory used for output files when `--out` is not given.
const OUT_DIR_ENV: &str = "JCSIM_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "jcsim", version, about = "Light fields through a chain of two-level atoms")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Sweep the coupling r over an inclusive grid.
    SweepR(Common),
    /// Sweep the coherent amplitude |α| at fixed r.
    SweepAlpha(Common),
    /// Husimi Q-function of the input, or of a channel's output.
    Qfunc(Common),
    /// Evaluate one (input, r, N) triple on each requested channel.
    Point(Common),
    /// Run the built-in acceptance checks.
    Verify(Output),
}

#[derive(Args, Debug)]
struct Common {
    /// Coherent amplitude, real or complex (`1.5`, `1+2i`, `0.3-0.1i`).
    #[arg(long, default_value = "0", value_parser = parse_alpha, allow_hyphen_values = true)]
    alpha: Complex64,
    #[arg(long, default_value_t = 0.0)]
    squeeze_s: f64,
    /// Squeezing angle in radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    squeeze_theta: f64,
    /// Interaction strength gτ.
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, requires_all = ["r_max", "r_step"], allow_hyphen_values = true)]
    r_min: Option<f64>,
    #[arg(long, requires_all = ["r_min", "r_step"], allow_hyphen_values = true)]
    r_max: Option<f64>,
    #[arg(long, requires_all = ["r_min", "r_max"], allow_hyphen_values = true)]
    r_step: Option<f64>,
    #[arg(long, requires_all = ["alpha_max", "alpha_step"], allow_hyphen_values = true)]
    alpha_min: Option<f64>,
    #[arg(long, requires_all = ["alpha_min", "alpha_step"], allow_hyphen_values = true)]
    alpha_max: Option<f64>,
    #[arg(long, requires_all = ["alpha_min", "alpha_max"], allow_hyphen_values = true)]
    alpha_step: Option<f64>,
    /// Number of atoms.
    #[arg(long, default_value_t = 1)]
    atoms: usize,
    /// Fock truncation; chosen from the mean photon number when omitted.
    #[arg(long)]
    dim: Option<usize>,
    /// absorption, ground or excited. Repeatable. Sweeps and `point` default
    /// to absorption and ground; `qfunc` plots the input state when omitted.
    #[arg(long = "channel", value_parser = ChannelKind::from_str)]
    channels: Vec<ChannelKind>,
    /// Samples per axis of the Q-function grid.
    #[arg(long)]
    grid_n: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, default_value = "csv", value_parser = Format::from_str)]
    format: Format,
    /// Output file. Falls back to `$JCSIM_OUT_DIR/<command>.<ext>`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_alpha(s: &str) -> Result<Complex64, String> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    Complex64::from_str(&compact).map_err(|_| format!("cannot parse '{s}' as a real or complex number"))
}

fn output_path(command: Command, output: &Output) -> Option<PathBuf> {
    output.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{}.{}", command.name(), output.format.extension())))
    })
}

fn build_manifest(cli: Cli) -> RunManifest {
    let (command, common) = match cli.command {
        Sub::SweepR(c) => (Command::SweepR, c),
        Sub::SweepAlpha(c) => (Command::SweepAlpha, c),
        Sub::Qfunc(c) => (Command::QFunc, c),
        Sub::Point(c) => (Command::Point, c),
        Sub::Verify(output) => {
            let mut m = RunManifest::new(Command::Verify);
            m.output_path = output_path(Command::Verify, &output);
            m.format = output.format;
            return m;
        }
    };
    let mut m = RunManifest::new(command);
    m.input = InputSpec::squeezed(common.alpha, common.squeeze_s, common.squeeze_theta);
    m.r = common.r;
    m.r_range = common.r_min.zip(common.r_max).zip(common.r_step).map(|((a, b), s)| SweepRange::new(a, b, s));
    m.alpha_range =
        common.alpha_min.zip(common.alpha_max).zip(common.alpha_step).map(|((a, b), s)| SweepRange::new(a, b, s));
    m.n_atoms = common.atoms;
    m.dim = common.dim;
    m.channels = common.channels;
    if m.channels.is_empty() && command != Command::QFunc {
        m.channels = vec![ChannelKind::Absorption, ChannelKind::PostselectGround];
    }
    m.grid_points = common.grid_n;
    m.output_path = output_path(command, &common.output);
    m.format = common.output.format;
    m
}

fn error_record(e: &Error) -> String {
    let problems = match e {
        Error::InvalidManifest(p) => p.clone(),
        _ => Vec::new(),
    };
    serde_json::json!({ "error": e.kind(), "message": e.to_string(), "problems": problems }).to_string()
}

fn main() -> ExitCode {
    let manifest = build_manifest(Cli::parse());
    let report = match harness::run(&manifest) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            return ExitCode::from(if matches!(e, Error::InvalidManifest(_)) { 2 } else { 1 });
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.criteria {
        eprintln!("{}", c.line());
    }
    if report.output_path.is_none() {
        let mut stdout = std::io::stdout().lock();
        if let Err(e) = stdout.write_all(&report.bytes).and_then(|_| stdout.flush()) {
            eprintln!("{}", error_record(&Error::Io(e)));
            return ExitCode::from(1);
        }
    }
    if report.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

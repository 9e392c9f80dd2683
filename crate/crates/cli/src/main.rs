use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lclt_core::harness::{self, Mode, SweepConfig, DEFAULT_ALPHA};
use lclt_core::measure::{load_measure, validate, LatticeMeasure, LatticePoint, DEFAULT_APERIODICITY_CAP};
use lclt_core::tilt::solve_tilt;
use lclt_core::LcltError;

#[derive(Parser)]
#[command(name = "lclt", version, about = "Local limit approximations for lattice random walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a measure file: mass, steplength, maximality, aperiodicity.
    Check {
        file: PathBuf,
        /// Step cap for the aperiodicity search.
        #[arg(long, default_value_t = DEFAULT_APERIODICITY_CAP)]
        cap: usize,
    },
    /// Compare G^{*n}(x) with one approximant.
    Approx {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        /// Lattice point, e.g. "3" or "1,-2".
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value = "theorem")]
        mode: String,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Error sweep over n; writes <out>.csv and <out>.json.
    Sweep {
        file: PathBuf,
        /// Comma list, e.g. "50,100,200" or "50,100,...,500".
        #[arg(long)]
        n: String,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value = "theorem")]
        mode: String,
        #[arg(long, default_value = "report")]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Solve the tilt equation D log Z(t) = xi.
    Tilt {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
    },
    /// Return probabilities at nE against the corrected Gaussian value.
    Corollary {
        file: PathBuf,
        #[arg(long)]
        n: String,
    },
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<LcltError> for Failure {
    fn from(e: LcltError) -> Self {
        match e {
            LcltError::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn read_measure(path: &Path) -> Result<LatticeMeasure, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    load_measure(&text).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|f| {
            f.trim()
                .parse::<T>()
                .map_err(|_| Failure::Usage(format!("bad {what} component '{}'", f.trim())))
        })
        .collect()
}

/// "a,b,c" or "a,b,...,c" (arithmetic continuation with step b − a).
fn parse_n_list(s: &str) -> Result<Vec<usize>, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let Some(pos) = parts.iter().position(|p| *p == "...") else {
        return parse_list(s, "n");
    };
    if pos < 2 || pos + 2 != parts.len() {
        return Err(Failure::Usage(format!("'...' needs two values before and one after: {s}")));
    }
    let head: Vec<usize> = parse_list(&parts[..pos].join(","), "n")?;
    let last: usize = parts[pos + 1]
        .parse()
        .map_err(|_| Failure::Usage(format!("bad n component '{}'", parts[pos + 1])))?;
    let (a, b) = (head[pos - 2], head[pos - 1]);
    if b <= a {
        return Err(Failure::Usage(format!("'...' needs an increasing step: {s}")));
    }
    let mut out = head.clone();
    let mut v = b + (b - a);
    while v <= last {
        out.push(v);
        v += b - a;
    }
    if *out.last().unwrap() != last {
        return Err(Failure::Usage(format!("{last} is not reached from {a},{b} in steps of {}", b - a)));
    }
    Ok(out)
}

fn parse_mode(s: &str) -> Result<Mode, Failure> {
    s.parse::<Mode>().map_err(Failure::from)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { file, cap } => {
            let m = read_measure(&file)?;
            let report = validate(&m, cap);
            print!("{}", harness::render_validation(&report));
            if !report.all_ok() {
                return Err(Failure::Run("measure does not satisfy the local limit hypotheses".into()));
            }
        }
        Command::Approx {
            file,
            n,
            x,
            mode,
            alpha,
        } => {
            let mode = parse_mode(&mode)?;
            let x = LatticePoint(parse_list(&x, "x")?);
            let m = read_measure(&file)?;
            let row = harness::approx(&m, n, &x, mode, alpha)?;
            print!("{}", row.render());
        }
        Command::Sweep {
            file,
            n,
            alpha,
            mode,
            out,
            threads,
        } => {
            let mut cfg = SweepConfig::new(file.display().to_string(), parse_n_list(&n)?, alpha, parse_mode(&mode)?)?;
            cfg.threads = threads;
            let m = read_measure(&file)?;
            let report = harness::sweep(&m, &cfg)?;
            let csv = out.with_extension("csv");
            let json = out.with_extension("json");
            fs::write(&csv, report.to_csv()).map_err(|e| Failure::Run(format!("{}: {e}", csv.display())))?;
            fs::write(&json, report.to_json()).map_err(|e| Failure::Run(format!("{}: {e}", json.display())))?;
            print!("{}", report.to_csv());
            if let (Some(s), Some(se)) = (report.slope, report.slope_stderr) {
                println!("slope: {s:.4} +/- {se:.4}");
            }
            if let Some(c) = report.c_hat {
                println!("C_hat: {c:.6e}");
            }
            if let Some(msg) = report.failure {
                return Err(Failure::Run(msg));
            }
        }
        Command::Tilt { file, xi } => {
            let xi: Vec<f64> = parse_list(&xi, "xi")?;
            let m = read_measure(&file)?;
            let sol = solve_tilt(&m, &xi)?;
            print!("{}", harness::render_tilt(&sol));
        }
        Command::Corollary { file, n } => {
            let n_list = parse_n_list(&n)?;
            let m = read_measure(&file)?;
            let rows = harness::corollary_table(&m, &n_list)?;
            print!("{}", harness::render_corollary(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

//! Command-line front end: reads matrices and rational functions as JSON,
//! writes JSON reports. Exit codes: 0 pass, 2 refuted or failed, 1 usage or I/O.

mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use annulus_lab::classes::{certify, Verdict};
use annulus_lab::demo::demo_example;
use annulus_lab::dilation::{ando_pair, build_model, default_budget, tail_report, verify_model, ModelTriple, TailReport};
use annulus_lab::linalg::inverse;
use annulus_lab::rational::order_for_tolerance;
use annulus_lab::unitary::decompose;
use annulus_lab::{laurent_expand, AnnulusRational, ComplexMatrix, Error, Tolerances};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

const THREADS_VAR: &str = "ANNULUS_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "annulus-lab", version, about = "Certification, functional calculus and dilation models on the annulus r <= |z| <= 1")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Necessary checks, a seeded stress battery and the minimal-disk test.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
    },
    /// Split a normal matrix with spectrum on both circles.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Commuting isometric dilation of a pair, with a word-moment table.
    Dilate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        matrix: PathBuf,
        /// Second operator; defaults to rT^-1.
        #[arg(long)]
        matrix2: Option<PathBuf>,
        /// Word degree budget.
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
        d: u64,
    },
    /// Verify f(T) against the normal boundary model, one row per function.
    ModelVerify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        matrix: PathBuf,
        /// One rational function or an array of them.
        #[arg(long)]
        f: PathBuf,
        /// Degree budget; defaults to the budget suggested by the first function.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        d: Option<u64>,
        /// Largest tail bound accepted before reporting a budget shortfall.
        #[arg(long, default_value_t = 1e-8)]
        tail_tol: f64,
        /// Also write N.json, F.json, V.json and meta.json here.
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Truncated Laurent expansion with its tail bound.
    Laurent {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        f: PathBuf,
        /// Truncation order; defaults to the smallest order with tail <= --tail-tol.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tail_tol: f64,
    },
    /// Run the 2x2 completely non-normal example end to end.
    DemoExample {
        #[command(flatten)]
        common: Common,
    },
    /// Reduced invariant suite over seeded instances.
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Inner radius of the annulus.
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eig_tol: Option<f64>,
    #[arg(long)]
    norm_tol: Option<f64>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    verify_tol: Option<f64>,
}

impl Common {
    fn tolerances(&self) -> Result<Tolerances, Failure> {
        let d = Tolerances::default();
        let tol = Tolerances {
            eig_tol: self.eig_tol.unwrap_or(d.eig_tol),
            norm_tol: self.norm_tol.unwrap_or(d.norm_tol),
            rank_tol: self.rank_tol.unwrap_or(d.rank_tol),
            verify_tol: self.verify_tol.unwrap_or(d.verify_tol),
        };
        tol.validate().map_err(Failure::from)?;
        Ok(tol)
    }

    fn radius(&self) -> Result<f64, Failure> {
        if self.r > 0.0 && self.r < 1.0 {
            Ok(self.r)
        } else {
            Err(Failure::Usage(format!("--r must lie in (0, 1), got {}", self.r)))
        }
    }
}

#[derive(Debug)]
enum Failure {
    /// Bad flags, unreadable or malformed input: exit 1.
    Usage(String),
    /// The input parsed but failed a mathematical check: exit 2.
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BadRadius(_)
            | Error::InvalidRational(_)
            | Error::RootInClosedDisk { .. }
            | Error::RootOutsideInnerDisk { .. }
            | Error::InvalidInput(_)
            | Error::NotSquare { .. }
            | Error::DimensionMismatch(_) => Failure::Usage(e.to_string()),
            _ => Failure::Failed(e.to_string()),
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("cannot parse {}: {e}", path.display())))
}

fn read_functions(path: &Path, r: f64) -> Result<Vec<AnnulusRational>, Failure> {
    let value: serde_json::Value = read_json(path)?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        other => vec![other],
    };
    if items.is_empty() {
        return Err(Failure::Usage(format!("{} holds no functions", path.display())));
    }
    items
        .into_iter()
        .map(|v| {
            let f: AnnulusRational = serde_json::from_value(v)
                .map_err(|e| Failure::Usage(format!("cannot parse {}: {e}", path.display())))?;
            if f.r != r {
                return Err(Failure::Usage(format!("function radius {} differs from --r {r}", f.r)));
            }
            Ok(f)
        })
        .collect()
}

fn write_report<T: Serialize>(report: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_threads() -> Result<(), Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(()),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(()),
            _ => Err(Failure::Usage(format!("{THREADS_VAR} must be an integer >= 1, got {v:?}"))),
        },
    }
}

/// `Ok(true)` when the command passed.
fn run(cli: Cli) -> Result<bool, Failure> {
    check_threads()?;
    match cli.command {
        Command::Certify { common, matrix, trials } => {
            let (r, tol) = (common.radius()?, common.tolerances()?);
            let t: ComplexMatrix = read_json(&matrix)?;
            let report = certify(&t, r, trials as usize, common.seed, &tol)?;
            eprintln!("verdict {:?}, max ratio {:.12}", report.verdict, report.max_ratio);
            write_report(&report, common.out.as_deref())?;
            Ok(matches!(report.verdict, Verdict::PassedStress | Verdict::PassedNecessary))
        }
        Command::Decompose { common, matrix } => {
            let (r, tol) = (common.radius()?, common.tolerances()?);
            let n: ComplexMatrix = read_json(&matrix)?;
            let d = decompose(&n, r, &tol)?;
            let pass = d.residual <= tol.verify_tol && d.riesz_defect <= tol.verify_tol;
            eprintln!("dim P1 = {}, dim P2 = {}, residual {:.3e}", d.u1.rows(), d.u2.rows(), d.residual);
            write_report(&d, common.out.as_deref())?;
            Ok(pass)
        }
        Command::Dilate { common, matrix, matrix2, d } => {
            let (r, tol) = (common.radius()?, common.tolerances()?);
            let t1: ComplexMatrix = read_json(&matrix)?;
            let t2 = match matrix2 {
                Some(path) => read_json(&path)?,
                None => inverse(&t1, &tol).map_err(|_| Failure::from(Error::NotInvertible))?.scale_real(r),
            };
            let d = d as usize;
            let pair = ando_pair(&t1, &t2, d + 1, &tol)?;
            let table: Vec<_> = (0..=d).map(|k| json!({"degree": k, "residual": pair.word_moment_residual(k)})).collect();
            let isometry = pair.isometry_defect_on_budget();
            let commutator = pair.commutator_on_blocks(d - 1);
            let worst = table.iter().map(|row| row["residual"].as_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            let pass = worst <= tol.verify_tol && commutator <= tol.verify_tol && isometry <= tol.verify_tol;
            eprintln!("M = {}, dimension {}, worst word residual {worst:.3e}", pair.m, pair.dim());
            let report = json!({
                "version": annulus_lab::VERSION,
                "dim_h": pair.dim_h(),
                "M": pair.m,
                "dim": pair.dim(),
                "fixup_defect": pair.fixup_defect,
                "isometry_defect_on_budget": isometry,
                "commutator_on_budget": commutator,
                "word_residuals": table,
                "pass": pass,
            });
            write_report(&report, common.out.as_deref())?;
            Ok(pass)
        }
        Command::ModelVerify { common, matrix, f, d, tail_tol, model_dir } => {
            let (r, tol) = (common.radius()?, common.tolerances()?);
            let t: ComplexMatrix = read_json(&matrix)?;
            let functions = read_functions(&f, r)?;
            let d = match d {
                Some(d) => d as usize,
                None => default_budget(&functions[0], &t, &tol)?,
            };
            let model = build_model(&t, r, d, &tol)?;
            let mut rows = Vec::new();
            let mut pass = true;
            for (i, f) in functions.iter().enumerate() {
                let row = match verify_model(&model, &t, f, tail_tol, &tol) {
                    Ok(v) => {
                        pass &= v.passed;
                        json!({"index": i, "residual": v.residual, "tail_bound": v.tail.bound,
                               "flip_defect": v.flip_defect, "passed": v.passed})
                    }
                    Err(e @ Error::BudgetExceeded { .. }) => {
                        pass = false;
                        json!({"index": i, "error": e.to_string(), "passed": false})
                    }
                    Err(e) => return Err(e.into()),
                };
                eprintln!("f[{i}]: {row}");
                rows.push(row);
            }
            if let Some(dir) = model_dir {
                let tails = tail_report(&functions[0], &t, d, &tol)?;
                write_model(&model, tails, &dir, common.seed)?;
            }
            let meta = model.meta();
            let report = json!({"version": annulus_lab::VERSION, "r": r, "d": d, "M": meta.m, "dim_k": meta.dim_k,
                                "rows": rows, "pass": pass});
            write_report(&report, common.out.as_deref())?;
            Ok(pass)
        }
        Command::Laurent { common, f, order, tail_tol } => {
            let r = common.radius()?;
            let f = read_functions(&f, r)?.remove(0);
            let order = match order {
                Some(m) => m,
                None => order_for_tolerance(&f, tail_tol, 1.0, r, 100_000)?,
            };
            let series = laurent_expand(&f, order)?;
            eprintln!("order {order}, tail bound {:.3e}", series.tail_bound);
            write_report(&series, common.out.as_deref())?;
            Ok(true)
        }
        Command::DemoExample { common } => {
            let (r, tol) = (common.radius()?, common.tolerances()?);
            let report = demo_example(r, &tol)?;
            for c in &report.checks {
                eprintln!("{}: {} (error {:.2e})", c.name, if c.pass { "ok" } else { "FAIL" }, c.error);
            }
            write_report(&report, common.out.as_deref())?;
            Ok(report.pass)
        }
        Command::Selftest { common } => {
            let tol = common.tolerances()?;
            let report = selftest::run(common.seed, &tol).map_err(Failure::Failed)?;
            for c in &report.checks {
                eprintln!("{} {}: {}/{} (worst {:.2e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.passed, c.cases, c.worst);
            }
            write_report(&report, common.out.as_deref())?;
            Ok(report.pass)
        }
    }
}

fn write_model(model: &ModelTriple, tails: TailReport, dir: &Path, seed: u64) -> Result<(), Failure> {
    let mut model = model.clone();
    model.seed = Some(seed);
    model.tail_report = Some(tails);
    fs::create_dir_all(dir)
        .and_then(|_| model.write_dir(dir))
        .map_err(|e| Failure::Usage(format!("cannot write model to {}: {e}", dir.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(2)
        }
    }
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nvk_core::conditions::{classify_with_evidence, ConditionError, Verdict};
use nvk_core::convex_transform::{transform_general, ConvexCoefficients};
use nvk_core::representation::{eval_with, EvalMethod, RepresentationError};
use nvk_core::{sampling, PolyUpperPoint, QuadratureConfig, QuadratureResult};
use serde_json::{json, Value};

use crate::complex::{format_complex, parse_point, parse_reals};
use crate::descriptor::{load_measure, Descriptor};
use crate::suites::{self, Suite, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nvk", version, about = "Herglotz-Nevanlinna representations and the convex combination transform")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    /// Closed forms where the measure allows them
    Reduced,
    /// Iterated quadrature of the kernel
    Quadrature,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate q(z) for a descriptor at one or more points
    Eval {
        descriptor: PathBuf,
        /// Comma-separated point of the poly-upper half-plane, e.g. 0+1i,2-0.5i (repeatable)
        #[arg(long = "z", required = true, allow_hyphen_values = true)]
        z: Vec<String>,
        /// Relative quadrature tolerance
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "reduced")]
        method: Method,
    },
    /// Apply the convex combination transform with weights k
    Transform {
        descriptor: PathBuf,
        /// Comma-separated non-negative weights summing to 1
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        /// Write the transformed descriptor here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a numerical verification suite
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, env = "NVK_SEED", default_value_t = sampling::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; results are identical for any value
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Relative quadrature tolerance
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Classify the pushforward of a measure on ℝ by a coefficient matrix
    Classify {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Descriptor (or measure document) holding a measure on ℝ
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
}

/// A failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn numeric(message: impl ToString) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.to_string(),
        }
    }
}

fn config(tol: Option<f64>) -> Result<QuadratureConfig, Failure> {
    let cfg = match tol {
        Some(t) => QuadratureConfig::default().with_rel_tol(t),
        None => QuadratureConfig::default(),
    };
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(Failure::usage),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Eval { descriptor, z, tol, method } => eval(&descriptor, &z, tol, method, out),
        Command::Transform { descriptor, k, out: path } => transform(&descriptor, &k, path.as_deref(), out),
        Command::Verify {
            suite,
            n,
            seed,
            samples,
            format,
            out: path,
            jobs,
            tol,
        } => verify(suite, n, seed, samples, format, path.as_deref(), jobs, tol, out, err),
        Command::Classify {
            alpha,
            beta,
            gamma,
            delta,
            mu,
            tol,
        } => classify([alpha, beta, gamma, delta], &mu, tol, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn eval(descriptor: &Path, points: &[String], tol: Option<f64>, method: Method, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = config(tol)?;
    let data = Descriptor::load(descriptor)
        .and_then(|d| d.to_data())
        .map_err(Failure::usage)?;
    let points = points
        .iter()
        .map(|p| {
            let z = parse_point(p).map_err(Failure::usage)?;
            PolyUpperPoint::new(z).map_err(Failure::usage)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let method = match method {
        Method::Reduced => EvalMethod::Reduced,
        Method::Quadrature => EvalMethod::Quadrature,
    };
    let mut code = EXIT_OK;
    for z in &points {
        let e = eval_with(&data, z, &cfg, method).map_err(|e| match e {
            RepresentationError::Quadrature(_) | RepresentationError::GrowthViolation => Failure::numeric(e),
            _ => Failure::usage(e),
        })?;
        if !e.converged {
            code = EXIT_NUMERIC;
        }
        let line = json!({
            "z": z.coords().iter().map(|c| format_complex(*c)).collect::<Vec<_>>(),
            "value": format_complex(e.value),
            "error_estimate": e.error_estimate,
            "converged": e.converged,
        });
        writeln!(out, "{line}").map_err(Failure::usage)?;
    }
    Ok(code)
}

fn transform(descriptor: &Path, k: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<i32, Failure> {
    let data = Descriptor::load(descriptor)
        .and_then(|d| d.to_data())
        .map_err(Failure::usage)?;
    let k = parse_reals(k).map_err(Failure::usage)?;
    let k = ConvexCoefficients::new(k).map_err(Failure::usage)?;
    let transformed = transform_general(&data, &k).map_err(Failure::usage)?;
    let text = Descriptor::from_data(&transformed).map_err(Failure::usage)?.to_json();
    emit(path, &format!("{text}\n"), out)?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn verify(
    suite: Suite,
    n: Option<usize>,
    seed: u64,
    samples: usize,
    format: Format,
    path: Option<&Path>,
    jobs: usize,
    tol: Option<f64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let opts = SuiteOptions {
        n,
        seed,
        samples,
        jobs,
        cfg: config(tol)?,
    };
    let report = suites::run(suite, &opts).map_err(Failure::usage)?;
    let text = match format {
        Format::Json => format!("{}\n", report.to_json()),
        Format::Csv => report.to_csv(),
    };
    emit(path, &text, out)?;
    let _ = writeln!(err, "{}", report.summary_line());
    Ok(if report.passed { EXIT_OK } else { EXIT_NUMERIC })
}

fn quadrature_json(r: &QuadratureResult) -> Value {
    json!({
        "value": r.value.re,
        "error_estimate": r.error_estimate,
        "converged": r.converged,
        "diverged": r.diverged,
    })
}

fn classify(coefficients: [f64; 4], mu: &Path, tol: Option<f64>, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = config(tol)?;
    let mu = load_measure(mu).map_err(Failure::usage)?;
    let report = classify_with_evidence(coefficients, &mu, None, &cfg).map_err(|e| match e {
        ConditionError::Quadrature(_) | ConditionError::DegenerateCubic => Failure::numeric(e),
        _ => Failure::usage(e),
    })?;
    let c = report.classification;
    let representing = match c.verdict {
        Verdict::Representing => json!(true),
        Verdict::NotRepresenting => json!(false),
        Verdict::Indeterminate => json!("indeterminate"),
    };
    let ev = &report.evidence;
    let doc = json!({
        "case": c.region.map_or("NotRepresenting".to_string(), |r| r.to_string()),
        "label": c.label.to_string(),
        "representing": representing,
        "traits": report.traits,
        "evidence": {
            "growth": quadrature_json(&ev.growth),
            "growth_finite": ev.growth_finite,
            "nevanlinna_max": ev.nevanlinna_max,
            "nevanlinna_scale": ev.nevanlinna_scale,
            "nevanlinna_zero": ev.nevanlinna_zero,
            "nevanlinna_diverged": ev.nevanlinna_diverged,
            "supports_representing": ev.supports_representing(),
        },
        "conflicts": report.conflicts,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json")).map_err(Failure::usage)?;
    Ok(EXIT_OK)
}

//! Verification suites behind `nvk verify`. Every suite produces rows of the
//! form `(sample, check, inputs, lhs, rhs, rel_error)`; a check passes when
//! all of its rows are within its tolerance.

use std::f64::consts::PI;

use nvk_core::conditions::{classify_with_evidence, CaseLabel};
use nvk_core::convex_transform::{transform, ConvexCoefficients, LadderCoefficients};
use nvk_core::kernels::{eval_kn_rational, eval_kn_sum};
use nvk_core::ladder_verify::{deviation, draw_ladder, relative_error, rung_sample, verify_full_reduction, ReductionPath};
use nvk_core::measures::{Atom, Measure};
use nvk_core::representation::{eval_reduced, RepresentationData};
use nvk_core::sampling;
use nvk_core::{Complex64, PolyUpperPoint, QuadratureConfig};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::complex::{format_complex, format_real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Ladder,
    Main,
    Conditions,
    Kernels,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Ladder => "ladder",
            Suite::Main => "main",
            Suite::Conditions => "conditions",
            Suite::Kernels => "kernels",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub sample: usize,
    pub check: String,
    pub inputs: String,
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    pub rel_error: f64,
    /// Why the row could not be computed; such rows fail their check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Row {
    fn new(sample: usize, check: &str, inputs: String, lhs: Complex64, rhs: Complex64, rel_error: f64) -> Self {
        Self {
            sample,
            check: check.to_string(),
            inputs,
            lhs_re: lhs.re,
            lhs_im: lhs.im,
            rhs_re: rhs.re,
            rhs_im: rhs.im,
            rel_error,
            error: None,
        }
    }

    fn failed(sample: usize, check: &str, inputs: String, error: String) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        Self {
            error: Some(error),
            ..Self::new(sample, check, inputs, nan, nan, f64::INFINITY)
        }
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.error.is_none() && self.rel_error <= tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check: String,
    pub tolerance: f64,
    pub rows: usize,
    /// `None` when some row failed to compute.
    pub max_rel_error: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: &'static str,
    pub seed: u64,
    pub n: Option<usize>,
    pub samples: usize,
    pub checks: Vec<CheckSummary>,
    pub passed: bool,
    pub rows: Vec<Row>,
}

impl Report {
    fn assemble(suite: Suite, seed: u64, n: Option<usize>, samples: usize, groups: Vec<(String, f64, Vec<Row>)>) -> Self {
        let mut checks = Vec::new();
        let mut rows = Vec::new();
        for (check, tolerance, group) in groups {
            let failed = group.iter().any(|r| r.error.is_some());
            checks.push(CheckSummary {
                check,
                tolerance,
                rows: group.len(),
                max_rel_error: (!failed).then(|| group.iter().map(|r| r.rel_error).fold(0.0, f64::max)),
                passed: group.iter().all(|r| r.passes(tolerance)),
            });
            rows.extend(group);
        }
        Self {
            suite: suite.name(),
            seed,
            n,
            samples,
            passed: checks.iter().all(|c| c.passed),
            checks,
            rows,
        }
    }

    pub fn summary_line(&self) -> String {
        let worst = self
            .checks
            .iter()
            .map(|c| c.max_rel_error.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        let failing: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.check.as_str()).collect();
        format!(
            "suite {}: {} rows in {} checks, max rel error {:.3e}, {}",
            self.suite,
            self.rows.len(),
            self.checks.len(),
            worst,
            if failing.is_empty() {
                "passed".to_string()
            } else {
                format!("FAILED ({})", failing.join(", "))
            }
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_csv(&self) -> String {
        #[derive(Serialize)]
        struct CsvRow<'a> {
            sample: usize,
            check: &'a str,
            inputs: &'a str,
            lhs_re: f64,
            lhs_im: f64,
            rhs_re: f64,
            rhs_im: f64,
            rel_error: f64,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                sample: r.sample,
                check: &r.check,
                inputs: &r.inputs,
                lhs_re: r.lhs_re,
                lhs_im: r.lhs_im,
                rhs_re: r.rhs_re,
                rhs_im: r.rhs_im,
                rel_error: r.rel_error,
            })
            .expect("rows serialize");
        }
        if self.rows.is_empty() {
            return "sample,check,inputs,lhs_re,lhs_im,rhs_re,rhs_im,rel_error\n".into();
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }
}

pub struct SuiteOptions {
    pub n: Option<usize>,
    pub seed: u64,
    pub samples: usize,
    pub jobs: usize,
    pub cfg: QuadratureConfig,
}

/// Maps `f` over `0..count` on `jobs` workers, keeping index order.
fn par_map<T: Send>(count: usize, jobs: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

fn reals(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format_real(*x)).collect::<Vec<_>>().join(" "))
}

fn points(v: &[Complex64]) -> String {
    format!("[{}]", v.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(" "))
}

pub fn run(suite: Suite, opts: &SuiteOptions) -> Result<Report, String> {
    let groups = match suite {
        Suite::Ladder => ladder(opts)?,
        Suite::Main => main_theorem(opts)?,
        Suite::Conditions => conditions(opts),
        Suite::Kernels => kernels(opts)?,
    };
    Ok(Report::assemble(suite, opts.seed, opts.n, opts.samples, groups))
}

pub const RUNG_TOLERANCE: f64 = 1e-7;
pub const RESIDUE_TOLERANCE: f64 = 1e-8;
pub const REDUCTION_TOLERANCE: f64 = 1e-6;

fn ladder(opts: &SuiteOptions) -> Result<Vec<(String, f64, Vec<Row>)>, String> {
    let n = opts.n.unwrap_or(3);
    if n < 2 {
        return Err(format!("the ladder suite needs n ≥ 2, got {n}"));
    }
    let mut groups = Vec::new();
    for m in (2..=n).rev() {
        let d = n - m;
        let pairs = par_map(opts.samples, opts.jobs, |i| {
            let draw = draw_ladder(opts.seed, i, n, m - 1);
            let inputs = format!("b={};z={};t={}", reals(&draw.b), points(&draw.z), reals(&draw.t));
            match rung_sample(m, d, opts.seed, i, &opts.cfg) {
                Ok(s) => (
                    Row::new(i, &format!("rung({m},{d})"), inputs.clone(), s.check.lhs, s.check.rhs, s.check.rel_error()),
                    Row::new(i, &format!("residue({m},{d})"), inputs, s.check.lhs, s.residue, s.residue_rel_error()),
                ),
                Err(e) => (
                    Row::failed(i, &format!("rung({m},{d})"), inputs.clone(), e.to_string()),
                    Row::failed(i, &format!("residue({m},{d})"), inputs, e.to_string()),
                ),
            }
        });
        let (rungs, residues): (Vec<Row>, Vec<Row>) = pairs.into_iter().unzip();
        groups.push((format!("rung({m},{d})"), RUNG_TOLERANCE, rungs));
        groups.push((format!("residue({m},{d})"), RESIDUE_TOLERANCE, residues));
    }
    if n <= 3 {
        let rows = par_map(opts.samples, opts.jobs, |i| {
            let draw = draw_ladder(opts.seed, i, n, 1);
            let inputs = format!("b={};z={};t1={}", reals(&draw.b), points(&draw.z), format_real(draw.t[0]));
            let run = || -> Result<_, String> {
                let b = LadderCoefficients::new(draw.b.clone()).map_err(|e| e.to_string())?;
                let z = PolyUpperPoint::new(draw.z.clone()).map_err(|e| e.to_string())?;
                verify_full_reduction(&b, &z, draw.t[0], ReductionPath::Iterated, &opts.cfg).map_err(|e| e.to_string())
            };
            match run() {
                Ok(r) => Row::new(i, "reduction", inputs, r.lhs, r.rhs, r.rel_error()),
                Err(e) => Row::failed(i, "reduction", inputs, e),
            }
        });
        groups.push(("reduction".into(), REDUCTION_TOLERANCE, rows));
    }
    Ok(groups)
}

pub const MAIN_TOLERANCE: f64 = 1e-12;

/// Random one-variable data with at most five atoms, strict weights and a point.
fn main_draw(seed: u64, index: usize, n: usize) -> (RepresentationData, ConvexCoefficients, PolyUpperPoint) {
    let mut rng = sampling::sample_rng(seed, index);
    let count = rng.gen_range(1..=5);
    let atoms = (0..count)
        .map(|_| Atom::new(vec![rng.gen_range(-3.0..3.0)], rng.gen_range(0.1..3.0)))
        .collect();
    let mu = Measure::atomic(1, atoms).expect("valid atoms");
    let data = RepresentationData::one_var(rng.gen_range(-2.0..2.0), rng.gen_range(0.0..2.0), mu).expect("valid data");
    let k = ConvexCoefficients::new(sampling::convex_weights(&mut rng, n, 0.05)).expect("weights sum to one");
    let z = sampling::poly_upper_point(&mut rng, n, (-5.0, 5.0), (0.1, 5.0));
    (data, k, z)
}

fn main_theorem(opts: &SuiteOptions) -> Result<Vec<(String, f64, Vec<Row>)>, String> {
    let n = opts.n.unwrap_or(2);
    if n < 2 {
        return Err(format!("the main suite needs n ≥ 2, got {n}"));
    }
    let rows = par_map(opts.samples, opts.jobs, |i| {
        let (data, k, z) = main_draw(opts.seed, i, n);
        let inputs = format!("k={};z={}", reals(k.values()), points(z.coords()));
        let run = || -> Result<(Complex64, Complex64), String> {
            let transformed = transform(&data, &k).map_err(|e| e.to_string())?;
            let lhs = eval_reduced(&transformed, &z, &opts.cfg).map_err(|e| e.to_string())?.value;
            let w = PolyUpperPoint::single(z.weighted_sum(k.values())).map_err(|e| e.to_string())?;
            let rhs = eval_reduced(&data, &w, &opts.cfg).map_err(|e| e.to_string())?.value;
            Ok((lhs, rhs))
        };
        match run() {
            Ok((lhs, rhs)) => Row::new(i, "main", inputs, lhs, rhs, deviation(lhs, rhs)),
            Err(e) => Row::failed(i, "main", inputs, e),
        }
    });
    Ok(vec![("main".into(), MAIN_TOLERANCE, rows)])
}

/// Coefficients, base measure description, base measure and expected label
/// (`None` for the negative fixtures).
pub fn classification_fixtures() -> Vec<([f64; 4], &'static str, Measure, Option<CaseLabel>)> {
    let pi_delta = || Measure::dirac(vec![0.0], PI).expect("valid atom");
    let lebesgue = || Measure::lebesgue(1);
    use CaseLabel::*;
    vec![
        ([0.0, 0.0, 1.0, 1.0], "pi*delta0", pi_delta(), Some(I1)),
        ([1.0, 0.0, 0.0, 1.0], "lebesgue", lebesgue(), Some(I2)),
        ([1.0, 1.0, 0.0, 0.0], "pi*delta0", pi_delta(), Some(Ii1)),
        ([0.0, 1.0, 1.0, 0.0], "lebesgue", lebesgue(), Some(Ii2)),
        ([1.0, 1.0, -1.0, -1.0], "pi*delta0", pi_delta(), Some(Iii1a)),
        ([1.0, 1.0, 1.0, -1.0], "lebesgue", lebesgue(), Some(Iii1b)),
        ([1.0, 1.0, 1.0, 1.0], "zero", Measure::zero(1), Some(Iii2a)),
        ([1.0, 1.0, 1.0, 2.0], "lebesgue", lebesgue(), Some(Iii2b)),
        ([1.0, 1.0, 1.0, 1.0], "pi*delta0", pi_delta(), None),
        ([1.0, 0.0, 1.0, 0.0], "pi*delta0", pi_delta(), None),
        ([1.0, 1.0, 1.0, 2.0], "pi*delta0", pi_delta(), None),
    ]
}

/// One row per fixture. `lhs` is the growth integral, `rhs` the largest
/// Nevanlinna modulus over the grid; `rel_error` is 0 when both the label and
/// the numerical evidence match the expectation and 1 otherwise.
fn conditions(opts: &SuiteOptions) -> Vec<(String, f64, Vec<Row>)> {
    let fixtures = classification_fixtures();
    let rows = par_map(fixtures.len(), opts.jobs, |i| {
        let (coef, name, mu, expected) = &fixtures[i];
        let want = expected.unwrap_or(CaseLabel::NotRepresenting);
        let inputs = format!("coefficients={};mu={};expected={}", reals(coef), name, want);
        match classify_with_evidence(*coef, mu, None, &opts.cfg) {
            Ok(r) => {
                let label = r.classification.label;
                let agrees = label == want && r.evidence.supports_representing() == expected.is_some();
                let growth = if r.evidence.growth.diverged {
                    Complex64::new(f64::INFINITY, 0.0)
                } else {
                    r.evidence.growth.value
                };
                let nev = if r.evidence.nevanlinna_diverged {
                    f64::INFINITY
                } else {
                    r.evidence.nevanlinna_max
                };
                Row::new(
                    i,
                    "classification",
                    format!("{inputs};got={label}"),
                    growth,
                    Complex64::new(nev, 0.0),
                    if agrees { 0.0 } else { 1.0 },
                )
            }
            Err(e) => Row::failed(i, "classification", inputs, e.to_string()),
        }
    });
    vec![("classification".into(), 0.0, rows)]
}

pub const KERNEL_TOLERANCE: f64 = 1e-12;

fn kernels(opts: &SuiteOptions) -> Result<Vec<(String, f64, Vec<Row>)>, String> {
    let dims: Vec<usize> = match opts.n {
        Some(n) if (1..=4).contains(&n) => vec![n],
        Some(n) => return Err(format!("the kernels suite covers n = 1…4, got {n}")),
        None => (1..=4).collect(),
    };
    let mut groups = Vec::new();
    for n in dims {
        let rows = par_map(opts.samples, opts.jobs, |i| {
            let mut rng = sampling::sample_rng(opts.seed, i);
            let z = sampling::poly_upper_point(&mut rng, n, (-10.0, 10.0), (0.1, 10.0));
            let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let inputs = format!("z={};t={}", points(z.coords()), reals(&t));
            match (eval_kn_sum(&z, &t), eval_kn_rational(&z, &t)) {
                (Ok(a), Ok(b)) => Row::new(i, &format!("forms(n={n})"), inputs, a, b, (a - b).norm() / (1.0 + b.norm())),
                (Err(e), _) | (_, Err(e)) => Row::failed(i, &format!("forms(n={n})"), inputs, e.to_string()),
            }
        });
        groups.push((format!("forms(n={n})"), KERNEL_TOLERANCE, rows));
    }
    let origin = PolyUpperPoint::repeated(Complex64::i(), 2).expect("upper point");
    let row = match eval_kn_rational(&origin, &[0.0, 0.0]) {
        Ok(v) => Row::new(0, "k2_origin", "z=[0+1i 0+1i];t=[0 0]".into(), v, Complex64::i(), relative_error(v, Complex64::i())),
        Err(e) => Row::failed(0, "k2_origin", String::new(), e.to_string()),
    };
    groups.push(("k2_origin".into(), 0.0, vec![row]));
    Ok(groups)
}

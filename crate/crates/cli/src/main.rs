//! `nonarch`: command-line front end for the p-adic calculus library.
//!
//! Exit codes: 0 when every contract in the run holds, 1 on a contract
//! violation (with a report describing the offending check), 2 on usage or
//! configuration errors. Reports are JSON (or CSV for path dumps), are a
//! pure function of (config, seed), and carry `"schema": 1`.

use clap::{Args, Parser, Subcommand};
use nonarch_core::antideriv::{antiderive_scalar, KernelG, MultilinearKernel, OperatorFamily};
use nonarch_core::aoi::ApproximationOfIdentity;
use nonarch_core::banach::{
    nu_triangle_holds, pvm_from_partition, spectral_decompose, Matrix, RankOneSum,
};
use nonarch_core::cn::{CnFunction, Poly, ScalarFn};
use nonarch_core::ito::{ito_verify_polynomial, Coeff, JointPoly};
use nonarch_core::padic::{is_prime, parse_rational, power_norm, rational_string};
use nonarch_core::process::{
    identity_integrand, increment_law_check, lq_bound_check, path_weighted_integrand,
    scalar_form, stochastic_integral, time_poly_integrand, ProcessLaw, SimpleRandomField,
};
use nonarch_core::quasi::{
    character_eval, homogeneous_iterate, validate_kernel, LocallyConstantMeasure, StateSpace,
    TransitionKernel,
};
use nonarch_core::{Ball, Error, Padic};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nonarch", version, about = "Exact p-adic stochastic calculus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Prime of the base field
    #[arg(long)]
    prime: Option<u64>,
    /// Working precision in digits (>= 4)
    #[arg(long)]
    precision: Option<u32>,
    /// Series truncation: number of node-sum terms
    #[arg(long)]
    terms: Option<u32>,
    /// Basis truncation for expansions and process laws
    #[arg(long)]
    degree: Option<u32>,
    /// Seeds for randomized work (comma separated)
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Report file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: json or csv
    #[arg(long)]
    format: Option<String>,
    /// JSON config file; its fields override the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Expand point samples in the Mahler binomial basis
    Expand {
        #[command(flatten)]
        common: Common,
        /// Sample values f(0), f(1), ..., f(degree) as rationals
        #[arg(long, value_delimiter = ',', required = true)]
        samples: Vec<String>,
    },
    /// Node-sum antiderivative of a polynomial kernel
    Antideriv {
        #[command(flatten)]
        common: Common,
        /// Kernel polynomial coefficients (rationals, ascending degree)
        #[arg(long, value_delimiter = ',', required = true)]
        coeffs: Vec<String>,
        /// Evaluation point (rational in Z_p)
        #[arg(long)]
        point: Option<String>,
    },
    /// Spectral decomposition round-trip on a random diagonal operator
    Spectral {
        #[command(flatten)]
        common: Common,
        /// Operator dimension
        #[arg(long, default_value_t = 4)]
        dim: usize,
    },
    /// Transition-kernel axioms on the ball partition grid
    Quasimeasure {
        #[command(flatten)]
        common: Common,
        /// Partition depth of the state space
        #[arg(long, default_value_t = 2)]
        depth: u32,
    },
    /// Sample process paths and dump their node values
    SamplePaths {
        #[command(flatten)]
        common: Common,
        /// Time point whose sigma-nodes are tabulated
        #[arg(long)]
        point: Option<String>,
    },
    /// Stochastic integral of an integrand against a sampled path
    StoIntegral {
        #[command(flatten)]
        common: Common,
        /// Integrand: "identity", "path", or polynomial coefficients
        #[arg(long, default_value = "identity")]
        integrand: String,
        #[arg(long)]
        point: Option<String>,
    },
    /// Change-of-variable identity check on sampled paths
    ItoCheck {
        #[command(flatten)]
        common: Common,
        /// State polynomial f(x) coefficients (rationals, ascending)
        #[arg(long, value_delimiter = ',', default_value = "0,0,0,1")]
        f_coeffs: Vec<String>,
        /// Constant drift a
        #[arg(long, default_value = "1")]
        drift: String,
        /// Constant diffusion E
        #[arg(long, default_value = "1")]
        diffusion: String,
        #[arg(long)]
        point: Option<String>,
    },
    /// Run the whole contract suite at desk scale
    VerifyAll {
        #[command(flatten)]
        common: Common,
    },
}

/// Usage/config problems exit 2; contract violations exit 1.
enum Failure {
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Usage(e.to_string())
    }
}

#[derive(Clone)]
struct RunConfig {
    prime: u64,
    precision: u32,
    terms: u32,
    degree: u32,
    seeds: Vec<u64>,
    format: String,
    out: Option<PathBuf>,
}

#[derive(serde::Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    prime: Option<u64>,
    precision: Option<u32>,
    terms: Option<u32>,
    degree: Option<u32>,
    seeds: Option<Vec<u64>>,
    format: Option<String>,
}

impl RunConfig {
    fn resolve(common: &Common, default_prime: Option<u64>) -> Result<RunConfig, Failure> {
        let file: ConfigFile = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text)
                    .map_err(|e| Failure::Usage(format!("bad config file: {}", e)))?
            }
            None => ConfigFile::default(),
        };
        let prime = file
            .prime
            .or(common.prime)
            .or(default_prime)
            .ok_or_else(|| Failure::Usage("missing --prime".into()))?;
        if !is_prime(prime) {
            return Err(Failure::Usage(format!("{} is not prime", prime)));
        }
        let precision = file.precision.or(common.precision).unwrap_or(20);
        if precision < 4 {
            return Err(Failure::Usage("precision must be >= 4".into()));
        }
        let terms = file.terms.or(common.terms).unwrap_or(12);
        let degree = file.degree.or(common.degree).unwrap_or(3);
        if terms < 1 || degree < 1 {
            return Err(Failure::Usage("terms and degree must be >= 1".into()));
        }
        let mut seeds = file.seeds.unwrap_or_else(|| common.seed.clone());
        if seeds.is_empty() {
            seeds.push(0);
        }
        let format = file
            .format
            .or_else(|| common.format.clone())
            .unwrap_or_else(|| "json".into());
        if format != "json" && format != "csv" {
            return Err(Failure::Usage(format!("unknown format '{}'", format)));
        }
        Ok(RunConfig {
            prime,
            precision,
            terms,
            degree,
            seeds,
            format,
            out: common.out.clone(),
        })
    }

    fn parse_padic(&self, s: &str) -> Result<Padic, Failure> {
        let r = parse_rational(s)?;
        Ok(Padic::from_ratio(&r, self.prime, self.precision)?)
    }

    fn parse_poly(&self, coeffs: &[String]) -> Result<Poly, Failure> {
        let cs: Result<Vec<Padic>, Failure> =
            coeffs.iter().map(|s| self.parse_padic(s)).collect();
        Ok(Poly::new(self.prime, cs?))
    }

    /// A default point of Z_p with an infinite digit expansion.
    fn default_point(&self) -> Result<Padic, Failure> {
        let s = if self.prime == 2 { "1/3" } else { "1/2" };
        self.parse_padic(s)
    }

    fn point_or_default(&self, point: &Option<String>) -> Result<Padic, Failure> {
        match point {
            Some(s) => self.parse_padic(s),
            None => self.default_point(),
        }
    }

    /// The default process law: scales p^m for m = 0..=degree.
    fn default_law(&self) -> Result<ProcessLaw, Failure> {
        let one = Padic::from_integer(1, self.prime, self.precision)?;
        let alphas: Vec<Padic> = (0..=self.degree as i64).map(|m| one.shift(m)).collect();
        Ok(ProcessLaw::new(
            Ball::zp(self.prime),
            alphas,
            self.precision,
        )?)
    }

    fn emit(&self, report: &Value) -> Result<(), Failure> {
        let text = format!("{:#}\n", report);
        self.emit_text(&text)
    }

    fn emit_text(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{}", text),
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: &Cmd) -> Result<bool, Failure> {
    match cmd {
        Cmd::Expand { common, samples } => run_expand(common, samples),
        Cmd::Antideriv {
            common,
            coeffs,
            point,
        } => run_antideriv(common, coeffs, point),
        Cmd::Spectral { common, dim } => run_spectral(common, *dim),
        Cmd::Quasimeasure { common, depth } => run_quasimeasure(common, *depth),
        Cmd::SamplePaths { common, point } => run_sample_paths(common, point),
        Cmd::StoIntegral {
            common,
            integrand,
            point,
        } => run_sto_integral(common, integrand, point),
        Cmd::ItoCheck {
            common,
            f_coeffs,
            drift,
            diffusion,
            point,
        } => run_ito_check(common, f_coeffs, drift, diffusion, point),
        Cmd::VerifyAll { common } => run_verify_all(common),
    }
}

fn padic_json(x: &Padic) -> Value {
    json!(x.to_canonical_string())
}

fn rational_json(r: &BigRational) -> Value {
    json!(rational_string(r))
}

fn run_expand(common: &Common, samples: &[String]) -> Result<bool, Failure> {
    // the binomial basis is prime-agnostic at integer samples; default p=2
    let cfg = RunConfig::resolve(common, Some(2))?;
    let degree = cfg.degree as usize;
    if samples.len() != degree + 1 {
        return Err(Failure::Usage(format!(
            "degree {} needs exactly {} samples at 0..={}",
            degree,
            degree + 1,
            degree
        )));
    }
    let pts: Result<Vec<Padic>, Failure> =
        samples.iter().map(|s| cfg.parse_padic(s)).collect();
    let series = nonarch_core::mahler::MahlerSeries::expand(&pts?, cfg.prime)?;
    let report = json!({
        "schema": 1,
        "subcommand": "expand",
        "prime": cfg.prime,
        "degree": degree,
        "coefficients": series.coeffs().iter().map(padic_json).collect::<Vec<_>>(),
        "coefficients_rational": series
            .coeffs()
            .iter()
            .map(|c| json!(rational_string(&c.to_rational())))
            .collect::<Vec<_>>(),
        "sup_norm": rational_json(&series.sup_norm()),
    });
    cfg.emit(&report)?;
    Ok(true)
}

fn run_antideriv(
    common: &Common,
    coeffs: &[String],
    point: &Option<String>,
) -> Result<bool, Failure> {
    let cfg = RunConfig::resolve(common, None)?;
    let t = cfg.point_or_default(point)?;
    let g = CnFunction::scalar(
        Ball::zp(cfg.prime),
        1,
        ScalarFn::Poly(cfg.parse_poly(coeffs)?),
    );
    let aoi = ApproximationOfIdentity::new(Ball::zp(cfg.prime));
    let result = antiderive_scalar(&g, &aoi, &t, cfg.terms)?;
    let report = json!({
        "schema": 1,
        "subcommand": "antideriv",
        "prime": cfg.prime,
        "point": padic_json(&t),
        "terms_used": result.terms_used,
        "value": padic_json(result.scalar_value()),
        "tail_bound": rational_json(&result.tail_bound),
    });
    cfg.emit(&report)?;
    Ok(true)
}

fn random_unit(rng: &mut ChaCha8Rng, p: u64, prec: u32) -> Padic {
    let mut digits: Vec<u64> = (0..prec).map(|_| rng.gen_range(0..p)).collect();
    if digits[0] == 0 {
        digits[0] = 1 + rng.gen_range(0..p - 1);
    }
    Padic::from_digits(&digits, rng.gen_range(0..3), p, prec).expect("valid digits")
}

fn run_spectral(common: &Common, dim: usize) -> Result<bool, Failure> {
    let cfg = RunConfig::resolve(common, None)?;
    if dim == 0 || dim > 16 {
        return Err(Failure::Usage("dim must be in 1..=16".into()));
    }
    let mut rows = Vec::new();
    let mut all_pass = true;
    for &seed in &cfg.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diag: Vec<Padic> = (0..dim)
            .map(|_| random_unit(&mut rng, cfg.prime, cfg.precision))
            .collect();
        let a = Matrix::diagonal(&diag)?;
        let dec = spectral_decompose(&a)?;
        let exact = dec
            .reconstruct()?
            .sub(&a)?
            .is_zero();
        all_pass &= exact;
        rows.push(json!({
            "seed": seed,
            "spectrum": diag.iter().map(padic_json).collect::<Vec<_>>(),
            "operator_norm": rational_json(&a.operator_norm()),
            "reconstruction_exact": exact,
        }));
    }
    let report = json!({
        "schema": 1,
        "subcommand": "spectral",
        "prime": cfg.prime,
        "dim": dim,
        "runs": rows,
        "pass": all_pass,
    });
    cfg.emit(&report)?;
    Ok(all_pass)
}

fn run_quasimeasure(common: &Common, depth: u32) -> Result<bool, Failure> {
    let cfg = RunConfig::resolve(common, None)?;
    let space = StateSpace::new(Ball::zp(cfg.prime), depth)?;
    let q = cfg.prime as i64;
    // steps of pairwise distinct norm, where composition is exact
    let triples = [(0i64, 1i64, 1 + q), (0, q, q + 1), (0, q, q + q * q)];
    let uniform_step = LocallyConstantMeasure::uniform(Ball::zp(cfg.prime), depth)?;
    let kernels = [
        ("delta", TransitionKernel::Delta),
        ("haar-ball", TransitionKernel::HaarBall),
        (
            "homogeneous-uniform",
            TransitionKernel::Homogeneous { step: uniform_step },
        ),
    ];
    let mut rows = Vec::new();
    let mut all_pass = true;
    for (name, kernel) in &kernels {
        let rep = validate_kernel(kernel, &space, &triples)?;
        all_pass &= rep.passes();
        rows.push(json!({
            "kernel": name,
            "rows_checked": rep.rows_checked,
            "max_normalization_defect": rational_json(&rep.max_normalization_defect),
            "max_composition_defect": rational_json(&rep.max_composition_defect),
            "additivity_exact": rep.additivity_exact,
            "pass": rep.passes(),
        }));
    }
    let report = json!({
        "schema": 1,
        "subcommand": "quasimeasure",
        "prime": cfg.prime,
        "depth": depth,
        "kernels": rows,
        "pass": all_pass,
    });
    cfg.emit(&report)?;
    Ok(all_pass)
}

fn run_sample_paths(common: &Common, point: &Option<String>) -> Result<bool, Failure> {
    let cfg = RunConfig::resolve(common, None)?;
    let law = cfg.default_law()?;
    let t = cfg.point_or_default(point)?;
    let aoi = ApproximationOfIdentity::new(law.domain().clone());
    let nodes = aoi.nodes(&t, cfg.terms)?;
    if cfg.format == "csv" {
        let mut text = String::from("seed,node_index,node,value\n");
        for &seed in &cfg.seeds {
            let w = law.sample_path(seed)?;
            for (i, v) in nodes.iter().enumerate() {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    seed,
                    i,
                    v.to_canonical_string(),
                    w.eval(v)?.to_canonical_string()
                ));
            }
        }
        cfg.emit_text(&text)?;
        return Ok(true);
    }
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let w = law.sample_path(seed)?;
        let values: Result<Vec<Value>, Failure> = nodes
            .iter()
            .map(|v| Ok(json!({ "node": padic_json(v), "value": padic_json(&w.eval(v)?) })))
            .collect();
        runs.push(json!({ "seed": seed, "anchor_value": padic_json(&w.eval(law.domain().center())?), "nodes": values? }));
    }
    let report = json!({
        "schema": 1,
        "subcommand": "sample-paths",
        "prime": cfg.prime,
        "degree": cfg.degree,
        "point": padic_json(&t),
        "runs": runs,
    });
    cfg.emit(&report)?;
    Ok(true)
}

fn run_sto_integral(
    common: &Common,
    integrand: &str,
    point: &Option<String>,
) -> Result<bool, Failure> {
    let cfg = RunConfig::resolve(common, None)?;
    let law = cfg.default_law()?;
    let t = cfg.point_or_default(point)?;
    let aoi = ApproximationOfIdentity::new(law.domain().clone());
    let e: KernelG = match integrand {
        "identity" => identity_integrand(cfg.prime)?,
        "path" => path_weighted_integrand(cfg.prime)?,
        coeffs => {
            let parts: Vec<String> = coeffs.split(',').map(str::to_owned).collect();
            time_poly_integrand(cfg.parse_poly(&parts)?)?
        }
    };
    let mut runs = Vec::new();
    let mut all_pass = true;
    for &seed in &cfg.seeds {
        let w = law.sample_path(seed)?;
        let r = stochastic_integral(&e, &w, &aoi, &t, cfg.terms)?;
        // contract: the identity integrand telescopes to w(t)
        let telescoping = if integrand == "identity" {
            let gap = r.scalar_value().sub(&w.eval(&t)?)?;
            let ok = gap.is_zero() || gap.norm_upper_bound() <= r.tail_bound;
            all_pass &= ok;
            Some(ok)
        } else {
            None
        };
        runs.push(json!({
            "seed": seed,
            "value": padic_json(r.scalar_value()),
            "terms_used": r.terms_used,
            "tail_bound": rational_json(&r.tail_bound),
            "telescoping_ok": telescoping,
        }));
    }
    let report = json!({
        "schema": 1,
        "subcommand": "sto-integral",
        "prime": cfg.prime,
        "integrand": integrand,
        "point": padic_json(&t),
        "runs": runs,
        "pass": all_pass,
    });
    cfg.emit(&report)?;
    Ok(all_pass)
}

fn run_ito_check(
    common: &Common,
    f_coeffs: &[String],
    drift: &str,
    diffusion: &str,
    point: &Option<String>,
) -> Result<bool, Failure> {
    let cfg = RunConfig::resolve(common, None)?;
    let law = cfg.default_law()?;
    let t = cfg.point_or_default(point)?;
    let aoi = ApproximationOfIdentity::new(law.domain().clone());
    let f = JointPoly::from_x_poly(&cfg.parse_poly(f_coeffs)?);
    let a = Coeff::Const(cfg.parse_padic(drift)?);
    let e = Coeff::Const(cfg.parse_padic(diffusion)?);
    let xi0 = Padic::from_integer(1, cfg.prime, cfg.precision)?;
    let mut runs = Vec::new();
    let mut all_pass = true;
    for &seed in &cfg.seeds {
        let w = law.sample_path(seed)?;
        let rep = ito_verify_polynomial(&f, &a, &e, &w, &aoi, &xi0, &t, cfg.terms)?;
        all_pass &= rep.passes();
        runs.push(json!({
            "seed": seed,
            "lhs": padic_json(&rep.lhs),
            "rhs": padic_json(&rep.rhs),
            "residual": rational_json(&rep.residual),
            "tail_bound": rational_json(&rep.tail_bound),
            "nodes_used": rep.nodes_used,
            "pass": rep.passes(),
        }));
    }
    let report = json!({
        "schema": 1,
        "subcommand": "ito-check",
        "prime": cfg.prime,
        "point": padic_json(&t),
        "runs": runs,
        "pass": all_pass,
    });
    cfg.emit(&report)?;
    Ok(all_pass)
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn run_verify_all(common: &Common) -> Result<bool, Failure> {
    let cfg = RunConfig::resolve(common, None)?;
    let seed = cfg.seeds[0];
    let checks = vec![
        check_ultrametric(&cfg, seed)?,
        check_aoi_axioms(&cfg, seed)?,
        check_telescoping(&cfg, seed)?,
        check_c1_and_lq_bounds(&cfg, seed)?,
        check_spectral(&cfg, seed)?,
        check_nu_q(&cfg, seed)?,
        check_quasimeasure(&cfg)?,
        check_characters(&cfg, seed)?,
        check_ito(&cfg, seed)?,
        check_increment_law(&cfg, seed)?,
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    let report = json!({
        "schema": 1,
        "subcommand": "verify-all",
        "prime": cfg.prime,
        "precision": cfg.precision,
        "seed": seed,
        "checks": checks
            .iter()
            .map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail }))
            .collect::<Vec<_>>(),
        "pass": all_pass,
    });
    cfg.emit(&report)?;
    Ok(all_pass)
}

fn random_padic(rng: &mut ChaCha8Rng, p: u64, prec: u32) -> Padic {
    let digits: Vec<u64> = (0..prec).map(|_| rng.gen_range(0..p)).collect();
    Padic::from_digits(&digits, rng.gen_range(-2..3), p, prec).expect("valid digits")
}

fn check_ultrametric(cfg: &RunConfig, seed: u64) -> Result<Check, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = cfg.prime;
    let mut worst = 0usize;
    for i in 0..1000 {
        let x = random_padic(&mut rng, p, cfg.precision);
        let y = random_padic(&mut rng, p, cfg.precision);
        let s = x.add(&y)?;
        let bound = x.norm().max(y.norm());
        if s.norm_upper_bound() > bound {
            worst = i + 1;
            break;
        }
        if x.norm() != y.norm() && s.norm_upper_bound() != bound && !s.is_zero() {
            worst = i + 1;
            break;
        }
    }
    Ok(Check {
        name: "ultrametric-axioms",
        pass: worst == 0,
        detail: if worst == 0 {
            "1000 random pairs, exact".into()
        } else {
            format!("violated at sample {}", worst)
        },
    })
}

fn check_aoi_axioms(cfg: &RunConfig, seed: u64) -> Result<Check, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    let p = cfg.prime;
    let aoi = ApproximationOfIdentity::new(Ball::zp(p));
    let mut pass = true;
    for _ in 0..100 {
        let digits: Vec<u64> = (0..cfg.precision).map(|_| rng.gen_range(0..p)).collect();
        let t = Padic::from_digits(&digits, 0, p, cfg.precision).expect("valid digits");
        for n in 0..8u32 {
            let v = aoi.sigma(n, &t)?;
            // nodes stay in the ball, converge to t, and are stable
            pass &= aoi.domain().contains(&v)?;
            let gap = t.sub(&v)?;
            pass &= gap.is_zero() || gap.norm() <= aoi.increment_bound(n.saturating_sub(1));
            pass &= aoi.sigma(n, &v)?.sub(&v)?.is_zero();
        }
    }
    Ok(Check {
        name: "approximation-of-identity-axioms",
        pass,
        detail: "100 points, levels 0..8, exact digit checks".into(),
    })
}

fn check_telescoping(cfg: &RunConfig, seed: u64) -> Result<Check, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
    let p = cfg.prime;
    let aoi = ApproximationOfIdentity::new(Ball::zp(p));
    let one = Padic::from_integer(1, p, cfg.precision)?;
    let unit = CnFunction::scalar(Ball::zp(p), 1, ScalarFn::Const(one));
    let mut pass = true;
    for _ in 0..100 {
        let digits: Vec<u64> = (0..cfg.precision).map(|_| rng.gen_range(0..p)).collect();
        let t = Padic::from_digits(&digits, 0, p, cfg.precision).expect("valid digits");
        let r = antiderive_scalar(&unit, &aoi, &t, cfg.terms)?;
        // unit kernel sums increments: value = sigma_N(t) - t0, within tail of t
        let gap = r.scalar_value().sub(&t)?;
        pass &= gap.is_zero() || gap.norm_upper_bound() <= r.tail_bound;
    }
    Ok(Check {
        name: "antiderivation-telescoping",
        pass,
        detail: "unit kernel equals t - t0 within certified tails, 100 points".into(),
    })
}

fn check_c1_and_lq_bounds(cfg: &RunConfig, seed: u64) -> Result<Check, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
    let p = cfg.prime;
    let aoi = ApproximationOfIdentity::new(Ball::zp(p));
    let mut pass = true;
    let instance = |rng: &mut ChaCha8Rng| -> Result<(MultilinearKernel, Vec<CnFunction>), Failure> {
        let gc: Vec<Padic> = (0..3).map(|_| random_padic(rng, p, cfg.precision)).collect();
        let xc: Vec<Padic> = (0..3).map(|_| random_padic(rng, p, cfg.precision)).collect();
        let kernel = MultilinearKernel::new(
            0,
            1,
            KernelG::ScalarTimes {
                f: ScalarFn::Poly(Poly::new(p, gc)),
                form: scalar_form(p)?,
            },
            vec![OperatorFamily::Identity { dim: 1 }],
        )?;
        let xi = CnFunction::scalar(Ball::zp(p), 2, ScalarFn::Poly(Poly::new(p, xc)));
        Ok((kernel, vec![xi]))
    };
    for _ in 0..10 {
        let (kernel, xis) = instance(&mut rng)?;
        let (lhs, rhs) =
            nonarch_core::antideriv::c1_bound_check(&kernel, &xis, &aoi, 1, cfg.terms.min(8))?;
        pass &= lhs <= rhs;
    }
    // two-event field with exact half weights, exponents (q, r, s) = (4, 4, 2)
    let half = BigRational::new(1.into(), 2.into());
    let field = SimpleRandomField::new(vec![
        (half.clone(), instance(&mut rng)?),
        (half, instance(&mut rng)?),
    ])?;
    let (lhs, rhs) = lq_bound_check(&field, &aoi, 4, 4, 2, 1, cfg.terms.min(8))?;
    pass &= lhs.le(&rhs);
    Ok(Check {
        name: "c1-and-ls-bounds",
        pass,
        detail: "10 kernel instances plus a two-event random field".into(),
    })
}

fn check_spectral(cfg: &RunConfig, seed: u64) -> Result<Check, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
    let p = cfg.prime;
    let mut pass = true;
    for _ in 0..10 {
        let dim = 1 + rng.gen_range(0..5) as usize;
        let diag: Vec<Padic> = (0..dim)
            .map(|_| random_unit(&mut rng, p, cfg.precision))
            .collect();
        let a = Matrix::diagonal(&diag)?;
        pass &= spectral_decompose(&a)?.reconstruct()?.sub(&a)?.is_zero();
    }
    // projection-valued measure: total is the identity, spectral integral
    // of f attains the sup of |f| on the spectrum
    let pvm = pvm_from_partition(&Ball::zp(p), &Ball::zp(p).partition(1)?)?;
    pass &= pvm
        .total()?
        .sub(&Matrix::identity(p, pvm.dim(), cfg.precision)?)?
        .is_zero();
    let values: Vec<Padic> = (0..pvm.dim())
        .map(|_| random_unit(&mut rng, p, cfg.precision))
        .collect();
    let norm = pvm.spectral_integral(&values)?.operator_norm();
    let sup = values
        .iter()
        .map(|v| v.norm())
        .max()
        .unwrap_or_else(BigRational::zero);
    pass &= norm == sup;
    Ok(Check {
        name: "spectral-suite",
        pass,
        detail: "10 diagonal reconstructions plus PVM axioms, exact".into(),
    })
}

fn check_nu_q(cfg: &RunConfig, seed: u64) -> Result<Check, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
    let p = cfg.prime;
    let mut pass = true;
    for _ in 0..20 {
        let dim = 1 + rng.gen_range(0..4) as usize;
        let d1: Vec<Padic> = (0..dim)
            .map(|_| random_unit(&mut rng, p, cfg.precision))
            .collect();
        let d2: Vec<Padic> = (0..dim)
            .map(|_| random_unit(&mut rng, p, cfg.precision))
            .collect();
        let a = RankOneSum::from_diagonal(&d1, cfg.precision)?;
        let b = RankOneSum::from_diagonal(&d2, cfg.precision)?;
        pass &= nu_triangle_holds(&a, &b, 2)?;
        // operator norm is dominated by every nu_q
        let norm = a.to_matrix()?.operator_norm();
        let nu = a.nu_q(nonarch_core::banach::Exponent::Finite(2))?;
        pass &= nonarch_core::qreal::QReal::from_rational(norm).le(&nu);
    }
    Ok(Check {
        name: "nu-q-suite",
        pass,
        detail: "20 random rank-one sums: triangle and domination, exact".into(),
    })
}

fn check_quasimeasure(cfg: &RunConfig) -> Result<Check, Failure> {
    let p = cfg.prime;
    let space = StateSpace::new(Ball::zp(p), 2)?;
    let q = cfg.prime as i64;
    // steps of pairwise distinct norm, where composition is exact
    let triples = [(0i64, 1i64, 1 + q), (0, q, q + 1), (0, q, q + q * q)];
    let mut pass = true;
    for kernel in [TransitionKernel::Delta, TransitionKernel::HaarBall] {
        pass &= validate_kernel(&kernel, &space, &triples)?.passes();
    }
    // probability kernels have log-variation bound exactly 0
    let bound = nonarch_core::quasi::variation_bound(
        &TransitionKernel::HaarBall,
        &space,
        &[0, 1, 3, 9],
    )?;
    pass &= bound == 0.0;
    Ok(Check {
        name: "quasimeasure-kernels",
        pass,
        detail: "delta and Haar-ball kernels at depth 2, exact composition".into(),
    })
}

fn check_characters(cfg: &RunConfig, seed: u64) -> Result<Check, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 6);
    let p = cfg.prime;
    let mut pass = true;
    for _ in 0..200 {
        let gamma = random_padic(&mut rng, p, cfg.precision);
        let x = random_padic(&mut rng, p, cfg.precision);
        let y = random_padic(&mut rng, p, cfg.precision);
        let lhs = character_eval(&gamma, &x.add(&y)?)?;
        let mut rhs = character_eval(&gamma, &x)? + character_eval(&gamma, &y)?;
        if rhs >= BigRational::one() {
            rhs -= BigRational::one();
        }
        pass &= lhs == rhs;
    }
    // characteristic functionals compose over convolution powers
    let step = LocallyConstantMeasure::uniform(Ball::zp(p), 2)?;
    let gamma = Padic::from_rational(
        &1.into(),
        &num_bigint::BigInt::from((p * p) as i64),
        p,
        cfg.precision,
    )?;
    for (m1, m2) in [(1u32, 1u32), (1, 2), (2, 3)] {
        let lhs = homogeneous_iterate(&step, m1 + m2)?.characteristic_functional(&gamma)?;
        let rhs = homogeneous_iterate(&step, m1)?
            .characteristic_functional(&gamma)?
            .mul(&homogeneous_iterate(&step, m2)?.characteristic_functional(&gamma)?);
        pass &= lhs.eq_exact(&rhs);
        let (lr, li) = lhs.to_f64();
        let (rr, ri) = rhs.to_f64();
        pass &= (lr - rr).abs() < 1e-9 && (li - ri).abs() < 1e-9;
    }
    Ok(Check {
        name: "character-homomorphism",
        pass,
        detail: "200 exponent pairs exact; semigroup of convolution powers".into(),
    })
}

fn check_ito(cfg: &RunConfig, seed: u64) -> Result<Check, Failure> {
    let p = cfg.prime;
    let law = cfg.default_law()?;
    let aoi = ApproximationOfIdentity::new(law.domain().clone());
    let f = JointPoly::from_x_poly(&Poly::new(
        p,
        vec![
            Padic::from_integer(4, p, cfg.precision)?,
            Padic::exact_zero(p),
            Padic::exact_zero(p),
            Padic::from_integer(1, p, cfg.precision)?,
        ],
    ));
    let a = Coeff::Const(Padic::from_integer(2, p, cfg.precision)?);
    let e = Coeff::Const(Padic::from_integer(1, p, cfg.precision)?);
    let xi0 = Padic::from_integer(1, p, cfg.precision)?;
    let t = cfg.default_point()?;
    let mut pass = true;
    let mut worst = BigRational::zero();
    for s in 0..3u64 {
        let w = law.sample_path(seed.wrapping_add(s))?;
        // enough terms to push the tail under p^-15, but not past what the
        // sampled digits can certify
        let terms = cfg.terms.max(16).min(cfg.precision.saturating_sub(4));
        let rep = ito_verify_polynomial(&f, &a, &e, &w, &aoi, &xi0, &t, terms)?;
        pass &= rep.passes() && rep.tail_bound <= power_norm(p, -15);
        worst = worst.max(rep.residual.clone());
    }
    Ok(Check {
        name: "ito-identity",
        pass,
        detail: format!(
            "cubic with drift, 3 seeds, worst residual {}",
            rational_string(&worst)
        ),
    })
}

fn check_increment_law(cfg: &RunConfig, seed: u64) -> Result<Check, Failure> {
    let law = cfg.default_law()?;
    let t = Padic::from_integer(7, cfg.prime, cfg.precision)?;
    let u = Padic::from_integer(2, cfg.prime, cfg.precision)?;
    let tv = increment_law_check(&law, &t, &u, 2, 20_000, seed)?;
    Ok(Check {
        name: "increment-law",
        pass: tv <= 0.05,
        detail: format!("TV distance {:.5} vs enumeration oracle", tv),
    })
}

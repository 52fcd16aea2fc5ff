//! Batch front-end for the `plab` verifiers: argument parsing, input
//! loading, dispatch and report rendering.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use plab::dirac::{self, DiracSpace};
use plab::fields::{lie_poisson_field, schouten_poly, FdStep};
use plab::frobenius::{check_vorobjev, nondegeneracy_radius, verify_quadraticity, weinstein_splitting_check, FrobeniusOptions};
use plab::groupoid::{
    certify_pullback_model, check_multiplicative, omega_v_model, verify_groupoid_axioms, verify_omega_big_g_nondegenerate,
    verify_restriction, ActionGroupoid, ModelCertifyOptions, OmegaG, AXIOM_TOL,
};
use plab::io::{self, FrobeniusFile, MorphismFile, RepFile, TransversalFile};
use plab::spray::{
    poisson_map_normal_form, verify_dual_pair, verify_normal_form, verify_omega_g_closed, verify_omega_v_closed, VerifyOptions,
};
use plab::{Error, LieAlgebra, Mat, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Antisymmetry, Jacobi identity and the exact Schouten self-bracket of pi_g
    Jacobi,
    /// Normal form around an affine transversal, and closedness of omega_V
    NormalForm,
    /// The dual pair pr, exp: T*g* -> g*, and closedness of Omega_g
    DualPair,
    /// Normal form of a Lie algebra morphism around a transversal
    PoissonMap,
    /// Action groupoid axioms, Omega_G, restriction and the pullback model
    Groupoid,
    /// Splitting, Vorobjev decomposition and quadraticity for a Frobenius pair
    Frobenius,
    /// Linear Dirac structure query
    Dirac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "plab", version, about = "Numerical verification of Poisson transversals, dual pairs and symplectic groupoids")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Lie algebra JSON
    #[arg(long)]
    pub algebra: Option<PathBuf>,
    /// Affine transversal JSON
    #[arg(long)]
    pub transversal: Option<PathBuf>,
    /// Matrix representation JSON
    #[arg(long)]
    pub rep: Option<PathBuf>,
    /// Frobenius pair JSON
    #[arg(long)]
    pub frobenius: Option<PathBuf>,
    /// Lie algebra morphism JSON
    #[arg(long)]
    pub morphism: Option<PathBuf>,
    /// Dirac query JSON
    #[arg(long)]
    pub query: Option<PathBuf>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    /// Overrides the default tolerance of the sampled checks
    #[arg(long, value_parser = positive_f64)]
    pub tol: Option<f64>,
    /// Absolute finite-difference step (default: relative 1e-5)
    #[arg(long, value_parser = positive_f64)]
    pub fd_step: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transversal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rep: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub morphism: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub samples: u64,
    pub tol: Option<f64>,
    pub fd_step: Option<f64>,
    pub seed: u64,
    pub format: Format,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Self {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        Self {
            command: cli.command,
            algebra: path(&cli.algebra),
            transversal: path(&cli.transversal),
            rep: path(&cli.rep),
            frobenius: path(&cli.frobenius),
            morphism: path(&cli.morphism),
            query: path(&cli.query),
            samples: cli.samples,
            tol: cli.tol,
            fd_step: cli.fd_step,
            seed: cli.seed,
            format: cli.format,
        }
    }

    fn fd(&self) -> FdStep {
        self.fd_step.map(FdStep::Absolute).unwrap_or_default()
    }

    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn samples(&self) -> usize {
        self.samples as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub checks: Vec<VerificationReport>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
    pub wall_time_s: f64,
}

impl Report {
    fn new(config: RunConfig, checks: Vec<VerificationReport>, notes: Vec<String>, result: Option<serde_json::Value>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self { tool: "plab".into(), version: env!("CARGO_PKG_VERSION").into(), config, checks, pass, notes, result, wall_time_s: 0.0 }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the wall-time field removed; identical for identical seeded runs.
    pub fn to_deterministic_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("wall_time_s");
        }
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}  {:?}  seed {}", self.tool, self.version, self.config.command, self.config.seed);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{}  {:<28} max {:<10.3e} tol {:<8.1e} samples {:<5} failures {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.check,
                c.max_residual,
                c.tol,
                c.samples,
                c.failures
            );
            for o in c.worst.iter().filter(|o| o.detail.is_some()).take(1) {
                let _ = writeln!(s, "      sample {}: {}", o.sample, o.detail.as_deref().unwrap_or(""));
            }
            for n in &c.notes {
                let _ = writeln!(s, "      {n}");
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        if let Some(r) = &self.result {
            let _ = writeln!(s, "result: {r}");
        }
        let _ = writeln!(s, "overall: {} ({:.2} s)", if self.pass { "PASS" } else { "FAIL" }, self.wall_time_s);
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json() + "\n",
            Format::Text => self.to_text(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Input or configuration problem; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn is_input_error(e: &Error) -> bool {
    matches!(e, Error::Parse(_) | Error::Invalid(_) | Error::DimensionMismatch { .. } | Error::BadRepresentation(_))
}

/// Either a hard input error, or a mathematical failure to be reported as a failing check.
enum Failure {
    Input(InputError),
    Check(Box<VerificationReport>),
}

impl Failure {
    fn from_error(check: &str, tol: f64, e: Error) -> Self {
        if is_input_error(&e) {
            Failure::Input(InputError(format!("{check}: {e}")))
        } else {
            Failure::Check(Box::new(VerificationReport::single(check, tol, Err(e.to_string()))))
        }
    }
}

fn read(path: &Option<PathBuf>, flag: &str) -> Result<String, InputError> {
    let p = path.as_ref().ok_or_else(|| InputError(format!("--{flag} is required for this command")))?;
    read_path(p)
}

fn read_path(p: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(p).map_err(|e| InputError(format!("cannot read {}: {e}", p.display())))
}

fn input<T>(r: plab::Result<T>, what: &str) -> Result<T, InputError> {
    r.map_err(|e| InputError(format!("{what}: {e}")))
}

/// Runs the command; `Err` means exit code 2.
pub fn execute(cli: &Cli) -> Result<Report, InputError> {
    let start = Instant::now();
    let config = RunConfig::from_cli(cli);
    let outcome = match cli.command {
        Command::Jacobi => cmd_jacobi(cli, &config),
        Command::NormalForm => cmd_normal_form(cli, &config),
        Command::DualPair => cmd_dual_pair(cli, &config),
        Command::PoissonMap => cmd_poisson_map(cli, &config),
        Command::Groupoid => cmd_groupoid(cli, &config),
        Command::Frobenius => cmd_frobenius(cli, &config),
        Command::Dirac => cmd_dirac(cli, &config),
    };
    let (checks, notes, result) = match outcome {
        Ok(parts) => parts,
        Err(Failure::Input(e)) => return Err(e),
        Err(Failure::Check(r)) => (vec![*r], Vec::new(), None),
    };
    let mut report = Report::new(config, checks, notes, result);
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

type Parts = (Vec<VerificationReport>, Vec<String>, Option<serde_json::Value>);

fn load_algebra(cli: &Cli) -> Result<LieAlgebra, Failure> {
    let text = read(&cli.algebra, "algebra").map_err(Failure::Input)?;
    input(io::parse_algebra(&text), "algebra").map_err(Failure::Input)
}

fn load<T: serde::de::DeserializeOwned>(path: &Option<PathBuf>, flag: &str) -> Result<T, Failure> {
    let text = read(path, flag).map_err(Failure::Input)?;
    input(io::parse(&text), flag).map_err(Failure::Input)
}

fn verify_options(config: &RunConfig, default_tol: f64) -> VerifyOptions {
    VerifyOptions { samples: config.samples(), tol: config.tol_or(default_tol), seed: config.seed, fd: config.fd(), radius: None }
}

fn cmd_jacobi(cli: &Cli, config: &RunConfig) -> Result<Parts, Failure> {
    let alg = load_algebra(cli)?;
    let tol = config.tol_or(1e-12);
    let antisymmetry = VerificationReport::single("antisymmetry", tol, Ok(alg.antisymmetry_defect()));
    let jacobi = VerificationReport::single("jacobi", tol, alg.jacobiator().map(|j| j.max_abs).map_err(|e| e.to_string()));
    let pi = lie_poisson_field(&alg);
    let schouten = VerificationReport::single(
        "schouten_self_bracket",
        tol,
        schouten_poly(&pi, &pi).map(|t| t.max_coefficient()).map_err(|e| e.to_string()),
    )
    .with_note("computed symbolically on polynomial coefficients");
    Ok((vec![antisymmetry, jacobi, schouten], Vec::new(), None))
}

fn cmd_normal_form(cli: &Cli, config: &RunConfig) -> Result<Parts, Failure> {
    let alg = load_algebra(cli)?;
    let file: TransversalFile = load(&cli.transversal, "transversal")?;
    let opts = verify_options(config, 1e-6);
    let t = file.to_transversal(&alg).map_err(|e| Failure::from_error("transversality", opts.tol, e))?;
    let normal = verify_normal_form(&t, &opts);
    let closed = verify_omega_v_closed(&t, &opts);
    Ok((vec![normal, closed], Vec::new(), None))
}

fn cmd_dual_pair(cli: &Cli, config: &RunConfig) -> Result<Parts, Failure> {
    let alg = load_algebra(cli)?;
    let opts = verify_options(config, 1e-6);
    Ok((vec![verify_dual_pair(&alg, &opts), verify_omega_g_closed(&alg, &opts)], Vec::new(), None))
}

fn cmd_poisson_map(cli: &Cli, config: &RunConfig) -> Result<Parts, Failure> {
    let domain = load_algebra(cli)?;
    let morphism: MorphismFile = load(&cli.morphism, "morphism")?;
    let (codomain, f) = input(morphism.to_morphism(&domain), "morphism").map_err(Failure::Input)?;
    let file: TransversalFile = load(&cli.transversal, "transversal")?;
    let opts = verify_options(config, 1e-6);
    let x = file.to_transversal(&domain).map_err(|e| Failure::from_error("transversality", opts.tol, e))?;
    let check = poisson_map_normal_form(&domain, &codomain, &f, &x, &opts).map_err(|e| Failure::from_error("poisson_map", opts.tol, e))?;
    let note = format!("preimage transversal has dimension {} in the codomain dual", check.preimage.dim());
    Ok((check.reports, vec![note], None))
}

fn cmd_groupoid(cli: &Cli, config: &RunConfig) -> Result<Parts, Failure> {
    let alg = load_algebra(cli)?;
    let rep_file: RepFile = load(&cli.rep, "rep")?;
    let rep = input(rep_file.to_rep(&alg), "rep").map_err(Failure::Input)?;
    let grp = ActionGroupoid::new(rep.clone());
    let tol = config.tol_or(1e-6);
    let fd = config.fd();
    let mut checks = vec![
        verify_groupoid_axioms(&grp, 10 * config.samples(), config.seed),
        verify_omega_big_g_nondegenerate(&grp, config.samples(), config.seed),
        check_multiplicative(&grp, &OmegaG::new(&grp), config.samples(), tol, config.seed, fd),
    ];
    let notes = vec![format!("groupoid axioms use the fixed tolerance {AXIOM_TOL:e}")];
    if cli.transversal.is_some() {
        let file: TransversalFile = load(&cli.transversal, "transversal")?;
        match file.to_transversal(&alg) {
            Ok(x) => {
                let model_samples = config.samples();
                let gx = plab::groupoid::RestrictedGroupoid::new(grp.clone(), x.clone())
                    .map_err(|e| Failure::from_error("restriction", tol, e))?;
                checks.extend(verify_restriction(&gx, model_samples, config.seed, fd));
                match omega_v_model(&rep, &x) {
                    Ok(model) => {
                        let opts = ModelCertifyOptions { samples: model_samples, tol, seed: config.seed, fd, ..Default::default() };
                        checks.extend(certify_pullback_model(&model, &opts));
                    }
                    Err(e) => checks.push(VerificationReport::single("pullback_model", tol, Err(e.to_string()))),
                }
            }
            Err(e) if is_input_error(&e) => return Err(Failure::Input(InputError(format!("transversal: {e}")))),
            Err(e) => checks.push(VerificationReport::single("transversality", tol, Err(e.to_string()))),
        }
    }
    Ok((checks, notes, None))
}

fn cmd_frobenius(cli: &Cli, config: &RunConfig) -> Result<Parts, Failure> {
    let alg = load_algebra(cli)?;
    let file: FrobeniusFile = load(&cli.frobenius, "frobenius")?;
    let pair = file.to_pair(&alg).map_err(|e| Failure::from_error("frobenius_pair", config.tol_or(1e-6), e))?;
    let base = FrobeniusOptions { samples: config.samples(), tol: config.tol_or(1e-6), seed: config.seed, fd: config.fd(), radius: None };
    let splitting = weinstein_splitting_check(&pair, &base);
    let vorobjev = check_vorobjev(&pair, &FrobeniusOptions { tol: config.tol_or(1e-5), ..base.clone() });
    let quadratic = verify_quadraticity(&pair, config.tol_or(1e-8), config.seed, None);
    let radius = nondegeneracy_radius(&pair, 16, 10.0, config.seed);
    let notes = vec![
        format!("min singular value of B_lambda: {:e}", pair.b_min_singular_value()),
        format!("omega_lambda stays nondegenerate along sampled rays up to |x0| = {radius:.4} (search capped at 10)"),
    ];
    Ok((vec![splitting, vorobjev, quadratic], notes, None))
}

/// `{"start": {"bivector" | "twoform" | "span": rows}, "steps": [{"gauge" | "pullback" | "pushforward": rows}], "expect_bivector": rows}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracQuery {
    pub start: DiracStart,
    #[serde(default)]
    pub steps: Vec<DiracStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_bivector: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiracStart {
    Bivector(Vec<Vec<f64>>),
    Twoform(Vec<Vec<f64>>),
    /// Spanning vectors `(v, a)` of length `2n`.
    Span(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiracStep {
    Gauge(Vec<Vec<f64>>),
    /// `f: V -> W` as rows; the current space lives on `W`.
    Pullback(Vec<Vec<f64>>),
    /// `f: V -> W` as rows; the current space lives on `V`.
    Pushforward(Vec<Vec<f64>>),
}

fn square(rows: &[Vec<f64>], what: &str) -> plab::Result<Mat> {
    io::rows(rows, rows.len(), rows.len(), what)
}

fn rect(rows: &[Vec<f64>], what: &str) -> plab::Result<Mat> {
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    io::rows(rows, rows.len(), ncols, what)
}

fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

pub fn run_dirac_query(q: &DiracQuery) -> plab::Result<DiracSpace> {
    let mut l = match &q.start {
        DiracStart::Bivector(rows) => dirac::graph_of_bivector(&square(rows, "bivector")?)?,
        DiracStart::Twoform(rows) => dirac::graph_of_twoform(&square(rows, "twoform")?)?,
        DiracStart::Span(vectors) => {
            let m = rect(vectors, "span")?.transpose();
            if m.nrows() % 2 == 1 {
                return Err(Error::Invalid("span vectors must have even length".into()));
            }
            DiracSpace::from_spanning(m.nrows() / 2, &m)?
        }
    };
    for step in &q.steps {
        l = match step {
            DiracStep::Gauge(rows) => dirac::gauge(&l, &square(rows, "gauge")?)?,
            DiracStep::Pullback(rows) => dirac::backward_image(&rect(rows, "pullback")?, &l)?,
            DiracStep::Pushforward(rows) => dirac::forward_image(&rect(rows, "pushforward")?, &l)?,
        };
    }
    Ok(l)
}

fn cmd_dirac(cli: &Cli, config: &RunConfig) -> Result<Parts, Failure> {
    let q: DiracQuery = load(&cli.query, "query")?;
    let tol = config.tol_or(dirac::ISOTROPY_TOL);
    let l = run_dirac_query(&q).map_err(|e| Failure::from_error("dirac_query", tol, e))?;
    let mut checks = vec![VerificationReport::single("dirac_isotropy", tol, Ok(l.isotropy_defect()))];
    if let Some(rows) = &q.expect_bivector {
        let want = square(rows, "expect_bivector")
            .and_then(|m| dirac::graph_of_bivector(&m))
            .map_err(|e| Failure::from_error("dirac_expected", dirac::SPAN_TOL, e))?;
        checks.push(VerificationReport::single("dirac_expected", dirac::SPAN_TOL, Ok(l.distance(&want))));
    }
    let bivector = dirac::as_bivector(&l);
    let twoform = dirac::as_twoform(&l);
    let result = serde_json::json!({
        "dim": l.dim(),
        "basis": mat_rows(l.basis()),
        "bivector": bivector.as_ref().ok().map(mat_rows),
        "twoform": twoform.as_ref().ok().map(mat_rows),
        "not_bivector_graph": bivector.err().map(|e| e.to_string()),
        "not_twoform_graph": twoform.err().map(|e| e.to_string()),
    });
    Ok((checks, Vec::new(), Some(result)))
}

/// Renders and writes the report; `Err` means the output could not be written.
pub fn emit(report: &Report, cli: &Cli) -> Result<(), InputError> {
    let text = report.render(cli.format);
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| InputError(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

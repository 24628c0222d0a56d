mod parse;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sprinkle::analytic;
use sprinkle::bootstrap::{self, CrossingKind, Decay, Profile, RecursionInput};
use sprinkle::experiment::{self, ExperimentConfig, SuiteId, SuiteOutcome};
use sprinkle::kernels::{grid_points, index_points, CovarianceModel};
use sprinkle::measures::{self, lattice_ball, Ridge};
use sprinkle::mc::{ConstantMode, TheoremId};
use sprinkle::sampler::snapshot::{self, SnapshotHeader, SNAPSHOT_FORMAT};
use sprinkle::sampler::{CirculantPlan, DensePlan, GaussianField, Grid};
use sprinkle::{Error, Result};

use parse::{csv_err, parse_indices, parse_model, parse_shape};

/// Exit status when some verdict is a failure.
const EXIT_FAIL: u8 = 2;
/// Exit status on configuration and model errors.
const EXIT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(name = "sprinkle", version, about = "Decoupling inequalities for Gaussian fields, checked by Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one field realisation and store it as a snapshot (or print CSV)
    Sample(SampleArgs),
    /// Bivariate normal CDF and its partial derivatives
    Bvn(BvnArgs),
    /// Scan of the tail gap exponent as CSV
    Negbound(NegboundArgs),
    /// Capacity of an index set
    Capacity(CapacityArgs),
    /// Maximum correlation between two index sets
    Maxcorr(MaxcorrArgs),
    /// Run one verifier, from a config file or a built-in template
    Verify(VerifyArgs),
    /// Run several config files and emit a CSV summary
    VerifyAll(VerifyAllArgs),
    /// Multi-scale bootstrap engine
    #[command(subcommand)]
    Bootstrap(BootstrapCommand),
    /// Run a built-in suite (smoke or full)
    Suite(SuiteArgs),
}

#[derive(Args)]
struct Output {
    /// output directory [default: $SPRINKLE_OUTPUT_DIR or sprinkle-out]
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    fn dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| experiment::output_dir(None))
    }
}

#[derive(Args)]
struct FieldArgs {
    /// covariance model, one of: iid, bargmann-fock, gff:<dim>, cauchy:<alpha>, wave:<dim>,
    /// polylog:<c>,<gamma>, matrix:<file.csv>
    #[arg(long)]
    model: String,
    /// grid shape such as 32x32 (mutually exclusive with --points)
    #[arg(long, conflicts_with = "points")]
    grid: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// number of index points for matrix and i.i.d. models
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    /// print `index,value` CSV instead of writing a snapshot
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BvnArgs {
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long, allow_hyphen_values = true)]
    u: f64,
    #[arg(long, allow_hyphen_values = true)]
    v: f64,
}

#[derive(Args)]
struct NegboundArgs {
    #[arg(long, default_value_t = 0.293)]
    kappa: f64,
    #[arg(long, default_value_t = 40.0)]
    u_max: f64,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
}

#[derive(Args)]
struct CapacityArgs {
    /// headerless CSV covariance matrix
    #[arg(long, conflicts_with_all = ["model", "ball"])]
    matrix: Option<PathBuf>,
    /// index set into the matrix [default: all]
    #[arg(long)]
    sites: Option<String>,
    /// lattice model whose ball around the origin is used
    #[arg(long, requires = "ball")]
    model: Option<String>,
    /// ball radius in lattice units
    #[arg(long)]
    ball: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct MaxcorrArgs {
    #[arg(long, conflicts_with_all = ["model", "ball"], requires_all = ["first", "second"])]
    matrix: Option<PathBuf>,
    #[arg(long)]
    first: Option<String>,
    #[arg(long)]
    second: Option<String>,
    /// lattice model with two balls along the first axis
    #[arg(long, requires_all = ["ball", "offset"])]
    model: Option<String>,
    #[arg(long)]
    ball: Option<f64>,
    /// distance between the ball centres in lattice units
    #[arg(long)]
    offset: Option<i64>,
    /// `auto` or a fixed relative ridge
    #[arg(long, default_value = "auto")]
    ridge: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// theorem id, e.g. thm1.1
    id: String,
    /// TOML experiment config; otherwise a built-in template is adapted
    #[arg(long)]
    config: Option<PathBuf>,
    /// pick the template with this model family
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    /// proof-36 or positive-1
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    delta1: Option<f64>,
    #[arg(long)]
    delta2: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(short = 'n', long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// also store replicate 0 of the field
    #[arg(long)]
    snapshot: bool,
    /// print the resolved config as TOML and exit without running
    #[arg(long)]
    print_config: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyAllArgs {
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SuiteArgs {
    /// smoke or full
    id: String,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum BootstrapCommand {
    /// Check the closure conditions and iterate the recursion; prints a JSON certificate
    RunRecursion(RecursionArgs),
    /// Level schedule as CSV
    Schedule(ScheduleArgs),
    /// Crossing probability estimate as JSON
    Crossing(CrossingArgs),
    /// One-arm decay table as CSV
    DecayTable(DecayTableArgs),
}

#[derive(Args)]
struct RecursionArgs {
    /// decay of the correlations, e.g. polylog:3.5
    #[arg(long, conflicts_with = "h", required_unless_present = "h")]
    g: Option<String>,
    /// the error profile itself instead of g
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    delta: f64,
    /// comparison profile h' [default: h]
    #[arg(long)]
    h_prime: Option<String>,
    /// dimension of the covering
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// decoupling constant
    #[arg(long, default_value_t = 36.0)]
    c: f64,
    /// ln R0 [default: the smallest closure point found]
    #[arg(long)]
    ln_r0: Option<f64>,
    /// initial crossing probability [default: the largest admissible]
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// first level of the sprinkling schedule
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ell_prime: f64,
    #[arg(long, default_value_t = 10_000)]
    n_max: usize,
    /// also write the certificate to this file
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, conflicts_with = "ln_r0", required_unless_present = "ln_r0")]
    r0: Option<f64>,
    #[arg(long)]
    ln_r0: Option<f64>,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ell_prime: f64,
    #[arg(long, default_value_t = 20)]
    n_max: usize,
}

#[derive(Args)]
struct CrossingArgs {
    /// annulus, hcross, vcross or square
    #[arg(long, default_value = "square")]
    kind: String,
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value = "bargmann-fock")]
    model: String,
    #[arg(long, default_value_t = 0.5)]
    spacing: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ell: f64,
    #[arg(short = 'n', long, default_value_t = 2000)]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DecayTableArgs {
    #[arg(long, allow_hyphen_values = true)]
    ell: f64,
    /// comma-separated radii
    #[arg(long, default_value = "8,16,32")]
    radii: String,
    #[arg(long, default_value = "bargmann-fock")]
    model: String,
    #[arg(long, default_value_t = 0.5)]
    spacing: f64,
    #[arg(short = 'n', long, default_value_t = 2000)]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// envelope such as exp:0.5 [default: fitted through the two smallest radii]
    #[arg(long)]
    envelope: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code),
        // a closed pipe (`sprinkle ... | head`) is not a failure
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Sample(a) => sample(a),
        Command::Bvn(a) => bvn(a),
        Command::Negbound(a) => negbound(a),
        Command::Capacity(a) => capacity(a),
        Command::Maxcorr(a) => maxcorr(a),
        Command::Verify(a) => verify(a),
        Command::VerifyAll(a) => verify_all(a),
        Command::Suite(a) => suite(a),
        Command::Bootstrap(b) => match b {
            BootstrapCommand::RunRecursion(a) => run_recursion(a),
            BootstrapCommand::Schedule(a) => schedule(a),
            BootstrapCommand::Crossing(a) => crossing(a),
            BootstrapCommand::DecayTable(a) => decay_table(a),
        },
    }
}

fn print_line(text: impl std::fmt::Display) -> Result<()> {
    writeln!(std::io::stdout().lock(), "{text}")?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    print_line(serde_json::to_string_pretty(value)?)
}

fn status(code: i32) -> u8 {
    if code == 0 {
        0
    } else {
        EXIT_FAIL
    }
}

fn sample(a: SampleArgs) -> Result<u8> {
    let model = parse_model(&a.field.model)?;
    let (values, shape, spacing) = match (&a.field.grid, a.field.points) {
        (Some(g), _) => {
            let grid = Grid::new(parse_shape(g)?, a.field.spacing)?;
            let values = match model {
                CovarianceModel::Gff { .. } | CovarianceModel::IidStandard => {
                    DensePlan::from_model(&model, &grid_points(&grid.shape, grid.spacing), a.seed)?.draw(a.replicate)
                }
                _ => CirculantPlan::new(&model, &grid, a.seed)?.draw(a.replicate),
            };
            (values, grid.shape.clone(), grid.spacing)
        }
        (None, Some(n)) => (DensePlan::from_model(&model, &index_points(n), a.seed)?.draw(a.replicate), vec![n], 1.0),
        (None, None) => match &model {
            CovarianceModel::ExplicitMatrix { matrix } => {
                let n = matrix.len();
                (DensePlan::from_model(&model, &index_points(n), a.seed)?.draw(a.replicate), vec![n], 1.0)
            }
            _ => return Err(Error::Config("give --grid or --points".into())),
        },
    };
    if a.csv {
        let mut w = csv::Writer::from_writer(std::io::stdout());
        w.write_record(["index", "value"]).map_err(csv_err)?;
        for (i, v) in values.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
        return Ok(0);
    }
    let header = SnapshotHeader {
        format: SNAPSHOT_FORMAT.into(),
        family: model.name().into(),
        shape,
        spacing,
        seed: a.seed,
        replicate: a.replicate,
        len: values.len(),
    };
    let dir = a.output.dir();
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!("sample-{}-{}.field", a.seed, a.replicate));
    snapshot::save(&path, &header, &values)?;
    print_line(path.display())?;
    Ok(0)
}

fn bvn(a: BvnArgs) -> Result<u8> {
    #[derive(Serialize)]
    struct Out {
        rho: f64,
        u: f64,
        v: f64,
        cdf: f64,
        pdf: f64,
        du: f64,
        dv: f64,
        drho: f64,
    }
    let cdf = analytic::bivariate_cdf(a.rho, a.u, a.v)?;
    let p = analytic::bivariate_partials(a.rho, a.u, a.v)?;
    let pdf = analytic::bivariate_pdf(a.rho, a.u, a.v);
    print_json(&Out { rho: a.rho, u: a.u, v: a.v, cdf, pdf, du: p.du, dv: p.dv, drho: p.drho })?;
    Ok(0)
}

fn negbound(a: NegboundArgs) -> Result<u8> {
    let scan = analytic::tail_gap_scan(a.kappa, &analytic::scan_grid(a.u_max, a.step)?)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["u", "gap", "ln_gap", "exponent"]).map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for r in &scan.rows {
        w.write_record([r.u.to_string(), r.gap.to_string(), opt(r.ln_gap), opt(r.exponent)]).map_err(csv_err)?;
    }
    w.flush()?;
    eprintln!("limit {} (reference {})", opt(scan.limit), scan.reference);
    Ok(0)
}

/// Lattice points of the balls, and the model covariance on them.
fn balls(model: &str, radius: f64, centres: &[Vec<i64>]) -> Result<(Vec<Vec<usize>>, sprinkle::linalg::PsdCheck)> {
    let model = parse_model(model)?;
    let dim = model.point_dim().unwrap_or(2);
    let mut pts = Vec::new();
    let mut sets = Vec::new();
    for c in centres {
        let mut centre = c.clone();
        centre.resize(dim, 0);
        let ball = lattice_ball(&centre, radius);
        sets.push((pts.len()..pts.len() + ball.len()).collect());
        pts.extend(ball);
    }
    Ok((sets, model.build_cov_matrix(&pts)?))
}

fn matrix_cov(path: &Path) -> Result<sprinkle::linalg::PsdCheck> {
    let matrix = parse::read_matrix(path)?;
    let n = matrix.len();
    CovarianceModel::ExplicitMatrix { matrix }.build_cov_matrix(&index_points(n))
}

fn capacity(a: CapacityArgs) -> Result<u8> {
    let (k, idx) = match (&a.matrix, &a.model, a.ball) {
        (Some(path), _, _) => {
            let k = matrix_cov(path)?.matrix;
            let idx = match &a.sites {
                Some(s) => parse_indices(s)?,
                None => (0..k.nrows()).collect(),
            };
            (k, idx)
        }
        (None, Some(model), Some(r)) => {
            let (sets, k) = balls(model, r, &[vec![0]])?;
            (k.matrix, sets[0].clone())
        }
        _ => return Err(Error::Config("give --matrix, or --model with --ball".into())),
    };
    print_json(&measures::capacity(&k, &idx, a.tol)?)?;
    Ok(0)
}

fn maxcorr(a: MaxcorrArgs) -> Result<u8> {
    let ridge = match a.ridge.as_str() {
        "auto" => Ridge::Auto,
        x => Ridge::Fixed(x.parse().map_err(|_| Error::Config(format!("bad ridge {x:?}; use auto or a number")))?),
    };
    let (k, i1, i2) = match (&a.matrix, &a.model) {
        (Some(path), _) => {
            let k = matrix_cov(path)?.matrix;
            let first = parse_indices(a.first.as_deref().unwrap_or_default())?;
            let second = parse_indices(a.second.as_deref().unwrap_or_default())?;
            (k, first, second)
        }
        (None, Some(model)) => {
            let r = a.ball.unwrap_or_default();
            let (sets, k) = balls(model, r, &[vec![0], vec![a.offset.unwrap_or_default()]])?;
            (k.matrix, sets[0].clone(), sets[1].clone())
        }
        _ => return Err(Error::Config("give --matrix with --first/--second, or --model with --ball/--offset".into())),
    };
    print_json(&measures::max_corr(&k, &i1, &i2, ridge)?)?;
    Ok(0)
}

/// The built-in config closest to the request: same theorem, and the same
/// model family when one is given.
fn template(id: TheoremId, model: Option<&CovarianceModel>) -> Result<ExperimentConfig> {
    let mut candidates = experiment::full_suite().into_iter().filter(|c| c.theorem.id == id);
    let found = match model {
        None => candidates.next(),
        Some(m) => candidates.find(|c| c.model.name() == m.name()),
    };
    let mut config = found.ok_or_else(|| {
        Error::Config(format!(
            "no built-in {id} template for model {}; pass --config",
            model.map_or("(any)", CovarianceModel::name)
        ))
    })?;
    if let Some(m @ CovarianceModel::ExplicitMatrix { matrix }) = model {
        if matrix.len() != config.domain.len() {
            return Err(Error::Config(format!("the {id} template needs a {0}×{0} matrix", config.domain.len())));
        }
        config.model = m.clone();
    }
    config.name = format!("verify-{id}");
    Ok(config)
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let id: TheoremId = a.id.parse()?;
    let mut config = match &a.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if c.theorem.id != id {
                return Err(Error::Config(format!("{} selects {}, not {id}", path.display(), c.theorem.id)));
            }
            c
        }
        None => template(id, a.model.as_deref().map(parse_model).transpose()?.as_ref())?,
    };
    let t = &mut config.theorem;
    if a.eps.is_some() {
        t.eps = a.eps;
    }
    if a.eps2.is_some() {
        t.eps2 = a.eps2;
    }
    if let Some(m) = &a.mode {
        t.constant_mode = Some(m.parse::<ConstantMode>()?);
    }
    if a.delta1.is_some() {
        t.delta1 = a.delta1;
    }
    if a.delta2.is_some() {
        t.delta2 = a.delta2;
    }
    if a.radius.is_some() {
        t.radius = a.radius;
    }
    if let Some(n) = a.replicates {
        config.run.replicates = n;
    }
    if let Some(s) = a.seed {
        config.run.seed = s;
    }
    if a.workers.is_some() {
        config.run.workers = a.workers;
    }
    if let Some(d) = &a.output.out {
        config.run.output_dir = Some(d.display().to_string());
    }
    config.run.snapshot |= a.snapshot;
    if a.print_config {
        config.validate()?;
        print!("{}", config.to_toml()?);
        return Ok(0);
    }
    let outcome = experiment::run(&config)?;
    for f in &outcome.files {
        print_line(f.display())?;
    }
    eprintln!("{} {}: {}", config.name, id, outcome.report.verdict.as_str());
    Ok(status(outcome.exit_code()))
}

fn finish_suite(outcome: &SuiteOutcome, dir: &Path) -> Result<u8> {
    outcome.write(dir)?;
    let mut out = std::io::stdout();
    out.write_all(outcome.summary_csv()?.as_bytes())?;
    eprintln!("{} instances in {:.1} s, reports in {}", outcome.reports.len(), outcome.wall_time_s, dir.display());
    Ok(status(outcome.exit_code()))
}

fn verify_all(a: VerifyAllArgs) -> Result<u8> {
    let started = std::time::Instant::now();
    let mut configs = Vec::new();
    let mut reports = Vec::new();
    for path in &a.configs {
        let mut c = ExperimentConfig::load(path)?;
        if a.workers.is_some() {
            c.run.workers = a.workers;
        }
        reports.push(experiment::evaluate(&c)?);
        configs.push(c);
    }
    let outcome = SuiteOutcome { configs, reports, wall_time_s: started.elapsed().as_secs_f64() };
    finish_suite(&outcome, &a.output.dir())
}

fn suite(a: SuiteArgs) -> Result<u8> {
    let id: SuiteId = a.id.parse()?;
    let outcome = experiment::run_suite(id, a.workers)?;
    finish_suite(&outcome, &a.output.dir())
}

fn parse_decay(s: &str) -> Result<Decay> {
    s.parse()
}

fn run_recursion(a: RecursionArgs) -> Result<u8> {
    #[derive(Serialize)]
    struct Certificate {
        profile: Profile,
        h_prime: Option<Decay>,
        conditions: bootstrap::SubcriticalReport,
        dim: usize,
        n_d: usize,
        ln_r0: f64,
        c_prime: f64,
        recursion: Option<bootstrap::RecursionReport>,
        schedule: Option<ScheduleSummary>,
        certified: bool,
    }
    #[derive(Serialize)]
    struct ScheduleSummary {
        ell_prime: f64,
        n_max: usize,
        tail_bound: f64,
        limit_lower_bound: f64,
    }
    let profile = match (&a.g, &a.h) {
        (Some(g), _) => Profile::from_g(parse_decay(g)?, a.delta),
        (None, Some(h)) => Profile::from_h(parse_decay(h)?, a.delta),
        _ => return Err(Error::Config("give --g or --h".into())),
    };
    profile.validate()?;
    let h_prime = a.h_prime.as_deref().map(parse_decay).transpose()?;
    let conditions = bootstrap::check_subcritical_conditions(&profile, h_prime)?;
    let n_d = bootstrap::annulus_covering(a.d, 1.0)?.n_d;
    let mut cert = Certificate {
        profile,
        h_prime,
        n_d,
        dim: a.d,
        ln_r0: f64::NAN,
        c_prime: conditions.c_prime,
        conditions,
        recursion: None,
        schedule: None,
        certified: false,
    };
    if cert.conditions.holds {
        let ln_r0 = match a.ln_r0 {
            Some(x) => x,
            None => bootstrap::find_closure(&profile, h_prime, n_d, a.c)?.ln_r0,
        };
        let mut input = RecursionInput { profile, h_prime, n_d, c: a.c, ln_r0, p1: 0.0, c_prime: None, n_steps: a.steps };
        input.p1 = match a.p1 {
            Some(p) => p,
            None => bootstrap::run_recursion(&input)?.max_p1,
        };
        let rep = bootstrap::run_recursion(&input)?;
        let sched = bootstrap::sprinkle_schedule_ln(ln_r0, a.delta, a.ell_prime, a.n_max)?;
        cert.ln_r0 = ln_r0;
        cert.c_prime = rep.c_prime;
        cert.certified = rep.certified && sched.limit_lower_bound.is_finite();
        cert.schedule = Some(ScheduleSummary {
            ell_prime: a.ell_prime,
            n_max: a.n_max,
            tail_bound: sched.tail_bound,
            limit_lower_bound: sched.limit_lower_bound,
        });
        cert.recursion = Some(rep);
    }
    let text = serde_json::to_string_pretty(&cert)?;
    if let Some(path) = &a.certificate {
        fs::write(path, format!("{text}\n"))?;
    }
    print_line(&text)?;
    if !cert.certified {
        for d in cert.conditions.diagnostics.iter().chain(cert.recursion.iter().flat_map(|r| &r.diagnostics)) {
            eprintln!("rejected: {d}");
        }
    }
    Ok(if cert.certified { 0 } else { EXIT_FAIL })
}

fn schedule(a: ScheduleArgs) -> Result<u8> {
    let ln_r0 = match (a.r0, a.ln_r0) {
        (_, Some(l)) => l,
        (Some(r), None) if r > 1.0 => r.ln(),
        _ => return Err(Error::Parameter("R0 must exceed 1".into())),
    };
    let s = bootstrap::sprinkle_schedule_ln(ln_r0, a.delta, a.ell_prime, a.n_max)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["n", "level"]).map_err(csv_err)?;
    for (n, l) in s.levels.iter().enumerate() {
        w.write_record([(n + 1).to_string(), l.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    eprintln!("tail bound {}, limit lower bound {}", s.tail_bound, s.limit_lower_bound);
    Ok(0)
}

fn crossing(a: CrossingArgs) -> Result<u8> {
    let kind: CrossingKind = a.kind.parse()?;
    let model = parse_model(&a.model)?;
    print_json(&bootstrap::estimate_crossing(&model, a.spacing, a.ell, a.radius, kind, a.replicates, a.seed)?)?;
    Ok(0)
}

fn decay_table(a: DecayTableArgs) -> Result<u8> {
    let model = parse_model(&a.model)?;
    let radii: Vec<f64> = a
        .radii
        .split(',')
        .map(|r| r.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad radius {r:?}"))))
        .collect::<Result<_>>()?;
    let envelope = a.envelope.as_deref().map(parse_decay).transpose()?;
    let t = bootstrap::subcritical_decay_table(&model, a.spacing, a.ell, &radii, a.replicates, a.seed, envelope)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for row in &t.rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    eprintln!("envelope {}, nonincreasing {}", t.envelope, t.nonincreasing);
    Ok(if t.rows.iter().all(|r| r.dominated) { 0 } else { EXIT_FAIL })
}

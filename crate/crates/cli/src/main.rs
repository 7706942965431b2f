use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use ellbvp::boundary::{ab_obstruction, sl_check, BoundaryGrid, DEFAULT_ROOT_TOL, DEFAULT_SL_TOL};
use ellbvp::homotopy::{reduce_order, reduce_to_spectral, CertifyGrid, PathCertificate, DEFAULT_STEPS};
use ellbvp::index::{
    classical_generator, cobordism_check, finite_rank_generator, index_report, loop_condition_problem,
    random_excision_pair, random_extendable_pair, verify_excision, verify_index_formula, winding_index, Resolution,
    DEFAULT_RANK_TOL,
};
use ellbvp::spectral::{d_value, realize_projection};
use ellbvp::symbol::{check_interior_ellipticity, BvpProblem, InteriorGrid, MatrixSymbol, ProblemFile, ProjectionFile};
use ellbvp::Error;

#[derive(Parser, Debug)]
#[command(name = "ellbvp", version, about = "Elliptic boundary value problems on model manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Fourier modes per resolution, ascending (comma separated).
    #[arg(long, global = true, value_delimiter = ',', default_value = "16,32")]
    resolution: Vec<usize>,
    /// Steps per homotopy path.
    #[arg(long, global = true, default_value_t = DEFAULT_STEPS)]
    tau_steps: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_ROOT_TOL)]
    tol_root: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_SL_TOL)]
    tol_sl: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_RANK_TOL)]
    tol_rank: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for reports and traces.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Interior and Shapiro-Lopatinskii ellipticity.
    Check { input: PathBuf },
    /// Atiyah-Bott obstruction at the first boundary circle.
    Obstruct { input: PathBuf },
    /// Order reduction to a first-order problem.
    Reduce { input: PathBuf },
    /// Reduction of a first-order problem to spectral form.
    Spectral { input: PathBuf },
    /// Numeric Fredholm index.
    Index { input: PathBuf },
    /// d-functional of a projection file.
    Dfun { input: PathBuf },
    /// Consistency suites.
    Verify {
        suite: Suite,
        /// Problem to check instead of the built-in generators (index-formula only).
        input: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    Excision,
    #[value(alias = "formula-35")]
    IndexFormula,
    Cobordism,
}

#[derive(Debug, Serialize)]
struct RunConfig {
    command: String,
    input: Option<String>,
    suite: Option<Suite>,
    resolution: Vec<usize>,
    tau_steps: usize,
    tol_root: f64,
    tol_sl: f64,
    tol_rank: f64,
    seed: u64,
}

impl RunConfig {
    fn new(cli: &Cli) -> Self {
        let (command, input, suite) = match &cli.command {
            Command::Check { input } => ("check", Some(input), None),
            Command::Obstruct { input } => ("obstruct", Some(input), None),
            Command::Reduce { input } => ("reduce", Some(input), None),
            Command::Spectral { input } => ("spectral", Some(input), None),
            Command::Index { input } => ("index", Some(input), None),
            Command::Dfun { input } => ("dfun", Some(input), None),
            Command::Verify { suite, input } => ("verify", input.as_ref(), Some(*suite)),
        };
        Self {
            command: command.into(),
            input: input.map(|p| p.display().to_string()),
            suite,
            resolution: cli.resolution.clone(),
            tau_steps: cli.tau_steps,
            tol_root: cli.tol_root,
            tol_sl: cli.tol_sl,
            tol_rank: cli.tol_rank,
            seed: cli.seed,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        for (name, v) in [("tol-root", self.tol_root), ("tol-sl", self.tol_sl), ("tol-rank", self.tol_rank)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("--{name} must be positive, got {v}")));
            }
        }
        if self.resolution.is_empty() || self.resolution.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("--resolution must be a strictly ascending list".into()));
        }
        if self.tau_steps < 2 {
            return Err(Error::Precondition("--tau-steps must be at least 2".into()));
        }
        Ok(())
    }

    fn resolutions(&self) -> Vec<Resolution> {
        self.resolution.iter().map(|&m| Resolution::from_modes(m)).collect()
    }

    fn certify_grid(&self) -> CertifyGrid {
        CertifyGrid { root_tol: self.tol_root, margin_tol: self.tol_sl, ..CertifyGrid::default() }
    }
}

type TraceWriter = Box<dyn Fn(BufWriter<File>) -> ellbvp::Result<()>>;

/// Result of one command: report body, verdict and CSV traces.
struct Outcome {
    name: String,
    valid: bool,
    verdict: String,
    result: Value,
    traces: Vec<(&'static str, TraceWriter)>,
}

impl Outcome {
    fn new(name: &str, valid: bool, verdict: impl Into<String>, result: Value) -> Self {
        Self { name: name.into(), valid, verdict: verdict.into(), result, traces: Vec::new() }
    }
}

fn load(path: &Path) -> ellbvp::Result<BvpProblem> {
    ProblemFile::read(path)?.build()
}

fn certificate_summary(c: &PathCertificate) -> Value {
    json!({
        "kind": c.kind,
        "steps": c.steps.len(),
        "valid": c.valid,
        "first_failure": c.first_failure,
        "min_interior_margin": c.min_interior_margin(),
        "min_boundary_margin": c.min_boundary_margin(),
        "max_principal_angle": c.max_angle(),
        "fixed_frames": c.fixed_frames,
    })
}

fn certificate_trace(c: PathCertificate) -> TraceWriter {
    Box::new(move |w| c.write_csv(w))
}

fn check(cfg: &RunConfig, path: &Path) -> ellbvp::Result<Outcome> {
    let p = load(path)?;
    let interior = check_interior_ellipticity(&p.operator, &InteriorGrid::default(), cfg.tol_sl)?;
    let sl = sl_check(&p, &BoundaryGrid::default(), cfg.tol_root, cfg.tol_sl)?;
    let valid = interior.elliptic && sl.is_elliptic();
    let verdict = if valid { "elliptic" } else if !interior.elliptic { "interior-degenerate" } else { "not-sl-elliptic" };
    let result = json!({
        "interior": interior,
        "sl_verdict": sl.verdict,
        "sl_global_min": sl.global_min,
        "max_identity_residual": sl.max_identity_residual(),
        "samples": sl.samples.len(),
    });
    let mut out = Outcome::new(&p.name, valid, verdict, result);
    out.traces.push(("sl", Box::new(move |w| sl.write_csv(w))));
    Ok(out)
}

fn obstruct(cfg: &RunConfig, path: &Path) -> ellbvp::Result<Outcome> {
    let p = load(path)?;
    if !p.manifold.has_circle_boundary() {
        return Err(Error::Capability("the obstruction is defined for circle boundaries".into()));
    }
    let r = ab_obstruction(&p.operator_at_end(0), 64, cfg.tol_root)?;
    Ok(Outcome::new(&p.name, !r.is_obstructed(), r.verdict.clone(), serde_json::to_value(&r)?))
}

fn reduce(cfg: &RunConfig, path: &Path) -> ellbvp::Result<Outcome> {
    let p = load(path)?;
    let r = reduce_order(&p, cfg.tau_steps, &cfg.certify_grid())?;
    let valid = r.certificate.valid && r.trace.ranks_preserved();
    let result = json!({
        "order": r.trace.order,
        "rank": r.trace.rank,
        "first_order_rank": r.first_order.rank(),
        "endpoint_residual": r.trace.endpoint_residual,
        "boundary_residual": r.trace.boundary_residual,
        "factor_remainder": r.trace.factor_remainder,
        "diagonal_variation": r.trace.diagonal_variation,
        "trivial": r.trace.trivial,
        "ranks_preserved": r.trace.ranks_preserved(),
        "max_pr_angle": r.trace.samples.iter().map(|s| s.pr_angle).fold(0.0, f64::max),
        "certificate": certificate_summary(&r.certificate),
    });
    let verdict = if valid { "reduced" } else { "certificate-failed" };
    let mut out = Outcome::new(&p.name, valid, verdict, result);
    let trace = r.trace.clone();
    out.traces.push(("order", Box::new(move |w| trace.write_csv(w))));
    out.traces.push(("certificate", certificate_trace(r.certificate)));
    Ok(out)
}

fn spectral(cfg: &RunConfig, path: &Path) -> ellbvp::Result<Outcome> {
    let p = load(path)?;
    let r = reduce_to_spectral(&p, cfg.tau_steps, &cfg.certify_grid())?;
    let result = json!({
        "constant": r.constant,
        "endpoint_rank": r.problem.rank(),
        "endpoint_spectral": r.problem.ends[0].is_spectral(),
        "certificate": certificate_summary(&r.certificate),
    });
    let valid = r.certificate.valid;
    let mut out = Outcome::new(&p.name, valid, if valid { "reduced" } else { "certificate-failed" }, result);
    out.traces.push(("certificate", certificate_trace(r.certificate)));
    Ok(out)
}

fn index(cfg: &RunConfig, path: &Path) -> ellbvp::Result<Outcome> {
    let p = load(path)?;
    let r = index_report(&p, &cfg.resolutions(), cfg.tol_rank)?;
    let valid = r.stable_index().is_some();
    Ok(Outcome::new(&p.name, valid, format!("{:?}", r.verdict).to_lowercase(), serde_json::to_value(&r)?))
}

fn dfun(cfg: &RunConfig, path: &Path) -> ellbvp::Result<Outcome> {
    let file = ProjectionFile::from_json(&std::fs::read_to_string(path)?)?;
    let cond = file.build()?;
    let modes = *cfg.resolution.last().expect("validated");
    let p = realize_projection(&cond, modes)?;
    let d = d_value(&p)?;
    let result = json!({ "d": d, "d_string": d.to_string(), "modes": modes, "rank": cond.rank() });
    Ok(Outcome::new(&file.name, true, "computed", result))
}

fn verify(cfg: &RunConfig, suite: Suite, input: Option<&Path>) -> ellbvp::Result<Outcome> {
    let res = cfg.resolutions();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match suite {
        Suite::IndexFormula => {
            let problems = match input {
                Some(path) => vec![load(path)?],
                None => {
                    let mut v: Vec<BvpProblem> = (-3..=3).map(finite_rank_generator).collect::<ellbvp::Result<_>>()?;
                    for (angle, twist) in [(0.0, 0), (0.4, 1), (0.7, -2), (1.2, 3)] {
                        v.push(classical_generator(angle, twist)?);
                    }
                    v
                }
            };
            let reports = problems.iter().map(|p| verify_index_formula(p, &res, cfg.tol_rank)).collect::<ellbvp::Result<Vec<_>>>()?;
            let valid = reports.iter().all(|r| r.holds);
            let cases: Vec<Value> = reports
                .iter()
                .map(|r| json!({ "name": r.name, "index": r.index, "doubled_index": r.doubled_index, "d": r.d.to_string(), "rhs": r.rhs.to_string(), "holds": r.holds }))
                .collect();
            Ok(Outcome::new("index-formula", valid, if valid { "holds" } else { "violated" }, json!({ "cases": cases })))
        }
        Suite::Excision => {
            let mut cases = Vec::new();
            let mut valid = true;
            for k in 0..10 {
                let rank = 1 + k % 2;
                let (a, b, (w1, w2)) = random_excision_pair(&mut rng, rank)?;
                let r = verify_excision(&a, &b, (Some(w1), Some(w2)), &res, cfg.tol_rank)?;
                valid &= r.equal;
                cases.push(json!({
                    "instance": k,
                    "rank": rank,
                    "winding": [w1, w2],
                    "index": [r.index_first.stable_index(), r.index_second.stable_index()],
                    "equal": r.equal,
                }));
            }
            Ok(Outcome::new("excision", valid, if valid { "consistent" } else { "inconsistent" }, json!({ "cases": cases })))
        }
        Suite::Cobordism => {
            let modes = *cfg.resolution.last().expect("validated");
            let mut cases = Vec::new();
            let mut valid = true;
            for k in 0..20 {
                let rank = 1 + k % 2;
                let (a_plus, a_minus) = random_extendable_pair(&mut rng, rank, 1);
                let r = cobordism_check(&a_plus, &a_minus, modes)?;
                let ok = r.consistent && r.index == 0;
                valid &= ok;
                cases.push(json!({ "instance": k, "rank": rank, "index": r.index, "consistent": r.consistent }));
            }
            let hardy_plus = MatrixSymbol::parse(&[vec!["e(1)".into()]], 0)?;
            let hardy_minus = MatrixSymbol::parse(&[vec!["1".into()]], 0)?;
            let winding = winding_index(&hardy_plus, &hardy_minus, 256)?.2;
            let bvp = index_report(&loop_condition_problem(&hardy_plus, &hardy_minus)?, &res, cfg.tol_rank)?;
            let hardy = cobordism_check(&hardy_plus, &hardy_minus, modes)?;
            let hardy_ok = hardy.consistent && bvp.stable_index() == Some(winding) && winding != 0;
            valid &= hardy_ok;
            let result = json!({
                "cases": cases,
                "hardy": { "winding_index": winding, "boundary_problem_index": bvp.stable_index(), "consistent": hardy_ok },
            });
            Ok(Outcome::new("cobordism", valid, if valid { "consistent" } else { "inconsistent" }, result))
        }
    }
}

fn run(cli: &Cli, cfg: &RunConfig) -> ellbvp::Result<Outcome> {
    cfg.validate()?;
    match &cli.command {
        Command::Check { input } => check(cfg, input),
        Command::Obstruct { input } => obstruct(cfg, input),
        Command::Reduce { input } => reduce(cfg, input),
        Command::Spectral { input } => spectral(cfg, input),
        Command::Index { input } => index(cfg, input),
        Command::Dfun { input } => dfun(cfg, input),
        Command::Verify { suite, input } => verify(cfg, *suite, input.as_deref()),
    }
}

fn write(cfg: &RunConfig, out_dir: &Path, outcome: Outcome) -> ellbvp::Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let report = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "name": outcome.name,
        "valid": outcome.valid,
        "verdict": outcome.verdict,
        "result": outcome.result,
    });
    let path = out_dir.join(format!("{}.report.json", outcome.name));
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    for (trace, f) in outcome.traces {
        f(BufWriter::new(File::create(out_dir.join(format!("{}.{trace}.csv", outcome.name)))?))?;
    }
    Ok(path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = RunConfig::new(&cli);
    let outcome = run(&cli, &cfg).and_then(|o| {
        let (valid, verdict) = (o.valid, o.verdict.clone());
        write(&cfg, &cli.out, o).map(|path| (valid, verdict, path))
    });
    match outcome {
        Ok((valid, verdict, path)) => {
            println!("{verdict}: {}", path.display());
            if valid {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaussflow::corpus::{self, SeededBody};
use gaussflow::error::{exit, LabError, LabResult};
use gaussflow::io;
use gaussflow::studies::{self, RoundnessCriteria, StudyError};
use gaussflow::svg;
use gaussflow_core::flow::{self, FlowConfig};
use gaussflow_core::{functional_report, BodySpec, Grid, SupportField};
use serde_json::json;

#[derive(Parser)]
#[command(name = "gaussflow", version, about = "Gauss curvature flow laboratory for convex bodies in R² and R³")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a body, check convexity and write its support function.
    BodyMake(BodyMakeArgs),
    /// Compute entropies, points and inequality margins of one body.
    Analyze(AnalyzeArgs),
    /// Integrate the flow and write a trace.
    FlowRun(FlowRunArgs),
    /// Check every inequality on seeded random bodies.
    Verify(VerifyArgs),
    /// Fit the stability gap against the entropy over an interpolation family.
    StudyStability(StabilityArgs),
    /// Flow a sliced-ball family and tabulate terminal roundness.
    StudyRoundness(RoundnessArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Space dimension (2 or 3); inferred from the spec when possible.
    #[arg(long)]
    dimension: Option<usize>,
    /// Nodes on the circle, or Gauss–Legendre latitudes on the sphere.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct BodyMakeArgs {
    /// Body spec as a JSON file path or inline JSON; omit to draw one from --seed.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    spec: String,
    #[command(flatten)]
    grid: GridArgs,
    /// Directory for report.json; the report is printed either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FlowRunArgs {
    #[arg(long)]
    spec: String,
    /// Flow configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also draw one SVG per snapshot (planar bodies only).
    #[arg(long)]
    frames: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Check this body instead of a random corpus.
    #[arg(long)]
    spec: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Minkowski combinations of the unit ball and a fixed ellipsoid.
    Ellipsoid,
    /// Balls of varying radius.
    Balls,
}

#[derive(Args)]
struct StabilityArgs {
    /// Family members.
    #[arg(long, default_value_t = 9)]
    count: usize,
    #[arg(long, value_enum, default_value_t = Family::Ellipsoid)]
    family: Family,
    /// Smallest interpolation weight.
    #[arg(long, default_value_t = 0.01)]
    lambda_min: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RoundnessArgs {
    /// Cap heights, evenly spaced on [0.02, 0.1]; 3 gives 0.02, 0.06, 0.1.
    #[arg(long, default_value_t = 3)]
    count: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::BodyMake(args) => body_make(args),
        Command::Analyze(args) => analyze(args),
        Command::FlowRun(args) => flow_run(args),
        Command::Verify(args) => verify(args),
        Command::StudyStability(args) => study_stability(args),
        Command::StudyRoundness(args) => study_roundness(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

/// Dimension implied by coordinates in the spec, if any.
fn infer_dimension(spec: &BodySpec) -> Option<usize> {
    match spec {
        BodySpec::Ball { center, .. } => (!center.is_empty()).then_some(center.len()),
        BodySpec::Ellipsoid { semiaxes, .. } => Some(semiaxes.len()),
        BodySpec::Translated { offset, body } => infer_dimension(body).or(Some(offset.len())),
        BodySpec::Scaled { body, .. } => infer_dimension(body),
        BodySpec::MinkowskiSum { bodies } => bodies.iter().find_map(infer_dimension),
        _ => None,
    }
}

fn dimension(grid: &GridArgs, spec: Option<&BodySpec>) -> LabResult<usize> {
    let n = grid.dimension.or_else(|| spec.and_then(infer_dimension)).unwrap_or(2);
    if n == 2 || n == 3 {
        Ok(n)
    } else {
        Err(LabError::Usage(format!("dimension must be 2 or 3, got {n}")))
    }
}

fn build_grid(n: usize, resolution: Option<usize>) -> LabResult<Arc<Grid>> {
    let grid = match resolution {
        Some(r) => Grid::new(n, r)?,
        None => Grid::with_default_resolution(n)?,
    };
    Ok(Arc::new(grid))
}

fn body_make(args: BodyMakeArgs) -> LabResult<()> {
    let given = args.spec.as_deref().map(io::read_spec).transpose()?;
    let n = dimension(&args.grid, given.as_ref())?;
    let grid = build_grid(n, args.grid.resolution)?;
    let (spec, seed) = match (given, args.seed) {
        (Some(spec), _) => (spec, None),
        (None, Some(seed)) => {
            let SeededBody { seed, spec } = corpus::random_body(seed, &grid)?;
            (spec, Some(seed))
        }
        (None, None) => return Err(LabError::Usage("body-make needs --spec or --seed".into())),
    };
    let field = SupportField::from_spec(&spec, grid.clone())?;
    io::create_dir(&args.out)?;
    let summary = json!({
        "spec": spec,
        "seed": seed,
        "dimension": n,
        "resolution": grid.resolution(),
        "nodes": grid.len(),
        "volume": field.volume()?,
        "diameter": field.diameter(),
        "pinching": field.pinching_ratio()?,
    });
    io::write_json(&args.out.join("body.json"), &summary)?;
    // the bare spec, so the body can be passed back through --spec
    io::write_json(&args.out.join("spec.json"), &summary["spec"])?;
    io::write_support_csv(&args.out.join("support.csv"), &field)?;
    if n == 2 {
        let extent = 1.1 * field.values().iter().fold(0.0f64, |m, s| m.max(s.abs()));
        io::write_text(&args.out.join("body.svg"), &svg::frame(&field, extent, "body")?)?;
    }
    emit(&(serde_json::to_string(&summary).expect("JSON values always serialize") + "\n"));
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> LabResult<()> {
    let spec = io::read_spec(&args.spec)?;
    let n = dimension(&args.grid, Some(&spec))?;
    let field = SupportField::from_spec(&spec, build_grid(n, args.grid.resolution)?)?;
    let report = functional_report(&field)?;
    let value = io::report_json(&report);
    if let Some(out) = &args.out {
        io::create_dir(out)?;
        io::write_json(&out.join("report.json"), &value)?;
    }
    emit(&(serde_json::to_string_pretty(&value).expect("JSON values always serialize") + "\n"));
    let failing = report.failing_checks();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(LabError::Inequality(failing.join(", ")))
    }
}

fn flow_config(path: Option<&Path>, grid: &GridArgs, spec: &BodySpec) -> LabResult<FlowConfig> {
    let mut config = match path {
        Some(path) => io::read_config(path)?,
        None => FlowConfig::new(dimension(grid, Some(spec))?),
    };
    if let Some(n) = grid.dimension {
        config.dimension = n;
    }
    if grid.resolution.is_some() {
        config.resolution = grid.resolution;
    }
    config.validate()?;
    Ok(config)
}

fn flow_run(args: FlowRunArgs) -> LabResult<()> {
    let spec = io::read_spec(&args.spec)?;
    let config = flow_config(args.config.as_deref(), &args.grid, &spec)?;
    let grid = config.grid()?;
    let field = SupportField::from_spec(&spec, grid.clone())?;
    io::create_dir(&args.out)?;
    let trace = if args.frames && config.dimension == 2 {
        run_with_frames(field, &config, &args.out.join("frames"))?
    } else {
        flow::run_field(field, &config)?
    };
    io::write_trace_csv(&args.out.join("trace.csv"), &trace)?;
    io::write_json(&args.out.join("trace.json"), &io::trace_metadata(&spec, &trace, grid.len()))?;
    let last = trace.last();
    emit(&format!(
        "steps {} snapshots {} t {} volume fraction {} termination {:?}\n",
        trace.steps,
        trace.snapshots.len(),
        last.t,
        last.volume / trace.initial_volume,
        trace.termination
    ));
    match trace.failure() {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// [`flow::run_field`] drawing each snapshot as it is recorded.
fn run_with_frames(field: SupportField, config: &FlowConfig, dir: &Path) -> LabResult<flow::FlowTrace> {
    io::create_dir(dir)?;
    let extent = 1.1 * field.boundary_points()?.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let mut written: LabResult<()> = Ok(());
    let mut frame = 0usize;
    let trace = flow::run_observed(field, config, |state, snap| {
        if written.is_err() {
            return;
        }
        let caption = format!("t = {:.6}  V = {:.6}", snap.t, snap.volume);
        written = svg::frame(&state.field, extent, &caption)
            .map_err(LabError::from)
            .and_then(|text| io::write_text(&dir.join(format!("frame_{frame:05}.svg")), &text));
        frame += 1;
    })?;
    written?;
    Ok(trace)
}

fn verify(args: VerifyArgs) -> LabResult<()> {
    let given = args.spec.as_deref().map(io::read_spec).transpose()?;
    let n = dimension(&args.grid, given.as_ref())?;
    let grid = build_grid(n, args.grid.resolution)?;
    let rows = match &given {
        Some(spec) => vec![studies::verify_spec(spec, &grid)],
        None => {
            if args.count == 0 {
                return Err(LabError::Usage("--count must be at least 1".into()));
            }
            studies::verify_bodies(&corpus::random_corpus(args.seed, args.count, &grid)?, &grid)
        }
    };
    let header = ["index", "seed", "chain", "blaschke_santalo", "vitale", "lemma_stab", "r_bracket", "status"];
    let mut table = vec![header.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for row in &rows {
        let seed = row.seed.map_or("-".into(), |s| s.to_string());
        let mut cells = vec![row.index.to_string(), seed];
        match &row.outcome {
            Ok((_, m)) => cells.extend(
                [m.chain, m.blaschke_santalo, m.vitale, m.lemma_stab, m.r_bracket].iter().map(|x| format!("{x:.3e}")),
            ),
            Err(_) => cells.extend(std::iter::repeat("-".to_string()).take(5)),
        }
        cells.push(if row.passed() { "ok".into() } else { row.failing_checks().join(";") });
        table.push(cells);
    }
    for cells in &table {
        emit(&(cells.iter().map(|c| format!("{c:>22}")).collect::<String>() + "\n"));
    }
    if let Some(out) = &args.out {
        io::create_dir(out)?;
        let text: String = table.iter().map(|cells| cells.join(",") + "\n").collect();
        io::write_text(&out.join("verify.csv"), &text)?;
    }
    let failing: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed())
        .map(|r| match r.seed {
            Some(seed) => format!("body {} (body-make --seed {seed} --dimension {n}): {}", r.index, r.failing_checks().join(";")),
            None => format!("given spec: {}", r.failing_checks().join(";")),
        })
        .collect();
    emit(&format!("{} of {} bodies pass\n", rows.len() - failing.len(), rows.len()));
    if failing.is_empty() {
        Ok(())
    } else {
        Err(LabError::Inequality(failing.join("\n")))
    }
}

fn study_stability(args: StabilityArgs) -> LabResult<()> {
    let n = dimension(&args.grid, None)?;
    let grid = build_grid(n, args.grid.resolution)?;
    let family = match args.family {
        Family::Ellipsoid => corpus::interpolation_family(n, args.count, args.lambda_min),
        Family::Balls => corpus::ball_family(args.count),
    };
    let (rows, summary) = match studies::stability_study(&family, &grid) {
        Ok(result) => result,
        Err(StudyError::Core(e)) => return Err(e.into()),
        Err(e @ StudyError::InsufficientSpread { .. }) => {
            emit(&format!("{e}\n"));
            return Err(LabError::Inequality(e.to_string()));
        }
    };
    let mut text = String::from("parameter,epsilon,gap,ratio\n");
    for row in &rows {
        let ratio = row.ratio.map_or(String::new(), |r| r.to_string());
        text.push_str(&format!("{},{},{},{}\n", row.parameter, row.epsilon, row.gap, ratio));
    }
    emit(&text);
    let summary_json = json!({
        "dimension": n,
        "slope": summary.slope,
        "threshold": summary.threshold,
        "max_ratio": summary.max_ratio,
        "decades": summary.decades,
        "bounded": summary.bounded,
        "passed": summary.passed,
    });
    emit(&(serde_json::to_string(&summary_json).expect("JSON values always serialize") + "\n"));
    if let Some(out) = &args.out {
        io::create_dir(out)?;
        io::write_text(&out.join("stability.csv"), &text)?;
        io::write_json(&out.join("stability.json"), &summary_json)?;
    }
    if summary.passed {
        Ok(())
    } else {
        Err(LabError::Inequality(format!("slope {} against threshold {}, bounded {}", summary.slope, summary.threshold, summary.bounded)))
    }
}

fn study_roundness(args: RoundnessArgs) -> LabResult<()> {
    let n = dimension(&args.grid, None)?;
    let mut config = match &args.config {
        Some(path) => io::read_config(path)?,
        None => FlowConfig { snapshot_every: usize::MAX, ..FlowConfig::new(n) },
    };
    config.dimension = n;
    if args.grid.resolution.is_some() {
        config.resolution = args.grid.resolution;
    }
    config.validate()?;
    let heights = match args.count {
        0 => return Err(LabError::Usage("--count must be at least 1".into())),
        1 => vec![0.05],
        c => (0..c).map(|i| 0.02 + 0.08 * i as f64 / (c - 1) as f64).collect(),
    };
    let mut family = vec![(0.0, BodySpec::ball(1.0))];
    family.extend(corpus::sliced_family(&heights));
    let entries = studies::roundness_study(&family, &config);
    let mut text = String::from(
        "cap_height,initial_epsilon,initial_pinching,terminal_pinching,ck0,ck1,ck2,soliton_residual,stability_ratio,volume_fraction,steps,failure\n",
    );
    for entry in &entries {
        match &entry.row {
            Ok(row) => {
                let ratio = row.terminal_stability_ratio.map_or(String::new(), |r| r.to_string());
                let failure = row.failure.as_ref().map_or(String::new(), |e| e.to_string());
                text.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    entry.parameter,
                    row.initial_epsilon,
                    row.initial_pinching,
                    row.terminal_pinching,
                    row.terminal_ck[0],
                    row.terminal_ck[1],
                    row.terminal_ck[2],
                    row.terminal_soliton_residual,
                    ratio,
                    row.final_volume_fraction,
                    row.steps,
                    failure
                ));
            }
            Err(e) => text.push_str(&format!("{},,,,,,,,,,,{e}\n", entry.parameter)),
        }
    }
    emit(&text);
    let verdict = studies::judge_roundness(&entries, &RoundnessCriteria::default());
    let summary = json!({ "dimension": n, "eligible": verdict.eligible, "failures": verdict.failures, "passed": verdict.passed() });
    emit(&(serde_json::to_string(&summary).expect("JSON values always serialize") + "\n"));
    if let Some(out) = &args.out {
        io::create_dir(out)?;
        io::write_text(&out.join("roundness.csv"), &text)?;
        io::write_json(&out.join("roundness.json"), &summary)?;
    }
    if verdict.passed() {
        Ok(())
    } else {
        Err(LabError::Inequality(verdict.failures.join("; ")))
    }
}

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nalgebra::DVector;

use singik::benchmark::{self, BenchSettings, Panel, SolverSuite};
use singik::config::ConfigFile;
use singik::learning::{self, Loss, MlpModel, TrainConfig};
use singik::riemannian;
use singik::{io, KinematicChain, SolverKind, TaskPosition};

const DEFAULT_MODEL: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/models/panda_mlp.bin");

#[derive(Parser)]
#[command(name = "singik", version, about = "Singularity-aware IK solvers and benchmark panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run benchmark panels and write rows.csv / aggregate.json.
    Bench {
        #[arg(long, default_value = "A")]
        panel: String,
        /// Comma-separated solver ids, `classical` or `all`.
        #[arg(long, default_value = "classical")]
        solvers: String,
        #[arg(long, default_value = "panda")]
        chain: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Model file for `mlp` and `mlp+dls`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train the warm-start MLP on FK-generated pairs.
    TrainMlp {
        #[arg(long, default_value = "panda")]
        chain: String,
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value = "512,512,512")]
        hidden: String,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        /// `position` (FK error) or `joint` (joint-space MSE).
        #[arg(long, default_value = "position")]
        loss: String,
        #[arg(long, default_value = "model.bin")]
        out: PathBuf,
        /// Training curve CSV; defaults to `<out>.curve.csv`.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Euclidean vs. geodesic manipulability between two stored endpoints.
    InterpDemo {
        #[arg(long, default_value = "planar3r")]
        chain: String,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a single IK query.
    Solve {
        #[arg(long, default_value = "dls")]
        solver: String,
        #[arg(long, default_value = "panda")]
        chain: String,
        /// `x,y,z` in meters.
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Start configuration; the mid-limit configuration when omitted.
        #[arg(long, allow_hyphen_values = true)]
        q0: Option<String>,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("`{p}` is not a number")))
        .collect()
}

fn load_model(path: &Path) -> Result<MlpModel> {
    if !path.exists() {
        bail!("model file not found: {}", path.display());
    }
    MlpModel::load(path).with_context(|| format!("reading model file {}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(ConfigFile::default()),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    panel: &str,
    solvers: &str,
    chain: &str,
    seed: Option<u64>,
    n: Option<usize>,
    out: &Path,
    config: Option<&Path>,
    model: Option<&Path>,
) -> Result<()> {
    let panels = Panel::parse_list(panel)?;
    let chain = KinematicChain::by_name(chain)?;
    let file = load_config(config)?;
    let mut kinds = SolverKind::parse_list(solvers)?;
    let explicit_learned = solvers.split(',').map(str::trim).any(|s| s == "mlp" || s == "mlp+dls");
    let model_path = model.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_MODEL));
    let model = if kinds.iter().any(|k| k.needs_model()) {
        if explicit_learned || model_path.exists() {
            Some(load_model(&model_path)?)
        } else {
            kinds.retain(|k| !k.needs_model());
            None
        }
    } else {
        None
    };
    let mut settings = BenchSettings::from_config(&chain, &file)?;
    if let Some(s) = seed {
        settings.seed = s;
    }
    if let Some(n) = n {
        settings.n = n;
    }
    let suite = SolverSuite::new(&kinds, &file, model)?;
    let reports = benchmark::run_panels(&panels, &suite, &chain, &settings)?;
    benchmark::write_outputs(out, &reports)?;
    print!("{}", benchmark::summary_table(&reports));
    println!("wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    chain: &str,
    n: usize,
    seed: u64,
    epochs: usize,
    hidden: &str,
    batch: usize,
    loss: &str,
    out: &Path,
    curve: Option<&Path>,
) -> Result<()> {
    let chain = KinematicChain::by_name(chain)?;
    let hidden = hidden
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad layer width `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    let cfg = TrainConfig { hidden, epochs, batch_size: batch, seed, loss: loss.parse::<Loss>()?, ..Default::default() };
    let set = learning::generate_dataset(&chain, n, seed);
    let outcome = learning::mlp_train(&chain, &set, &cfg)?;
    outcome.model.save(out)?;
    let curve_path = curve.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".curve.csv");
        PathBuf::from(p)
    });
    io::write_atomic(&curve_path, outcome.curve_csv().as_bytes())?;
    let last = outcome.curve.last().expect("at least one epoch");
    println!(
        "final loss {:e}, held-out mean error {:.3} mm ({} parameters)",
        outcome.final_loss,
        last.holdout_error * 1e3,
        outcome.model.parameter_count()
    );
    println!("wrote {} and {}", out.display(), curve_path.display());
    Ok(())
}

fn cmd_interp(chain: &str, steps: usize, out: Option<&Path>) -> Result<()> {
    let kin = KinematicChain::by_name(chain)?;
    let ends = riemannian::bundled_endpoints(chain)?;
    let profile = riemannian::interp_profile(&kin, &ends.well_conditioned, &ends.near_singular, steps)?;
    match out {
        Some(p) => {
            io::write_atomic(p, profile.to_csv().as_bytes())?;
            println!("wrote {}", p.display());
        }
        None => print!("{}", profile.to_csv()),
    }
    println!("max overestimation ratio {:.4}", profile.max_overestimation());
    println!("geodesic strictly decreasing: {}", profile.geodesic_strictly_decreasing());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    solver: &str,
    chain: &str,
    target: &str,
    q0: Option<&str>,
    trace: bool,
    config: Option<&Path>,
    model: Option<&Path>,
) -> Result<()> {
    let kind: SolverKind = solver.parse()?;
    let chain = KinematicChain::by_name(chain)?;
    let t = parse_floats(target)?;
    if t.len() != 3 {
        bail!("--target needs three comma-separated values");
    }
    let target = TaskPosition::new(t[0], t[1], t[2]);
    let q0 = match q0 {
        Some(s) => DVector::from_vec(parse_floats(s)?),
        None => chain.neutral(),
    };
    let file = load_config(config)?;
    let mut cfg = file.solver_config(kind)?;
    cfg.record_trace = trace;
    let model = if kind.needs_model() {
        Some(load_model(model.unwrap_or(Path::new(DEFAULT_MODEL)))?)
    } else {
        None
    };
    let suite = SolverSuite::new(&[kind], &ConfigFile::default(), model)?;
    let entry = benchmark::SolverEntry { kind, cfg };
    let res = suite.solve(&entry, &chain, &target, &q0)?;
    let mut json = serde_json::to_value(&res)?;
    json["q_final"] = serde_json::to_value(res.q_final.as_slice())?;
    json["solver"] = serde_json::Value::from(kind.id());
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Bench { panel, solvers, chain, seed, n, out, config, model } => {
            cmd_bench(&panel, &solvers, &chain, seed, n, &out, config.as_deref(), model.as_deref())
        }
        Command::TrainMlp { chain, n, seed, epochs, hidden, batch, loss, out, curve } => {
            cmd_train(&chain, n, seed, epochs, &hidden, batch, &loss, &out, curve.as_deref())
        }
        Command::InterpDemo { chain, steps, out } => cmd_interp(&chain, steps, out.as_deref()),
        Command::Solve { solver, chain, target, q0, trace, config, model } => {
            cmd_solve(&solver, &chain, &target, q0.as_deref(), trace, config.as_deref(), model.as_deref())
        }
    }
}

mod checks;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nnmd::domain::MessageKind;
use nnmd::gro::write_gro;
use nnmd::nnpot::{ModelSpec, NnModel};
use nnmd::pipeline::{
    bench_scaling, build_system, emit_phase_breakdown, log_csv, parse_config, run_pipeline, trajectory_gro,
    BenchOptions, ModelVariant, RunConfig, Stage, DEFAULT_SIZES,
};
use nnmd::{Error, Result};

use checks::{check_classical_forces, check_domain, check_model_forces, CheckLine, DdOptions};

#[derive(Parser)]
#[command(name = "nnmd", version, about = "Desk-scale MD with pluggable neural-network potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a canonical run configuration (and optionally the initial system)
    Genconf(GenconfArgs),
    /// Energy-minimise the configured system
    Minimize(MinimizeArgs),
    /// Run the EM → NVT → NPT → MD pipeline
    Run(RunArgs),
    /// Throughput and counter scaling over system sizes
    BenchScaling(BenchArgs),
    /// Finite-difference force checks for the NN model and classical terms
    CheckForces(CheckForcesArgs),
    /// Domain-decomposition oracle suite
    CheckDd(CheckDdArgs),
}

#[derive(Args)]
struct GenconfArgs {
    /// Use the full reference step counts instead of desk-scale ones
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    n_atoms: Option<usize>,
    /// Config output path (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the initial system as .gro
    #[arg(long)]
    gro: Option<PathBuf>,
}

#[derive(Args)]
struct MinimizeArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Minimised structure
    #[arg(short, long, default_value = "minimized.gro")]
    output: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    config: PathBuf,
    #[arg(short, long, default_value = "nnmd-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Template config; defaults apply when omitted
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES.to_vec())]
    sizes: Vec<usize>,
    /// MD steps per cell
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(short, long, default_value = "nnmd-bench")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CheckForcesArgs {
    /// Model file; random models of every family are checked when omitted
    #[arg(short, long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    configs: usize,
    #[arg(long, default_value_t = 24)]
    atoms: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Skip the classical force-field checks
    #[arg(long)]
    nn_only: bool,
}

#[derive(Args)]
struct CheckDdArgs {
    #[arg(long, default_value_t = 1600)]
    n_atoms: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 4, 8])]
    ranks: Vec<usize>,
    #[arg(long, default_value_t = 0.45)]
    rc_model: f64,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config { key: path.display().to_string(), msg: format!("cannot read: {e}") })?;
    parse_config(&text)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn genconf(args: GenconfArgs) -> Result<()> {
    let mut cfg = if args.paper_scale { RunConfig::paper_scale() } else { RunConfig::desk_scale() };
    if let Some(n) = args.n_atoms {
        cfg.system.n_atoms = n;
    }
    cfg.validate()?;
    let text = cfg.to_canonical();
    match &args.output {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = &args.gro {
        let sys = build_system(&cfg)?;
        write(path, &write_gro(&sys.state, &sys.atoms, "nnmd synthetic system", true))?;
    }
    Ok(())
}

fn minimize(args: MinimizeArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    cfg.nvt.steps = 0;
    cfg.npt.steps = 0;
    cfg.md.steps = 0;
    cfg.nn.stages.retain(|s| *s == Stage::Em);
    let sys = build_system(&cfg)?;
    let out = run_pipeline(&cfg, &sys)?;
    match &out.em_trace {
        Some(t) => println!(
            "em: {} iterations, {} accepted, energy {:.4} → {:.4} kJ/mol, max force {:.3}{}",
            t.steps.len() - 1,
            t.accepted,
            t.steps[0].energy,
            t.final_energy,
            t.final_max_force,
            if t.converged { " (converged)" } else { "" }
        ),
        None => println!("em: line search stalled; wrote the lowest-energy configuration"),
    }
    write(&args.output, &write_gro(&out.state, &sys.atoms, "nnmd minimized", false))
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let sys = build_system(&cfg)?;
    let out = run_pipeline(&cfg, &sys)?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir)?;
    write(&dir.join("config.cfg"), &cfg.to_canonical())?;
    write(&dir.join("energy.csv"), &log_csv(&out.log))?;
    write(&dir.join("traj.gro"), &trajectory_gro(&out.trajectory, &sys.atoms))?;
    write(&dir.join("final.gro"), &write_gro(&out.state, &sys.atoms, "nnmd final", true))?;
    write(&dir.join("metrics.csv"), &out.metrics.to_csv())?;
    let mut msgs = String::from("kind,bytes\n");
    for (kind, bytes) in MessageKind::ALL.iter().zip(out.metrics.message_bytes) {
        msgs.push_str(&format!("{},{bytes}\n", kind.as_str()));
    }
    write(&dir.join("messages.csv"), &msgs)?;
    let breakdown = emit_phase_breakdown(&out.metrics);
    write(&dir.join("phases.txt"), &breakdown.to_string())?;
    println!("{breakdown}");
    println!("throughput {:.3} ns/day; outputs in {}", out.metrics.ns_per_day(), dir.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let template = match &args.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let opts = BenchOptions {
        sizes: args.sizes,
        variants: ModelVariant::defaults(template.nn.rc_model),
        steps: args.steps,
    };
    let report = bench_scaling(&template, &opts)?;
    fs::create_dir_all(&args.out_dir)?;
    write(&args.out_dir.join("scaling.csv"), &report.cells_csv())?;
    write(&args.out_dir.join("slopes.csv"), &report.fits_csv())?;
    print!("{}", report.cells_csv());
    print!("{}", report.fits_csv());
    Ok(())
}

fn report(lines: &[CheckLine]) -> Result<()> {
    for l in lines {
        println!("{}", l.render());
    }
    let failed = lines.iter().filter(|l| !l.passed()).count();
    if failed > 0 {
        return Err(Error::Decomposition(format!("{failed} of {} checks failed", lines.len())));
    }
    Ok(())
}

fn check_forces(args: CheckForcesArgs) -> Result<()> {
    let models = match &args.model {
        Some(p) => vec![NnModel::load(p)?],
        None => {
            let mut v = vec![NnModel::new(&ModelSpec::embed_fit(0.6, 2, args.seed))?];
            for depth in 1..=3 {
                v.push(NnModel::new(&ModelSpec::message_passing(0.6, 2, depth, args.seed))?);
            }
            v
        }
    };
    let mut lines = Vec::new();
    for m in &models {
        lines.push(check_model_forces(m, args.configs, args.atoms, args.seed)?);
    }
    if !args.nn_only {
        lines.extend(check_classical_forces(args.configs.min(5), args.seed)?);
    }
    report(&lines)
}

fn check_dd(args: CheckDdArgs) -> Result<()> {
    let lines = check_domain(&DdOptions {
        n_atoms: args.n_atoms,
        ranks: args.ranks,
        rc_model: args.rc_model,
        depth: args.depth,
        seed: args.seed,
    })?;
    report(&lines)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Genconf(a) => genconf(a),
        Command::Minimize(a) => minimize(a),
        Command::Run(a) => run(a),
        Command::BenchScaling(a) => bench(a),
        Command::CheckForces(a) => check_forces(a),
        Command::CheckDd(a) => check_dd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

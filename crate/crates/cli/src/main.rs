use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsdp_core::config::ConfigFile;
use tsdp_core::policy::{gaussian_argmax_probabilities, rnm_heterogeneous};
use tsdp_core::privacy::{self, log_grid, privacy_curve, AccountantQuery, GdpBudget, GdpPath, PrivacyMethod};
use tsdp_core::report::{self, fmt_num};
use tsdp_core::sim::run_experiment;
use tsdp_core::Error as CoreError;

#[derive(Parser)]
#[command(name = "tsdp", version, about = "Private Thompson Sampling simulations and privacy accounting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a regret experiment grid from a config file.
    Simulate(SimulateArgs),
    /// Tabulate epsilon as a function of delta.
    PrivacyCurve(CurveArgs),
    /// Solve for the variance multiplier c meeting a GDP budget.
    SolveParams(SolveArgs),
    /// Empirical vs analytic selection frequencies of Gaussian report-noisy-max.
    RnmDemo(RnmArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Gdp,
    Rdp,
    Advdp,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum GdpPathArg {
    /// Original bound for b=0, c=1; modified bound otherwise.
    Auto,
    Original,
    Modified,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long = "T")]
    horizon: Option<u64>,
    #[arg(long = "N")]
    num_arms: Option<usize>,
    #[arg(long)]
    b: Option<u64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    delta_min: Option<f64>,
    #[arg(long)]
    delta_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    gdp_path: GdpPathArg,
    /// Read defaults from the `privacy` section of a config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    eta: f64,
    #[arg(long = "T")]
    horizon: u64,
    #[arg(long = "N")]
    num_arms: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    b: Vec<u64>,
}

#[derive(Args)]
struct RnmArgs {
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    values: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    sigmas: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::PrivacyCurve(args) => curve(args),
        Command::SolveParams(args) => solve(args),
        Command::RnmDemo(args) => rnm_demo(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Creates `dir` and refuses to clobber any of `names` unless forced.
fn prepare_outputs(dir: &Path, names: &[String], force: bool) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    if !force {
        if let Some(existing) = names.iter().map(|n| dir.join(n)).find(|p| p.exists()) {
            bail!("{} already exists (pass --force to overwrite)", existing.display());
        }
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn unix_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

const SIM_OUTPUTS: [&str; 4] = ["traces.csv", "mean_traces.csv", "summary.csv", "run_metadata.json"];

fn simulate(args: SimulateArgs) -> Result<()> {
    let file = ConfigFile::load(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let mut exp = file.experiment()?;
    if let Some(seed) = args.seed {
        exp.seed = seed;
    }
    if let Some(runs) = args.runs {
        exp.runs = runs;
    }
    exp.workers = args.workers;
    let names: Vec<String> = SIM_OUTPUTS.iter().map(|s| s.to_string()).collect();
    prepare_outputs(&args.out, &names, args.force)?;

    let result = run_experiment(&exp)?;
    for s in &result.skipped {
        eprintln!("warning: skipping `{}`: {}", s.label, s.reason);
    }
    if result.summaries.is_empty() {
        bail!("every configuration was infeasible");
    }

    report::write_traces(create(&args.out, "traces.csv")?, &result)?;
    report::write_mean_traces(create(&args.out, "mean_traces.csv")?, &result.mean_traces)?;
    report::write_summaries(create(&args.out, "summary.csv")?, &result.summaries)?;
    let metadata = serde_json::json!({
        "created_unix": unix_time(),
        "config": args.config.display().to_string(),
        "horizon": exp.horizon,
        "runs": exp.runs,
        "seed": exp.seed,
        "workers": exp.workers,
        "seed_derivation": "splitmix64(splitmix64(splitmix64(seed) ^ config_index) ^ run_index)",
        "summaries": result.summaries,
        "skipped": result.skipped,
    });
    let mut meta = create(&args.out, "run_metadata.json")?;
    serde_json::to_writer_pretty(&mut meta, &metadata)?;
    meta.write_all(b"\n")?;
    meta.flush()?;

    println!(
        "{:<24} {:>7} {:>12} {:>10} {:>14} {:>10} {:>14} {:>12}",
        "config", "b", "c", "eta", "mean_regret", "stderr", "pseudo_regret", "envelope"
    );
    for s in &result.summaries {
        let p = &s.params;
        println!(
            "{:<24} {:>7} {:>12.4} {:>10.4} {:>14.2} {:>10.2} {:>14.2} {:>12.1}{}",
            p.label,
            p.b,
            p.c,
            p.eta,
            s.mean_final_regret,
            s.stderr_final_regret,
            s.mean_final_pseudo_regret,
            s.envelope.bound,
            if s.envelope.applicable { "" } else { " (n/a)" }
        );
        if let Some(note) = &p.note {
            eprintln!("note: `{}`: {note}", p.label);
        }
    }
    Ok(())
}

fn curve(args: CurveArgs) -> Result<()> {
    let section = match &args.config {
        Some(path) => ConfigFile::load(path)?
            .privacy
            .map(Some)
            .ok_or_else(|| anyhow!("{} has no `privacy` section", path.display()))?,
        None => None,
    };
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
        flag.or(from).ok_or_else(|| anyhow!("missing --{name}"))
    };
    let horizon = args
        .horizon
        .or(section.as_ref().and_then(|s| s.horizon))
        .ok_or_else(|| anyhow!("missing --T"))?;
    let num_arms = args
        .num_arms
        .or(section.as_ref().and_then(|s| s.num_arms))
        .ok_or_else(|| anyhow!("missing --N"))?;
    let b = args.b.or(section.as_ref().map(|s| s.b)).unwrap_or(0);
    let c = args.c.or(section.as_ref().map(|s| s.c)).unwrap_or(1.0);
    let delta_min = pick(args.delta_min, section.as_ref().map(|s| s.delta_min), "delta-min")?;
    let delta_max = pick(args.delta_max, section.as_ref().map(|s| s.delta_max), "delta-max")?;
    let points = args
        .points
        .or(section.as_ref().map(|s| s.points))
        .ok_or_else(|| anyhow!("missing --points"))?;
    let methods: Vec<PrivacyMethod> = match args.method {
        Some(MethodArg::Gdp) => vec![PrivacyMethod::Gdp],
        Some(MethodArg::Rdp) => vec![PrivacyMethod::Rdp],
        Some(MethodArg::Advdp) => vec![PrivacyMethod::AdvDp],
        Some(MethodArg::All) => PrivacyMethod::ALL.to_vec(),
        None => section
            .as_ref()
            .map(|s| s.methods.clone())
            .ok_or_else(|| anyhow!("missing --method"))?,
    };
    let path = match args.gdp_path {
        GdpPathArg::Auto => GdpPath::for_params(b, c),
        GdpPathArg::Original => GdpPath::Original,
        GdpPathArg::Modified => GdpPath::Modified,
    };
    let deltas = log_grid(delta_min, delta_max, points)?;

    let mut names: Vec<String> = methods
        .iter()
        .map(|m| format!("privacy_{}.json", m.as_str()))
        .collect();
    names.push("privacy_curves.csv".into());
    prepare_outputs(&args.out, &names, args.force)?;

    let mut curves = Vec::with_capacity(methods.len());
    for &method in &methods {
        let query = AccountantQuery {
            horizon,
            num_arms,
            prepulls: b,
            variance_scale: c,
            method,
        };
        let curve = privacy_curve(&query, &deltas, path)?;
        let missing = curve.points.iter().filter(|p| p.epsilon.is_none()).count();
        if missing > 0 {
            eprintln!("warning: {method}: no guarantee at {missing} delta value(s)");
        }
        let mut w = create(&args.out, &format!("privacy_{}.json", method.as_str()))?;
        report::write_curve_json(&mut w, &curve)?;
        w.flush()?;
        curves.push(curve);
    }
    let mut w = create(&args.out, "privacy_curves.csv")?;
    report::write_curves_csv(&mut w, &curves)?;
    w.flush()?;

    print!("{:>14}", "delta");
    for c in &curves {
        print!(" {:>16}", c.method.as_str());
    }
    println!();
    for (i, delta) in deltas.iter().enumerate() {
        print!("{:>14}", fmt_num(*delta));
        for c in &curves {
            let e = c.points[i].epsilon.map(fmt_num).unwrap_or_else(|| "-".into());
            print!(" {e:>16}");
        }
        println!();
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let eta = GdpBudget::new(args.eta)?;
    println!("b,c,eta,feasible,reason");
    for b in args.b {
        match privacy::solve_bc(eta, args.horizon, b, Some(args.num_arms)) {
            Ok(c) => println!("{b},{},{},true,", fmt_num(c), fmt_num(args.eta)),
            Err(CoreError::BudgetExceededByPrepulls { c }) => println!(
                "{b},1,{},true,pre-pulls alone meet the budget (solved c={})",
                fmt_num(privacy::gdp_total(args.horizon, b, 1.0)?.eta()),
                fmt_num(c)
            ),
            Err(e) => println!("{b},,,false,{e}"),
        }
    }
    Ok(())
}

fn rnm_demo(args: RnmArgs) -> Result<()> {
    if args.trials == 0 {
        bail!("--trials must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut counts = vec![0u64; args.values.len()];
    for _ in 0..args.trials {
        counts[rnm_heterogeneous(&args.values, &args.sigmas, &mut rng)?] += 1;
    }
    let analytic = gaussian_argmax_probabilities(&args.values, &args.sigmas);
    println!("index,value,sigma,frequency,analytic");
    for (i, count) in counts.iter().enumerate() {
        println!(
            "{},{},{},{},{}",
            i + 1,
            fmt_num(args.values[i]),
            fmt_num(args.sigmas[i]),
            fmt_num(*count as f64 / args.trials as f64),
            fmt_num(analytic[i])
        );
    }
    Ok(())
}

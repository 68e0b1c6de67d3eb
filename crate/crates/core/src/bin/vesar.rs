use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vesar::estimands::{
    infrequent_observed_component, infrequent_observed_mu, infrequent_target_mu, invert_target_to_nu,
    sampling_fraction, symptom_prompted_actual_mu, symptom_prompted_target_mu, DurationModelParams,
    SymptomModelParams,
};
use vesar::harness::config::{build_pipeline, KvConfig};
use vesar::harness::sweep::{figure_1a_grid, figure_1b_grid, figure_a1_grid};
use vesar::harness::validate::validation_suite;
use vesar::harness::{
    format_g12, run_scenario, sweep_figure_1a, sweep_figure_1b, sweep_figure_a1, write_csv, ResultRow,
    ScenarioConfig, SweepMc,
};

#[derive(Parser)]
#[command(name = "vesar", version, about = "Bias in VE against the secondary attack rate under imperfect testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one closed-form estimand.
    Analytic(AnalyticArgs),
    /// Run one scenario file and write CSV.
    Simulate(RunArgs),
    /// Reproduce a figure's sweep as CSV.
    Sweep {
        #[arg(long)]
        figure: Figure,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check every closed form against its simulation oracle.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Units per arm.
    #[arg(long)]
    units: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    #[value(name = "1a")]
    Fig1a,
    #[value(name = "1b")]
    Fig1b,
    #[value(name = "a1")]
    A1,
}

#[derive(Clone, Copy, ValueEnum)]
enum Formula {
    TargetMu,
    ActualMu,
    InvertNu,
    InfrequentTargetMu,
    SamplingFraction,
    ObservedComponent,
    InfrequentObservedMu,
}

#[derive(Args)]
struct AnalyticArgs {
    formula: Formula,
    #[arg(long, default_value_t = 0.2)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 0.6)]
    nu: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.3)]
    tau: f64,
    #[arg(long)]
    target_ve: Option<f64>,
    #[arg(long, default_value_t = 14.0)]
    rho0: f64,
    #[arg(long, default_value_t = 8.0)]
    rho1: f64,
    #[arg(long, default_value_t = 7.0)]
    c: f64,
    #[arg(long, default_value_t = 0.7)]
    nu_daily: f64,
    #[arg(long, default_value_t = 0.01)]
    tau0: f64,
    /// Testing interval in days.
    #[arg(long)]
    k: Option<f64>,
    /// Mean duration for a single arm (sampling-fraction, observed-component).
    #[arg(long)]
    rho_v: Option<f64>,
    #[arg(long)]
    tau_v: Option<f64>,
}

type CliResult<T> = Result<T, String>;

fn need(x: Option<f64>, flag: &str) -> CliResult<f64> {
    x.ok_or_else(|| format!("--{flag} is required for this formula"))
}

fn analytic(a: &AnalyticArgs) -> CliResult<()> {
    let symptom = || SymptomModelParams::new(a.lambda, a.delta, a.nu, a.rho, a.tau);
    let duration = || DurationModelParams::new(a.rho0, a.rho1, a.c, a.nu_daily, a.tau0);
    let print_mu = |mu: f64| {
        println!("mu = {}", format_g12(mu));
        println!("ve = {}", format_g12(1.0 - mu));
    };
    let e = |e: vesar::Error| e.to_string();
    match a.formula {
        Formula::TargetMu => print_mu(symptom_prompted_target_mu(&symptom().map_err(e)?).map_err(e)?),
        Formula::ActualMu => print_mu(symptom_prompted_actual_mu(&symptom().map_err(e)?)),
        Formula::InvertNu => {
            let nu = invert_target_to_nu(need(a.target_ve, "target-ve")?, a.lambda, a.delta, a.rho).map_err(e)?;
            println!("nu = {}", format_g12(nu));
        }
        Formula::InfrequentTargetMu => print_mu(infrequent_target_mu(&duration().map_err(e)?)),
        Formula::SamplingFraction => {
            let s = sampling_fraction(need(a.k, "k")?, need(a.rho_v, "rho-v")?, a.c).map_err(e)?;
            println!("sampling_fraction = {}", format_g12(s));
        }
        Formula::ObservedComponent => {
            let v = infrequent_observed_component(
                need(a.k, "k")?,
                need(a.rho_v, "rho-v")?,
                a.c,
                need(a.tau_v, "tau-v")?,
            )
            .map_err(e)?;
            println!("observed_component = {}", format_g12(v));
        }
        Formula::InfrequentObservedMu => {
            print_mu(infrequent_observed_mu(need(a.k, "k")?, &duration().map_err(e)?).map_err(e)?)
        }
    }
    Ok(())
}

fn emit(rows: &[ResultRow], out: Option<&PathBuf>) -> CliResult<()> {
    let err = |e: io::Error| e.to_string();
    match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            write_csv(rows, BufWriter::new(f)).map_err(err)
        }
        None => match write_csv(rows, io::stdout().lock()) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(err),
        },
    }
}

fn simulate(run: &RunArgs) -> CliResult<()> {
    let path = run.config.as_ref().ok_or("--config is required")?;
    let mut cfg = ScenarioConfig::from_file(path).map_err(|e| e.to_string())?;
    if let Some(seed) = run.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(units) = run.units {
        cfg = cfg.with_units(units);
    }
    if run.threads.is_some() {
        cfg = cfg.with_threads(run.threads);
    }
    let rows = run_scenario(&cfg).map_err(|e| e.to_string())?;
    emit(&rows, run.out.as_ref().or(cfg.output.as_ref()))
}

fn sweep(figure: Figure, run: &RunArgs) -> CliResult<()> {
    let kv = match &run.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            KvConfig::parse(&text).map_err(|e| e.to_string())?
        }
        None => KvConfig::default(),
    };
    let base = build_pipeline(&kv).map_err(|e| e.to_string())?;
    let units = run.units.unwrap_or(0);
    let seed = run.seed.or_else(|| kv.get("scenario.seed").and_then(|s| s.parse().ok()));
    let mc = match (units, seed) {
        (0, _) => None,
        (_, None) => return Err("--seed (or scenario.seed) is required when --units > 0".into()),
        (n, Some(seed)) => Some(SweepMc {
            threads: run.threads,
            ..SweepMc::new(n, seed)
        }),
    };
    let rows = match figure {
        Figure::Fig1a => {
            let (targets, deltas) = figure_1a_grid();
            sweep_figure_1a(&base.unit.symptom, &targets, &deltas, mc.as_ref())
        }
        Figure::Fig1b => {
            let (ks, targets) = figure_1b_grid();
            sweep_figure_1b(&base.unit.duration, &ks, &targets, mc.as_ref())
        }
        Figure::A1 => {
            let (ks, targets) = figure_a1_grid();
            sweep_figure_a1(&base.unit.duration, &ks, &targets, mc.as_ref())
        }
    }
    .map_err(|e| e.to_string())?;
    emit(&rows, run.out.as_ref())
}

fn validate(run: &RunArgs) -> CliResult<bool> {
    let checks = validation_suite(run.units.unwrap_or(200_000), run.seed.unwrap_or(1), run.threads)
        .map_err(|e| e.to_string())?;
    let mut out = io::stdout().lock();
    for c in &checks {
        writeln!(
            out,
            "{} {}: expected {} simulated {} (se {})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            format_g12(c.expected),
            format_g12(c.simulated),
            format_g12(c.se)
        )
        .map_err(|e| e.to_string())?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analytic(a) => analytic(a).map(|_| true),
        Command::Simulate(run) => simulate(run).map(|_| true),
        Command::Sweep { figure, run } => sweep(*figure, run).map(|_| true),
        Command::Validate(run) => validate(run),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

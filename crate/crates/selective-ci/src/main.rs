use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use selective_ci::config::{ExperimentKind, RunConfig};
use selective_ci::data::read_groups;
use selective_ci::results::Table;
use selective_ci::simulation::{
    coverage_width_experiment, estimator_percentiles, marginal_coverage_experiment, power_curve, rep_rng,
};
use selective_ci::theory_check::{self, CheckOptions};
use selective_ci::{plot, Procedure};
use selective_ci_core::estimators::{gaussian_eb_estimate, gaussian_eb_fit};
use selective_ci_core::Level;

#[derive(Parser)]
#[command(
    name = "selective-ci",
    version,
    about = "Confidence intervals for the mean of a selected group"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Intervals for the selected group in a CSV of group estimates.
    Interval {
        /// CSV with columns group,value,scale[,selected].
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Select the group with the largest value when none is marked.
        #[arg(long)]
        select_max: bool,
        /// Comma-separated procedure names.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "unadjusted,bonferroni,hybrid,conditional,gaussian-eb,np-eb"
        )]
        procedures: Vec<String>,
    },
    /// Run a simulation described by a TOML file or a bundled name.
    Simulate {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, env = "SELECTIVE_CI_THREADS")]
        threads: Option<usize>,
        /// At most 100 replications per cell.
        #[arg(long)]
        fast: bool,
    },
    /// Numerical checks of the two-group lemmas.
    TheoryCheck {
        #[arg(long)]
        fast: bool,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Gaussian empirical Bayes fit for the unselected groups.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        select_max: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Interval {
            data,
            alpha,
            seed,
            select_max,
            procedures,
        } => interval(&data, alpha, seed, select_max, &procedures),
        Command::Simulate {
            config,
            seed,
            alpha,
            out,
            threads,
            fast,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
            }
            let mut cfg = RunConfig::load(&config)?;
            cfg.apply_overrides(seed, alpha, fast)?;
            simulate(&cfg, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::TheoryCheck { fast, delta, seed } => {
            let report = theory_check::run(&CheckOptions {
                fast,
                delta,
                seed,
                ..CheckOptions::default()
            })?;
            print!("{}", report.render());
            Ok(if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Fit { data, select_max } => fit(&data, select_max),
    }
}

fn load_selection(path: &Path, select_max: bool) -> Result<selective_ci::data::Selection> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let groups = read_groups(file).with_context(|| format!("reading {}", path.display()))?;
    Ok(groups.selection(select_max)?)
}

fn interval(path: &Path, alpha: f64, seed: u64, select_max: bool, names: &[String]) -> Result<ExitCode> {
    let procs = names
        .iter()
        .map(|n| n.trim().parse::<Procedure>())
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(p) = procs.iter().find(|p| p.needs_truth()) {
        bail!("{} needs the true eta and is only available in simulations", p.name());
    }
    let level = Level::new(alpha)?;
    let sel = load_selection(path, select_max)?;
    println!(
        "selected group: {} (y = {}, sigma = {}, {} other groups)",
        sel.name,
        sel.datum.y,
        sel.sigma,
        sel.others.len()
    );
    println!("{:<16} {:>12} {:>12} {:>12}", "procedure", "lower", "upper", "width");
    let mut failed = false;
    for p in &procs {
        let mut rng = rep_rng(seed, 0, 0, p.tag());
        match p.interval(&sel.datum, &sel.tau, sel.sigma, level, None, &mut rng) {
            Ok(ci) => println!(
                "{:<16} {:>12.4} {:>12.4} {:>12.4}",
                p.name(),
                ci.lower,
                ci.upper,
                ci.width()
            ),
            Err(e) => {
                failed = true;
                println!("{:<16} failed: {e}", p.name());
            }
        }
    }
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn fit(path: &Path, select_max: bool) -> Result<ExitCode> {
    let sel = load_selection(path, select_max)?;
    let h = gaussian_eb_fit(&sel.datum.x, sel.datum.y, &sel.tau)?;
    let eta = gaussian_eb_estimate(&sel.datum.x, h, &sel.tau)?;
    println!("selected group: {} (y = {})", sel.name, sel.datum.y);
    println!("m = {:.6}", h.m);
    println!("v = {:.6}", h.v);
    println!(
        "{:<16} {:>12} {:>10} {:>10} {:>12}",
        "group", "x", "tau", "rho", "eta_hat"
    );
    for (j, name) in sel.others.iter().enumerate() {
        let t = sel.tau[j];
        println!(
            "{:<16} {:>12.4} {:>10.4} {:>10.4} {:>12.4}",
            name,
            sel.datum.x[j],
            t,
            h.rho(t),
            eta[j]
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn write_outputs<T: serde::Serialize + serde::de::DeserializeOwned>(
    table: &Table<T>,
    svg: Option<String>,
    out: &Path,
    id: &str,
) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let csv_path = out.join(format!("{id}.csv"));
    let file = File::create(&csv_path).with_context(|| format!("cannot create {}", csv_path.display()))?;
    table.write_csv(BufWriter::new(file))?;
    eprintln!("wrote {}", csv_path.display());
    if let Some(svg) = svg {
        let svg_path = out.join(format!("{id}.svg"));
        fs::write(&svg_path, svg).with_context(|| format!("cannot write {}", svg_path.display()))?;
        eprintln!("wrote {}", svg_path.display());
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let sc = &cfg.scenario;
    let procs = cfg.procedures();
    let svg = cfg.output.svg;
    match cfg.experiment.kind {
        ExperimentKind::Coverage => {
            let r = coverage_width_experiment(sc, &procs)?;
            write_outputs(&r, svg.then(|| plot::coverage_svg(&r, sc.alpha)), out, &sc.id)?;
            r.check_errors()?;
        }
        ExperimentKind::Marginal => {
            let means = selective_ci::resolve_eta(&sc.eta, sc.p + 1)?;
            let scales = vec![sc.sigma; sc.p + 1];
            let m = marginal_coverage_experiment(&sc.id, &procs, &means, &scales, sc.alpha, sc.n_rep, sc.seed)?;
            log::info!("selection counts: {:?}", m.selection_counts);
            write_outputs(
                &m.result,
                svg.then(|| plot::coverage_svg(&m.result, sc.alpha)),
                out,
                &sc.id,
            )?;
            m.result.check_errors()?;
        }
        ExperimentKind::Power => {
            let r = power_curve(sc, &procs, &cfg.experiment.t_values)?;
            write_outputs(&r, svg.then(|| plot::power_svg(&r, sc.alpha)), out, &sc.id)?;
            r.check_errors()?;
        }
        ExperimentKind::Percentiles => {
            let r = estimator_percentiles(sc, &procs, cfg.experiment.theta0)?;
            write_outputs(&r, svg.then(|| plot::percentile_svg(&r)), out, &sc.id)?;
            r.check_errors()?;
        }
    }
    Ok(())
}

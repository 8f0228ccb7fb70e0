mod args;

use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use levymarket::evt::{load_or_build_reference, DEFAULT_TW_BUDGET};
use levymarket::ingest::{self, Format};
use levymarket::levy_walk::{generate_ensemble, SeriesKind, WalkConfig};
use levymarket::pipeline::{self, derive_seeds, Analysis, RunConfig, Source};

use args::{AnalyzeArgs, Cli, Command, CompareArgs, Kind, SimulateArgs, SourceArg, TwArgs};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn validation(e: impl Into<anyhow::Error>) -> Self {
        Failure::Validation(e.into())
    }

    fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }

    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Compare(a) => compare(a),
        Command::TwReference(a) => tw_reference(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let source = match a.kind {
        Kind::R => Source::SimulateR,
        Kind::L => Source::SimulateL,
    };
    let run = RunConfig { source, seed: a.seed, n_panels: a.panel + 1, ..Default::default() };
    let seed = derive_seeds(&run).panels[a.panel];
    let walk = WalkConfig::new(a.alpha, 1.0, a.n_steps, seed).map_err(Failure::validation)?;
    let kind = match a.kind {
        Kind::R => SeriesKind::DistanceFromOrigin,
        Kind::L => SeriesKind::CumulativeLength,
    };
    let panel = generate_ensemble(&walk, a.n_walkers, kind).map_err(Failure::validation)?;
    ingest::export(&panel, &a.output, Format::Csv)
        .with_context(|| format!("writing {}", a.output.display()))
        .map_err(Failure::runtime)?;
    log::info!("wrote {} x {} panel to {}", panel.n_times(), panel.n_assets(), a.output.display());
    Ok(())
}

fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Config file values overridden by any flag given on the command line.
fn build_config(a: AnalyzeArgs) -> anyhow::Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    match (a.source, a.input) {
        (Some(SourceArg::SimulateR), _) => c.source = Source::SimulateR,
        (Some(SourceArg::SimulateL), _) => c.source = Source::SimulateL,
        (Some(SourceArg::Empirical), Some(p)) | (None, Some(p)) => c.source = Source::Empirical(p),
        (Some(SourceArg::Empirical), None) => match c.source {
            Source::Empirical(_) => {}
            _ => anyhow::bail!("--source empirical needs --input <CSV>"),
        },
        (None, None) => {}
    }
    macro_rules! set {
        ($($flag:ident => $($field:ident).+),* $(,)?) => {
            $(if let Some(v) = a.$flag { c.$($field).+ = v; })*
        };
    }
    set!(
        alpha => alpha,
        n_steps => n_steps,
        n_walkers => n_walkers,
        n_panels => n_panels,
        t_grid => t_grid,
        evt_t => evt_t,
        seed => seed,
        output_dir => output_dir,
        max_missing_fraction => cleaning.max_missing_fraction,
        rescale_exponent => rescale_exponent,
        tw_matrices => tw.n_matrices,
        tw_size => tw.matrix_size,
    );
    if let Some(v) = a.overlap {
        c.overlap = Some(v);
    }
    if let Some(v) = a.max_pairs {
        c.max_pairs = Some(v);
    }
    if let Some(v) = a.tw_cache {
        c.tw.cache_dir = Some(v);
    }
    if let Some(list) = a.analyses {
        c.analyses = list.iter().map(|s| s.parse::<Analysis>()).collect::<Result<_, _>>()?;
    }
    Ok(c)
}

fn analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let config = build_config(a).map_err(Failure::validation)?;
    match pipeline::run(&config) {
        Ok(report) => {
            log::info!("report written to {}", config.output_dir.join("report.json").display());
            if let Some(g) = &report.geometry {
                log::info!("d_f = {:.3} +/- {:.3}", g.fractal_dimension.value, g.fractal_dimension.stderr);
            }
            Ok(())
        }
        Err(e) if e.is_validation() => Err(Failure::validation(e)),
        Err(e) => Err(Failure::runtime(e)),
    }
}

fn compare(a: CompareArgs) -> Result<(), Failure> {
    let cmp = pipeline::compare_files(&a.report_a, &a.report_b).map_err(|e| match e {
        levymarket::Error::DisjointGrids | levymarket::Error::InvalidParameter(_) => Failure::validation(e),
        other => Failure::runtime(other),
    })?;
    match &a.output {
        Some(p) => ingest::write_json(&cmp, p).map_err(Failure::runtime)?,
        None => println!("{}", serde_json::to_string_pretty(&cmp).map_err(Failure::runtime)?),
    }
    Ok(())
}

fn tw_reference(a: TwArgs) -> Result<(), Failure> {
    let budget = a.budget.unwrap_or(DEFAULT_TW_BUDGET);
    let r = load_or_build_reference(a.cache_dir.as_deref(), a.n_matrices, a.size, a.seed, budget).map_err(|e| match e {
        levymarket::Error::InvalidParameter(_) | levymarket::Error::BudgetExceeded { .. } => Failure::validation(e),
        other => Failure::runtime(other),
    })?;
    let n = r.samples.len() as f64;
    let mean = r.mean();
    let sd = (r.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    println!("matrices={} size={} seed={} mean={mean:.4} sd={sd:.4}", r.n_matrices, r.matrix_size, r.seed);
    Ok(())
}

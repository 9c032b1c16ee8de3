use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use decaylab_cli::compare::{compare_reports, load as load_report};
use decaylab_cli::config::{Check, ExperimentConfig};
use decaylab_cli::report::{summary, write_run, RunReport};
use decaylab_cli::runner::{aggregate, exit_code, run_experiment, Setup};
use decaylab_cli::scenarios;
use decaylab_core::commutator::extract_k;
use decaylab_core::conjugate::{build_conjugate, build_ut};
use decaylab_core::forge::{spectral_projection, write_binary, write_csv};
use decaylab_core::Role;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "decaylab", version, about = "Finite-grid checks of commutator-based decay estimates")]
struct Cli {
    /// Worker threads for sample and scenario parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Source {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: Vec<PathBuf>,
    /// Bundled scenario name.
    #[arg(long)]
    scenario: Vec<String>,
    /// Overrides the seed of every config.
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn configs(&self) -> anyhow::Result<Vec<ExperimentConfig>> {
        let mut out = Vec::new();
        for p in &self.config {
            out.push(ExperimentConfig::load(p)?);
        }
        for s in &self.scenario {
            out.push(scenarios::load(s)?);
        }
        if out.is_empty() {
            bail!("give at least one --config or --scenario");
        }
        if let Some(seed) = self.seed {
            for c in &mut out {
                c.seed = seed;
            }
        }
        Ok(out)
    }

    fn single(&self) -> anyhow::Result<ExperimentConfig> {
        let mut all = self.configs()?;
        if all.len() != 1 {
            bail!("this command takes exactly one config or scenario");
        }
        Ok(all.remove(0))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorName {
    H,
    A,
    K,
    P,
    B,
    ATilde,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Binary,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run configs or bundled scenarios and write reports.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output root; run directories are named by config hash and timestamp.
        #[arg(long, env = "DECAYLAB_OUT", default_value = "decaylab-runs")]
        out: PathBuf,
    },
    /// List bundled scenarios, optionally filtered by name or proposition.
    List { filter: Option<String> },
    /// Diff two report.json files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Relative threshold below which constants count as equal.
        #[arg(long, default_value_t = 1e-9)]
        threshold: f64,
    },
    /// Run only the hypothesis audit of a config.
    Audit {
        #[command(flatten)]
        source: Source,
        #[arg(long, env = "DECAYLAB_OUT", default_value = "decaylab-runs")]
        out: PathBuf,
    },
    /// Write one operator of a config in the dump format.
    DumpOperator {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum)]
        operator: OperatorName,
        #[arg(long, value_enum, default_value = "binary")]
        format: DumpFormat,
        /// Destination file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run_all(configs: Vec<ExperimentConfig>, root: &Path) -> anyhow::Result<i32> {
    let results: Vec<anyhow::Result<(RunReport, PathBuf)>> = configs
        .par_iter()
        .map(|cfg| {
            let outcome = run_experiment(cfg).with_context(|| format!("scenario {}", cfg.scenario))?;
            let report = RunReport::new(cfg, &outcome);
            let root = cfg.output_dir.as_deref().unwrap_or(root);
            let dir = write_run(root, &report, &outcome.artifacts)?;
            Ok((report, dir))
        })
        .collect();
    let mut verdicts = Vec::new();
    for r in results {
        let (report, dir) = r?;
        print!("{}", summary(&report));
        println!("  report {}", dir.join("report.json").display());
        verdicts.push(report.verdicts.aggregate);
    }
    Ok(exit_code(aggregate(verdicts)))
}

fn dump(cfg: &ExperimentConfig, which: OperatorName, format: DumpFormat, out: &Path) -> anyhow::Result<()> {
    let setup = Setup::new(cfg)?;
    let op = match which {
        OperatorName::H => setup.h.clone(),
        OperatorName::A => setup.a.clone(),
        OperatorName::K => extract_k(&setup.h, &setup.a, cfg.c, 0.0, None)?.k_mat,
        OperatorName::P => spectral_projection(&setup.spectral, setup.band)?,
        OperatorName::B | OperatorName::ATilde => {
            let d = extract_k(&setup.h, &setup.a, cfg.c, cfg.s, Some(&setup.spectral))?;
            let tr = build_ut(&setup.spectral, &d.k_mat, setup.band, cfg.s, cfg.drift.t_b)?;
            let conj = build_conjugate(&setup.a, &tr, &setup.spectral, cfg.s)?;
            if matches!(which, OperatorName::B) {
                conj.b_h.with_role(Role::Drift)
            } else {
                conj.a_tilde
            }
        }
    };
    let mut file = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    match format {
        DumpFormat::Binary => write_binary(&op, &mut file)?,
        DumpFormat::Csv => write_csv(&op, &mut file)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => e.exit(),
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result: anyhow::Result<i32> = match cli.command {
        Command::Run { source, out } => source.configs().and_then(|c| run_all(c, &out)),
        Command::List { filter } => {
            print!("{}", scenarios::table(&scenarios::filtered(filter.as_deref())));
            Ok(0)
        }
        Command::Compare { a, b, threshold } => (|| {
            let c = compare_reports(&load_report(&a)?, &load_report(&b)?, threshold)?;
            print!("{}", c.render());
            Ok(c.exit_code())
        })(),
        Command::Audit { source, out } => source.configs().and_then(|cs| {
            let cs = cs
                .into_iter()
                .map(|mut c| {
                    c.propositions = vec![Check::Audit];
                    c
                })
                .collect();
            run_all(cs, &out)
        }),
        Command::DumpOperator { source, operator, format, out } => {
            source.single().and_then(|c| dump(&c, operator, format, &out)).map(|_| 0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

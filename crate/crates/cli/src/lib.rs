//! Command implementations behind the `ocms` binary.

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ocms::analysis::{
    comm_cost, read_trials_csv, theory_table, write_summary_csv, write_trials_csv, BoundKind, CostAlgorithm,
    TableAlgorithm,
};
use ocms::experiment::{run_cell, summarize, CellSpec};

pub use config::{DatasetConfig, ExperimentConfig, XSet};

pub const DATASET_FILE: &str = "dataset.txt";
pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "ocms", version, about = "LDP frequency estimation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Materialize the configured dataset.
    Datagen(RunArgs),
    /// Run every (algorithm, epsilon) cell and write trials, summary and manifest.
    Run(RunArgs),
    /// Recompute the summary from a finished run directory.
    Analyze {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print closed-form precision and communication rows as CSV.
    Tables(TablesArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    #[arg(long)]
    pub d: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0, 4.0, 5.0])]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub n: f64,
    /// Subset of HE, RHR, OLH, OCMS_MSE, OCMS_L, CMSHE, SS, aRP, RP.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub dataset: String,
    pub n: usize,
    pub d: u64,
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Datagen(args) => datagen(&args, stdout),
        Command::Run(args) => run(&args, stdout),
        Command::Analyze { out } => analyze(&out, stdout),
        Command::Tables(args) => tables(&args, stdout),
    }
}

fn resolve(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn datagen(args: &RunArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(args)?;
    let ds = cfg.materialize()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join(DATASET_FILE);
    ds.save(&path)?;
    writeln!(stdout, "wrote {} (d={} n={} name={})", path.display(), ds.d, ds.n(), ds.name)?;
    Ok(())
}

fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(cfg)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn run(args: &RunArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(args)?;
    let ds = cfg.materialize()?;
    let x_set = cfg.x_set(&ds)?;
    let algorithms = cfg.parsed_algorithms()?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    ds.save(dir.join(DATASET_FILE))?;

    let mut trials = Vec::new();
    for alg in &algorithms {
        for (ei, &eps) in cfg.epsilons.iter().enumerate() {
            let spec = CellSpec {
                algorithm: *alg,
                epsilon: eps,
                eps_index: ei,
                trials: cfg.trials,
                x_set: &x_set,
                f_star: cfg.f_star,
                clip: cfg.clip,
                seed: cfg.seed,
            };
            let cell = run_cell(&ds, &spec).with_context(|| format!("{alg} at epsilon {eps}"))?;
            writeln!(stdout, "{alg} eps={eps}: {} trials", cell.len())?;
            trials.extend(cell);
        }
    }
    write_trials_csv(create(&dir.join(TRIALS_FILE))?, &trials)?;
    let summary = summarize(&trials, ds.n(), cfg.f_star)?;
    write_summary_csv(create(&dir.join(SUMMARY_FILE))?, &summary)?;

    let manifest = Manifest {
        config_sha256: config_hash(&cfg)?,
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        dataset: ds.name.clone(),
        n: ds.n(),
        d: ds.d,
        config: cfg.clone(),
    };
    let mut w = create(&dir.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    writeln!(stdout, "wrote {}", dir.display())?;
    Ok(())
}

pub fn analyze(dir: &Path, stdout: &mut dyn Write) -> Result<()> {
    let mpath = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_reader(File::open(&mpath).with_context(|| format!("opening {}", mpath.display()))?)
        .with_context(|| format!("parsing {}", mpath.display()))?;
    let tpath = dir.join(TRIALS_FILE);
    let trials = read_trials_csv(File::open(&tpath).with_context(|| format!("opening {}", tpath.display()))?)
        .with_context(|| format!("parsing {}", tpath.display()))?;
    if trials.is_empty() {
        bail!("{} holds no trials", tpath.display());
    }
    let summary = summarize(&trials, manifest.n, manifest.config.f_star)?;
    write_summary_csv(stdout, &summary)?;
    Ok(())
}

fn kind(k: BoundKind) -> &'static str {
    match k {
        BoundKind::Exact => "exact",
        BoundKind::Upper => "upper",
        BoundKind::Lower => "lower",
        BoundKind::Order => "order",
    }
}

fn cost_row(a: TableAlgorithm) -> Option<CostAlgorithm> {
    Some(match a {
        TableAlgorithm::He => CostAlgorithm::He,
        TableAlgorithm::Rhr => CostAlgorithm::Rhr,
        TableAlgorithm::Olh => CostAlgorithm::Olh,
        TableAlgorithm::OcmsMse => CostAlgorithm::OcmsMse,
        TableAlgorithm::OcmsL => CostAlgorithm::OcmsL,
        TableAlgorithm::Ss => CostAlgorithm::Ss,
        TableAlgorithm::ARappor | TableAlgorithm::Rappor => CostAlgorithm::Rappor,
        TableAlgorithm::CmsHe => return None,
    })
}

pub const TABLES_HEADER: [&str; 12] =
    ["algorithm", "d", "epsilon", "n", "l1", "l1_kind", "l2", "l2_kind", "mse", "mse_kind", "small_d", "comm_bits"];

pub fn tables(args: &TablesArgs, stdout: &mut dyn Write) -> Result<()> {
    if args.d.is_nan() || args.d < 2.0 {
        bail!("--d must be at least 2");
    }
    if args.n.is_nan() || args.n <= 0.0 {
        bail!("--n must be positive");
    }
    if let Some(e) = args.epsilons.iter().find(|e| e.is_nan() || **e <= 0.0) {
        bail!("--epsilons must be positive, got {e}");
    }
    let algs: Vec<TableAlgorithm> = if args.algorithms.is_empty() {
        TableAlgorithm::ALL.to_vec()
    } else {
        args.algorithms.iter().map(|a| a.parse()).collect::<ocms::Result<_>>()?
    };
    let mut w = csv::Writer::from_writer(stdout);
    w.write_record(TABLES_HEADER)?;
    for a in algs {
        for &eps in &args.epsilons {
            let r = theory_table(a, args.d, eps, args.n);
            let bits = cost_row(a).map(|c| comm_cost(c, args.d, eps).to_string()).unwrap_or_default();
            w.write_record([
                a.label().to_string(),
                args.d.to_string(),
                eps.to_string(),
                args.n.to_string(),
                r.l1.value.to_string(),
                kind(r.l1.kind).to_string(),
                r.l2.value.to_string(),
                kind(r.l2.kind).to_string(),
                r.mse.value.to_string(),
                kind(r.mse.kind).to_string(),
                r.small_d.to_string(),
                bits,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

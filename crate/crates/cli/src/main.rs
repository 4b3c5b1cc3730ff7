//! Command-line front end for the flag autotuning pipeline.
//!
//! Subcommands mirror the pipeline stages: `extract` features, dump the
//! `grid`, `label` a training set, `train` the model, `predict` flags,
//! `verify` a program end to end, and `report` a comparison between runs.
//!
//! Exit codes: 0 for a definitive verdict (and for successful non-verify
//! commands), 10 unknown, 20 timeout, 30 backend error, 64 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use metatune_core::backend::{
    run_backend, BackendAdapter, BenchmarkSpec, Expected, MockAdapter, ProcessAdapter, RawVerdict,
};
use metatune_core::campaign::{
    self, run_campaign, CampaignError, CampaignManifest, DatasetRow, DEFAULT_TIMEOUT_S,
};
use metatune_core::dtree::{
    load_model, save_model, train, ClassWeighting, TrainParams, TrainingSample,
};
use metatune_core::features::{extract_features, parse_file};
use metatune_core::flags::{canonical_grid, default_config, FlagGrid};
use metatune_core::report::{read_tool_runs, report_compare};
use metatune_core::selection::select_flags;

/// Environment variable supplying a default backend adapter spec string.
const BACKEND_ENV: &str = "METATUNE_BACKEND";

#[derive(Parser)]
#[command(
    name = "metatune",
    version,
    about = "Predict good bounded-model-checker flags for concurrent C programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the static feature record of each file, one line per file
    Extract {
        /// C source files (.c or preprocessed .i)
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Dump the flag grid in grid-file format
    Grid {
        /// Grid to dump: `builtin` or a grid file path
        #[arg(long, default_value = "builtin")]
        grid: String,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a labeling campaign: every benchmark x every grid configuration
    Label {
        /// Benchmark manifest: program<TAB>property<TAB>expected per line
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "builtin")]
        grid: String,
        /// Per-run wall-clock timeout in seconds
        #[arg(long, default_value_t = DEFAULT_TIMEOUT_S)]
        timeout: f64,
        /// Worker count
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Checkpoint journal path (default: <out>.journal)
        #[arg(long)]
        journal: Option<PathBuf>,
        /// Skip checkpointing entirely
        #[arg(long)]
        no_journal: bool,
        /// Output dataset CSV
        #[arg(long)]
        out: PathBuf,
        /// Backend adapter: config file path or `mock:<script>`
        #[arg(long)]
        adapter: Option<String>,
        /// Label each benchmark only with the flags this model predicts,
        /// instead of the whole grid (one row per benchmark)
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "32")]
        arch: String,
    },
    /// Train a decision tree on a labeled dataset
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Output model file
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        min_samples_split: usize,
        #[arg(long, default_value_t = 3)]
        min_samples_leaf: usize,
        #[arg(long)]
        max_depth: Option<usize>,
        /// Train on raw counts instead of class-frequency balanced weights
        #[arg(long)]
        uniform_weights: bool,
    },
    /// Print the predicted flag configuration without running the backend
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "builtin")]
        grid: String,
        /// Also list the predicted class of every grid configuration
        #[arg(long)]
        all: bool,
        program: PathBuf,
    },
    /// Verify a program with predicted flags and report the verdict
    Verify {
        /// Property file handed to the backend
        #[arg(short = 'p', long = "property")]
        property: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "builtin")]
        grid: String,
        /// Target architecture passed to the backend
        #[arg(long, default_value = "32")]
        arch: String,
        #[arg(long, default_value_t = DEFAULT_TIMEOUT_S)]
        timeout: f64,
        #[arg(long)]
        adapter: Option<String>,
        /// Skip prediction and run the backend's default configuration
        #[arg(long)]
        fallback_default: bool,
        program: PathBuf,
    },
    /// Compare a default-configuration run against a predicted-flags run
    Report {
        /// Dataset CSV of the default-configuration run
        #[arg(long = "default")]
        baseline: PathBuf,
        /// Dataset CSV of the predicted-flags run
        #[arg(long)]
        predicted: PathBuf,
        /// Also write bucket counts as CSV
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(64)
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Extract { files } => cmd_extract(&files),
        Command::Grid { grid, out } => cmd_grid(&grid, out.as_deref()),
        Command::Label {
            manifest,
            grid,
            timeout,
            jobs,
            journal,
            no_journal,
            out,
            adapter,
            model,
            arch,
        } => cmd_label(
            &manifest,
            &grid,
            timeout,
            jobs,
            journal,
            no_journal,
            &out,
            adapter.as_deref(),
            model.as_deref(),
            &arch,
        ),
        Command::Train {
            dataset,
            out,
            min_samples_split,
            min_samples_leaf,
            max_depth,
            uniform_weights,
        } => cmd_train(
            &dataset,
            &out,
            TrainParams {
                min_samples_split,
                min_samples_leaf,
                max_depth,
                class_weighting: if uniform_weights {
                    ClassWeighting::Uniform
                } else {
                    ClassWeighting::Balanced
                },
            },
        ),
        Command::Predict {
            model,
            grid,
            all,
            program,
        } => cmd_predict(&model, &grid, all, &program),
        Command::Verify {
            property,
            model,
            grid,
            arch,
            timeout,
            adapter,
            fallback_default,
            program,
        } => cmd_verify(
            &property,
            model.as_deref(),
            &grid,
            &arch,
            timeout,
            adapter.as_deref(),
            fallback_default,
            &program,
        ),
        Command::Report {
            baseline,
            predicted,
            out_csv,
        } => cmd_report(&baseline, &predicted, out_csv.as_deref()),
    }
}

fn load_grid(spec: &str) -> anyhow::Result<FlagGrid> {
    if spec == "builtin" {
        Ok(canonical_grid())
    } else {
        FlagGrid::from_grid_file(Path::new(spec))
            .with_context(|| format!("loading grid file '{spec}'"))
    }
}

/// Resolve the backend adapter: `--adapter` wins, then METATUNE_BACKEND,
/// then the builtin esbmc adapter. `mock:<script>` selects the mock backend.
fn resolve_adapter(
    cli_adapter: Option<&str>,
    grid: &FlagGrid,
    arch: &str,
) -> anyhow::Result<Box<dyn BackendAdapter>> {
    let spec = match cli_adapter {
        Some(s) => Some(s.to_string()),
        None => std::env::var(BACKEND_ENV).ok(),
    };
    match spec.as_deref() {
        None => Ok(Box::new(ProcessAdapter::new("esbmc").with_arch(arch))),
        Some(s) => {
            if let Some(script) = s.strip_prefix("mock:") {
                let adapter = MockAdapter::from_script_file(Path::new(script), grid.clone())
                    .with_context(|| format!("loading mock script '{script}'"))?;
                Ok(Box::new(adapter))
            } else {
                let adapter = ProcessAdapter::from_config_file(Path::new(s))
                    .with_context(|| format!("loading adapter config '{s}'"))?;
                Ok(Box::new(adapter.with_arch(arch)))
            }
        }
    }
}

fn cmd_extract(files: &[PathBuf]) -> anyhow::Result<ExitCode> {
    for file in files {
        let unit = parse_file(file).with_context(|| format!("reading '{}'", file.display()))?;
        if unit.is_degraded() {
            eprintln!(
                "warning: {}: unbalanced braces, falling back to whole-file scan",
                file.display()
            );
        }
        println!("{}", extract_features(&unit).to_json_line());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_grid(grid: &str, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let text = load_grid(grid)?.to_grid_text();
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing grid to '{}'", path.display()))?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_label(
    manifest_path: &Path,
    grid_spec: &str,
    timeout: f64,
    jobs: usize,
    journal: Option<PathBuf>,
    no_journal: bool,
    out: &Path,
    adapter_spec: Option<&str>,
    model_path: Option<&Path>,
    arch: &str,
) -> anyhow::Result<ExitCode> {
    let benchmarks = campaign::read_manifest(manifest_path)
        .with_context(|| format!("reading manifest '{}'", manifest_path.display()))?;
    if benchmarks.is_empty() {
        return Err(anyhow!(
            "manifest '{}' lists no benchmarks",
            manifest_path.display()
        ));
    }
    let grid = load_grid(grid_spec)?;
    let adapter = resolve_adapter(adapter_spec, &grid, arch)?;

    let rows = match model_path {
        None => {
            let journal_path = if no_journal {
                None
            } else {
                Some(journal.unwrap_or_else(|| {
                    let mut p = out.as_os_str().to_owned();
                    p.push(".journal");
                    PathBuf::from(p)
                }))
            };
            let manifest = CampaignManifest {
                benchmarks,
                grid,
                timeout_s: timeout,
                parallelism: jobs,
            };
            match run_campaign(&manifest, adapter.as_ref(), journal_path.as_deref()) {
                Ok(rows) => rows,
                Err(CampaignError::Spawn(e)) => {
                    eprintln!("error: {e} (completed cells are checkpointed)");
                    return Ok(ExitCode::from(30));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Some(model_path) => {
            label_predicted(&benchmarks, &grid, timeout, adapter.as_ref(), model_path)?
        }
    };

    campaign::write_dataset_file(&rows, out)
        .with_context(|| format!("writing dataset '{}'", out.display()))?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

/// One row per benchmark, each run with the flags the model predicts for it.
fn label_predicted(
    benchmarks: &[BenchmarkSpec],
    grid: &FlagGrid,
    timeout: f64,
    adapter: &dyn BackendAdapter,
    model_path: &Path,
) -> anyhow::Result<Vec<DatasetRow>> {
    let model = load_model_file(model_path)?;
    let mut rows = Vec::with_capacity(benchmarks.len());
    for bench in benchmarks {
        let unit = parse_file(&bench.program_path)
            .with_context(|| format!("reading '{}'", bench.program_path.display()))?;
        let features = extract_features(&unit);
        let prediction = select_flags(&model, &features, grid)?;
        let outcome =
            run_backend(bench, &prediction.chosen, timeout, adapter).map_err(|e| anyhow!("{e}"))?;
        rows.push(DatasetRow {
            bench: bench.id(),
            cfg_index: prediction.chosen_index,
            features,
            flags_encoded: prediction.chosen.encode(),
            raw: outcome.raw,
            wall_time_s: outcome.wall_time_s,
            class: metatune_core::backend::classify_outcome(&outcome),
        });
    }
    Ok(rows)
}

fn cmd_train(dataset: &Path, out: &Path, params: TrainParams) -> anyhow::Result<ExitCode> {
    let rows = campaign::read_dataset_file(dataset)
        .with_context(|| format!("reading dataset '{}'", dataset.display()))?;
    let samples: Vec<TrainingSample> = rows
        .iter()
        .map(|row| TrainingSample::new(row.sample_vector(), row.class))
        .collect();
    let model = train(&samples, &params)?;
    std::fs::write(out, save_model(&model))
        .with_context(|| format!("writing model '{}'", out.display()))?;
    println!(
        "trained on {} samples: {} nodes, written to {}",
        samples.len(),
        model.nodes().len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_model_file(path: &Path) -> anyhow::Result<metatune_core::dtree::DecisionTreeModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model '{}'", path.display()))?;
    load_model(&text).with_context(|| format!("parsing model '{}'", path.display()))
}

fn render_or_default(args: &[String]) -> String {
    if args.is_empty() {
        "(default configuration)".to_string()
    } else {
        args.join(" ")
    }
}

fn cmd_predict(
    model: &Path,
    grid_spec: &str,
    all: bool,
    program: &Path,
) -> anyhow::Result<ExitCode> {
    let model = load_model_file(model)?;
    let grid = load_grid(grid_spec)?;
    let unit = parse_file(program).with_context(|| format!("reading '{}'", program.display()))?;
    let prediction = select_flags(&model, &extract_features(&unit), &grid)?;
    println!("chosen-index: {}", prediction.chosen_index);
    println!("predicted-class: {}", prediction.predicted_class);
    println!(
        "flags: {}",
        render_or_default(&prediction.chosen.render_flags())
    );
    if all {
        for (index, class) in &prediction.per_config_classes {
            println!("config {index}: class {class}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    property: &Path,
    model_path: Option<&Path>,
    grid_spec: &str,
    arch: &str,
    timeout: f64,
    adapter_spec: Option<&str>,
    fallback_default: bool,
    program: &Path,
) -> anyhow::Result<ExitCode> {
    let grid = load_grid(grid_spec)?;
    let adapter = resolve_adapter(adapter_spec, &grid, arch)?;
    let bench = BenchmarkSpec {
        program_path: program.to_path_buf(),
        property_path: property.to_path_buf(),
        expected: Expected::Unspecified,
    };

    let config = if fallback_default {
        default_config()
    } else {
        let model_path =
            model_path.ok_or_else(|| anyhow!("--model is required unless --fallback-default"))?;
        let model = load_model_file(model_path)?;
        let unit =
            parse_file(program).with_context(|| format!("reading '{}'", program.display()))?;
        let prediction = select_flags(&model, &extract_features(&unit), &grid)?;
        println!("predicted-class: {}", prediction.predicted_class);
        prediction.chosen
    };
    println!("flags: {}", render_or_default(&config.render_flags()));

    let outcome = match run_backend(&bench, &config, timeout, adapter.as_ref()) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(30));
        }
    };
    println!("verdict: {}", outcome.raw.tag());
    println!("wall-time: {}s", campaign::format_time(outcome.wall_time_s));
    let code = match outcome.raw {
        RawVerdict::True | RawVerdict::False => ExitCode::SUCCESS,
        RawVerdict::Unknown => ExitCode::from(10),
        RawVerdict::Timeout => ExitCode::from(20),
        RawVerdict::Error => ExitCode::from(30),
    };
    Ok(code)
}

fn cmd_report(
    baseline: &Path,
    predicted: &Path,
    out_csv: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let baseline_runs =
        read_tool_runs(baseline).with_context(|| format!("reading '{}'", baseline.display()))?;
    let predicted_runs =
        read_tool_runs(predicted).with_context(|| format!("reading '{}'", predicted.display()))?;
    let report = report_compare(&baseline_runs, &predicted_runs)?;
    print!("{}", report.render_text());
    if let Some(path) = out_csv {
        std::fs::write(path, report.counts_csv())
            .with_context(|| format!("writing '{}'", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

//! The `zcmvn` command-line tool.
//!
//! Exit codes: 0 success, 1 internal failure, 2 input error, 3 the fit did
//! not converge, 4 rows with more than one zero part.

pub mod io;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use zcmvn::diagnostics::{
    expected_zero_table, mc_pvalue_against, simulate_compositions, DEFAULT_SIMS, MIN_REPLICATES,
    MIN_SIMS,
};
use zcmvn::geometry::{classify, project_to_boundary, Classification};
use zcmvn::simplex::{closure, AlphaTransform};
use zcmvn::ternary::{render_svg, PlotOptions};
use zcmvn::{fit, Composition, CompositionalDataset, FitConfig, ModelDocument, MvnParams, TransformedSample};

use crate::io::{read_table, read_text, write_table, Table};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_101;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("the fit did not converge: {0}")]
    NotConverged(String),
    #[error("rows with more than one zero part are not supported: {}", list_rows(.0))]
    MultipleZeros(Vec<usize>),
    #[error("{0}")]
    Internal(String),
}

fn list_rows(rows: &[usize]) -> String {
    let shown: Vec<String> = rows
        .iter()
        .take(20)
        .map(|r| format!("row {r} (line {})", r + 1))
        .collect();
    let more = if rows.len() > 20 {
        format!(" and {} more", rows.len() - 20)
    } else {
        String::new()
    };
    format!("{}{more}", shown.join(", "))
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::MultipleZeros(_) => 4,
        }
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "zcmvn", version, about = "Zero-censored normal model for compositions with structural zeros")]
pub struct Cli {
    /// Power of the α-transformation. Only 1 is supported.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub alpha: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a CSV of compositions and write the model as JSON.
    Fit(FitArgs),
    /// Draw compositions from a model and write them as CSV.
    Simulate(SimulateArgs),
    /// Compare observed zero counts with those expected under a model.
    Diagnose(DiagnoseArgs),
    /// Pull vectors lying outside the simplex onto its boundary.
    Project(ProjectArgs),
    /// Draw a ternary diagram of three-part data as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with a header row and one composition per row ('-' for stdin).
    pub data: PathBuf,
    /// Rows are raw non-negative amounts; divide each by its total.
    #[arg(long)]
    pub closure: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output file for the model JSON (stdout when absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Gradient ∞-norm at which the search stops.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model JSON.
    pub model: PathBuf,
    /// Number of compositions.
    #[arg(short, long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output CSV (stdout when absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Model JSON.
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Monte Carlo draws for the expected zero rates.
    #[arg(long, default_value_t = DEFAULT_SIMS)]
    pub sims: usize,
    /// Simulated datasets for the p-value; no p-value when absent.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file for the diagnostics JSON.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// CSV of D-part vectors summing to 1, or of latent coordinates with
    /// `--latent`.
    pub input: PathBuf,
    /// Input columns are transformed coordinates y1..yd.
    #[arg(long)]
    pub latent: bool,
    /// Output CSV (stdout when absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model JSON whose density contours are drawn.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output SVG (stdout when absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Where the primary output goes, and where the human summary goes: stdout
/// when the output is a file, stderr when the output itself is on stdout.
struct Sink {
    out: Box<dyn Write>,
    to_file: bool,
}

impl Sink {
    fn open(path: Option<&Path>) -> Result<Self, CliError> {
        Ok(match path {
            Some(p) => {
                let f = File::create(p)
                    .map_err(|e| CliError::Input(format!("cannot create {}: {e}", p.display())))?;
                Sink {
                    out: Box::new(BufWriter::new(f)),
                    to_file: true,
                }
            }
            None => Sink {
                out: Box::new(std::io::stdout()),
                to_file: false,
            },
        })
    }

    fn write(&mut self, text: &str) -> Result<(), CliError> {
        self.out.write_all(text.as_bytes()).map_err(internal)?;
        self.out.flush().map_err(internal)
    }

    fn note(&self, text: &str) {
        if self.to_file {
            print!("{text}");
        } else {
            eprint!("{text}");
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if cli.alpha != 1.0 {
        return Err(CliError::Input(format!(
            "--alpha {} is not supported; the model is defined for alpha = 1",
            cli.alpha
        )));
    }
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
        Command::Project(a) => cmd_project(&a),
        Command::Plot(a) => cmd_plot(&a),
    }
}

/// Compositions read from a CSV, with the header as component names.
pub struct LoadedData {
    pub components: Vec<String>,
    pub dataset: CompositionalDataset,
}

pub fn load_compositions(args: &DataArgs) -> Result<LoadedData, CliError> {
    let table = read_table(&args.data)?;
    let parts = table.header.len();
    if parts < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least 2 columns, found {parts}",
            args.data.display()
        )));
    }
    let multi: Vec<usize> = table
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.iter().filter(|&&v| v == 0.0).count() >= 2)
        .map(|(i, _)| i + 1)
        .collect();
    if !multi.is_empty() {
        return Err(CliError::MultipleZeros(multi));
    }
    let compositions = table
        .rows
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let made = if args.closure {
                closure(&row)
            } else {
                Composition::new(row)
            };
            made.map_err(|e| {
                CliError::Input(format!("{} row {} (line {}): {e}", args.data.display(), i + 1, i + 2))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LoadedData {
        components: table.header,
        dataset: CompositionalDataset::new(parts, compositions).map_err(input)?,
    })
}

fn load_model(path: &Path) -> Result<(ModelDocument, MvnParams), CliError> {
    let text = read_text(path)?;
    let doc = ModelDocument::from_json(&text)
        .map_err(|e| CliError::Input(format!("{}: invalid model JSON: {e}", path.display())))?;
    let params = doc
        .params()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((doc, params))
}

fn component_names(doc: &ModelDocument) -> Vec<String> {
    match &doc.components {
        Some(c) if c.len() == doc.parts => c.clone(),
        _ => (1..=doc.parts).map(|j| format!("x{j}")).collect(),
    }
}

fn format_vector(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter()
        .map(|x| format!("{x:>10.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let loaded = load_compositions(&args.data)?;
    let data = &loaded.dataset;
    let d = data.parts() - 1;
    if data.len() < d + 2 {
        return Err(CliError::Input(format!(
            "need at least {} rows for {} parts, found {}",
            d + 2,
            data.parts(),
            data.len()
        )));
    }
    let sample = TransformedSample::from_dataset(data).map_err(input)?;
    let config = FitConfig {
        max_iter: args.max_iter,
        grad_tol: args.tol,
        ..FitConfig::default()
    };
    let model = fit(&sample, &config).map_err(|e| match e {
        zcmvn::Error::TooFewInterior { .. } | zcmvn::Error::EmptySample => input(e),
        zcmvn::Error::LineSearch | zcmvn::Error::LogDiagonalBound { .. } => {
            CliError::NotConverged(e.to_string())
        }
        other => internal(other),
    })?;
    let mut doc = model.to_document();
    doc.components = Some(loaded.components.clone());
    let mut sink = Sink::open(args.output.as_deref())?;
    sink.write(&(doc.to_json() + "\n"))?;

    let mut summary = format!(
        "D = {}, n1 = {} interior, n2 = {} with one zero\nlog-likelihood: {:.6}\n",
        model.parts, model.n_interior, model.n_face, model.loglik
    );
    summary += &format!(
        "converged: {} ({} iterations, gradient norm {:.2e})\n",
        if model.converged { "yes" } else { "no" },
        model.iterations,
        model.gradient_norm
    );
    summary += &format!("mean:\n  {}\ncovariance:\n", format_vector(model.mean.iter().copied()));
    for row in model.cov.row_iter() {
        summary += &format!("  {}\n", format_vector(row.iter().copied()));
    }
    sink.note(&summary);
    if !model.converged {
        return Err(CliError::NotConverged(format!(
            "stopped after {} iterations with gradient norm {:.2e}",
            model.iterations, model.gradient_norm
        )));
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (doc, params) = load_model(&args.model)?;
    let data = simulate_compositions(args.n, &params, doc.parts, args.seed).map_err(internal)?;
    let table = Table {
        header: component_names(&doc),
        rows: data.compositions().iter().map(|c| c.parts().to_vec()).collect(),
    };
    let mut sink = Sink::open(args.output.as_deref())?;
    let mut buf = Vec::new();
    write_table(&table, &mut buf).map_err(internal)?;
    sink.write(&String::from_utf8(buf).map_err(internal)?)?;
    sink.note(&format!(
        "{} compositions, {} with one zero (seed {})\n",
        data.len(),
        data.n_face(),
        args.seed
    ));
    Ok(())
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<(), CliError> {
    let (doc, params) = load_model(&args.model)?;
    let loaded = load_compositions(&args.data)?;
    let data = &loaded.dataset;
    if data.parts() != doc.parts {
        return Err(CliError::Input(format!(
            "model has {} parts but the data has {}",
            doc.parts,
            data.parts()
        )));
    }
    if args.sims < MIN_SIMS {
        return Err(CliError::Input(format!("--sims must be at least {MIN_SIMS}")));
    }
    if let Some(r) = args.replicates {
        if r < MIN_REPLICATES {
            return Err(CliError::Input(format!(
                "--replicates must be at least {MIN_REPLICATES}"
            )));
        }
    }
    let observed = data.zero_counts();
    let mut table = expected_zero_table(&params, doc.parts, data.len(), args.sims, args.seed)
        .map_err(internal)?
        .with_components(loaded.components.clone())
        .with_observed(&observed)
        .map_err(internal)?;
    if let Some(r) = args.replicates {
        let p = mc_pvalue_against(
            &params,
            doc.parts,
            &observed,
            data.len(),
            &table.expected_counts,
            r,
            args.seed,
        )
        .map_err(internal)?;
        table.mc_pvalue = Some(p);
        table.n_replicates = Some(r);
    }
    print!("{}", table.to_table());
    if let Some(path) = &args.output {
        let mut sink = Sink::open(Some(path))?;
        sink.write(&(table.to_json() + "\n"))?;
    }
    Ok(())
}

fn cmd_project(args: &ProjectArgs) -> Result<(), CliError> {
    let table = read_table(&args.input)?;
    let width = table.header.len();
    let parts = if args.latent { width + 1 } else { width };
    if parts < 2 {
        return Err(CliError::Input("need at least 2 parts".into()));
    }
    let transform = AlphaTransform::new(parts, 1.0).map_err(internal)?;
    let locate = |i: usize, e: zcmvn::Error| {
        let msg = format!("{} row {} (line {}): {e}", args.input.display(), i + 1, i + 2);
        match e {
            zcmvn::Error::TiedMinimum(..) | zcmvn::Error::MultipleZeros { .. } => {
                CliError::MultipleZeros(vec![i + 1])
            }
            _ => CliError::Input(msg),
        }
    };
    let mut projected = 0;
    let mut rows = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.into_iter().enumerate() {
        let x = if args.latent {
            transform
                .inverse(&DVector::from_vec(row))
                .map_err(|e| locate(i, e))?
                .parts
        } else {
            row
        };
        let out = match classify(&x).map_err(|e| locate(i, e))? {
            Classification::OutsideSimplex => {
                projected += 1;
                project_to_boundary(&x).map_err(|e| locate(i, e))?.composition
            }
            _ => Composition::new(x).map_err(|e| locate(i, e))?,
        };
        rows.push(out.into_parts());
    }
    let header = if args.latent {
        (1..=parts).map(|j| format!("x{j}")).collect()
    } else {
        table.header
    };
    let mut sink = Sink::open(args.output.as_deref())?;
    let mut buf = Vec::new();
    write_table(&Table { header, rows }, &mut buf).map_err(internal)?;
    sink.write(&String::from_utf8(buf).map_err(internal)?)?;
    sink.note(&format!("{projected} rows projected onto the boundary\n"));
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let loaded = load_compositions(&args.data)?;
    if loaded.dataset.parts() != 3 {
        return Err(CliError::Input(format!(
            "ternary plots need exactly 3 parts, the data has {}; the model itself supports any number of parts",
            loaded.dataset.parts()
        )));
    }
    let model = match &args.model {
        Some(path) => {
            let (doc, params) = load_model(path)?;
            if doc.parts != 3 {
                return Err(CliError::Input(format!("model has {} parts, expected 3", doc.parts)));
            }
            Some(params)
        }
        None => None,
    };
    let labels = [0, 1, 2].map(|j| loaded.components[j].clone());
    let options = PlotOptions {
        labels,
        ..PlotOptions::default()
    };
    let svg = render_svg(&loaded.dataset, model.as_ref(), &options).map_err(internal)?;
    Sink::open(args.output.as_deref())?.write(&svg)
}

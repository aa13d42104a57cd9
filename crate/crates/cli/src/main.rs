//! `textmap`: run each stage of the map-reconstruction pipeline from the
//! command line, or the whole experiment grid at once.
//!
//! Relative output paths resolve under `$TEXTMAP_OUT_ROOT` when that
//! variable is set; input paths are always taken as given.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use textmap::bidim::compare_to_truth;
use textmap::corpus::{sample_corpus, statements_for, RelationSet, Sampling};
use textmap::experiment::{run_grid, ExperimentConfig, ResultsTable};
use textmap::files;
use textmap::geometry::{nonmetric_mds, shepard_transform, Configuration2D, MdsParams};
use textmap::its::{its_city_similarity_over, TertiarySet};
use textmap::mapgen::{generate_map, true_distances, Distribution};
use textmap::models::cbow::{train_cbow, CbowParams};
use textmap::models::cooc::count_cooccurrence;
use textmap::models::glove::{train_glove, GloveParams};
use textmap::models::lsa::{train_lsa, LsaParams};
use textmap::models::ppmi::ppmi_city_similarity;
use textmap::models::{cosine_city_similarity, EmbeddingSet, ModelKind};
use textmap::render::{render_maps_svg, render_table, FigurePanel, FigureRow, TableLayout};

#[derive(Parser)]
#[command(
    name = "textmap",
    about = "Reconstruct city maps from text that describes them",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truth city map.
    Genmap(GenmapArgs),
    /// Turn a map into spatial-relation statements and sample a corpus.
    Gencorpus(GencorpusArgs),
    /// Train a model on a corpus and write its city-similarity matrix.
    Train(TrainArgs),
    /// Recover a 2-D configuration from a similarity matrix.
    Mds(MdsArgs),
    /// Score a recovered configuration against a ground-truth map.
    Bidim(BidimArgs),
    /// Run the full experiment grid.
    RunGrid(RunGridArgs),
    /// Re-render tables or the map figure from a results directory.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenmapArgs {
    /// Map distribution: random, clustered, or circular.
    #[arg(long)]
    distribution: String,
    /// Number of cities.
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output map CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GencorpusArgs {
    /// Input map CSV.
    #[arg(long)]
    map: PathBuf,
    /// Relation vocabulary: nf or nsew.
    #[arg(long)]
    relations: String,
    /// Sampling regime: uniform or distance.
    #[arg(long)]
    sampling: String,
    /// Number of statements to sample.
    #[arg(long, default_value_t = 10_000)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weight statements by raw distance instead of inverse distance.
    #[arg(long)]
    literal_eq1: bool,
    /// Output corpus text file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Model: ppmi, lsa, cbow, glove, or its.
    #[arg(long)]
    model: String,
    /// Input corpus text file.
    #[arg(long)]
    corpus: PathBuf,
    /// Training seed (used by cbow and glove; the others are
    /// deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Embedding dimensions (lsa, cbow, glove).
    #[arg(long)]
    dims: Option<usize>,
    /// Training epochs (cbow, glove).
    #[arg(long)]
    epochs: Option<usize>,
    /// Noise samples per prediction (cbow).
    #[arg(long)]
    negatives: Option<usize>,
    /// Initial learning rate (cbow, glove).
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Full-weight co-occurrence threshold (glove).
    #[arg(long)]
    x_max: Option<f64>,
    /// Weighting exponent (glove).
    #[arg(long)]
    alpha: Option<f64>,
    /// Tertiary-term set for its: all or cities.
    #[arg(long, default_value = "all")]
    tertiary: String,
    /// Output similarity CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the trained embeddings (lsa, cbow, glove).
    #[arg(long)]
    emb_out: Option<PathBuf>,
}

#[derive(Args)]
struct MdsArgs {
    /// Input similarity CSV.
    #[arg(long)]
    sim: PathBuf,
    /// Exponent of the similarity-to-distance transform.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fitting attempts: one from classical scaling, the rest from random
    /// starts.
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Output configuration CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BidimArgs {
    /// Recovered configuration CSV.
    #[arg(long)]
    config: PathBuf,
    /// Ground-truth map CSV.
    #[arg(long)]
    map: PathBuf,
    /// Number of label permutations for the significance test.
    #[arg(long, default_value_t = 10_000)]
    nperm: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Annotate the result with a model tag.
    #[arg(long, default_value = "")]
    model_tag: String,
    /// Annotate the result with a map tag.
    #[arg(long, default_value = "")]
    map_tag: String,
    /// Annotate the result with a relation-set tag.
    #[arg(long, default_value = "")]
    relations_tag: String,
    /// Annotate the result with a sampling tag.
    #[arg(long, default_value = "")]
    sampling_tag: String,
    /// Also write the result JSON to a file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunGridArgs {
    /// Experiment configuration JSON; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Results directory (overrides the configuration file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the configuration file).
    #[arg(long)]
    master_seed: Option<u64>,
    /// Replications (overrides the configuration file).
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    /// Results directory of a previous run-grid.
    #[arg(long)]
    results: PathBuf,
    /// Render a median-r table: table1 (standard models) or table2
    /// (instance model).
    #[arg(long)]
    table: Option<String>,
    /// Render the original-vs-reconstruction map figure.
    #[arg(long)]
    figure: bool,
    /// Output file; tables print to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Resolve an output path under `$TEXTMAP_OUT_ROOT` when it is relative
/// and the variable is set.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("TEXTMAP_OUT_ROOT") {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Genmap(args) => genmap(args),
        Command::Gencorpus(args) => gencorpus(args),
        Command::Train(args) => train(args),
        Command::Mds(args) => mds(args),
        Command::Bidim(args) => bidim(args),
        Command::RunGrid(args) => run_grid_cmd(args),
        Command::Render(args) => render(args),
    }
}

fn genmap(args: GenmapArgs) -> Result<()> {
    let distribution: Distribution = args.distribution.parse()?;
    let map = generate_map(distribution, args.n, args.seed)?;
    let out = resolve_out(&args.out);
    ensure_parent(&out)?;
    files::write_map(&out, &map)?;
    println!("wrote {} cities to {}", map.len(), out.display());
    Ok(())
}

fn gencorpus(args: GencorpusArgs) -> Result<()> {
    let relations: RelationSet = args.relations.parse()?;
    let sampling: Sampling = args.sampling.parse()?;
    let map = files::read_map(&args.map)?;
    let statements = statements_for(&map, relations);
    let distances = true_distances(&map);
    let corpus = sample_corpus(&statements, sampling, &distances, args.size, args.seed, args.literal_eq1)?;
    let out = resolve_out(&args.out);
    ensure_parent(&out)?;
    files::write_corpus(&out, &corpus)?;
    println!(
        "wrote {} statements ({} requested) to {}",
        corpus.actual_size,
        corpus.requested_size,
        out.display()
    );
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let model: ModelKind = args.model.parse()?;
    let corpus = files::read_corpus(&args.corpus)?;
    let cities = corpus.city_tokens();

    let mut embeddings: Option<EmbeddingSet> = None;
    let sim = match model {
        ModelKind::Ppmi => ppmi_city_similarity(&corpus)?,
        ModelKind::Lsa => {
            let mut params = LsaParams::default();
            if let Some(dims) = args.dims {
                params.dims = dims;
            }
            let emb = train_lsa(&corpus, &params)?;
            let sim = cosine_city_similarity(&emb, &cities)?;
            embeddings = Some(emb);
            sim
        }
        ModelKind::Cbow => {
            let mut params = CbowParams { seed: args.seed, ..CbowParams::default() };
            if let Some(dims) = args.dims {
                params.dims = dims;
            }
            if let Some(epochs) = args.epochs {
                params.epochs = epochs;
            }
            if let Some(negatives) = args.negatives {
                params.negatives = negatives;
            }
            if let Some(lr) = args.learning_rate {
                params.learning_rate = lr;
            }
            let emb = train_cbow(&corpus, &params)?;
            let sim = cosine_city_similarity(&emb, &cities)?;
            embeddings = Some(emb);
            sim
        }
        ModelKind::Glove => {
            let mut params = GloveParams { seed: args.seed, ..GloveParams::default() };
            if let Some(dims) = args.dims {
                params.dims = dims;
            }
            if let Some(epochs) = args.epochs {
                params.epochs = epochs;
            }
            if let Some(lr) = args.learning_rate {
                params.learning_rate = lr;
            }
            if let Some(x_max) = args.x_max {
                params.x_max = x_max;
            }
            if let Some(alpha) = args.alpha {
                params.alpha = alpha;
            }
            let cooc = count_cooccurrence(&corpus)?;
            let emb = train_glove(&cooc, &params)?;
            let sim = cosine_city_similarity(&emb, &cities)?;
            embeddings = Some(emb);
            sim
        }
        ModelKind::Its => {
            let tertiary: TertiarySet = args.tertiary.parse()?;
            its_city_similarity_over(&corpus, tertiary)?
        }
    };

    let out = resolve_out(&args.out);
    ensure_parent(&out)?;
    files::write_similarity(&out, &sim)?;
    println!("wrote {}x{} similarity matrix to {}", sim.len(), sim.len(), out.display());

    if let Some(emb_out) = args.emb_out {
        let Some(emb) = embeddings else {
            bail!("--emb-out: model '{model}' does not produce embeddings");
        };
        let emb_out = resolve_out(&emb_out);
        ensure_parent(&emb_out)?;
        files::write_embeddings(&emb_out, &emb)?;
        println!("wrote {} embedding vectors to {}", emb.tokens.len(), emb_out.display());
    }
    Ok(())
}

fn mds(args: MdsArgs) -> Result<()> {
    let sim = files::read_similarity(&args.sim)?;
    let distances = shepard_transform(&sim, args.gamma)?;
    let params = MdsParams {
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
        restarts: args.restarts,
        seed: args.seed,
    };
    let config = nonmetric_mds(&distances, &params)?;
    let out = resolve_out(&args.out);
    ensure_parent(&out)?;
    files::write_configuration(&out, &config)?;
    println!(
        "wrote {} points to {} (stress {:.4}, {} iterations, restart {}, converged {})",
        config.labels.len(),
        out.display(),
        config.stress,
        config.iterations,
        config.restart,
        config.converged
    );
    Ok(())
}

fn bidim(args: BidimArgs) -> Result<()> {
    let (labels, coords) = files::read_labeled_points(&args.config)?;
    let map = files::read_map(&args.map)?;
    let config = Configuration2D {
        labels,
        coords,
        stress: 0.0,
        stress_trace: vec![],
        iterations: 0,
        converged: true,
        degenerate: false,
        restart: 0,
    };
    let comparison = compare_to_truth(&config, &map, args.nperm, args.seed)?;
    let result = files::CellResult {
        model: args.model_tag,
        map: args.map_tag,
        relations: args.relations_tag,
        sampling: args.sampling_tag,
        r: Some(comparison.fit.r),
        p: Some(comparison.p_permutation),
        stars: comparison.stars().to_string(),
        seed: args.seed,
        error: None,
    };
    println!("{}", serde_json::to_string_pretty(&result)?);
    if let Some(out) = args.out {
        let out = resolve_out(&out);
        ensure_parent(&out)?;
        files::write_cell_result(&out, &result)?;
    }
    Ok(())
}

fn run_grid_cmd(args: RunGridArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if let Some(master_seed) = args.master_seed {
        config.master_seed = master_seed;
    }
    if let Some(replications) = args.replications {
        config.replications = replications;
    }
    config.out_dir = resolve_out(&config.out_dir);

    let table = run_grid(&config)?;
    let failed = table.rows.iter().filter(|row| row.error.is_some()).count();
    println!(
        "ran {} cells ({} replications) into {}; {} failed",
        table.rows.len(),
        config.replications,
        config.out_dir.display(),
        failed
    );
    Ok(())
}

fn render(args: RenderArgs) -> Result<()> {
    let results_dir = &args.results;
    let rows = files::read_results_csv(results_dir.join("results.csv"))
        .with_context(|| format!("reading {}/results.csv", results_dir.display()))?;
    let table = ResultsTable { rows };

    let rendered = match (&args.table, args.figure) {
        (Some(layout), false) => render_table(&table, layout.parse::<TableLayout>()?),
        (None, true) => render_figure(results_dir, &table)?,
        _ => bail!("choose exactly one of --table <table1|table2> or --figure"),
    };

    match args.out {
        Some(out) => {
            let out = resolve_out(&out);
            ensure_parent(&out)?;
            std::fs::write(&out, rendered)?;
            println!("wrote {}", out.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}

/// Rebuild the map figure from a results directory: replication 0,
/// preferring the near/far relations and distance sampling among the
/// conditions present on disk.
fn render_figure(results_dir: &Path, table: &ResultsTable) -> Result<String> {
    let present = |field: fn(&files::ResultRow) -> &str, value: &str| {
        table.rows.iter().any(|row| field(row) == value)
    };
    let relations = if present(|r| &r.relations, "nf") { "nf" } else {
        &table.rows.first().context("empty results table")?.relations.clone()
    };
    let sampling = if present(|r| &r.sampling, "distance") { "distance" } else {
        &table.rows.first().context("empty results table")?.sampling.clone()
    };

    let mut figure_rows = Vec::new();
    for distribution in Distribution::all() {
        let tag = distribution.tag();
        let map_path = results_dir.join(format!("rep0/maps/{tag}.csv"));
        if !map_path.is_file() {
            continue;
        }
        let map = files::read_map(&map_path)?;
        let mut panels = Vec::new();
        for model in ModelKind::all() {
            let cell = results_dir.join(format!(
                "rep0/cells/{}_{tag}_{relations}_{sampling}",
                model.tag()
            ));
            let config_path = cell.join("config.csv");
            if !config_path.is_file() {
                continue;
            }
            let (labels, coords) = files::read_labeled_points(&config_path)?;
            let configuration = Configuration2D {
                labels,
                coords,
                stress: 0.0,
                stress_trace: vec![],
                iterations: 0,
                converged: true,
                degenerate: false,
                restart: 0,
            };
            // Permutations only decide the caption's stars; 999 keeps
            // re-rendering instant while preserving three-star
            // resolution via the cell's stored p if present.
            let result = files::read_cell_result(cell.join("result.json"))?;
            let mut comparison = compare_to_truth(&configuration, &map, 999, result.seed)?;
            if let Some(p) = result.p {
                comparison.p_permutation = p;
            }
            panels.push(FigurePanel {
                model: model.tag().to_string(),
                configuration,
                comparison,
            });
        }
        figure_rows.push(FigureRow { map, tag: tag.to_string(), panels });
    }
    Ok(render_maps_svg(&figure_rows))
}

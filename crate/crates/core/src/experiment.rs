//! Grid orchestration: run every (map × relations × sampling × model)
//! cell of the experiment, score each recovered map against its ground
//! truth, and write all artifacts to a results directory.
//!
//! Layout of a results directory:
//!
//! ```text
//! out/
//!   config.json            the exact configuration that produced the run
//!   results.csv            one row per cell per replication
//!   results.json           the same rows with runtime and error details
//!   table1.txt             standard models, median r with stars
//!   table2.txt             instance model, median r with stars
//!   figure.svg             original maps beside aligned reconstructions
//!   rep0/
//!     maps/random.csv
//!     corpora/random_nf_uniform.txt
//!     cells/ppmi_random_nf_uniform/{sim.csv, config.csv, result.json}
//!   rep1/ ...
//! ```
//!
//! The whole tree is a pure function of the configuration: the master
//! seed fans out to per-map, per-corpus, and per-cell seeds through a
//! mixing chain, so any sub-grid reproduces exactly the cells it shares
//! with the full grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bidim::{compare_to_truth, MapComparison};
use crate::corpus::{sample_corpus, statements_for, Corpus, RelationSet, Sampling};
use crate::error::{Error, Result};
use crate::files::{
    write_cell_result, write_configuration, write_corpus, write_map, write_results_csv,
    write_similarity, CellResult, ResultRow,
};
use crate::geometry::{nonmetric_mds, shepard_transform, Configuration2D, MdsParams};
use crate::its::{its_city_similarity_over, TertiarySet};
use crate::mapgen::{generate_map, true_distances, CityMap, Distribution};
use crate::models::cbow::{train_cbow, CbowParams};
use crate::models::cooc::count_cooccurrence;
use crate::models::glove::{train_glove, GloveParams};
use crate::models::lsa::{train_lsa, LsaParams};
use crate::models::ppmi::ppmi_city_similarity;
use crate::models::{cosine_city_similarity, ModelKind, SimilarityMatrix};
use crate::render::{render_maps_svg, render_table, FigurePanel, FigureRow, TableLayout};

/// Everything a grid run depends on. Serialized as `config.json` into the
/// results directory; every field has a default matching the headline
/// experiment, so a configuration file only needs the fields it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Map distributions to include, in row order.
    pub maps: Vec<Distribution>,
    /// Relation vocabularies to include.
    pub relations: Vec<RelationSet>,
    /// Sampling regimes to include.
    pub samplings: Vec<Sampling>,
    /// Models to include, in column order.
    pub models: Vec<ModelKind>,
    /// Cities per map.
    pub city_count: usize,
    /// Statements per corpus.
    pub corpus_size: usize,
    /// Weight statements by raw distance instead of inverse distance when
    /// sampling by distance.
    pub literal_weights: bool,
    /// Exponent of the similarity-to-distance transform.
    pub gamma: f64,
    /// Root seed; every other seed in the run derives from it.
    pub master_seed: u64,
    /// Independent repeats of the whole grid; reported values are medians
    /// across replications.
    pub replications: usize,
    /// Permutations for the significance test of each cell.
    pub n_permutations: usize,
    pub lsa: LsaParams,
    pub cbow: CbowParams,
    pub glove: GloveParams,
    pub mds: MdsParams,
    /// Tertiary-term set for the instance model's similarity.
    pub tertiary: TertiarySet,
    /// Results directory.
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            maps: Distribution::all().to_vec(),
            relations: RelationSet::all().to_vec(),
            samplings: Sampling::all().to_vec(),
            models: ModelKind::all().to_vec(),
            city_count: 20,
            corpus_size: 10_000,
            literal_weights: false,
            gamma: 1.0,
            master_seed: 0,
            replications: 3,
            n_permutations: 10_000,
            lsa: LsaParams::default(),
            cbow: CbowParams::default(),
            glove: GloveParams::default(),
            mds: MdsParams::default(),
            tertiary: TertiarySet::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[i + 1..].contains(a))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.maps.is_empty()
            || self.relations.is_empty()
            || self.samplings.is_empty()
            || self.models.is_empty()
        {
            return Err(Error::invalid_argument(
                "maps, relations, samplings, and models must all be non-empty",
            ));
        }
        if has_duplicates(&self.maps)
            || has_duplicates(&self.relations)
            || has_duplicates(&self.samplings)
            || has_duplicates(&self.models)
        {
            return Err(Error::invalid_argument("grid dimension lists must not repeat entries"));
        }
        if self.replications < 1 {
            return Err(Error::invalid_argument("replications must be at least 1"));
        }
        if self.city_count < 4 {
            return Err(Error::invalid_argument(
                "city_count must be at least 4 for a meaningful map comparison",
            ));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::invalid_argument("gamma must be positive and finite"));
        }
        if self.n_permutations < 1 {
            return Err(Error::invalid_argument("n_permutations must be at least 1"));
        }
        Ok(())
    }

    /// Grid cells per replication.
    pub fn cells_per_replication(&self) -> usize {
        self.maps.len() * self.relations.len() * self.samplings.len() * self.models.len()
    }
}

// Seed-derivation roles. Distinct constants keep the map stream, the
// corpus stream, and each cell's training, layout, and permutation
// streams statistically unrelated even when their coordinates coincide.
const ROLE_MAP: u64 = 1;
const ROLE_CORPUS: u64 = 2;
const ROLE_CELL: u64 = 3;
const ROLE_TRAIN: u64 = 4;
const ROLE_MDS: u64 = 5;
const ROLE_PERM: u64 = 6;

/// One avalanche round: a 64-bit finalizer with full bit diffusion, so
/// consecutive coordinates produce unrelated outputs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a coordinate list into a base seed. Every prefix change cascades,
/// so `derive_seed(s, &[a, b])` and `derive_seed(s, &[a', b])` are
/// unrelated even when `b` matches.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ p))
}

/// Coordinates are indices into the canonical enumerations, not into the
/// configured lists, so a sub-grid reproduces exactly the cells it shares
/// with the full grid.
fn canonical_index<T: PartialEq + Copy>(item: T, all: &[T]) -> u64 {
    all.iter().position(|x| *x == item).expect("enum value missing from its canonical list") as u64
}

fn map_seed(master: u64, rep: usize, map: Distribution) -> u64 {
    derive_seed(master, &[ROLE_MAP, rep as u64, canonical_index(map, &Distribution::all())])
}

fn corpus_seed(
    master: u64,
    rep: usize,
    map: Distribution,
    relations: RelationSet,
    sampling: Sampling,
) -> u64 {
    derive_seed(
        master,
        &[
            ROLE_CORPUS,
            rep as u64,
            canonical_index(map, &Distribution::all()),
            canonical_index(relations, &RelationSet::all()),
            canonical_index(sampling, &Sampling::all()),
        ],
    )
}

fn cell_seed(
    master: u64,
    rep: usize,
    map: Distribution,
    relations: RelationSet,
    sampling: Sampling,
    model: ModelKind,
) -> u64 {
    derive_seed(
        master,
        &[
            ROLE_CELL,
            rep as u64,
            canonical_index(map, &Distribution::all()),
            canonical_index(relations, &RelationSet::all()),
            canonical_index(sampling, &Sampling::all()),
            canonical_index(model, &ModelKind::all()),
        ],
    )
}

/// The aggregate outcome of a grid run: one row per cell per replication,
/// in deterministic (replication, map, relations, sampling, model) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 })
}

impl ResultsTable {
    /// Rows of one grid cell across replications.
    pub fn cell_rows<'a>(
        &'a self,
        model: &'a str,
        map: &'a str,
        relations: &'a str,
        sampling: &'a str,
    ) -> impl Iterator<Item = &'a ResultRow> {
        self.rows.iter().filter(move |row| {
            row.model == model && row.map == map && row.relations == relations && row.sampling == sampling
        })
    }

    /// Median r of a cell across replications; `None` if every
    /// replication failed.
    pub fn median_r(&self, model: &str, map: &str, relations: &str, sampling: &str) -> Option<f64> {
        let mut values: Vec<f64> =
            self.cell_rows(model, map, relations, sampling).filter_map(|row| row.r).collect();
        median(&mut values)
    }

    /// Median permutation p of a cell across replications.
    pub fn median_p(&self, model: &str, map: &str, relations: &str, sampling: &str) -> Option<f64> {
        let mut values: Vec<f64> =
            self.cell_rows(model, map, relations, sampling).filter_map(|row| row.p).collect();
        median(&mut values)
    }

    /// Rows of one replication.
    pub fn replication_rows(&self, replication: usize) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(move |row| row.replication == replication)
    }
}

/// A successfully computed cell, before any artifact is written.
struct CellOutcome {
    similarity: SimilarityMatrix,
    configuration: Configuration2D,
    comparison: MapComparison,
}

/// The similarity matrix a model assigns to the corpus's cities.
fn model_similarity(
    model: ModelKind,
    corpus: &Corpus,
    config: &ExperimentConfig,
    train_seed: u64,
) -> Result<SimilarityMatrix> {
    let cities = corpus.city_tokens();
    match model {
        ModelKind::Ppmi => ppmi_city_similarity(corpus),
        ModelKind::Lsa => {
            let embeddings = train_lsa(corpus, &config.lsa)?;
            cosine_city_similarity(&embeddings, &cities)
        }
        ModelKind::Cbow => {
            let params = CbowParams { seed: train_seed, ..config.cbow.clone() };
            let embeddings = train_cbow(corpus, &params)?;
            cosine_city_similarity(&embeddings, &cities)
        }
        ModelKind::Glove => {
            let params = GloveParams { seed: train_seed, ..config.glove.clone() };
            let cooc = count_cooccurrence(corpus)?;
            let embeddings = train_glove(&cooc, &params)?;
            cosine_city_similarity(&embeddings, &cities)
        }
        ModelKind::Its => its_city_similarity_over(corpus, config.tertiary),
    }
}

/// Run one cell end to end: similarity, distance transform, layout,
/// comparison to truth. Pure compute; artifact writes happen in the
/// caller so an I/O failure is never misreported as a model failure.
fn compute_cell(
    model: ModelKind,
    corpus: &Corpus,
    map: &CityMap,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<CellOutcome> {
    let train_seed = derive_seed(seed, &[ROLE_TRAIN]);
    let mds_seed = derive_seed(seed, &[ROLE_MDS]);
    let perm_seed = derive_seed(seed, &[ROLE_PERM]);

    let similarity = model_similarity(model, corpus, config, train_seed)?;
    let distances = shepard_transform(&similarity, config.gamma)?;
    let mds_params = MdsParams { seed: mds_seed, ..config.mds.clone() };
    let configuration = nonmetric_mds(&distances, &mds_params)?;
    let comparison = compare_to_truth(&configuration, map, config.n_permutations, perm_seed)?;
    Ok(CellOutcome { similarity, configuration, comparison })
}

/// Per-map figure data collected while the grid runs.
type FigureCells = BTreeMap<(String, String), (Configuration2D, MapComparison)>;

/// Run the whole grid and write every artifact under
/// `config.out_dir`. Cell-level failures (a degenerate similarity
/// matrix, a collapsed layout) are recorded in their row and the grid
/// continues; only configuration and I/O errors abort the run.
pub fn run_grid(config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate()?;
    let out = &config.out_dir;
    fs::create_dir_all(out)?;
    let config_json = serde_json::to_string_pretty(config)
        .map_err(|e| Error::invalid_state(format!("json: {e}")))?;
    fs::write(out.join("config.json"), config_json + "\n")?;

    // The figure shows the most diagnostic condition present: inverse-
    // distance sampling of near/far statements when available.
    let figure_relations =
        config.relations.iter().copied().find(|r| *r == RelationSet::NearFar).unwrap_or(config.relations[0]);
    let figure_sampling =
        config.samplings.iter().copied().find(|s| *s == Sampling::Distance).unwrap_or(config.samplings[0]);

    let mut rows = Vec::with_capacity(config.replications * config.cells_per_replication());
    let mut figure_maps: Vec<(Distribution, CityMap)> = Vec::new();
    let mut figure_cells: FigureCells = BTreeMap::new();

    for rep in 0..config.replications {
        let rep_dir = out.join(format!("rep{rep}"));
        let maps_dir = rep_dir.join("maps");
        let corpora_dir = rep_dir.join("corpora");
        let cells_dir = rep_dir.join("cells");
        fs::create_dir_all(&maps_dir)?;
        fs::create_dir_all(&corpora_dir)?;
        fs::create_dir_all(&cells_dir)?;

        for &distribution in &config.maps {
            let map = generate_map(distribution, config.city_count, map_seed(config.master_seed, rep, distribution))?;
            write_map(maps_dir.join(format!("{}.csv", distribution.tag())), &map)?;
            let distances = true_distances(&map);
            if rep == 0 {
                figure_maps.push((distribution, map.clone()));
            }

            for &relations in &config.relations {
                let statements = statements_for(&map, relations);

                for &sampling in &config.samplings {
                    let corpus = sample_corpus(
                        &statements,
                        sampling,
                        &distances,
                        config.corpus_size,
                        corpus_seed(config.master_seed, rep, distribution, relations, sampling),
                        config.literal_weights,
                    );
                    let condition = format!("{}_{}_{}", distribution.tag(), relations.tag(), sampling.tag());
                    let corpus = match corpus {
                        Ok(c) => {
                            write_corpus(corpora_dir.join(format!("{condition}.txt")), &c)?;
                            c
                        }
                        Err(e) => {
                            record_condition_failure(
                                &mut rows, config, rep, distribution, relations, sampling, &cells_dir, &e,
                            )?;
                            continue;
                        }
                    };

                    for &model in &config.models {
                        let seed = cell_seed(config.master_seed, rep, distribution, relations, sampling, model);
                        let cell_dir = cells_dir.join(format!("{}_{condition}", model.tag()));
                        fs::create_dir_all(&cell_dir)?;

                        let started = Instant::now();
                        let outcome = compute_cell(model, &corpus, &map, config, seed);
                        let runtime_ms = started.elapsed().as_secs_f64() * 1e3;

                        let row = match outcome {
                            Ok(cell) => {
                                write_similarity(cell_dir.join("sim.csv"), &cell.similarity)?;
                                write_configuration(cell_dir.join("config.csv"), &cell.configuration)?;
                                let result = CellResult {
                                    model: model.tag().into(),
                                    map: distribution.tag().into(),
                                    relations: relations.tag().into(),
                                    sampling: sampling.tag().into(),
                                    r: Some(cell.comparison.fit.r),
                                    p: Some(cell.comparison.p_permutation),
                                    stars: cell.comparison.stars().into(),
                                    seed,
                                    error: None,
                                };
                                write_cell_result(cell_dir.join("result.json"), &result)?;
                                if rep == 0 && relations == figure_relations && sampling == figure_sampling {
                                    figure_cells.insert(
                                        (distribution.tag().into(), model.tag().into()),
                                        (cell.configuration.clone(), cell.comparison.clone()),
                                    );
                                }
                                ResultRow {
                                    model: model.tag().into(),
                                    map: distribution.tag().into(),
                                    relations: relations.tag().into(),
                                    sampling: sampling.tag().into(),
                                    replication: rep,
                                    r: Some(cell.comparison.fit.r),
                                    p: Some(cell.comparison.p_permutation),
                                    stars: cell.comparison.stars().into(),
                                    stress: Some(cell.configuration.stress),
                                    runtime_ms: Some(runtime_ms),
                                    error: None,
                                }
                            }
                            Err(e) => {
                                let message = e.to_string();
                                let result = CellResult {
                                    model: model.tag().into(),
                                    map: distribution.tag().into(),
                                    relations: relations.tag().into(),
                                    sampling: sampling.tag().into(),
                                    r: None,
                                    p: None,
                                    stars: String::new(),
                                    seed,
                                    error: Some(message.clone()),
                                };
                                write_cell_result(cell_dir.join("result.json"), &result)?;
                                ResultRow {
                                    model: model.tag().into(),
                                    map: distribution.tag().into(),
                                    relations: relations.tag().into(),
                                    sampling: sampling.tag().into(),
                                    replication: rep,
                                    r: None,
                                    p: None,
                                    stars: String::new(),
                                    stress: None,
                                    runtime_ms: Some(runtime_ms),
                                    error: Some(message),
                                }
                            }
                        };
                        rows.push(row);
                    }
                }
            }
        }
    }

    let table = ResultsTable { rows };
    write_results_csv(out.join("results.csv"), &table.rows)?;
    let results_json = serde_json::to_string_pretty(&table)
        .map_err(|e| Error::invalid_state(format!("json: {e}")))?;
    fs::write(out.join("results.json"), results_json + "\n")?;

    fs::write(out.join("table1.txt"), render_table(&table, TableLayout::Table1))?;
    fs::write(out.join("table2.txt"), render_table(&table, TableLayout::Table2))?;

    let figure_rows: Vec<FigureRow> = figure_maps
        .iter()
        .map(|(distribution, map)| {
            let panels = config
                .models
                .iter()
                .filter_map(|model| {
                    figure_cells.get(&(distribution.tag().to_string(), model.tag().to_string())).map(
                        |(configuration, comparison)| FigurePanel {
                            model: model.tag().into(),
                            configuration: configuration.clone(),
                            comparison: comparison.clone(),
                        },
                    )
                })
                .collect();
            FigureRow { map: map.clone(), tag: distribution.tag().into(), panels }
        })
        .collect();
    fs::write(out.join("figure.svg"), render_maps_svg(&figure_rows))?;

    Ok(table)
}

/// Record a whole condition's failure (its corpus could not be sampled)
/// as one row per model, so the grid keeps its row-count invariant.
#[allow(clippy::too_many_arguments)]
fn record_condition_failure(
    rows: &mut Vec<ResultRow>,
    config: &ExperimentConfig,
    rep: usize,
    distribution: Distribution,
    relations: RelationSet,
    sampling: Sampling,
    cells_dir: &Path,
    error: &Error,
) -> Result<()> {
    let message = format!("corpus: {error}");
    for &model in &config.models {
        let seed = cell_seed(config.master_seed, rep, distribution, relations, sampling, model);
        let cell_dir = cells_dir.join(format!(
            "{}_{}_{}_{}",
            model.tag(),
            distribution.tag(),
            relations.tag(),
            sampling.tag()
        ));
        fs::create_dir_all(&cell_dir)?;
        let result = CellResult {
            model: model.tag().into(),
            map: distribution.tag().into(),
            relations: relations.tag().into(),
            sampling: sampling.tag().into(),
            r: None,
            p: None,
            stars: String::new(),
            seed,
            error: Some(message.clone()),
        };
        write_cell_result(cell_dir.join("result.json"), &result)?;
        rows.push(ResultRow {
            model: model.tag().into(),
            map: distribution.tag().into(),
            relations: relations.tag().into(),
            sampling: sampling.tag().into(),
            replication: rep,
            r: None,
            p: None,
            stars: String::new(),
            stress: None,
            runtime_ms: None,
            error: Some(message.clone()),
        });
    }
    Ok(())
}

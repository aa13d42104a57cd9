//! On-disk formats for every pipeline artifact.
//!
//! All tabular files are UTF-8 CSV with `.` as the decimal separator.
//! Floating-point values are written in Rust's shortest round-trip form,
//! so files are byte-stable across runs with the same seed and re-reading
//! reproduces the exact in-memory value.
//!
//! Formats:
//! - maps and recovered configurations: CSV with header `label,x,y`
//! - corpora: plain text, one three-token statement per line
//! - similarity matrices: CSV with a city-label header row and column;
//!   the top-left corner cell carries the producing model's tag
//! - embeddings: CSV with header `token,v0,v1,...`
//! - per-cell results: a JSON object
//! - aggregate results: CSV with header
//!   `model,map,relations,sampling,replication,r,p,stars,stress`

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Statement};
use crate::error::{Error, Result};
use crate::geometry::Configuration2D;
use crate::linalg::Matrix;
use crate::mapgen::CityMap;
use crate::models::{EmbeddingSet, SimilarityMatrix};

fn from_csv(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::parse(format!("csv: {other:?}")),
        }
    } else {
        Error::parse(format!("csv: {e}"))
    }
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::parse(format!("{what}: expected a number, got '{field}'")))
}

/// Write a `label,x,y` CSV — the shared schema of map files and recovered
/// configurations, so the evaluation stage consumes either.
pub fn write_labeled_points(
    path: impl AsRef<Path>,
    labels: &[String],
    coords: &[(f64, f64)],
) -> Result<()> {
    if labels.len() != coords.len() {
        return Err(Error::invalid_argument("label/coordinate count mismatch"));
    }
    let mut w = csv::Writer::from_path(path).map_err(from_csv)?;
    w.write_record(["label", "x", "y"]).map_err(from_csv)?;
    for (label, &(x, y)) in labels.iter().zip(coords) {
        w.write_record([label.as_str(), &x.to_string(), &y.to_string()]).map_err(from_csv)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a `label,x,y` CSV back into labels and coordinates.
pub fn read_labeled_points(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<(f64, f64)>)> {
    let mut rdr = csv::Reader::from_path(path.as_ref()).map_err(from_csv)?;
    let header = rdr.headers().map_err(from_csv)?;
    if !header.iter().eq(["label", "x", "y"]) {
        return Err(Error::parse(format!(
            "expected header 'label,x,y', got '{}'",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut labels = Vec::new();
    let mut coords = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(from_csv)?;
        if record.len() != 3 {
            return Err(Error::parse(format!("expected 3 fields, got {}", record.len())));
        }
        labels.push(record[0].to_string());
        coords.push((parse_f64(&record[1], "x")?, parse_f64(&record[2], "y")?));
    }
    Ok((labels, coords))
}

/// Write a city map as `label,x,y` CSV.
pub fn write_map(path: impl AsRef<Path>, map: &CityMap) -> Result<()> {
    write_labeled_points(path, &map.labels, &map.coords)
}

/// Read a city map, validating labels and coordinates. Generation
/// provenance (distribution, seed) is not part of the file format, so it
/// comes back as `None`.
pub fn read_map(path: impl AsRef<Path>) -> Result<CityMap> {
    let (labels, coords) = read_labeled_points(path)?;
    CityMap::from_points(labels, coords)
}

/// Write a recovered configuration as `label,x,y` CSV.
pub fn write_configuration(path: impl AsRef<Path>, config: &Configuration2D) -> Result<()> {
    write_labeled_points(path, &config.labels, &config.coords)
}

/// Write a corpus as plain text, one statement per line.
pub fn write_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    let mut out = String::with_capacity(corpus.sentences.len() * 20);
    for sentence in &corpus.sentences {
        out.push_str(&sentence.line());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a corpus from plain text. The text format carries only the
/// statements themselves, so sampling provenance is not recovered: the
/// result reports its own length as both requested and actual size.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let file = fs::File::open(path.as_ref())?;
    let mut sentences = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        sentences.push(Statement::parse(&line)?);
    }
    if sentences.is_empty() {
        return Err(Error::parse("corpus file contains no statements"));
    }
    Ok(Corpus::from_sentences(sentences))
}

/// Write a similarity matrix as CSV with the city labels as both header
/// row and first column. The top-left corner cell holds the tag of the
/// model that produced the matrix.
pub fn write_similarity(path: impl AsRef<Path>, sim: &SimilarityMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(from_csv)?;
    let mut header: Vec<&str> = Vec::with_capacity(sim.len() + 1);
    header.push(&sim.model);
    header.extend(sim.labels.iter().map(String::as_str));
    w.write_record(&header).map_err(from_csv)?;
    let mut record = Vec::with_capacity(sim.len() + 1);
    for i in 0..sim.len() {
        record.clear();
        record.push(sim.labels[i].clone());
        for j in 0..sim.len() {
            record.push(sim.get(i, j).to_string());
        }
        w.write_record(&record).map_err(from_csv)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a similarity matrix, checking that the row labels repeat the
/// header labels in order and that the values form a valid matrix.
pub fn read_similarity(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(false).from_path(path.as_ref()).map_err(from_csv)?;
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::parse("empty similarity file"))?
        .map_err(from_csv)?;
    let model = header[0].to_string();
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        let record = records
            .next()
            .ok_or_else(|| Error::parse(format!("similarity file ends after {i} rows, expected {n}")))?
            .map_err(from_csv)?;
        if record.len() != n + 1 {
            return Err(Error::parse(format!(
                "similarity row {i} has {} fields, expected {}",
                record.len(),
                n + 1
            )));
        }
        if record[0] != *labels[i] {
            return Err(Error::parse(format!(
                "similarity row {i} is labeled '{}' but the header says '{}'",
                &record[0], labels[i]
            )));
        }
        for j in 0..n {
            values[(i, j)] = parse_f64(&record[j + 1], "similarity")?;
        }
    }
    if records.next().is_some() {
        return Err(Error::parse(format!("similarity file has more than {n} rows")));
    }
    SimilarityMatrix::new(labels, values, model)
}

/// Write embeddings as CSV with header `token,v0,v1,...`.
pub fn write_embeddings(path: impl AsRef<Path>, embeddings: &EmbeddingSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(from_csv)?;
    let dims = embeddings.dims();
    let mut header = vec!["token".to_string()];
    header.extend((0..dims).map(|d| format!("v{d}")));
    w.write_record(&header).map_err(from_csv)?;
    let mut record = Vec::with_capacity(dims + 1);
    for (i, token) in embeddings.tokens.iter().enumerate() {
        record.clear();
        record.push(token.clone());
        record.extend(embeddings.vector(i).iter().map(f64::to_string));
        w.write_record(&record).map_err(from_csv)?;
    }
    w.flush()?;
    Ok(())
}

/// Read an embeddings CSV back as tokens plus one row per token. The
/// producing model is not part of the format, so only the raw vectors
/// come back.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<(Vec<String>, Matrix)> {
    let mut rdr = csv::Reader::from_path(path.as_ref()).map_err(from_csv)?;
    let header = rdr.headers().map_err(from_csv)?.clone();
    if header.get(0) != Some("token") || header.len() < 2 {
        return Err(Error::parse("expected embeddings header 'token,v0,v1,...'"));
    }
    let dims = header.len() - 1;
    let mut tokens = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(from_csv)?;
        if record.len() != dims + 1 {
            return Err(Error::parse(format!(
                "embedding row has {} fields, expected {}",
                record.len(),
                dims + 1
            )));
        }
        tokens.push(record[0].to_string());
        let mut row = Vec::with_capacity(dims);
        for j in 0..dims {
            row.push(parse_f64(&record[j + 1], "embedding value")?);
        }
        rows.push(row);
    }
    Ok((tokens, Matrix::from_rows(&rows)))
}

/// Outcome of evaluating one recovered map against its ground truth —
/// the per-cell JSON artifact.
///
/// `r` and `p` are `None` (JSON `null`) when the cell failed before
/// evaluation; `error` then says why and is omitted from successful
/// results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub model: String,
    pub map: String,
    pub relations: String,
    pub sampling: String,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub stars: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Write a per-cell result as pretty-printed JSON.
pub fn write_cell_result(path: impl AsRef<Path>, result: &CellResult) -> Result<()> {
    let mut text = serde_json::to_string_pretty(result)
        .map_err(|e| Error::invalid_state(format!("json: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Read a per-cell result JSON.
pub fn read_cell_result(path: impl AsRef<Path>) -> Result<CellResult> {
    let text = fs::read_to_string(path.as_ref())?;
    serde_json::from_str(&text).map_err(|e| Error::parse(format!("json: {e}")))
}

/// One row of the aggregate results table: a single grid cell in a single
/// replication.
///
/// `r`, `p`, and `stress` are `None` for failed cells, which appear as
/// empty fields in the CSV. `runtime_ms` is wall-clock bookkeeping and is
/// deliberately excluded from the CSV so aggregate output stays
/// byte-identical across equally seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub map: String,
    pub relations: String,
    pub sampling: String,
    pub replication: usize,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub stars: String,
    pub stress: Option<f64>,
    #[serde(default)]
    pub runtime_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

const RESULTS_HEADER: [&str; 9] =
    ["model", "map", "relations", "sampling", "replication", "r", "p", "stars", "stress"];

fn opt_f64_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt_f64(field: &str, what: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, what).map(Some)
    }
}

/// Write the aggregate results CSV with header
/// `model,map,relations,sampling,replication,r,p,stars,stress`.
pub fn write_results_csv(path: impl AsRef<Path>, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(from_csv)?;
    w.write_record(RESULTS_HEADER).map_err(from_csv)?;
    for row in rows {
        w.write_record([
            row.model.as_str(),
            row.map.as_str(),
            row.relations.as_str(),
            row.sampling.as_str(),
            &row.replication.to_string(),
            &opt_f64_field(row.r),
            &opt_f64_field(row.p),
            row.stars.as_str(),
            &opt_f64_field(row.stress),
        ])
        .map_err(from_csv)?;
    }
    w.flush()?;
    Ok(())
}

/// Read an aggregate results CSV. Runtime is not part of the format and
/// comes back as `None`; so does the error tag of failed rows.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path.as_ref()).map_err(from_csv)?;
    let header = rdr.headers().map_err(from_csv)?;
    if !header.iter().eq(RESULTS_HEADER) {
        return Err(Error::parse(format!(
            "expected header '{}', got '{}'",
            RESULTS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(from_csv)?;
        if record.len() != RESULTS_HEADER.len() {
            return Err(Error::parse(format!(
                "results row has {} fields, expected {}",
                record.len(),
                RESULTS_HEADER.len()
            )));
        }
        rows.push(ResultRow {
            model: record[0].to_string(),
            map: record[1].to_string(),
            relations: record[2].to_string(),
            sampling: record[3].to_string(),
            replication: record[4]
                .parse::<usize>()
                .map_err(|_| Error::parse(format!("replication: got '{}'", &record[4])))?,
            r: parse_opt_f64(&record[5], "r")?,
            p: parse_opt_f64(&record[6], "p")?,
            stars: record[7].to_string(),
            stress: parse_opt_f64(&record[8], "stress")?,
            runtime_ms: None,
            error: None,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{sample_corpus, statements_for, RelationSet, Sampling};
    use crate::mapgen::{generate_map, true_distances, Distribution};
    use crate::models::cosine_city_similarity;
    use crate::models::lsa::{train_lsa, LsaParams};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = tempfile::Builder::new().prefix("files-test").tempdir().unwrap();
        // Leak the handle so the directory outlives the test body; the OS
        // temp cleaner owns it from here.
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn map_round_trips_exactly() {
        let map = generate_map(Distribution::Clustered, 20, 99).unwrap();
        let path = tmp("map.csv");
        write_map(&path, &map).unwrap();
        let back = read_map(&path).unwrap();
        assert_eq!(back.labels, map.labels);
        assert_eq!(back.coords, map.coords);
        assert_eq!(back.distribution, None);
    }

    #[test]
    fn labeled_points_reject_bad_headers() {
        let path = tmp("bad.csv");
        std::fs::write(&path, "x,y,label\n0.1,0.2,A\n").unwrap();
        assert!(matches!(read_labeled_points(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn corpus_round_trips_statements() {
        let map = generate_map(Distribution::Random, 12, 5).unwrap();
        let set = statements_for(&map, RelationSet::Cardinal);
        let d = true_distances(&map);
        let corpus = sample_corpus(&set, Sampling::Distance, &d, 500, 7, false).unwrap();
        let path = tmp("corpus.txt");
        write_corpus(&path, &corpus).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back.sentences, corpus.sentences);
        assert_eq!(back.vocabulary, corpus.vocabulary);
        assert_eq!(back.actual_size, corpus.actual_size);
    }

    #[test]
    fn similarity_round_trips_exactly() {
        let map = generate_map(Distribution::Random, 10, 3).unwrap();
        let set = statements_for(&map, RelationSet::NearFar);
        let d = true_distances(&map);
        let corpus = sample_corpus(&set, Sampling::Uniform, &d, 300, 1, false).unwrap();
        let sim = crate::models::ppmi::ppmi_city_similarity(&corpus).unwrap();
        let path = tmp("sim.csv");
        write_similarity(&path, &sim).unwrap();
        let back = read_similarity(&path).unwrap();
        assert_eq!(back, sim);
    }

    #[test]
    fn similarity_reader_rejects_label_mismatch() {
        let path = tmp("sim.csv");
        std::fs::write(&path, "ppmi,A,B\nA,1,0.5\nC,0.5,1\n").unwrap();
        assert!(matches!(read_similarity(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn embeddings_round_trip_exactly() {
        let map = generate_map(Distribution::Random, 8, 21).unwrap();
        let set = statements_for(&map, RelationSet::NearFar);
        let d = true_distances(&map);
        let corpus = sample_corpus(&set, Sampling::Uniform, &d, 200, 2, false).unwrap();
        let emb = train_lsa(&corpus, &LsaParams { dims: 6 }).unwrap();
        let path = tmp("emb.csv");
        write_embeddings(&path, &emb).unwrap();
        let (tokens, vectors) = read_embeddings(&path).unwrap();
        assert_eq!(tokens, emb.tokens);
        assert_eq!(vectors, emb.vectors);
        // The vectors still support the downstream similarity computation.
        let cities = corpus.city_tokens();
        cosine_city_similarity(&emb, &cities).unwrap();
    }

    #[test]
    fn cell_result_round_trips_and_orders_fields() {
        let result = CellResult {
            model: "ppmi".into(),
            map: "random".into(),
            relations: "nf".into(),
            sampling: "distance".into(),
            r: Some(0.9573),
            p: Some(0.000_099_990_000_999_900_01),
            stars: "***".into(),
            seed: 42,
            error: None,
        };
        let path = tmp("result.json");
        write_cell_result(&path, &result).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let order = ["\"model\"", "\"map\"", "\"relations\"", "\"sampling\"", "\"r\"", "\"p\"", "\"stars\"", "\"seed\""];
        let mut last = 0;
        for key in order {
            let pos = text.find(key).unwrap_or_else(|| panic!("missing {key}"));
            assert!(pos > last, "field {key} out of order");
            last = pos;
        }
        assert!(!text.contains("\"error\""));
        assert_eq!(read_cell_result(&path).unwrap(), result);
    }

    #[test]
    fn failed_cell_result_keeps_null_scores() {
        let result = CellResult {
            model: "cbow".into(),
            map: "circular".into(),
            relations: "nsew".into(),
            sampling: "uniform".into(),
            r: None,
            p: None,
            stars: String::new(),
            seed: 7,
            error: Some("similarity matrix is constant".into()),
        };
        let path = tmp("failed.json");
        write_cell_result(&path, &result).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"r\": null"));
        assert!(text.contains("\"error\""));
        assert_eq!(read_cell_result(&path).unwrap(), result);
    }

    #[test]
    fn results_csv_round_trips_with_pinned_header() {
        let rows = vec![
            ResultRow {
                model: "glove".into(),
                map: "random".into(),
                relations: "nf".into(),
                sampling: "distance".into(),
                replication: 0,
                r: Some(0.9714285714285713),
                p: Some(0.0001),
                stars: "***".into(),
                stress: Some(0.031),
                runtime_ms: Some(1523.0),
                error: None,
            },
            ResultRow {
                model: "lsa".into(),
                map: "clustered".into(),
                relations: "nsew".into(),
                sampling: "uniform".into(),
                replication: 2,
                r: None,
                p: None,
                stars: String::new(),
                stress: None,
                runtime_ms: None,
                error: Some("boom".into()),
            },
        ];
        let path = tmp("results.csv");
        write_results_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("model,map,relations,sampling,replication,r,p,stars,stress\n"));
        let back = read_results_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].r, rows[0].r);
        assert_eq!(back[0].p, rows[0].p);
        assert_eq!(back[0].stress, rows[0].stress);
        // Runtime and error annotations are not part of the CSV format.
        assert_eq!(back[0].runtime_ms, None);
        assert_eq!(back[1].r, None);
        assert_eq!(back[1].error, None);
    }
}

//! Distributional models: count-based (PPMI, LSA) and prediction-based
//! (CBOW, GloVe) representations of corpus tokens, all reduced to one
//! city-by-city similarity matrix.

pub mod cbow;
pub mod cooc;
pub mod glove;
pub mod lsa;
pub mod ppmi;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};

/// The five model families the experiment compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ppmi,
    Lsa,
    Cbow,
    Glove,
    Its,
}

impl ModelKind {
    pub fn all() -> [ModelKind; 5] {
        [ModelKind::Ppmi, ModelKind::Lsa, ModelKind::Cbow, ModelKind::Glove, ModelKind::Its]
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Ppmi => "ppmi",
            ModelKind::Lsa => "lsa",
            ModelKind::Cbow => "cbow",
            ModelKind::Glove => "glove",
            ModelKind::Its => "its",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppmi" => Ok(ModelKind::Ppmi),
            "lsa" => Ok(ModelKind::Lsa),
            "cbow" => Ok(ModelKind::Cbow),
            "glove" => Ok(ModelKind::Glove),
            "its" => Ok(ModelKind::Its),
            other => Err(Error::parse(format!("unknown model '{other}'"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// One vector per vocabulary token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    /// Sorted vocabulary; row `i` of `vectors` belongs to `tokens[i]`.
    pub tokens: Vec<String>,
    pub vectors: Matrix,
    pub model: ModelKind,
    /// Mean training loss per epoch; empty for count-based models.
    pub loss_trace: Vec<f64>,
}

impl EmbeddingSet {
    pub fn dims(&self) -> usize {
        self.vectors.cols()
    }

    pub fn token_index(&self, token: &str) -> Option<usize> {
        self.tokens.iter().position(|t| t == token)
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }
}

/// Symmetric city-by-city similarity matrix, the interface between every
/// model and the map-recovery stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    pub values: Matrix,
    /// Tag of the model that produced it (free-form when read from disk).
    pub model: String,
}

impl SimilarityMatrix {
    pub fn new(labels: Vec<String>, values: Matrix, model: impl Into<String>) -> Result<Self> {
        let sim = SimilarityMatrix { labels, values, model: model.into() };
        sim.validate()?;
        Ok(sim)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.values.rows() != n || self.values.cols() != n {
            return Err(Error::invalid_state("similarity matrix shape mismatch"));
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.values[(i, j)];
                if !v.is_finite() {
                    return Err(Error::invalid_state(format!(
                        "non-finite similarity between '{}' and '{}'",
                        self.labels[i], self.labels[j]
                    )));
                }
                if (v - self.values[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid_state("similarity matrix is not symmetric"));
                }
            }
        }
        Ok(())
    }
}

/// Cosine similarity between the embedding vectors of the given cities.
///
/// The diagonal is exactly 1 and off-diagonal values are clamped to
/// `[-1, 1]` to absorb rounding. A city with a zero-norm vector cannot be
/// placed on a map and is reported as an error.
pub fn cosine_city_similarity(embeddings: &EmbeddingSet, cities: &[String]) -> Result<SimilarityMatrix> {
    let n = cities.len();
    let mut rows = Vec::with_capacity(n);
    for city in cities {
        let idx = embeddings
            .token_index(city)
            .ok_or_else(|| Error::invalid_argument(format!("city '{city}' has no embedding")))?;
        let v = embeddings.vector(idx);
        let nv = norm(v);
        if nv <= 0.0 || !nv.is_finite() {
            return Err(Error::DegenerateEmbedding(city.clone()));
        }
        rows.push((v, nv));
    }
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        values[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let (vi, ni) = rows[i];
            let (vj, nj) = rows[j];
            let c = (dot(vi, vj) / (ni * nj)).clamp(-1.0, 1.0);
            values[(i, j)] = c;
            values[(j, i)] = c;
        }
    }
    SimilarityMatrix::new(cities.to_vec(), values, embeddings.model.tag())
}

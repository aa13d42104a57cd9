//! Latent semantic analysis: tf-idf word-by-document matrix plus truncated
//! SVD. Each sentence counts as one document.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, Matrix};
use crate::models::{EmbeddingSet, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsaParams {
    /// Number of retained singular dimensions.
    pub dims: usize,
}

impl Default for LsaParams {
    fn default() -> Self {
        LsaParams { dims: 20 }
    }
}

/// The tf-idf weighted word-by-document matrix: raw term frequency times
/// `ln(n_docs / doc_frequency)`. A token that appears in no document gets a
/// zero row rather than an infinite weight.
pub fn tfidf_matrix(corpus: &Corpus) -> Matrix {
    let vocab = &corpus.vocabulary;
    let index = |token: &str| vocab.binary_search_by(|t| t.as_str().cmp(token)).expect("token in vocabulary");
    let n_docs = corpus.sentences.len();
    let mut tf = Matrix::zeros(vocab.len(), n_docs);
    let mut df = vec![0usize; vocab.len()];
    for (d, sentence) in corpus.sentences.iter().enumerate() {
        let ids = [
            index(&sentence.subject),
            index(sentence.relation.token()),
            index(&sentence.object),
        ];
        for &t in &ids {
            if tf[(t, d)] == 0.0 {
                df[t] += 1;
            }
            tf[(t, d)] += 1.0;
        }
    }
    for t in 0..vocab.len() {
        let idf = if df[t] == 0 { 0.0 } else { (n_docs as f64 / df[t] as f64).ln() };
        for v in tf.row_mut(t) {
            *v *= idf;
        }
    }
    tf
}

/// Train LSA embeddings: word vectors are the rows of `U * Sigma` after
/// truncating the SVD to `dims` dimensions. When `dims` exceeds the matrix
/// rank the extra columns are zero.
pub fn train_lsa(corpus: &Corpus, params: &LsaParams) -> Result<EmbeddingSet> {
    if corpus.sentences.is_empty() {
        return Err(Error::invalid_argument("empty corpus"));
    }
    if params.dims == 0 {
        return Err(Error::invalid_argument("dims must be positive"));
    }
    let a = tfidf_matrix(corpus);
    let svd = jacobi_svd(&a);
    let m = a.rows();
    let mut vectors = Matrix::zeros(m, params.dims);
    for i in 0..m {
        for k in 0..params.dims.min(m) {
            vectors[(i, k)] = svd.u[(i, k)] * svd.sigma[k];
        }
    }
    Ok(EmbeddingSet {
        tokens: corpus.vocabulary.clone(),
        vectors,
        model: ModelKind::Lsa,
        loss_trace: Vec::new(),
    })
}

//! Token co-occurrence counts over whole sentences.

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Symmetric co-occurrence counts: `counts[(a, b)]` is the number of
/// sentences in which tokens `a` and `b` appeared together. The window is
/// the whole sentence, and the diagonal stays zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Cooccurrence {
    /// Sorted vocabulary; indexes both matrix axes.
    pub vocab: Vec<String>,
    pub counts: Matrix,
}

impl Cooccurrence {
    pub fn token_index(&self, token: &str) -> Option<usize> {
        self.vocab.binary_search_by(|t| t.as_str().cmp(token)).ok()
    }

    /// Sum over all ordered token pairs.
    pub fn total(&self) -> f64 {
        let n = self.vocab.len();
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                t += self.counts[(i, j)];
            }
        }
        t
    }

    /// Sum of row `i`, i.e. how often token `i` co-occurs with anything.
    pub fn row_total(&self, i: usize) -> f64 {
        self.counts.row(i).iter().sum()
    }
}

/// Count co-occurrences across a corpus.
pub fn count_cooccurrence(corpus: &Corpus) -> Result<Cooccurrence> {
    if corpus.sentences.is_empty() {
        return Err(Error::invalid_argument("empty corpus"));
    }
    let vocab = corpus.vocabulary.clone();
    let index = |token: &str| -> Result<usize> {
        vocab
            .binary_search_by(|t| t.as_str().cmp(token))
            .map_err(|_| Error::invalid_state(format!("token '{token}' missing from vocabulary")))
    };
    let n = vocab.len();
    let mut counts = Matrix::zeros(n, n);
    for sentence in &corpus.sentences {
        let ids = [
            index(&sentence.subject)?,
            index(sentence.relation.token())?,
            index(&sentence.object)?,
        ];
        for a in 0..3 {
            for b in (a + 1)..3 {
                counts[(ids[a], ids[b])] += 1.0;
                counts[(ids[b], ids[a])] += 1.0;
            }
        }
    }
    Ok(Cooccurrence { vocab, counts })
}

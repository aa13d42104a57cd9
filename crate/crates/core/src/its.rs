//! An instance memory over raw sentences.
//!
//! Nothing is trained: every sentence is stored verbatim as a trace. A
//! probe retrieves an "echo" — the normalized sum of all traces containing
//! every probe token. Two cities are compared indirectly: for each third
//! token, compare what memory retrieves about `(city, token)` against what
//! it retrieves about `(other city, token)`, and sum those agreements.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Relation};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::SimilarityMatrix;

/// Which third tokens a pairwise comparison ranges over: the whole
/// vocabulary (default) or city tokens only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TertiarySet {
    #[default]
    AllVocab,
    CitiesOnly,
}

impl TertiarySet {
    pub fn tag(self) -> &'static str {
        match self {
            TertiarySet::AllVocab => "all",
            TertiarySet::CitiesOnly => "cities",
        }
    }
}

impl FromStr for TertiarySet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(TertiarySet::AllVocab),
            "cities" => Ok(TertiarySet::CitiesOnly),
            other => Err(Error::parse(format!("unknown tertiary set '{other}'"))),
        }
    }
}

impl fmt::Display for TertiarySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Stored sentences as token-id triples over a sorted vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMemory {
    pub vocab: Vec<String>,
    traces: Vec<[usize; 3]>,
}

/// Store a corpus, one trace per sentence.
pub fn memorize(corpus: &Corpus) -> Result<InstanceMemory> {
    if corpus.sentences.is_empty() {
        return Err(Error::invalid_argument("empty corpus"));
    }
    let vocab = corpus.vocabulary.clone();
    let index = |token: &str| -> Result<usize> {
        vocab
            .binary_search_by(|t| t.as_str().cmp(token))
            .map_err(|_| Error::invalid_state(format!("token '{token}' missing from vocabulary")))
    };
    let traces = corpus
        .sentences
        .iter()
        .map(|s| {
            Ok([
                index(&s.subject)?,
                index(s.relation.token())?,
                index(&s.object)?,
            ])
        })
        .collect::<Result<_>>()?;
    Ok(InstanceMemory { vocab, traces })
}

fn cosine_or_zero(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na <= 0.0 || nb <= 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

impl InstanceMemory {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn token_index(&self, token: &str) -> Option<usize> {
        self.vocab.binary_search_by(|t| t.as_str().cmp(token)).ok()
    }

    /// L2-normalized sum of every trace that contains all probe tokens;
    /// the zero vector when no trace matches.
    pub fn echo(&self, probe: &[usize]) -> Vec<f64> {
        let mut sum = vec![0.0f64; self.vocab.len()];
        for trace in &self.traces {
            if probe.iter().all(|p| trace.contains(p)) {
                for &id in trace {
                    sum[id] += 1.0;
                }
            }
        }
        let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut sum {
                *x /= norm;
            }
        }
        sum
    }

    /// Echo of the pair `(a, b)` with the probe's own dimensions removed,
    /// leaving only the company the pair keeps. Not renormalized.
    pub fn context(&self, a: usize, b: usize) -> Vec<f64> {
        let mut e = self.echo(&[a, b]);
        e[a] = 0.0;
        e[b] = 0.0;
        e
    }

    /// Token ids eligible as third words under the given tertiary set.
    /// City tokens are the vocabulary entries that are not relation tokens.
    fn tertiary_ids(&self, tertiary: TertiarySet) -> Vec<usize> {
        (0..self.vocab.len())
            .filter(|&t| match tertiary {
                TertiarySet::AllVocab => true,
                TertiarySet::CitiesOnly => Relation::from_token(&self.vocab[t]).is_err(),
            })
            .collect()
    }

    /// Similarity of two tokens: for every third token `t` in the tertiary
    /// set, compare the contexts of `(a, t)` and `(b, t)` by cosine (zero
    /// when either pair was never seen together) and sum over all `t`.
    pub fn similarity_over(&self, a: &str, b: &str, tertiary: TertiarySet) -> Result<f64> {
        let ia = self
            .token_index(a)
            .ok_or_else(|| Error::invalid_argument(format!("token '{a}' not in memory")))?;
        let ib = self
            .token_index(b)
            .ok_or_else(|| Error::invalid_argument(format!("token '{b}' not in memory")))?;
        if ia == ib {
            return Err(Error::invalid_argument("similarity of a token with itself is undefined"));
        }
        let mut sum = 0.0;
        for t in self.tertiary_ids(tertiary) {
            if t == ia || t == ib {
                continue;
            }
            let ca = self.context(ia, t);
            let cb = self.context(ib, t);
            sum += cosine_or_zero(&ca, &cb);
        }
        Ok(sum)
    }

    /// [`similarity_over`](Self::similarity_over) with the full vocabulary
    /// as the tertiary set.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        self.similarity_over(a, b, TertiarySet::AllVocab)
    }

    /// City-by-city similarity matrix. The diagonal is set to one more
    /// than the largest off-diagonal value, since a city is trivially more
    /// similar to itself than to anything else.
    pub fn city_similarity_over(
        &self,
        cities: &[String],
        tertiary: TertiarySet,
    ) -> Result<SimilarityMatrix> {
        let ids: Vec<usize> = cities
            .iter()
            .map(|c| {
                self.token_index(c)
                    .ok_or_else(|| Error::invalid_argument(format!("city '{c}' not in memory")))
            })
            .collect::<Result<_>>()?;
        let n = cities.len();
        let tertiary_ids = self.tertiary_ids(tertiary);

        // Contexts are symmetric in their pair, so cache them per
        // unordered pair; cached values are bit-identical to direct calls.
        let mut cache: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        let mut context_of = |a: usize, b: usize| -> Vec<f64> {
            let key = (a.min(b), a.max(b));
            cache.entry(key).or_insert_with(|| self.context(a, b)).clone()
        };

        let mut values = Matrix::zeros(n, n);
        let mut max_off: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let (ia, ib) = (ids[i], ids[j]);
                let mut sum = 0.0;
                for &t in &tertiary_ids {
                    if t == ia || t == ib {
                        continue;
                    }
                    let ca = context_of(ia, t);
                    let cb = context_of(ib, t);
                    sum += cosine_or_zero(&ca, &cb);
                }
                values[(i, j)] = sum;
                values[(j, i)] = sum;
                max_off = max_off.max(sum);
            }
        }
        let diag = if n > 1 { max_off + 1.0 } else { 1.0 };
        for i in 0..n {
            values[(i, i)] = diag;
        }
        SimilarityMatrix::new(cities.to_vec(), values, "its")
    }

    /// [`city_similarity_over`](Self::city_similarity_over) with the full
    /// vocabulary as the tertiary set.
    pub fn city_similarity(&self, cities: &[String]) -> Result<SimilarityMatrix> {
        self.city_similarity_over(cities, TertiarySet::AllVocab)
    }
}

/// Convenience: memorize a corpus and compare its cities.
pub fn its_city_similarity(corpus: &Corpus) -> Result<SimilarityMatrix> {
    memorize(corpus)?.city_similarity(&corpus.city_tokens())
}

/// [`its_city_similarity`] with an explicit tertiary set.
pub fn its_city_similarity_over(
    corpus: &Corpus,
    tertiary: TertiarySet,
) -> Result<SimilarityMatrix> {
    memorize(corpus)?.city_similarity_over(&corpus.city_tokens(), tertiary)
}

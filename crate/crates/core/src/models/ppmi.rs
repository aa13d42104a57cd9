//! Positive pointwise mutual information.
//!
//! PMI compares how often two tokens co-occur against how often they would
//! under independence; the positive variant clips negative values to zero.
//! City-by-city PPMI is used directly as the similarity matrix, with no
//! embedding step in between.

use crate::corpus::Corpus;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::models::cooc::{count_cooccurrence, Cooccurrence};
use crate::models::SimilarityMatrix;

/// PPMI for one token pair given its co-occurrence counts.
///
/// `ppmi = max(0, log2(count * total / (row_a * row_b)))`, and exactly zero
/// when the pair never co-occurs.
pub fn ppmi_value(count: f64, row_a: f64, row_b: f64, total: f64) -> f64 {
    if count <= 0.0 || row_a <= 0.0 || row_b <= 0.0 {
        return 0.0;
    }
    ((count * total) / (row_a * row_b)).log2().max(0.0)
}

/// Full vocabulary-by-vocabulary PPMI matrix.
pub fn ppmi_matrix(cooc: &Cooccurrence) -> Matrix {
    let n = cooc.vocab.len();
    let total = cooc.total();
    let rows: Vec<f64> = (0..n).map(|i| cooc.row_total(i)).collect();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = ppmi_value(cooc.counts[(i, j)], rows[i], rows[j], total);
        }
    }
    m
}

/// City-by-city PPMI similarity. The diagonal is zero because a city never
/// co-occurs with itself.
pub fn ppmi_city_similarity(corpus: &Corpus) -> Result<SimilarityMatrix> {
    let cooc = count_cooccurrence(corpus)?;
    let full = ppmi_matrix(&cooc);
    let cities = corpus.city_tokens();
    let n = cities.len();
    let mut values = Matrix::zeros(n, n);
    for (i, ci) in cities.iter().enumerate() {
        let a = cooc.token_index(ci).expect("city token counted");
        for (j, cj) in cities.iter().enumerate() {
            let b = cooc.token_index(cj).expect("city token counted");
            values[(i, j)] = full[(a, b)];
        }
    }
    SimilarityMatrix::new(cities, values, "ppmi")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{sample_corpus, statements_for, RelationSet, Sampling, Statement};
    use crate::mapgen::{generate_map, true_distances, Distribution};

    fn corpus_from_lines(lines: &[&str]) -> Corpus {
        Corpus::from_sentences(lines.iter().map(|l| Statement::parse(l).unwrap()).collect())
    }

    #[test]
    fn ppmi_matches_hand_computed_table() {
        // Six sentences; co-occurrence counts worked out by hand:
        //   X(A,B) = 3  X(A,C) = 2  X(B,C) = 1
        //   X(A,near_to) = 3  X(B,near_to) = 3  X(C,near_to) = 0
        //   X(A,far_from) = 2  X(B,far_from) = 1  X(C,far_from) = 3
        // Ordered total T = 36; row sums A = 10, B = 8, C = 6,
        // far_from = 6, near_to = 6.
        let corpus = corpus_from_lines(&[
            "A near_to B",
            "A near_to B",
            "B near_to A",
            "A far_from C",
            "C far_from A",
            "B far_from C",
        ]);
        let cooc = count_cooccurrence(&corpus).unwrap();
        let m = ppmi_matrix(&cooc);
        let idx = |t: &str| cooc.token_index(t).unwrap();
        let (a, b, c) = (idx("A"), idx("B"), idx("C"));
        let (ff, nt) = (idx("far_from"), idx("near_to"));

        let close = |x: f64, y: f64| (x - y).abs() < 1e-12;
        assert!(close(m[(a, b)], (3.0f64 * 36.0 / (10.0 * 8.0)).log2())); // log2(1.35)
        assert!(close(m[(a, c)], (2.0f64 * 36.0 / (10.0 * 6.0)).log2())); // log2(1.2)
        assert!(close(m[(b, c)], 0.0)); // log2(0.75) clips to zero
        assert!(close(m[(a, nt)], 1.8f64.log2()));
        assert!(close(m[(a, ff)], 1.2f64.log2()));
        assert!(close(m[(b, nt)], 2.25f64.log2()));
        assert!(close(m[(b, ff)], 0.0)); // log2(0.75) clips
        assert!(close(m[(c, ff)], 3.0f64.log2()));
        assert!(close(m[(c, nt)], 0.0)); // never co-occur
    }

    #[test]
    fn never_cooccurring_pair_scores_zero() {
        let corpus = corpus_from_lines(&["A near_to B", "C near_to D"]);
        let sim = ppmi_city_similarity(&corpus).unwrap();
        let i = sim.labels.iter().position(|l| l == "A").unwrap();
        let j = sim.labels.iter().position(|l| l == "C").unwrap();
        assert_eq!(sim.get(i, j), 0.0);
    }

    #[test]
    fn uniform_corpus_collapses_to_constant_city_similarity() {
        // With every statement replicated the same number of times, every
        // city pair has identical counts and marginals, so the city-level
        // PPMI carries no spatial signal at all.
        let map = generate_map(Distribution::Random, 20, 4).unwrap();
        let set = statements_for(&map, RelationSet::NearFar);
        let d = true_distances(&map);
        let corpus = sample_corpus(&set, Sampling::Uniform, &d, 10_000, 9, false).unwrap();
        let sim = ppmi_city_similarity(&corpus).unwrap();
        let first = sim.get(0, 1);
        for i in 0..20 {
            for j in 0..20 {
                if i != j {
                    assert!((sim.get(i, j) - first).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn distance_corpus_tracks_proximity() {
        let map = generate_map(Distribution::Random, 20, 4).unwrap();
        let set = statements_for(&map, RelationSet::NearFar);
        let d = true_distances(&map);
        let corpus = sample_corpus(&set, Sampling::Distance, &d, 10_000, 9, false).unwrap();
        let sim = ppmi_city_similarity(&corpus).unwrap();
        assert_eq!(sim.labels, d.labels);

        // Pearson correlation between similarity and negative distance
        // across city pairs: closer pairs must look more similar.
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..20 {
            for j in (i + 1)..20 {
                xs.push(sim.get(i, j));
                ys.push(-d.get(i, j));
            }
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let r = cov / (vx * vy).sqrt();
        assert!(r > 0.5, "similarity should track proximity, r = {r}");
    }

    #[test]
    fn city_similarity_is_symmetric_and_validates() {
        let corpus = corpus_from_lines(&["A near_to B", "B far_from C", "A near_to C"]);
        let sim = ppmi_city_similarity(&corpus).unwrap();
        sim.validate().unwrap();
        assert_eq!(sim.model, "ppmi");
        for i in 0..sim.len() {
            assert_eq!(sim.get(i, i), 0.0);
        }
    }
}

//! Ground-truth maps: labeled 2-D point sets in three spatial distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_CITY_COUNT: usize = 20;

/// Minimum pairwise separation enforced during generation. Keeps every
/// distance strictly positive so inverse-distance sampling weights exist.
pub const MIN_SEPARATION: f64 = 0.02;

const MAX_REJECTION_ATTEMPTS: usize = 100_000;

/// Spatial layout of the generated cities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Random,
    Clustered,
    Circular,
}

impl Distribution {
    pub fn all() -> [Distribution; 3] {
        [Distribution::Random, Distribution::Clustered, Distribution::Circular]
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Distribution::Random => "random",
            Distribution::Clustered => "clustered",
            Distribution::Circular => "circular",
        }
    }
}

impl std::str::FromStr for Distribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Distribution::Random),
            "clustered" => Ok(Distribution::Clustered),
            "circular" => Ok(Distribution::Circular),
            other => Err(Error::parse(format!("unknown distribution '{other}'"))),
        }
    }
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// A labeled set of city coordinates; the ground truth the pipeline tries
/// to reconstruct from text.
#[derive(Debug, Clone, PartialEq)]
pub struct CityMap {
    pub labels: Vec<String>,
    pub coords: Vec<(f64, f64)>,
    /// Set for generated maps; `None` for maps read back from disk.
    pub distribution: Option<Distribution>,
    pub seed: Option<u64>,
}

impl CityMap {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn from_points(labels: Vec<String>, coords: Vec<(f64, f64)>) -> Result<Self> {
        let map = CityMap { labels, coords, distribution: None, seed: None };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.coords.len() {
            return Err(Error::invalid_state("label/coordinate count mismatch"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for label in &self.labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::invalid_state(format!("duplicate label '{label}'")));
            }
        }
        for &(x, y) in &self.coords {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::invalid_state("non-finite coordinate"));
            }
        }
        for i in 0..self.coords.len() {
            for j in (i + 1)..self.coords.len() {
                if distance(self.coords[i], self.coords[j]) <= 0.0 {
                    return Err(Error::invalid_state(format!(
                        "cities '{}' and '{}' coincide",
                        self.labels[i], self.labels[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Spreadsheet-style labels: A..Z, then AA, AB, ...
pub fn city_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|mut i| {
            let mut s = String::new();
            loop {
                s.insert(0, (b'A' + (i % 26) as u8) as char);
                i /= 26;
                if i == 0 {
                    break;
                }
                i -= 1;
            }
            s
        })
        .collect()
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn separated(candidate: (f64, f64), accepted: &[(f64, f64)]) -> bool {
    accepted.iter().all(|&p| distance(candidate, p) >= MIN_SEPARATION)
}

/// Standard normal draw (Box-Muller).
fn randn(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generate a map of `n` labeled cities with the requested distribution.
///
/// Deterministic: the same `(distribution, n, seed)` triple always yields
/// the identical map.
pub fn generate_map(distribution: Distribution, n: usize, seed: u64) -> Result<CityMap> {
    if n < 3 {
        return Err(Error::invalid_argument(format!("need at least 3 cities, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0usize;
    let mut coords: Vec<(f64, f64)> = Vec::with_capacity(n);

    let mut draw = |rng: &mut ChaCha8Rng,
                    accepted: &[(f64, f64)],
                    sampler: &mut dyn FnMut(&mut ChaCha8Rng) -> (f64, f64)|
     -> Result<(f64, f64)> {
        loop {
            attempts += 1;
            if attempts > MAX_REJECTION_ATTEMPTS {
                return Err(Error::GenerationFailure(format!(
                    "minimum separation {MIN_SEPARATION} not reachable after {MAX_REJECTION_ATTEMPTS} attempts"
                )));
            }
            let p = sampler(rng);
            if separated(p, accepted) {
                return Ok(p);
            }
        }
    };

    match distribution {
        Distribution::Random => {
            for _ in 0..n {
                let p = draw(&mut rng, &coords, &mut |rng| {
                    (rng.gen::<f64>(), rng.gen::<f64>())
                })?;
                coords.push(p);
            }
        }
        Distribution::Clustered => {
            let centers = [(0.25, 0.5), (0.75, 0.5)];
            let sigma = 0.07;
            let first = n - n / 2;
            for i in 0..n {
                let center = if i < first { centers[0] } else { centers[1] };
                let p = draw(&mut rng, &coords, &mut |rng| {
                    let x = (center.0 + sigma * randn(rng)).clamp(0.0, 1.0);
                    let y = (center.1 + sigma * randn(rng)).clamp(0.0, 1.0);
                    (x, y)
                })?;
                coords.push(p);
            }
        }
        Distribution::Circular => {
            let radius = 0.4;
            let jitter_sigma = 0.01;
            for i in 0..n {
                let angle = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
                let p = draw(&mut rng, &coords, &mut |rng| {
                    // Truncate the radial jitter at 4 sigma so the ring
                    // radius stays inside [0.35, 0.45].
                    let jitter = loop {
                        let j = jitter_sigma * randn(rng);
                        if j.abs() <= 0.04 {
                            break j;
                        }
                    };
                    let r = radius + jitter;
                    (0.5 + r * angle.cos(), 0.5 + r * angle.sin())
                })?;
                coords.push(p);
            }
        }
    }

    let map = CityMap {
        labels: city_labels(n),
        coords,
        distribution: Some(distribution),
        seed: Some(seed),
    };
    map.validate()?;
    Ok(map)
}

/// Symmetric matrix of true Euclidean distances between cities.
#[derive(Debug, Clone)]
pub struct TrueDistances {
    pub labels: Vec<String>,
    d: Matrix,
}

impl TrueDistances {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.d
    }

    /// Mean over the n(n-1)/2 unordered city pairs.
    pub fn mean_pairwise(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += self.d[(i, j)];
            }
        }
        sum / (n * (n - 1) / 2) as f64
    }
}

/// Euclidean distance matrix of a map.
pub fn true_distances(map: &CityMap) -> TrueDistances {
    let n = map.len();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = distance(map.coords[i], map.coords[j]);
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    TrueDistances { labels: map.labels.clone(), d }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_default_region() {
        let labels = city_labels(20);
        assert_eq!(labels[0], "A");
        assert_eq!(labels[19], "T");
        let wide = city_labels(30);
        assert_eq!(wide[25], "Z");
        assert_eq!(wide[26], "AA");
    }

    #[test]
    fn rejects_tiny_maps() {
        assert!(matches!(
            generate_map(Distribution::Random, 2, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn circular_four_points_at_right_angles() {
        let map = generate_map(Distribution::Circular, 4, 5).unwrap();
        // Up to jitter, successive points sit 90 degrees apart on the ring.
        for i in 0..4 {
            let (x, y) = map.coords[i];
            let angle = (y - 0.5).atan2(x - 0.5).rem_euclid(2.0 * std::f64::consts::PI);
            let expected = 2.0 * std::f64::consts::PI * (i as f64) / 4.0;
            let diff = (angle - expected).abs();
            let diff = diff.min(2.0 * std::f64::consts::PI - diff);
            assert!(diff < 1e-9, "point {i} off its angle by {diff}");
        }
    }

    #[test]
    fn clustered_groups_are_tighter_within_than_between() {
        let map = generate_map(Distribution::Clustered, 20, 11).unwrap();
        let first = 10;
        let mut within = Vec::new();
        let mut between = Vec::new();
        for i in 0..20 {
            for j in (i + 1)..20 {
                let d = distance(map.coords[i], map.coords[j]);
                if (i < first) == (j < first) {
                    within.push(d);
                } else {
                    between.push(d);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&within) < mean(&between));
    }

    #[test]
    fn random_maps_respect_min_separation() {
        for seed in 0..5 {
            let map = generate_map(Distribution::Random, 20, seed).unwrap();
            for i in 0..20 {
                for j in (i + 1)..20 {
                    assert!(distance(map.coords[i], map.coords[j]) >= MIN_SEPARATION);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for dist in Distribution::all() {
            let a = generate_map(dist, 20, 123).unwrap();
            let b = generate_map(dist, 20, 123).unwrap();
            assert_eq!(a, b);
            let c = generate_map(dist, 20, 124).unwrap();
            assert_ne!(a.coords, c.coords);
        }
    }

    #[test]
    fn circular_points_stay_on_the_ring() {
        for seed in 0..10 {
            let map = generate_map(Distribution::Circular, 20, seed).unwrap();
            for &(x, y) in &map.coords {
                let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
                assert!((0.35..=0.45).contains(&r), "radius {r} out of band");
            }
        }
    }

    #[test]
    fn true_distances_is_symmetric_zero_diagonal() {
        let map = generate_map(Distribution::Random, 20, 3).unwrap();
        let d = true_distances(&map);
        let mut positive_pairs = 0;
        for i in 0..20 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..20 {
                assert_eq!(d.get(i, j), d.get(j, i));
                if i < j && d.get(i, j) > 0.0 {
                    positive_pairs += 1;
                }
            }
        }
        assert_eq!(positive_pairs, 190);
    }

    #[test]
    fn three_four_five_triangle() {
        let map = CityMap::from_points(
            vec!["A".into(), "B".into()],
            vec![(0.0, 0.0), (3.0, 4.0)],
        )
        .unwrap();
        let d = true_distances(&map);
        assert_eq!(d.get(0, 1), 5.0);
    }
}

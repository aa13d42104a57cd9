//! From similarity to coordinates: distance transform, classical scaling,
//! and nonmetric multidimensional scaling.
//!
//! Similarities become dissimilarities through a negative-exponential
//! transform. Nonmetric MDS then looks for a 2-D configuration whose
//! pairwise distances reproduce the *rank order* of those dissimilarities,
//! measured by normalized stress. The optimizer alternates a monotone
//! regression (best disparities for the current configuration) with a
//! majorization step (best configuration for the current disparities),
//! with step halving so stress never increases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, Matrix};
use crate::models::SimilarityMatrix;

/// Symmetric dissimilarities between cities with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    pub values: Matrix,
    /// Decay rate of the transform that produced it.
    pub gamma: f64,
}

impl DistanceMatrix {
    pub fn new(labels: Vec<String>, values: Matrix, gamma: f64) -> Result<Self> {
        let d = DistanceMatrix { labels, values, gamma };
        d.validate()?;
        Ok(d)
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
            return Err(Error::invalid_state("distance matrix shape mismatch"));
        }
        for i in 0..n {
            if self.values[(i, i)] != 0.0 {
                return Err(Error::invalid_state("distance matrix diagonal must be zero"));
            }
            for j in 0..n {
                let v = self.values[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid_state(format!(
                        "bad distance between '{}' and '{}'",
                        self.labels[i], self.labels[j]
                    )));
                }
                if (v - self.values[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid_state("distance matrix is not symmetric"));
                }
            }
        }
        Ok(())
    }

    /// True whenever every off-diagonal entry is (numerically) the same,
    /// in which case the matrix carries no spatial information at all.
    pub fn is_constant(&self) -> bool {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                lo = lo.min(self.values[(i, j)]);
                hi = hi.max(self.values[(i, j)]);
            }
        }
        if !lo.is_finite() {
            return true; // fewer than two points
        }
        hi - lo <= 1e-12 * hi.abs().max(1.0)
    }
}

/// Negative-exponential transform `d = exp(-gamma * similarity)`, the
/// classic mapping from similarity to psychological distance. The diagonal
/// is forced to zero.
pub fn shepard_transform(sim: &SimilarityMatrix, gamma: f64) -> Result<DistanceMatrix> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::invalid_argument(format!("gamma must be positive, got {gamma}")));
    }
    sim.validate()?;
    let n = sim.len();
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[(i, j)] = (-gamma * sim.get(i, j)).exp();
            }
        }
    }
    DistanceMatrix::new(sim.labels.clone(), values, gamma)
}

/// Classical (Torgerson) scaling to two dimensions.
///
/// Double-centers the squared distances and keeps the top two eigenpairs.
/// Reports degeneracy when fewer than two eigenvalues are meaningfully
/// positive, which happens exactly when the input has no 2-D structure.
pub fn classical_scaling(d: &Matrix) -> (Vec<(f64, f64)>, bool) {
    let n = d.rows();
    let mut sq = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sq[(i, j)] = d[(i, j)] * d[(i, j)];
        }
    }
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).iter().sum::<f64>() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand);
        }
    }
    let eig = jacobi_eigen(&b);
    let l1 = eig.values[0].max(0.0);
    let l2 = if n > 1 { eig.values[1].max(0.0) } else { 0.0 };
    let degenerate = l2 <= 1e-12 * l1.max(f64::MIN_POSITIVE);
    let (s1, s2) = (l1.sqrt(), l2.sqrt());
    let coords = (0..n)
        .map(|i| (eig.vectors[(i, 0)] * s1, eig.vectors[(i, 1)] * s2))
        .collect();
    (coords, degenerate)
}

/// Least-squares nondecreasing fit by pooling adjacent violators.
pub fn isotonic_fit(values: &[f64]) -> Vec<f64> {
    // Blocks of (sum, count); merge while the means decrease.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 > s2 / c2 as f64 {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (s1 + s2, c1 + c2);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, c) in blocks {
        let mean = s / c as f64;
        out.extend(std::iter::repeat(mean).take(c));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdsParams {
    pub max_iterations: usize,
    /// Stop when one step improves stress by less than this.
    pub tolerance: f64,
    /// Total fitting attempts: one from classical scaling, the rest from
    /// random configurations.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for MdsParams {
    fn default() -> Self {
        MdsParams { max_iterations: 300, tolerance: 1e-6, restarts: 4, seed: 0 }
    }
}

/// A fitted 2-D configuration, centered on the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration2D {
    pub labels: Vec<String>,
    pub coords: Vec<(f64, f64)>,
    /// Normalized stress of the final configuration.
    pub stress: f64,
    /// Stress after the initial configuration and after every accepted
    /// step; never increasing.
    pub stress_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the input dissimilarities carry no spatial structure, or
    /// when the fitted configuration collapsed below two dimensions.
    pub degenerate: bool,
    /// Which restart won (0 is the classical-scaling start).
    pub restart: usize,
}

struct Pair {
    i: usize,
    j: usize,
    delta: f64,
}

fn pair_list(d: &DistanceMatrix) -> Vec<Pair> {
    let n = d.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push(Pair { i, j, delta: d.get(i, j) });
        }
    }
    pairs
}

fn euclid(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Disparities and stress for a configuration.
///
/// Pairs are ordered by dissimilarity with ties broken by the current
/// configuration distance (the "primary" tie approach: tied dissimilarities
/// are free to untangle however the configuration likes). The monotone
/// regression then runs over configuration distances in that order.
fn evaluate(coords: &[(f64, f64)], pairs: &mut [Pair]) -> (f64, Vec<f64>) {
    pairs.sort_by(|a, b| {
        a.delta
            .total_cmp(&b.delta)
            .then_with(|| euclid(coords[a.i], coords[a.j]).total_cmp(&euclid(coords[b.i], coords[b.j])))
    });
    let d: Vec<f64> = pairs.iter().map(|p| euclid(coords[p.i], coords[p.j])).collect();
    let dhat = isotonic_fit(&d);
    let mut num = 0.0;
    let mut den = 0.0;
    for (di, hi) in d.iter().zip(&dhat) {
        num += (di - hi) * (di - hi);
        den += di * di;
    }
    let stress = if den > 0.0 {
        (num / den).sqrt()
    } else {
        // Fully collapsed configuration: call it unusable rather than
        // perfect so any spread-out restart wins.
        f64::INFINITY
    };
    (stress, dhat)
}

/// One majorization step: the configuration minimizing the raw stress
/// numerator for fixed disparities.
fn guttman_step(coords: &[(f64, f64)], pairs: &[Pair], dhat: &[f64]) -> Vec<(f64, f64)> {
    let n = coords.len();
    let mut next = vec![(0.0, 0.0); n];
    for (p, &h) in pairs.iter().zip(dhat) {
        let d = euclid(coords[p.i], coords[p.j]);
        if d <= 0.0 {
            continue;
        }
        let ratio = h / d;
        let dx = coords[p.i].0 - coords[p.j].0;
        let dy = coords[p.i].1 - coords[p.j].1;
        next[p.i].0 += ratio * dx;
        next[p.i].1 += ratio * dy;
        next[p.j].0 -= ratio * dx;
        next[p.j].1 -= ratio * dy;
    }
    let inv = 1.0 / n as f64;
    for p in &mut next {
        p.0 *= inv;
        p.1 *= inv;
    }
    next
}

fn center(coords: &mut [(f64, f64)]) {
    let n = coords.len() as f64;
    let cx = coords.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = coords.iter().map(|p| p.1).sum::<f64>() / n;
    for p in coords.iter_mut() {
        p.0 -= cx;
        p.1 -= cy;
    }
}

/// Rescale centered coordinates so the root-mean-square pairwise distance
/// is 1, returning the factor the coordinates were divided by. Stress-1 is
/// scale-free, so this changes nothing about the fit — but isotonic pooling
/// leaves disparities slightly smaller than distances on average, which
/// makes the bare majorization iteration contract the configuration a few
/// percent per step. Left alone, hundreds of steps shrink it below 1e-6 of
/// its starting size and downstream consumers meet a cloud of rounding
/// noise. Renormalizing after every accepted step (disparities included,
/// since they live on the same scale) pins the size while leaving the
/// trajectory, up to that scale, untouched.
fn normalize_scale(coords: &mut [(f64, f64)]) -> f64 {
    let n = coords.len();
    if n < 2 {
        return 1.0;
    }
    // For centered points, the mean squared pairwise distance over the
    // n(n-1)/2 unordered pairs equals 2 * sum of squared norms / (n - 1).
    let ss: f64 = coords.iter().map(|p| p.0 * p.0 + p.1 * p.1).sum();
    let rms = (2.0 * ss / (n as f64 - 1.0)).sqrt();
    if !rms.is_finite() || rms <= 0.0 {
        return 1.0;
    }
    for p in coords.iter_mut() {
        p.0 /= rms;
        p.1 /= rms;
    }
    rms
}

/// Does the configuration span fewer than two dimensions?
fn rank_deficient(coords: &[(f64, f64)]) -> bool {
    let n = coords.len() as f64;
    let cx = coords.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = coords.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in coords {
        let (x, y) = (p.0 - cx, p.1 - cy);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    // Smaller eigenvalue of the 2x2 scatter matrix.
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let lambda_min = tr / 2.0 - disc;
    lambda_min <= 1e-12 * tr.max(f64::MIN_POSITIVE)
}

struct FitRun {
    coords: Vec<(f64, f64)>,
    stress: f64,
    stress_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn fit_from(init: &[(f64, f64)], pairs: &mut [Pair], max_iterations: usize, tolerance: f64) -> FitRun {
    let mut coords = init.to_vec();
    center(&mut coords);
    normalize_scale(&mut coords);
    let (mut stress, mut dhat) = evaluate(&coords, pairs);
    let mut trace = vec![stress];
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..max_iterations {
        if !stress.is_finite() {
            // Collapsed start; nothing to improve from here.
            break;
        }
        let target = guttman_step(&coords, pairs, &dhat);
        // Step halving: back off toward the current configuration until
        // stress does not increase. Majorization makes the full step safe
        // almost always; the guard covers re-fitted disparities.
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= 1e-4 {
            let candidate: Vec<(f64, f64)> = coords
                .iter()
                .zip(&target)
                .map(|(c, t)| (c.0 + alpha * (t.0 - c.0), c.1 + alpha * (t.1 - c.1)))
                .collect();
            let (s, h) = evaluate(&candidate, pairs);
            if s <= stress + 1e-12 {
                accepted = Some((candidate, s, h));
                break;
            }
            alpha *= 0.5;
        }
        let Some((candidate, new_stress, new_dhat)) = accepted else {
            converged = true;
            break;
        };
        let improvement = stress - new_stress;
        coords = candidate;
        center(&mut coords);
        let scale = normalize_scale(&mut coords);
        stress = new_stress;
        dhat = new_dhat;
        for h in &mut dhat {
            *h /= scale;
        }
        iterations += 1;
        trace.push(stress);
        if improvement < tolerance {
            converged = true;
            break;
        }
        if stress <= 1e-15 {
            converged = true;
            break;
        }
    }
    center(&mut coords);
    FitRun { coords, stress, stress_trace: trace, iterations, converged }
}

/// Nonmetric MDS from an explicit starting configuration. Exposed so that
/// properties of the optimizer (order invariance, transform invariance)
/// can be tested without the restart machinery.
pub fn nonmetric_mds_with_init(
    d: &DistanceMatrix,
    init: &[(f64, f64)],
    max_iterations: usize,
    tolerance: f64,
) -> Result<Configuration2D> {
    let n = d.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: n });
    }
    if init.len() != n {
        return Err(Error::invalid_argument("initial configuration size mismatch"));
    }
    d.validate()?;
    let mut pairs = pair_list(d);
    let run = fit_from(init, &mut pairs, max_iterations, tolerance);
    let degenerate = d.is_constant() || rank_deficient(&run.coords);
    Ok(Configuration2D {
        labels: d.labels.clone(),
        coords: run.coords,
        stress: run.stress,
        stress_trace: run.stress_trace,
        iterations: run.iterations,
        converged: run.converged,
        degenerate,
        restart: 0,
    })
}

/// Nonmetric MDS with restarts: one start from classical scaling plus
/// `restarts - 1` random starts, keeping the lowest-stress result (earliest
/// restart wins ties).
pub fn nonmetric_mds(d: &DistanceMatrix, params: &MdsParams) -> Result<Configuration2D> {
    let n = d.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: n });
    }
    if params.restarts == 0 || params.max_iterations == 0 {
        return Err(Error::invalid_argument("restarts and max_iterations must be positive"));
    }
    d.validate()?;
    let mut pairs = pair_list(d);
    let (classical, classical_degenerate) = classical_scaling(&d.values);

    let mut best: Option<(usize, FitRun)> = None;
    for restart in 0..params.restarts {
        let init: Vec<(f64, f64)> = if restart == 0 {
            classical.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(
                params.seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            );
            (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect()
        };
        let run = fit_from(&init, &mut pairs, params.max_iterations, params.tolerance);
        let better = match &best {
            None => true,
            Some((_, b)) => run.stress < b.stress,
        };
        if better {
            best = Some((restart, run));
        }
    }
    let (restart, run) = best.expect("at least one restart");
    let degenerate = d.is_constant() || classical_degenerate && restart == 0 || rank_deficient(&run.coords);
    Ok(Configuration2D {
        labels: d.labels.clone(),
        coords: run.coords,
        stress: run.stress,
        stress_trace: run.stress_trace,
        iterations: run.iterations,
        converged: run.converged,
        degenerate,
        restart,
    })
}

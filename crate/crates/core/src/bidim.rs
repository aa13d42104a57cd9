//! Bidimensional regression: score how well one 2-D configuration predicts
//! another under the best affine map.
//!
//! The recovered map is free to be rotated, reflected, scaled, or sheared
//! relative to the truth; none of that is an error of reconstruction. The
//! fit finds the affine transform minimizing squared residuals and reports
//! `r = sqrt(1 - SSE/SST)` pooled over both coordinates. Significance comes
//! from a permutation test (shuffle which recovered point claims which
//! city) and, analytically, from an F statistic.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::geometry::Configuration2D;
use crate::linalg::{solve_spd_pinv, Matrix};
use crate::mapgen::CityMap;

/// Number of fitted parameters in the affine model (a 2x2 linear part plus
/// a translation).
const AFFINE_PARAMS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    pub r: f64,
    /// Row-major linear part of the fitted transform.
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
    pub n_points: usize,
}

impl AffineFit {
    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        (
            self.linear[0][0] * p.0 + self.linear[0][1] * p.1 + self.translation[0],
            self.linear[1][0] * p.0 + self.linear[1][1] * p.1 + self.translation[1],
        )
    }
}

/// Least-squares affine fit predicting `target` from `source`
/// (index-aligned). Needs at least four points so the residual has degrees
/// of freedom left.
pub fn affine_fit(source: &[(f64, f64)], target: &[(f64, f64)]) -> Result<AffineFit> {
    let n = source.len();
    if target.len() != n {
        return Err(Error::invalid_argument("point sets differ in size"));
    }
    if n < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: n });
    }

    // Standardize the source (centroid out, unit root-mean-square radius)
    // before forming the normal equations. The fitted map is the same in
    // exact arithmetic — r is invariant under invertible affine changes of
    // the source — but without this a source whose spread is tiny next to
    // its offset from the origin makes the 3x3 system so ill-conditioned
    // that the pseudo-inverse truncates the linear part to zero.
    let inv_n = 1.0 / n as f64;
    let scx = source.iter().map(|p| p.0).sum::<f64>() * inv_n;
    let scy = source.iter().map(|p| p.1).sum::<f64>() * inv_n;
    let spread = (source
        .iter()
        .map(|p| (p.0 - scx).powi(2) + (p.1 - scy).powi(2))
        .sum::<f64>()
        * inv_n)
        .sqrt();
    let scale = if spread.is_finite() && spread > 0.0 { spread } else { 1.0 };
    let standardized: Vec<(f64, f64)> =
        source.iter().map(|p| ((p.0 - scx) / scale, (p.1 - scy) / scale)).collect();

    // Normal equations over the design [x, y, 1].
    let mut g = Matrix::zeros(3, 3);
    let mut bx = [0.0f64; 3];
    let mut by = [0.0f64; 3];
    for (s, t) in standardized.iter().zip(target) {
        let row = [s.0, s.1, 1.0];
        for a in 0..3 {
            for b in 0..3 {
                g[(a, b)] += row[a] * row[b];
            }
            bx[a] += row[a] * t.0;
            by[a] += row[a] * t.1;
        }
    }
    let cx = solve_spd_pinv(&g, &bx);
    let cy = solve_spd_pinv(&g, &by);

    let mean_x = target.iter().map(|t| t.0).sum::<f64>() / n as f64;
    let mean_y = target.iter().map(|t| t.1).sum::<f64>() / n as f64;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for (s, t) in standardized.iter().zip(target) {
        let px = cx[0] * s.0 + cx[1] * s.1 + cx[2];
        let py = cy[0] * s.0 + cy[1] * s.1 + cy[2];
        sse += (px - t.0).powi(2) + (py - t.1).powi(2);
        sst += (t.0 - mean_x).powi(2) + (t.1 - mean_y).powi(2);
    }
    if sst <= 0.0 {
        return Err(Error::invalid_argument("target configuration has no variance"));
    }
    let r = (1.0 - sse / sst).max(0.0).sqrt();

    // Undo the standardization so the reported transform acts on the raw
    // source coordinates.
    let linear = [[cx[0] / scale, cx[1] / scale], [cy[0] / scale, cy[1] / scale]];
    let translation = [
        cx[2] - (linear[0][0] * scx + linear[0][1] * scy),
        cy[2] - (linear[1][0] * scx + linear[1][1] * scy),
    ];
    Ok(AffineFit { r, linear, translation, n_points: n })
}

/// Permutation test: how often does a random reassignment of recovered
/// points to cities fit at least as well as the observed assignment?
/// Returns `(1 + #{r_perm >= r_obs}) / (n_permutations + 1)`.
pub fn permutation_p(
    source: &[(f64, f64)],
    target: &[(f64, f64)],
    n_permutations: usize,
    seed: u64,
) -> Result<f64> {
    if n_permutations == 0 {
        return Err(Error::invalid_argument("need at least one permutation"));
    }
    let observed = affine_fit(source, target)?.r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled: Vec<(f64, f64)> = source.to_vec();
    let mut at_least = 0usize;
    for _ in 0..n_permutations {
        shuffled.shuffle(&mut rng);
        let r = affine_fit(&shuffled, target)?.r;
        if r >= observed {
            at_least += 1;
        }
    }
    Ok((1 + at_least) as f64 / (n_permutations + 1) as f64)
}

/// Analytic significance of a bidimensional regression:
/// `F = (r^2 / (q - 2)) / ((1 - r^2) / (2n - q))` with `q = 6` parameters,
/// referred to an F distribution with `(q - 2, 2n - q)` degrees of freedom.
pub fn f_test_p(r: f64, n_points: usize) -> Result<f64> {
    let q = AFFINE_PARAMS;
    if 2 * n_points <= q {
        return Err(Error::InsufficientPoints { needed: q / 2 + 1, got: n_points });
    }
    let r2 = (r * r).clamp(0.0, 1.0);
    if r2 >= 1.0 {
        return Ok(0.0);
    }
    let df1 = (q - 2) as f64;
    let df2 = (2 * n_points - q) as f64;
    let f = (r2 / df1) / ((1.0 - r2) / df2);
    let dist = FisherSnedecor::new(df1, df2)
        .map_err(|e| Error::invalid_state(format!("bad F distribution: {e}")))?;
    Ok(1.0 - dist.cdf(f))
}

/// Conventional significance marks: `***` below .001, `**` below .01,
/// `*` below .05, empty otherwise.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// A scored comparison between a recovered configuration and the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MapComparison {
    pub fit: AffineFit,
    pub p_permutation: f64,
    pub p_f: f64,
}

impl MapComparison {
    pub fn stars(&self) -> &'static str {
        stars(self.p_permutation)
    }
}

/// Match points by city label and score the recovered configuration
/// against the true map.
pub fn compare_to_truth(
    config: &Configuration2D,
    truth: &CityMap,
    n_permutations: usize,
    seed: u64,
) -> Result<MapComparison> {
    if config.labels.len() != truth.labels.len() {
        return Err(Error::invalid_argument("configuration and map have different city counts"));
    }
    let mut source = Vec::with_capacity(config.labels.len());
    let mut target = Vec::with_capacity(config.labels.len());
    for (label, &coord) in config.labels.iter().zip(&config.coords) {
        let t = truth
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::invalid_argument(format!("city '{label}' not in the true map")))?;
        source.push(coord);
        target.push(truth.coords[t]);
    }
    let fit = affine_fit(&source, &target)?;
    let p_permutation = permutation_p(&source, &target, n_permutations, seed)?;
    let p_f = f_test_p(fit.r, fit.n_points)?;
    Ok(MapComparison { fit, p_permutation, p_f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapgen::{generate_map, Distribution};
    use rand::Rng;

    fn truth_coords(seed: u64) -> Vec<(f64, f64)> {
        generate_map(Distribution::Random, 20, seed).unwrap().coords
    }

    fn rotate_scale(points: &[(f64, f64)], angle: f64, scale: f64, t: (f64, f64)) -> Vec<(f64, f64)> {
        let (s, c) = angle.sin_cos();
        points
            .iter()
            .map(|p| (scale * (c * p.0 - s * p.1) + t.0, scale * (s * p.0 + c * p.1) + t.1))
            .collect()
    }

    #[test]
    fn perfect_affine_copies_score_one() {
        let target = truth_coords(1);
        let rotated = rotate_scale(&target, 0.6, 0.35, (2.0, -1.0));
        let fit = affine_fit(&rotated, &target).unwrap();
        assert!(fit.r > 1.0 - 1e-9, "r = {}", fit.r);
        // Reflections are affine too.
        let mirrored: Vec<(f64, f64)> = target.iter().map(|p| (-p.0, p.1)).collect();
        let fit = affine_fit(&mirrored, &target).unwrap();
        assert!(fit.r > 1.0 - 1e-9);
        // The fitted transform actually reproduces the points.
        let back = affine_fit(&rotated, &target).unwrap();
        for (s, t) in rotated.iter().zip(&target) {
            let p = back.apply(*s);
            assert!((p.0 - t.0).abs() < 1e-9 && (p.1 - t.1).abs() < 1e-9);
        }
    }

    #[test]
    fn r_is_invariant_to_affine_warps_of_the_source() {
        let target = truth_coords(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noisy: Vec<(f64, f64)> = target
            .iter()
            .map(|p| (p.0 + 0.05 * rng.gen::<f64>(), p.1 + 0.05 * rng.gen::<f64>()))
            .collect();
        let r0 = affine_fit(&noisy, &target).unwrap().r;
        let warped = rotate_scale(&noisy, 1.2, 3.0, (-5.0, 0.4));
        let r1 = affine_fit(&warped, &target).unwrap().r;
        assert!((r0 - r1).abs() < 1e-10, "{r0} vs {r1}");
        assert!(r0 < 1.0 && r0 > 0.8);
    }

    #[test]
    fn more_noise_means_lower_r() {
        let target = truth_coords(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let jitter = |amount: f64, rng: &mut ChaCha8Rng| -> Vec<(f64, f64)> {
            target
                .iter()
                .map(|p| {
                    (
                        p.0 + amount * (rng.gen::<f64>() - 0.5),
                        p.1 + amount * (rng.gen::<f64>() - 0.5),
                    )
                })
                .collect()
        };
        let small = affine_fit(&jitter(0.05, &mut rng), &target).unwrap().r;
        let large = affine_fit(&jitter(0.8, &mut rng), &target).unwrap().r;
        assert!(small > large, "small noise r = {small}, large noise r = {large}");
    }

    #[test]
    fn collapsed_source_scores_zero() {
        let target = truth_coords(5);
        let collapsed = vec![(0.0, 0.0); target.len()];
        let fit = affine_fit(&collapsed, &target).unwrap();
        assert_eq!(fit.r, 0.0);
    }

    #[test]
    fn too_few_points_are_rejected() {
        let pts = vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
        assert!(matches!(
            affine_fit(&pts, &pts),
            Err(Error::InsufficientPoints { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn permutation_p_is_small_for_real_structure() {
        let target = truth_coords(6);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let noisy: Vec<(f64, f64)> = target
            .iter()
            .map(|p| (p.0 + 0.02 * rng.gen::<f64>(), p.1 + 0.02 * rng.gen::<f64>()))
            .collect();
        let p = permutation_p(&noisy, &target, 999, 0).unwrap();
        assert!((p - 0.001).abs() < 1e-12, "p = {p}");
    }

    #[test]
    fn permutation_p_is_flat_under_the_null() {
        // Unrelated point sets: p should look uniform, so the median over
        // several seeds sits near one half.
        let mut ps = Vec::new();
        for seed in 0..11 {
            let target = truth_coords(100 + seed);
            let source = truth_coords(200 + seed);
            ps.push(permutation_p(&source, &target, 199, seed).unwrap());
        }
        ps.sort_by(f64::total_cmp);
        let median = ps[ps.len() / 2];
        assert!((0.2..=0.8).contains(&median), "median null p = {median}");
    }

    #[test]
    fn f_test_matches_known_values() {
        // r = 0.9, n = 20: F = (0.81/4) / (0.19/34) = 36.2, a vanishing p.
        let p_high = f_test_p(0.9, 20).unwrap();
        assert!(p_high < 1e-6, "p = {p_high}");
        let p_zero = f_test_p(0.0, 20).unwrap();
        assert!((p_zero - 1.0).abs() < 1e-12);
        let p_mid = f_test_p(0.5, 20).unwrap();
        assert!(p_mid > p_high && p_mid < p_zero);
        assert_eq!(f_test_p(1.0, 20).unwrap(), 0.0);
        assert!(f_test_p(0.5, 3).is_err());
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0005), "***");
        assert_eq!(stars(0.005), "**");
        assert_eq!(stars(0.03), "*");
        assert_eq!(stars(0.05), "");
        assert_eq!(stars(0.9), "");
    }

    #[test]
    fn comparison_matches_by_label_not_by_position() {
        let map = generate_map(Distribution::Random, 20, 8).unwrap();
        // A configuration listing the same cities in reverse order, with
        // coordinates affinely warped: still a perfect match.
        let labels: Vec<String> = map.labels.iter().rev().cloned().collect();
        let coords: Vec<(f64, f64)> = rotate_scale(
            &map.coords.iter().rev().copied().collect::<Vec<_>>(),
            0.3,
            2.0,
            (1.0, 1.0),
        );
        let config = Configuration2D {
            labels,
            coords,
            stress: 0.0,
            stress_trace: vec![0.0],
            iterations: 0,
            converged: true,
            degenerate: false,
            restart: 0,
        };
        let cmp = compare_to_truth(&config, &map, 99, 1).unwrap();
        assert!(cmp.fit.r > 1.0 - 1e-9);
        assert!((cmp.p_permutation - 0.01).abs() < 1e-12);
        assert_eq!(cmp.stars(), "*"); // p = 1/100 exactly misses the .01 cut
    }

    #[test]
    fn unknown_label_is_an_error() {
        let map = generate_map(Distribution::Random, 5, 8).unwrap();
        let config = Configuration2D {
            labels: vec!["X".into(), "A".into(), "B".into(), "C".into(), "D".into()],
            coords: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.5, 0.5)],
            stress: 0.0,
            stress_trace: vec![0.0],
            iterations: 0,
            converged: true,
            degenerate: false,
            restart: 0,
        };
        assert!(compare_to_truth(&config, &map, 10, 0).is_err());
    }
}

//! Spectral-graph machinery: Gaussian similarity graph, normalized graph
//! Laplacian, a dense symmetric eigensolver, and the spectral-gap clustering
//! loss with its analytic gradient.
//!
//! The clustering loss of a latent batch Y is the ratio of consecutive
//! Laplacian eigenvalues around the target cluster count K,
//!
//! ```text
//! loss(Y, K) = lambda_K / lambda_{K+1}
//! ```
//!
//! with eigenvalues sorted ascending and indexed 1-based, so lambda_1 = 0 is
//! included. Driving the loss to zero pushes the similarity graph toward K
//! disconnected components. Indexing is the single most error-prone spot in
//! this module: `eigenvalues[0]` stores lambda_1.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Eigenvalue gap below which the loss gradient is considered undefined.
pub const GAP_TOL: f64 = 1e-8;
/// lambda_{K+1} below this means the graph already has more than K
/// near-disconnected components; the loss ratio is meaningless there.
pub const SPLIT_TOL: f64 = 1e-12;
const RANGE_TOL: f64 = 1e-8;
const ORTHO_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-6;

/// Dense Gaussian similarity graph over a point set: `s_ij =
/// exp(-gamma * ||y_i - y_j||^2)` off the diagonal, `s_ii = 0`.
#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    weights: Array2<f64>,
    gamma: f64,
    degrees: Array1<f64>,
}

impl SimilarityGraph {
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn degrees(&self) -> &Array1<f64> {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }
}

/// Ascending eigenvalues of a normalized graph Laplacian together with the
/// matching orthonormal eigenvectors (one column per eigenvalue).
/// `eigenvalues[0]` is the 1-based lambda_1.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Array2<f64>,
}

pub fn similarity(y: ArrayView2<f64>, gamma: f64) -> Result<SimilarityGraph> {
    let n = y.nrows();
    if n < 2 {
        return Err(Error::Data(format!(
            "similarity graph needs at least 2 points, got {n}"
        )));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite coordinates in similarity input".into()));
    }

    let mut weights = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let mut d2 = 0.0;
            for t in 0..y.ncols() {
                let diff = y[[i, t]] - y[[j, t]];
                d2 += diff * diff;
            }
            let s = (-gamma * d2).exp();
            weights[[i, j]] = s;
            weights[[j, i]] = s;
        }
    }
    let degrees = weights.sum_axis(ndarray::Axis(1));
    Ok(SimilarityGraph {
        weights,
        gamma,
        degrees,
    })
}

/// Kernel width from the median of sampled squared pairwise distances:
/// `gamma = 1 / (2 * median)`. All pairs are used when there are no more
/// than `sample_pairs` of them; otherwise pairs are drawn seeded.
pub fn median_gamma(y: ArrayView2<f64>, sample_pairs: usize, seed: u64) -> Result<f64> {
    let n = y.nrows();
    if n < 2 {
        return Err(Error::Data("median_gamma needs at least 2 points".into()));
    }
    if sample_pairs == 0 {
        return Err(Error::Config("median_gamma needs sample_pairs >= 1".into()));
    }

    let sq_dist = |i: usize, j: usize| -> f64 {
        (0..y.ncols()).map(|t| (y[[i, t]] - y[[j, t]]).powi(2)).sum()
    };

    let total_pairs = n * (n - 1) / 2;
    let mut d2: Vec<f64> = if total_pairs <= sample_pairs {
        let mut all = Vec::with_capacity(total_pairs);
        for i in 0..n {
            for j in (i + 1)..n {
                all.push(sq_dist(i, j));
            }
        }
        all
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sampled = Vec::with_capacity(sample_pairs);
        while sampled.len() < sample_pairs {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                sampled.push(sq_dist(i, j));
            }
        }
        sampled
    };

    d2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = d2.len() / 2;
    let median = if d2.len() % 2 == 1 {
        d2[mid]
    } else {
        0.5 * (d2[mid - 1] + d2[mid])
    };
    if !(median > 0.0) {
        return Err(Error::Data(
            "median pairwise distance is zero (degenerate data)".into(),
        ));
    }
    Ok(1.0 / (2.0 * median))
}

/// `L = I - D^{-1/2} S D^{-1/2}`, symmetric by construction.
pub fn normalized_laplacian(graph: &SimilarityGraph) -> Result<Array2<f64>> {
    let n = graph.len();
    let mut inv_sqrt = Array1::zeros(n);
    for i in 0..n {
        let d = graph.degrees[i];
        if !(d > 0.0) {
            return Err(Error::Numeric(format!(
                "zero degree at node {i}; graph too sparse for the kernel width"
            )));
        }
        inv_sqrt[i] = 1.0 / d.sqrt();
    }
    let mut lap = Array2::zeros((n, n));
    for i in 0..n {
        lap[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let v = -graph.weights[[i, j]] * inv_sqrt[i] * inv_sqrt[j];
            lap[[i, j]] = v;
            lap[[j, i]] = v;
        }
    }
    Ok(lap)
}

/// Full dense symmetric eigendecomposition, eigenvalues ascending.
///
/// Householder reduction to tridiagonal form followed by implicit-shift QL,
/// the classic EISPACK tred2/tql2 pair. Eigenvector signs are normalized so
/// the entry of largest magnitude is positive, which keeps downstream output
/// deterministic.
pub fn symmetric_eigen(a: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Shape(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::Shape("eigensolver needs a non-empty matrix".into()));
    }

    let mut v = a.to_owned();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    // Ascending selection sort, swapping eigenvector columns along.
    for i in 0..n.saturating_sub(1) {
        let mut min = i;
        for j in (i + 1)..n {
            if d[j] < d[min] {
                min = j;
            }
        }
        if min != i {
            d.swap(i, min);
            for r in 0..n {
                v.swap([r, i], [r, min]);
            }
        }
    }

    // Deterministic sign: largest-|entry| component positive.
    for c in 0..n {
        let mut best = 0;
        for r in 1..n {
            if v[[r, c]].abs() > v[[best, c]].abs() {
                best = r;
            }
        }
        if v[[best, c]] < 0.0 {
            for r in 0..n {
                v[[r, c]] = -v[[r, c]];
            }
        }
    }

    Ok((d, v))
}

// Householder reduction of a symmetric matrix to tridiagonal form with
// accumulated transformations (EISPACK tred2).
fn tred2(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
                v[[j, i]] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[[k, j]] -= f * e[k] + g * d[k];
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = 0.0;
    }
    v[[n - 1, n - 1]] = 1.0;
    e[0] = 0.0;
}

// Implicit-shift QL iteration on the tridiagonal form (EISPACK tql2),
// accumulating eigenvectors into v.
fn tql2(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = 2.0_f64.powi(-52);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(Error::Numeric(format!(
                        "eigensolver failed to converge at eigenvalue {l}"
                    )));
                }

                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[[k, i + 1]];
                        v[[k, i + 1]] = s * v[[k, i]] + c * h;
                        v[[k, i]] = c * v[[k, i]] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// The `m_eig` smallest eigenpairs of a symmetric matrix (dense solve, then
/// truncate). Batch sizes in this crate stay small enough that the O(N^3)
/// dense decomposition is the simplest correct tool.
pub fn smallest_eigenpairs(l: ArrayView2<f64>, m_eig: usize) -> Result<LaplacianSpectrum> {
    let n = l.nrows();
    if m_eig == 0 || m_eig > n {
        return Err(Error::Shape(format!(
            "requested {m_eig} eigenpairs from a {n}x{n} matrix"
        )));
    }
    let (evals, evecs) = symmetric_eigen(l)?;
    let eigenvalues = evals[..m_eig].to_vec();
    let mut eigenvectors = Array2::zeros((n, m_eig));
    for c in 0..m_eig {
        for r in 0..n {
            eigenvectors[[r, c]] = evecs[[r, c]];
        }
    }
    Ok(LaplacianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Checks the spectrum contract against the matrix it came from: eigenvalues
/// within the normalized-Laplacian range [0, 2] (up to tolerance), columns
/// orthonormal, and per-pair residuals small.
pub fn validate_spectrum(l: ArrayView2<f64>, spectrum: &LaplacianSpectrum) -> Result<()> {
    let n = l.nrows();
    let m = spectrum.eigenvalues.len();
    if spectrum.eigenvectors.nrows() != n || spectrum.eigenvectors.ncols() != m {
        return Err(Error::Shape("spectrum shape mismatch".into()));
    }
    if let Some(first) = spectrum.eigenvalues.first() {
        if *first < -RANGE_TOL {
            return Err(Error::Numeric(format!(
                "laplacian eigenvalue {first} below 0 beyond tolerance"
            )));
        }
    }
    if let Some(last) = spectrum.eigenvalues.last() {
        if *last > 2.0 + RANGE_TOL {
            return Err(Error::Numeric(format!(
                "laplacian eigenvalue {last} above 2 beyond tolerance"
            )));
        }
    }
    for a in 0..m {
        for b in a..m {
            let dot: f64 = (0..n)
                .map(|r| spectrum.eigenvectors[[r, a]] * spectrum.eigenvectors[[r, b]])
                .sum();
            let target = if a == b { 1.0 } else { 0.0 };
            if (dot - target).abs() >= ORTHO_TOL {
                return Err(Error::Numeric(format!(
                    "eigenvector columns {a},{b} not orthonormal: dot {dot}"
                )));
            }
        }
    }
    for c in 0..m {
        let lambda = spectrum.eigenvalues[c];
        let mut res2 = 0.0;
        for r in 0..n {
            let mut lu = 0.0;
            for t in 0..n {
                lu += l[[r, t]] * spectrum.eigenvectors[[t, c]];
            }
            let diff = lu - lambda * spectrum.eigenvectors[[r, c]];
            res2 += diff * diff;
        }
        if res2.sqrt() >= RESIDUAL_TOL {
            return Err(Error::Numeric(format!(
                "eigenpair {c} residual {} exceeds tolerance",
                res2.sqrt()
            )));
        }
    }
    Ok(())
}

/// The clustering loss read off an ascending eigenvalue list:
/// `lambda_K / lambda_{K+1}` with 1-based indices, so `eigenvalues[0]` is
/// lambda_1. Errors when lambda_{K+1} is numerically zero (the graph is
/// split into more than K components).
pub fn clustering_loss_from_eigenvalues(eigenvalues: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("cluster count must be >= 1".into()));
    }
    if eigenvalues.len() < k + 1 {
        return Err(Error::Shape(format!(
            "need at least {} eigenvalues for K = {k}, got {}",
            k + 1,
            eigenvalues.len()
        )));
    }
    let lam_k = eigenvalues[k - 1];
    let lam_k1 = eigenvalues[k];
    if lam_k1 < SPLIT_TOL {
        return Err(Error::DegenerateSpectrum(format!(
            "lambda_{} = {lam_k1} is numerically zero; graph has more than {k} components",
            k + 1
        )));
    }
    Ok(lam_k / lam_k1)
}

/// Everything the trainer needs from one latent batch, computed from a
/// single eigendecomposition: the loss value, the leading spectrum, and —
/// when the gap preconditions hold — the analytic gradient with respect to
/// the batch coordinates.
#[derive(Debug)]
pub struct LossEvaluation {
    pub psi: f64,
    pub spectrum: LaplacianSpectrum,
    /// `None` when the relevant eigenvalues are too close for the gradient
    /// to be defined; the caller should skip the clustering term.
    pub gradient: Option<Array2<f64>>,
}

pub fn clustering_loss(y: ArrayView2<f64>, k: usize, gamma: f64) -> Result<(f64, LaplacianSpectrum)> {
    let eval = evaluate_loss(y, k, gamma, false)?;
    Ok((eval.psi, eval.spectrum))
}

/// Analytic gradient of the clustering loss with respect to Y.
///
/// Errors with [`Error::DegenerateSpectrum`] when lambda_K or lambda_{K+1}
/// is not a simple, well-separated eigenvalue.
pub fn clustering_loss_gradient(y: ArrayView2<f64>, k: usize, gamma: f64) -> Result<Array2<f64>> {
    let eval = evaluate_loss(y, k, gamma, true)?;
    eval.gradient.ok_or_else(|| {
        Error::DegenerateSpectrum(
            "eigenvalue gaps around lambda_K too small for a gradient".into(),
        )
    })
}

/// Combined loss + gradient evaluation. With `need_gradient` the gradient is
/// attempted and left `None` if the gap preconditions fail (the loss value
/// itself is still returned).
pub fn evaluate_loss(
    y: ArrayView2<f64>,
    k: usize,
    gamma: f64,
    need_gradient: bool,
) -> Result<LossEvaluation> {
    let n = y.nrows();
    if n < k + 1 {
        return Err(Error::Shape(format!(
            "clustering loss needs at least K+1 = {} points, got {n}",
            k + 1
        )));
    }
    let graph = similarity(y, gamma)?;
    let lap = normalized_laplacian(&graph)?;
    let (evals, evecs) = symmetric_eigen(lap.view())?;

    let psi = clustering_loss_from_eigenvalues(&evals, k)?;

    let m_eig = (k + 2).min(n);
    let spectrum = LaplacianSpectrum {
        eigenvalues: evals[..m_eig].to_vec(),
        eigenvectors: {
            let mut cols = Array2::zeros((n, m_eig));
            for c in 0..m_eig {
                for r in 0..n {
                    cols[[r, c]] = evecs[[r, c]];
                }
            }
            cols
        },
    };
    validate_spectrum(lap.view(), &spectrum)?;

    let gradient = if need_gradient {
        assemble_gradient(y, k, &graph, &evals, &evecs)
    } else {
        None
    };

    Ok(LossEvaluation {
        psi,
        spectrum,
        gradient,
    })
}

// First-order eigenvalue perturbation gives, for a unit eigenvector u of L
// with eigenvalue lambda and v = D^{-1/2} u,
//
//   d lambda = sum_{i != j} w_ij ds_ij,
//   w_ij = (1 - lambda) (v_i^2 + v_j^2) / 2 - v_i v_j,
//
// after folding the degree-matrix terms through S v = (1 - lambda) D v.
// The quotient rule on lambda_K / lambda_{K+1} and the kernel derivative
// ds_ij/dy_i = -2 gamma s_ij (y_i - y_j) then give the per-point gradient.
fn assemble_gradient(
    y: ArrayView2<f64>,
    k: usize,
    graph: &SimilarityGraph,
    evals: &[f64],
    evecs: &Array2<f64>,
) -> Option<Array2<f64>> {
    let n = y.nrows();
    let dim = y.ncols();
    let lam_k = evals[k - 1];
    let lam_k1 = evals[k];
    if lam_k1 < SPLIT_TOL {
        return None;
    }
    // Both eigenvalues must be simple and separated from their neighbors.
    let mut min_gap = lam_k1 - lam_k;
    if k >= 2 {
        min_gap = min_gap.min(lam_k - evals[k - 2]);
    }
    if k + 1 < n {
        min_gap = min_gap.min(evals[k + 1] - lam_k1);
    }
    if min_gap <= GAP_TOL {
        return None;
    }

    let mut v_k = vec![0.0; n];
    let mut v_k1 = vec![0.0; n];
    for i in 0..n {
        let inv_sqrt = 1.0 / graph.degrees[i].sqrt();
        v_k[i] = evecs[[i, k - 1]] * inv_sqrt;
        v_k1[i] = evecs[[i, k]] * inv_sqrt;
    }

    let denom = lam_k1 * lam_k1;
    let gamma = graph.gamma;
    let mut grad: Array2<f64> = Array2::zeros((n, dim));
    for i in 0..n {
        for j in (i + 1)..n {
            let s = graph.weights[[i, j]];
            if s == 0.0 {
                continue;
            }
            let w_k = (1.0 - lam_k) * 0.5 * (v_k[i] * v_k[i] + v_k[j] * v_k[j]) - v_k[i] * v_k[j];
            let w_k1 =
                (1.0 - lam_k1) * 0.5 * (v_k1[i] * v_k1[i] + v_k1[j] * v_k1[j]) - v_k1[i] * v_k1[j];
            let sensitivity = (lam_k1 * w_k - lam_k * w_k1) / denom;
            let coef = -4.0 * gamma * sensitivity * s;
            for t in 0..dim {
                let diff = y[[i, t]] - y[[j, t]];
                grad[[i, t]] += coef * diff;
                grad[[j, t]] -= coef * diff;
            }
        }
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return None;
    }
    Some(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn similarity_identical_points_weight_one() {
        let y = array![[1.0, 2.0], [1.0, 2.0]];
        let g = similarity(y.view(), 1.0).unwrap();
        assert_eq!(g.weights()[[0, 1]], 1.0);
        assert_eq!(g.weights()[[0, 0]], 0.0);
    }

    #[test]
    fn similarity_unit_distance_kernel_value() {
        let y = array![[0.0], [1.0]];
        let g = similarity(y.view(), 1.0).unwrap();
        assert_relative_eq!(g.weights()[[0, 1]], (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn similarity_large_gamma_vanishes_off_diagonal() {
        let y = array![[0.0], [10.0]];
        let g = similarity(y.view(), 100.0).unwrap();
        assert!(g.weights()[[0, 1]] < 1e-300);
    }

    #[test]
    fn median_gamma_constant_distances() {
        // three points pairwise squared distance 2 -> gamma = 1/(2*2)
        let y = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let gamma = median_gamma(y.view(), 1000, 0).unwrap();
        assert_relative_eq!(gamma, 0.25, max_relative = 1e-15);
    }

    #[test]
    fn median_gamma_degenerate_duplicates() {
        let y = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        assert!(median_gamma(y.view(), 100, 0).is_err());
    }

    #[test]
    fn laplacian_two_point_hand_value() {
        let y = array![[0.0], [0.0]];
        let g = similarity(y.view(), 1.0).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        assert_relative_eq!(l[[0, 0]], 1.0, max_relative = 1e-15);
        assert_relative_eq!(l[[0, 1]], -1.0, max_relative = 1e-15);
        let (evals, _) = symmetric_eigen(l.view()).unwrap();
        assert_relative_eq!(evals[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(evals[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_annihilates_sqrt_degree_vector() {
        let y = array![[0.0, 0.0], [1.0, 0.5], [0.3, 2.0], [4.0, 1.0]];
        let g = similarity(y.view(), 0.7).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        let null: Vec<f64> = g.degrees().iter().map(|d| d.sqrt()).collect();
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| l[[i, j]] * null[j]).sum();
            assert!(row.abs() < 1e-12, "row {i} -> {row}");
        }
    }

    #[test]
    fn disconnected_components_give_second_zero_eigenvalue() {
        // block-diagonal similarity built directly
        let mut weights = Array2::zeros((4, 4));
        weights[[0, 1]] = 1.0;
        weights[[1, 0]] = 1.0;
        weights[[2, 3]] = 0.5;
        weights[[3, 2]] = 0.5;
        let degrees = weights.sum_axis(ndarray::Axis(1));
        let g = SimilarityGraph {
            weights,
            gamma: 1.0,
            degrees,
        };
        let l = normalized_laplacian(&g).unwrap();
        let (evals, _) = symmetric_eigen(l.view()).unwrap();
        assert!(evals[0].abs() < 1e-12);
        assert!(evals[1].abs() < 1e-12);
        assert!(evals[2] > 0.5);
    }

    #[test]
    fn eigen_identity_and_diagonal() {
        let spec = smallest_eigenpairs(Array2::<f64>::eye(3).view(), 3).unwrap();
        for v in &spec.eigenvalues {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-14);
        }

        let d = array![[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let spec = smallest_eigenpairs(d.view(), 2).unwrap();
        assert_relative_eq!(spec.eigenvalues[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(spec.eigenvalues[1], 1.0, epsilon = 1e-14);
        // axis eigenvectors
        assert_relative_eq!(spec.eigenvectors[[1, 0]].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(spec.eigenvectors[[2, 1]].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_reconstructs_2x2() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (evals, evecs) = symmetric_eigen(a.view()).unwrap();
        assert_relative_eq!(evals[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(evals[1], 3.0, epsilon = 1e-12);
        // residual check through the public validator
        let spec = LaplacianSpectrum {
            eigenvalues: evals,
            eigenvectors: evecs,
        };
        for c in 0..2 {
            for r in 0..2 {
                let lu: f64 = (0..2).map(|t| a[[r, t]] * spec.eigenvectors[[t, c]]).sum();
                assert_relative_eq!(
                    lu,
                    spec.eigenvalues[c] * spec.eigenvectors[[r, c]],
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn loss_from_eigenvalues_examples() {
        // lambda_K = 0 case: already split into K parts
        let psi = clustering_loss_from_eigenvalues(&[0.0, 0.0, 0.5, 1.2], 2).unwrap();
        assert_eq!(psi, 0.0);
        // direct ratio
        let psi = clustering_loss_from_eigenvalues(&[0.0, 0.2, 0.4], 2).unwrap();
        assert_relative_eq!(psi, 0.5, max_relative = 1e-15);
        // more than K components -> degenerate
        let err = clustering_loss_from_eigenvalues(&[0.0, 0.0, 0.0, 1e-13, 0.4], 3).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum(_)));
    }

    #[test]
    fn loss_scale_coupling_exact() {
        // kernel depends only on gamma * ||dy||^2: scaling Y by 2 and gamma
        // by 1/4 reproduces the loss bit-exactly
        let y = array![
            [0.25, 1.5],
            [0.5, -0.75],
            [2.0, 0.125],
            [-1.0, 0.5],
            [0.75, 2.5],
            [1.25, -0.25]
        ];
        let scaled = y.mapv(|v| 2.0 * v);
        let (a, _) = clustering_loss(y.view(), 2, 0.8).unwrap();
        let (b, _) = clustering_loss(scaled.view(), 2, 0.2).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn gradient_translation_invariance() {
        let y = array![
            [0.1, 0.9],
            [0.2, 0.3],
            [1.5, 1.1],
            [1.6, 0.2],
            [3.0, 2.0],
            [0.4, 2.2]
        ];
        let grad = clustering_loss_gradient(y.view(), 2, 0.5).unwrap();
        for t in 0..2 {
            let col_sum: f64 = (0..6).map(|i| grad[[i, t]]).sum();
            assert!(col_sum.abs() < 1e-10, "column {t} sum {col_sum}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences_small() {
        let y = array![
            [0.0, 0.4],
            [0.3, 0.1],
            [1.2, 1.0],
            [1.0, 1.4],
            [2.5, 0.2],
            [2.2, 0.6],
            [0.8, 2.3]
        ];
        let k = 2;
        let gamma = 0.9;
        let grad = clustering_loss_gradient(y.view(), k, gamma).unwrap();
        let h = 1e-5;
        for i in 0..y.nrows() {
            for t in 0..y.ncols() {
                let mut plus = y.clone();
                plus[[i, t]] += h;
                let mut minus = y.clone();
                minus[[i, t]] -= h;
                let (pp, _) = clustering_loss(plus.view(), k, gamma).unwrap();
                let (pm, _) = clustering_loss(minus.view(), k, gamma).unwrap();
                let fd = (pp - pm) / (2.0 * h);
                let denom = fd.abs().max(grad[[i, t]].abs()).max(1e-8);
                assert!(
                    (fd - grad[[i, t]]).abs() / denom < 1e-4,
                    "({i},{t}): analytic {} vs fd {fd}",
                    grad[[i, t]]
                );
            }
        }
    }

    #[test]
    fn gradient_antisymmetric_for_two_points() {
        // K = 1 on a symmetric two-point set: the loss is identically zero
        // and the gradient must vanish (equivalently g(y1) = -g(y2)).
        let y = array![[1.0, 0.0], [-1.0, 0.0]];
        let grad = clustering_loss_gradient(y.view(), 1, 0.3).unwrap();
        for t in 0..2 {
            assert_relative_eq!(grad[[0, t]], -grad[[1, t]], epsilon = 1e-12);
            assert!(grad[[0, t]].abs() < 1e-12);
        }
    }

    #[test]
    fn rsg_monotone_in_separation_at_fixed_gamma() {
        let gamma = 0.125;
        let mut last = f64::INFINITY;
        for sep in [2.0, 5.0, 10.0, 20.0] {
            let blobs = crate::dataset::make_blobs(2, 20, 4, 1.0, sep, 7).unwrap();
            let (psi, _) = clustering_loss(blobs.values().view(), 2, gamma).unwrap();
            assert!(psi < last, "psi {psi} not decreasing at separation {sep}");
            last = psi;
        }
    }
}

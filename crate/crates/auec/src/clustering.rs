//! Stage III clusterers: K-means (greedy D^2-weighted seeding, Lloyd
//! iterations, multi-restart), DBSCAN, and the merge-to-K DBSCAN variant
//! that folds smaller clusters and noise into the K largest by proximity.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{matmul, sq_dist};
use crate::{Error, Result};

/// Sentinel for unclustered points; only raw DBSCAN output may contain it.
pub const NOISE: i32 = -1;

const MAX_LLOYD_ITERS: usize = 300;

/// Per-point integer labels in `0..k` (or [`NOISE`] before merging), the
/// cluster count, and optional centroids.
#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    pub labels: Vec<i32>,
    pub k: usize,
    pub centroids: Option<Array2<f64>>,
}

impl ClusterAssignment {
    pub fn has_noise(&self) -> bool {
        self.labels.iter().any(|&l| l == NOISE)
    }

    /// Labels as unsigned values; errors if any noise sentinel remains.
    pub fn labels_usize(&self) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .map(|&l| {
                if l < 0 {
                    Err(Error::Data("noise sentinel in final assignment".into()))
                } else {
                    Ok(l as usize)
                }
            })
            .collect()
    }
}

// Assign every row to its nearest centroid (ties to the lower index) and
// report each point's squared distance. Uses ||x - c||^2 = ||x||^2 - 2 x.c
// + ||c||^2 with the cross term as one matmul.
fn assign_to_centroids(
    z: ArrayView2<f64>,
    centroids: &Array2<f64>,
) -> (Vec<usize>, Vec<f64>) {
    let n = z.nrows();
    let k = centroids.nrows();
    let cross = matmul(z, centroids.t());
    let c_norms: Vec<f64> = (0..k)
        .map(|c| centroids.row(c).iter().map(|v| v * v).sum())
        .collect();
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0f64; n];
    for i in 0..n {
        let x_norm: f64 = z.row(i).iter().map(|v| v * v).sum();
        let mut best = 0usize;
        let mut best_val = f64::INFINITY;
        for c in 0..k {
            let val = c_norms[c] - 2.0 * cross[[i, c]];
            if val < best_val {
                best_val = val;
                best = c;
            }
        }
        labels[i] = best;
        dists[i] = (x_norm + best_val).max(0.0);
    }
    (labels, dists)
}

fn centroids_from_labels(
    z: ArrayView2<f64>,
    labels: &[usize],
    k: usize,
    previous: &Array2<f64>,
) -> Array2<f64> {
    let dim = z.ncols();
    let mut sums = Array2::zeros((k, dim));
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for d in 0..dim {
            sums[[l, d]] += z[[i, d]];
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            // keep the previous centroid; relocation happens in the caller
            sums.row_mut(c).assign(&previous.row(c));
        } else {
            for d in 0..dim {
                sums[[c, d]] /= counts[c] as f64;
            }
        }
    }
    sums
}

// Greedy D^2-weighted seeding: each new center is picked from several
// D^2-sampled candidates as the one that lowers total inertia the most.
fn seed_centroids(z: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = z.nrows();
    let dim = z.ncols();
    let candidates = 2 + (k as f64).ln().floor().max(0.0) as usize;
    let mut centroids = Array2::zeros((k, dim));

    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&z.row(first));

    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(z.row(i).as_slice().unwrap(), centroids.row(0).as_slice().unwrap()))
        .collect();

    let z_flat = z.as_slice().unwrap();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let mut best_candidate = None;
        let mut best_inertia = f64::INFINITY;
        for _ in 0..candidates {
            let idx = if total > 0.0 {
                let r = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    acc += w;
                    if acc >= r {
                        chosen = i;
                        break;
                    }
                }
                chosen
            } else {
                // all points coincide with chosen centers; any index works
                rng.random_range(0..n)
            };
            let cand_row = &z_flat[idx * dim..(idx + 1) * dim];
            let inertia: f64 = (0..n)
                .map(|i| d2[i].min(sq_dist(&z_flat[i * dim..(i + 1) * dim], cand_row)))
                .sum();
            if inertia < best_inertia {
                best_inertia = inertia;
                best_candidate = Some(idx);
            }
        }
        let idx = best_candidate.unwrap();
        centroids.row_mut(c).assign(&z.row(idx));
        let cand_row = &z_flat[idx * dim..(idx + 1) * dim];
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(&z_flat[i * dim..(i + 1) * dim], cand_row));
        }
    }
    centroids
}

pub(crate) struct KmeansRun {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    pub wcss: f64,
    pub wcss_history: Vec<f64>,
}

pub(crate) fn kmeans_single(z: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> KmeansRun {
    let n = z.nrows();
    let mut centroids = seed_centroids(z, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        let (new_labels, dists) = assign_to_centroids(z, &centroids);
        let mut counts = vec![0usize; k];
        for &l in &new_labels {
            counts[l] += 1;
        }
        let mut relocated = false;
        if counts.iter().any(|&c| c == 0) {
            // move each empty centroid onto the point currently farthest
            // from its assigned centroid (one point per empty cluster)
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dists[b].partial_cmp(&dists[a]).unwrap().then(a.cmp(&b)));
            let mut cursor = 0;
            for c in 0..k {
                if counts[c] == 0 {
                    let pick = order[cursor];
                    cursor += 1;
                    centroids.row_mut(c).assign(&z.row(pick));
                    relocated = true;
                }
            }
        }
        if relocated {
            continue;
        }
        let stable = new_labels == labels;
        labels = new_labels;
        centroids = centroids_from_labels(z, &labels, k, &centroids);
        history.push(wcss_of(z, &labels, k));
        if stable {
            break;
        }
    }
    let wcss = *history.last().unwrap();
    KmeansRun {
        labels,
        centroids,
        wcss,
        wcss_history: history,
    }
}

fn wcss_of(z: ArrayView2<f64>, labels: &[usize], k: usize) -> f64 {
    let dim = z.ncols();
    let mut means = Array2::zeros((k, dim));
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for d in 0..dim {
            means[[l, d]] += z[[i, d]];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for d in 0..dim {
                means[[c, d]] /= counts[c] as f64;
            }
        }
    }
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        for d in 0..dim {
            let diff = z[[i, d]] - means[[l, d]];
            total += diff * diff;
        }
    }
    total
}

/// Lloyd K-means, best of `restarts` seeded runs by within-cluster sum of
/// squares.
pub fn kmeans(z: ArrayView2<f64>, k: usize, restarts: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = z.nrows();
    if k == 0 || k > n {
        return Err(Error::Data(format!("k = {k} invalid for {n} points")));
    }
    if restarts == 0 {
        return Err(Error::Config("kmeans needs restarts >= 1".into()));
    }
    let z = z.as_standard_layout();
    let mut best: Option<KmeansRun> = None;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64 + 1);
        let run = kmeans_single(z.view(), k, &mut rng);
        debug_assert!(run
            .wcss_history
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs())));
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    let best = best.unwrap();
    Ok(ClusterAssignment {
        labels: best.labels.iter().map(|&l| l as i32).collect(),
        k,
        centroids: Some(best.centroids),
    })
}

/// Within-cluster sum of squares against per-cluster means. Empty clusters
/// inside the label range contribute nothing.
pub fn wcss(z: ArrayView2<f64>, assignment: &ClusterAssignment) -> Result<f64> {
    if assignment.labels.len() != z.nrows() {
        return Err(Error::Shape(format!(
            "assignment covers {} points, data has {}",
            assignment.labels.len(),
            z.nrows()
        )));
    }
    let labels = assignment.labels_usize()?;
    let k = assignment.k.max(labels.iter().copied().max().unwrap_or(0) + 1);
    Ok(wcss_of(z, &labels, k))
}

/// Classic density clustering. Core points have at least `min_pts`
/// neighbors within `eps` (self included); clusters grow from cores in
/// index-scan order, border points attach to the first core cluster that
/// reaches them, and leftovers keep the [`NOISE`] label.
pub fn dbscan(z: ArrayView2<f64>, eps: f64, min_pts: usize) -> Result<ClusterAssignment> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("dbscan eps must be > 0, got {eps}")));
    }
    if min_pts == 0 {
        return Err(Error::Config("dbscan min_pts must be >= 1".into()));
    }
    let z = z.as_standard_layout();
    let flat = z.as_slice().unwrap();
    let n = z.nrows();
    let dim = z.ncols();
    let eps2 = eps * eps;
    let region = |i: usize| -> Vec<usize> {
        let row = &flat[i * dim..(i + 1) * dim];
        (0..n)
            .filter(|&j| sq_dist(row, &flat[j * dim..(j + 1) * dim]) <= eps2)
            .collect()
    };

    let mut labels = vec![NOISE; n];
    let mut visited = vec![false; n];
    let mut cluster: i32 = 0;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let neighbors = region(i);
        if neighbors.len() < min_pts {
            continue; // stays noise unless a later cluster adopts it
        }
        labels[i] = cluster;
        let mut queue: std::collections::VecDeque<usize> = neighbors.into();
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = cluster; // border adoption by first cluster
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nj = region(j);
            if nj.len() >= min_pts {
                queue.extend(nj);
            }
        }
        cluster += 1;
    }
    Ok(ClusterAssignment {
        labels,
        k: cluster as usize,
        centroids: None,
    })
}

/// DBSCAN forced to exactly `k` clusters: keep the `k` largest clusters,
/// merge every smaller cluster wholesale into the kept cluster at minimum
/// single-linkage distance, then give each noise point the cluster of its
/// nearest non-noise neighbor. Final labels are `0..k` by descending size.
pub fn mdbscan(z: ArrayView2<f64>, k: usize, eps: f64, min_pts: usize) -> Result<ClusterAssignment> {
    if k == 0 {
        return Err(Error::Config("mdbscan needs k >= 1".into()));
    }
    let raw = dbscan(z, eps, min_pts)?;
    if raw.k < k {
        return Err(Error::Numeric(format!(
            "insufficient clusters: dbscan found {} < {k}; decrease eps",
            raw.k
        )));
    }
    let z = z.as_standard_layout();
    let flat = z.as_slice().unwrap();
    let dim = z.ncols();
    let n = z.nrows();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); raw.k];
    for (i, &l) in raw.labels.iter().enumerate() {
        if l >= 0 {
            members[l as usize].push(i);
        }
    }
    // rank by size descending, ties by lower original label
    let mut order: Vec<usize> = (0..raw.k).collect();
    order.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()).then(a.cmp(&b)));
    let kept = &order[..k];

    let mut merged_into = vec![usize::MAX; raw.k]; // original label -> kept slot
    for (slot, &orig) in kept.iter().enumerate() {
        merged_into[orig] = slot;
    }
    let single_linkage = |a: &[usize], b: &[usize]| -> f64 {
        let mut best = f64::INFINITY;
        for &i in a {
            let ri = &flat[i * dim..(i + 1) * dim];
            for &j in b {
                let d = sq_dist(ri, &flat[j * dim..(j + 1) * dim]);
                if d < best {
                    best = d;
                }
            }
        }
        best
    };
    for &small in &order[k..] {
        let mut best_slot = 0;
        let mut best_dist = f64::INFINITY;
        for (slot, &orig) in kept.iter().enumerate() {
            let d = single_linkage(&members[small], &members[orig]);
            if d < best_dist {
                best_dist = d;
                best_slot = slot;
            }
        }
        merged_into[small] = best_slot;
    }

    let mut labels = vec![NOISE; n];
    for (i, &l) in raw.labels.iter().enumerate() {
        if l >= 0 {
            labels[i] = merged_into[l as usize] as i32;
        }
    }
    // noise points join the post-merge cluster of their nearest non-noise
    // neighbor (the pre-assignment noise set stays fixed while iterating)
    let assigned: Vec<usize> = (0..n).filter(|&i| raw.labels[i] >= 0).collect();
    if assigned.is_empty() {
        return Err(Error::Numeric(
            "dbscan labeled every point noise; decrease eps or min_pts".into(),
        ));
    }
    for i in 0..n {
        if raw.labels[i] >= 0 {
            continue;
        }
        let ri = &flat[i * dim..(i + 1) * dim];
        let mut best = assigned[0];
        let mut best_dist = f64::INFINITY;
        for &j in &assigned {
            let d = sq_dist(ri, &flat[j * dim..(j + 1) * dim]);
            if d < best_dist {
                best_dist = d;
                best = j;
            }
        }
        labels[i] = labels[best];
    }

    // relabel 0..k by final size descending, ties by lower slot
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l as usize] += 1;
    }
    let mut slots: Vec<usize> = (0..k).collect();
    slots.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut final_of_slot = vec![0usize; k];
    for (rank, &slot) in slots.iter().enumerate() {
        final_of_slot[slot] = rank;
    }
    for l in labels.iter_mut() {
        *l = final_of_slot[*l as usize] as i32;
    }
    Ok(ClusterAssignment {
        labels,
        k,
        centroids: None,
    })
}

/// Default DBSCAN radius: the knee of the ascending curve of each point's
/// distance to its `min_pts`-neighborhood boundary (the radius at which a
/// point would have `min_pts` neighbors, itself included). The knee is the
/// point of maximum deviation from the chord between the curve endpoints.
pub fn knee_eps(z: ArrayView2<f64>, min_pts: usize) -> Result<f64> {
    let n = z.nrows();
    if min_pts < 2 {
        return Err(Error::Config("knee_eps needs min_pts >= 2".into()));
    }
    if n < min_pts {
        return Err(Error::Data(format!(
            "knee_eps needs at least min_pts = {min_pts} points, got {n}"
        )));
    }
    let z = z.as_standard_layout();
    let flat = z.as_slice().unwrap();
    let dim = z.ncols();
    let mut kdist: Vec<f64> = (0..n)
        .map(|i| {
            let ri = &flat[i * dim..(i + 1) * dim];
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| sq_dist(ri, &flat[j * dim..(j + 1) * dim]))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d[min_pts - 2].sqrt()
        })
        .collect();
    kdist.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let last = kdist.len() - 1;
    let (x1, y1) = (0.0, kdist[0]);
    let (x2, y2) = (last as f64, kdist[last]);
    let chord = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
    let mut best_idx = 0;
    let mut best_dev = -1.0;
    for (i, &d) in kdist.iter().enumerate() {
        let dev = if chord > 0.0 {
            ((y2 - y1) * i as f64 - (x2 - x1) * d + x2 * y1 - y2 * x1).abs() / chord
        } else {
            0.0
        };
        if dev > best_dev {
            best_dev = dev;
            best_idx = i;
        }
    }
    let mut eps = kdist[best_idx];
    if eps <= 0.0 {
        eps = kdist
            .iter()
            .copied()
            .find(|&d| d > 0.0)
            .ok_or_else(|| Error::Data("all neighbor distances are zero".into()))?;
    }
    Ok(eps)
}

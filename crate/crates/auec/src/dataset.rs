//! Data ingestion: IDX image/label files, numeric CSV, synthetic Gaussian
//! blobs, and seeded subsampling.

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Dense row-major real matrix with optional per-row ground-truth labels.
///
/// Holds raw data (N x M), compressed embeddings (N x m) and refined
/// embeddings (N x n_C) alike; labels, when present, ride along through
/// every stage so that external evaluation stays possible.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    values: Array2<f64>,
    labels: Option<Vec<usize>>,
}

impl DataMatrix {
    /// Validates and wraps a matrix: at least one row and column, all values
    /// finite, and label count equal to the row count when labels are given.
    pub fn new(values: Array2<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Data(format!(
                "matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value {bad} in matrix")));
        }
        if let Some(ref l) = labels {
            if l.len() != values.nrows() {
                return Err(Error::Data(format!(
                    "label count {} does not match row count {}",
                    l.len(),
                    values.nrows()
                )));
            }
        }
        Ok(DataMatrix { values, labels })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Replace the values while carrying the labels along (used when a stage
    /// maps X -> Y -> Z without touching ground truth).
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != self.rows() {
            return Err(Error::Shape(format!(
                "replacement has {} rows, expected {}",
                values.nrows(),
                self.rows()
            )));
        }
        DataMatrix::new(values, self.labels.clone())
    }
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset
        .checked_add(4)
        .ok_or_else(|| Error::Data("idx header offset overflow".into()))?;
    let slice = bytes
        .get(offset..end)
        .ok_or_else(|| Error::Data("truncated idx header".into()))?;
    Ok(u32::from_be_bytes([slice[0], slice[1], slice[2], slice[3]]))
}

/// Parse an IDX image payload: big-endian magic 2051, count, rows, cols,
/// then raw unsigned bytes. Pixels are scaled to [0,1] by division by 255.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Array2<f64>> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Data(format!(
            "bad magic {magic:#010x} in idx image data, expected {IDX_IMAGE_MAGIC:#010x}"
        )));
    }
    let count = read_be_u32(bytes, 4)? as usize;
    let rows = read_be_u32(bytes, 8)? as usize;
    let cols = read_be_u32(bytes, 12)? as usize;
    let pixels = rows
        .checked_mul(cols)
        .and_then(|p| p.checked_mul(count))
        .ok_or_else(|| Error::Data("idx image dimensions overflow".into()))?;
    if count == 0 || rows == 0 || cols == 0 {
        return Err(Error::Data(format!(
            "idx image data has empty dimension {count}x{rows}x{cols}"
        )));
    }
    let body = &bytes[16..];
    if body.len() != pixels {
        return Err(Error::Data(format!(
            "idx image data holds {} payload bytes, header promises {pixels}",
            body.len()
        )));
    }
    let values: Vec<f64> = body.iter().map(|&b| f64::from(b) / 255.0).collect();
    Array2::from_shape_vec((count, rows * cols), values)
        .map_err(|e| Error::Data(format!("idx image reshape failed: {e}")))
}

/// Parse an IDX label payload: big-endian magic 2049, count, raw bytes.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::Data(format!(
            "bad magic {magic:#010x} in idx label data, expected {IDX_LABEL_MAGIC:#010x}"
        )));
    }
    let count = read_be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Data(format!(
            "idx label data holds {} payload bytes, header promises {count}",
            body.len()
        )));
    }
    Ok(body.iter().map(|&b| b as usize).collect())
}

/// Load paired IDX image and label files into a labeled matrix.
pub fn load_idx(image_path: &Path, label_path: &Path) -> Result<DataMatrix> {
    let image_bytes = std::fs::read(image_path).map_err(|e| Error::io(image_path, e))?;
    let label_bytes = std::fs::read(label_path).map_err(|e| Error::io(label_path, e))?;
    let values = parse_idx_images(&image_bytes)?;
    let labels = parse_idx_labels(&label_bytes)?;
    if labels.len() != values.nrows() {
        return Err(Error::Data(format!(
            "idx count mismatch: {} images vs {} labels",
            values.nrows(),
            labels.len()
        )));
    }
    DataMatrix::new(values, Some(labels))
}

/// Parse a strict rectangular numeric CSV. When `has_labels` is set the last
/// column must be a non-negative integer label. `skip_header` drops the
/// first line.
pub fn parse_csv(text: &str, has_labels: bool, skip_header: bool) -> Result<DataMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut width: Option<usize> = None;

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim_end_matches('\r');
        if lineno == 0 && skip_header {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::Data(format!(
                    "ragged row at line {}: {} cells, expected {w}",
                    lineno + 1,
                    cells.len()
                )));
            }
            _ => {}
        }
        let value_cells = if has_labels {
            if cells.len() < 2 {
                return Err(Error::Data(format!(
                    "line {}: labeled csv needs at least 2 columns",
                    lineno + 1
                )));
            }
            let label_cell = cells[cells.len() - 1].trim();
            let label: usize = label_cell.parse().map_err(|_| {
                Error::Data(format!(
                    "line {}: non-integer label {label_cell:?}",
                    lineno + 1
                ))
            })?;
            labels.push(label);
            &cells[..cells.len() - 1]
        } else {
            &cells[..]
        };
        let mut row = Vec::with_capacity(value_cells.len());
        for cell in value_cells {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Data(format!("line {}: non-numeric cell {:?}", lineno + 1, cell))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "line {}: non-finite cell {:?}",
                    lineno + 1,
                    cell
                )));
            }
            row.push(v);
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::Data("csv holds no data rows".into()));
    }
    let cols = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let n = flat.len() / cols;
    let values = Array2::from_shape_vec((n, cols), flat)
        .map_err(|e| Error::Data(format!("csv reshape failed: {e}")))?;
    DataMatrix::new(values, if has_labels { Some(labels) } else { None })
}

pub fn load_csv(path: &Path, has_labels: bool, skip_header: bool) -> Result<DataMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, has_labels, skip_header)
}

/// Serialize a matrix back to CSV. Values print in shortest round-trip form,
/// so load -> write -> load reproduces every value bit-exactly. Labels, when
/// present and requested, become a trailing integer column.
pub fn write_csv(data: &DataMatrix, path: &Path, include_labels: bool) -> Result<()> {
    let mut out = String::new();
    for i in 0..data.rows() {
        let mut first = true;
        for v in data.row(i) {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        if include_labels {
            if let Some(labels) = data.labels() {
                out.push_str(&format!(",{}", labels[i]));
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// K isotropic Gaussian clusters with centers placed on an integer grid
/// scaled by `separation`, so every pair of centers is at least `separation`
/// apart. Ground-truth labels are attached; output is deterministic in the
/// seed.
pub fn make_blobs(
    k: usize,
    per_cluster: usize,
    dim: usize,
    spread: f64,
    separation: f64,
    seed: u64,
) -> Result<DataMatrix> {
    if k == 0 || per_cluster == 0 || dim == 0 {
        return Err(Error::Config(
            "make_blobs needs k, per_cluster and dim all >= 1".into(),
        ));
    }
    if !(spread > 0.0) || !(separation > 0.0) {
        return Err(Error::Config(
            "make_blobs needs spread > 0 and separation > 0".into(),
        ));
    }

    // Centers: first k points of the side^dim integer grid in mixed-radix
    // order. Distinct grid points differ by >= 1 in some coordinate, so
    // mutual center distance >= separation.
    let side = (k as f64).powf(1.0 / dim as f64).ceil().max(2.0) as usize;
    let mut centers = Vec::with_capacity(k);
    let mut digits = vec![0usize; dim];
    for _ in 0..k {
        let center: Vec<f64> = digits.iter().map(|&d| d as f64 * separation).collect();
        centers.push(center);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < side {
                break;
            }
            *d = 0;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = k * per_cluster;
    let mut values = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        for p in 0..per_cluster {
            let row = c * per_cluster + p;
            for d in 0..dim {
                let noise: f64 = rng.sample(StandardNormal);
                values[[row, d]] = center[d] + spread * noise;
            }
            labels.push(c);
        }
    }
    DataMatrix::new(values, Some(labels))
}

/// Draw `n` rows without replacement (seeded partial Fisher-Yates); labels
/// are carried along. `n == rows` yields a permutation of the input.
pub fn subsample(data: &DataMatrix, n: usize, seed: u64) -> Result<DataMatrix> {
    let indices = subsample_indices(data.rows(), n, seed)?;
    take_rows(data, &indices)
}

/// The index sequence `subsample` uses; exposed so disjoint splits can be
/// carved from one permutation.
pub fn subsample_indices(total: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > total {
        return Err(Error::Data(format!(
            "cannot subsample {n} rows from {total}"
        )));
    }
    if n == 0 {
        return Err(Error::Data("cannot subsample 0 rows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..total).collect();
    for i in 0..n {
        let j = rng.random_range(i..total);
        indices.swap(i, j);
    }
    indices.truncate(n);
    Ok(indices)
}

pub fn take_rows(data: &DataMatrix, indices: &[usize]) -> Result<DataMatrix> {
    let mut values = Array2::zeros((indices.len(), data.cols()));
    for (out_row, &src) in indices.iter().enumerate() {
        if src >= data.rows() {
            return Err(Error::Data(format!("row index {src} out of range")));
        }
        values.row_mut(out_row).assign(&data.row(src));
    }
    let labels = data
        .labels()
        .map(|l| indices.iter().map(|&i| l[i]).collect());
    DataMatrix::new(values, labels)
}

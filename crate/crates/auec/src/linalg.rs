//! Minimal dense kernels with a fixed accumulation order.
//!
//! Every output row is computed independently from its input row with an
//! identical reduction order, so permuting or duplicating input rows
//! permutes or duplicates output rows bit-exactly. That contract is relied
//! on by the encode/decode row-independence guarantees and by the
//! determinism of every exported artifact.

use ndarray::{Array2, ArrayView2};

/// Dot product with four independent accumulator chains. Fixed order, and
/// the unrolling buys most of the throughput a tuned kernel would.
#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    let chunks = n / 4;
    let mut a0 = 0.0;
    let mut a1 = 0.0;
    let mut a2 = 0.0;
    let mut a3 = 0.0;
    for c in 0..chunks {
        let b = 4 * c;
        a0 += x[b] * y[b];
        a1 += x[b + 1] * y[b + 1];
        a2 += x[b + 2] * y[b + 2];
        a3 += x[b + 3] * y[b + 3];
    }
    let mut tail = 0.0;
    for i in (4 * chunks)..n {
        tail += x[i] * y[i];
    }
    (a0 + a1) + (a2 + a3) + tail
}

/// Squared Euclidean distance between two rows, same accumulation scheme.
#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    let chunks = n / 4;
    let mut a0 = 0.0;
    let mut a1 = 0.0;
    let mut a2 = 0.0;
    let mut a3 = 0.0;
    for c in 0..chunks {
        let b = 4 * c;
        let d0 = x[b] - y[b];
        let d1 = x[b + 1] - y[b + 1];
        let d2 = x[b + 2] - y[b + 2];
        let d3 = x[b + 3] - y[b + 3];
        a0 += d0 * d0;
        a1 += d1 * d1;
        a2 += d2 * d2;
        a3 += d3 * d3;
    }
    let mut tail = 0.0;
    for i in (4 * chunks)..n {
        let d = x[i] - y[i];
        tail += d * d;
    }
    (a0 + a1) + (a2 + a3) + tail
}

/// `a (n x k) * b (k x m)`. `b` is transposed into a scratch buffer so both
/// operands stream contiguously.
pub(crate) fn matmul(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.nrows(), "matmul inner dimensions");
    let (n, k) = (a.nrows(), a.ncols());
    let m = b.ncols();
    let a = a.as_standard_layout();
    let mut bt = vec![0.0; k * m];
    for r in 0..k {
        for c in 0..m {
            bt[c * k + r] = b[[r, c]];
        }
    }
    let a_flat = a.as_slice().expect("contiguous");
    let mut out = Array2::zeros((n, m));
    {
        let out_flat = out.as_slice_mut().expect("contiguous");
        for i in 0..n {
            let row = &a_flat[i * k..(i + 1) * k];
            let out_row = &mut out_flat[i * m..(i + 1) * m];
            for (j, out_v) in out_row.iter_mut().enumerate() {
                *out_v = dot(row, &bt[j * k..(j + 1) * k]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matmul_matches_naive() {
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let b = array![[7.0, 8.0], [9.0, 10.0], [11.0, 12.0]];
        let c = matmul(a.view(), b.view());
        assert_eq!(c, array![[58.0, 64.0], [139.0, 154.0]]);
    }

    #[test]
    fn matmul_rows_independent_bitwise() {
        let a = array![[0.1, 0.7, 0.3], [0.1, 0.7, 0.3], [0.9, 0.2, 0.5]];
        let b = array![[0.4, 0.6], [0.8, 0.1], [0.2, 0.9]];
        let c = matmul(a.view(), b.view());
        for j in 0..2 {
            assert_eq!(c[[0, j]].to_bits(), c[[1, j]].to_bits());
        }
    }

    #[test]
    fn matmul_accepts_transposed_views() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let at = a.t();
        let c = matmul(at, a.view());
        assert_eq!(c, array![[10.0, 14.0], [14.0, 20.0]]);
    }
}

//! Data-parallel inner loops with a sequential fallback.
//!
//! Everything here is element-deterministic: each output element depends only
//! on its own inputs, so the parallel and sequential paths produce identical
//! results.

use nalgebra::DMatrix;

const ROW_CHUNK: usize = 64;

/// X * G computed in independent row chunks. Both paths use the same fixed
/// chunking, so enabling `parallel` never changes the result bits.
pub(crate) fn row_chunked_mul(x: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let d = x.nrows();
    if d <= ROW_CHUNK {
        return x * g;
    }
    let starts: Vec<usize> = (0..d).step_by(ROW_CHUNK).collect();
    let block = |start: usize| {
        let len = ROW_CHUNK.min(d - start);
        (start, x.rows(start, len) * g)
    };
    #[cfg(feature = "parallel")]
    let chunks: Vec<(usize, DMatrix<f64>)> = {
        use rayon::prelude::*;
        starts.into_par_iter().map(block).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<(usize, DMatrix<f64>)> = starts.into_iter().map(block).collect();

    let mut out = DMatrix::zeros(d, g.ncols());
    for (start, b) in chunks {
        out.rows_mut(start, b.nrows()).copy_from(&b);
    }
    out
}

/// Map over an index range, parallel when the feature is enabled.
pub(crate) fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_chunked_matches_plain_product() {
        let x = DMatrix::from_fn(130, 20, |i, j| (i * 31 + j) as f64 * 0.01 - 3.0);
        let g = DMatrix::from_fn(20, 20, |i, j| ((i + 7 * j) % 13) as f64 * 0.1);
        let got = row_chunked_mul(&x, &g);
        let expect = &x * &g;
        assert!((&got - &expect).norm() <= 1e-12 * expect.norm());
    }

    #[test]
    fn map_indexed_order() {
        let v = map_indexed(100, |i| i * i);
        assert_eq!(v[17], 289);
        assert_eq!(v.len(), 100);
    }
}

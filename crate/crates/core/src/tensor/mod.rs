//! Dense `f64` arrays and a reverse-mode tape over them.

mod gradcheck;
mod tape;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use gradcheck::{grad_check, relative_error};
pub use tape::{Grads, ParamId, Tape, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    Shape { op: &'static str, left: Vec<usize>, right: Vec<usize> },
    #[error("{op}: index {index} out of range for {len} rows")]
    Index { op: &'static str, index: usize, len: usize },
    #[error("{op}: {reason}")]
    Invalid { op: &'static str, reason: String },
    #[error("non-finite value {value} at flat index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("snapshot: {0}")]
    Snapshot(String),
}

pub type Result<T> = core::result::Result<T, TensorError>;

/// Row-major array of `f64`. Most operations work on rank-2 tensors; vectors
/// are `1 x n` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) || expected != data.len() {
            return Err(TensorError::Invalid {
                op: "new",
                reason: format!("shape {shape:?} does not hold {} values", data.len()),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { shape: vec![rows, cols], data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Tensor { shape: vec![rows, cols], data: vec![value; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn row(data: Vec<f64>) -> Self {
        let n = data.len();
        Tensor { shape: vec![1, n], data }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { shape: vec![1, 1], data: vec![value] }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Rows of a rank-2 tensor (1 for lower ranks).
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            0 | 1 => 1,
            _ => self.shape[0],
        }
    }

    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap_or(&1)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }

    /// Fails on the first NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(TensorError::NonFinite { index, value: self.data[index] }),
            None => Ok(()),
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale_assign(&mut self, k: f64) {
        for v in &mut self.data {
            *v *= k;
        }
    }

    /// Row-major argmax of a single row.
    pub fn argmax_row(&self, r: usize) -> usize {
        argmax(self.row_slice(r))
    }

    /// Appends the snapshot encoding: `u32` rank, `u64` extents, then
    /// little-endian `f64` values.
    pub fn write_snapshot(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.shape.len() as u32).to_le_bytes());
        for &d in &self.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    /// Decodes one snapshot from the front of `bytes`, returning the tensor
    /// and the number of bytes consumed.
    pub fn read_snapshot(bytes: &[u8]) -> Result<(Tensor, usize)> {
        let mut pos = 0;
        let mut take = |n: usize| -> Result<&[u8]> {
            let slice = bytes
                .get(pos..pos + n)
                .ok_or_else(|| TensorError::Snapshot(format!("truncated at byte {pos}")))?;
            pos += n;
            Ok(slice)
        };
        let rank = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        if rank == 0 || rank > 8 {
            return Err(TensorError::Snapshot(format!("unsupported rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize);
        }
        let count = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let count = count.filter(|&c| c <= bytes.len() / 8).ok_or_else(|| {
            TensorError::Snapshot(format!("shape {shape:?} exceeds payload"))
        })?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        let tensor = Tensor::new(shape, data).map_err(|e| TensorError::Snapshot(format!("{e}")))?;
        Ok((tensor, pos))
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `c = alpha * op(a) * op(b) + beta * c` for row-major buffers.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m.min(k).min(n) < SKINNY {
        return skinny_gemm(m, k, n, alpha, a, a_trans, b, b_trans, beta, c);
    }
    // Row-major strides, swapped for a transposed operand.
    let (rsa, csa) = if a_trans { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_trans { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the slices cover m*k, k*n and m*n elements and the strides
    // describe exactly those row-major layouts.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Below this extent the packing done by the blocked kernel costs more than
/// it saves (vector-matrix products, outer products).
const SKINNY: usize = 8;

#[allow(clippy::too_many_arguments)]
fn skinny_gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    c: &mut [f64],
) {
    let c = &mut c[..m * n];
    if beta == 0.0 {
        c.fill(0.0);
    } else if beta != 1.0 {
        c.iter_mut().for_each(|v| *v *= beta);
    }
    let at = |i: usize, p: usize| if a_trans { a[p * m + i] } else { a[i * k + p] };
    if b_trans {
        // Rows of b are columns of op(b): contiguous dot products.
        for i in 0..m {
            let ci = &mut c[i * n..(i + 1) * n];
            if a_trans {
                for (j, cij) in ci.iter_mut().enumerate() {
                    let bj = &b[j * k..(j + 1) * k];
                    *cij += alpha * bj.iter().enumerate().map(|(p, v)| at(i, p) * v).sum::<f64>();
                }
            } else {
                let ai = &a[i * k..(i + 1) * k];
                for (j, cij) in ci.iter_mut().enumerate() {
                    let bj = &b[j * k..(j + 1) * k];
                    *cij += alpha * ai.iter().zip(bj).map(|(x, y)| x * y).sum::<f64>();
                }
            }
        }
    } else {
        for i in 0..m {
            let ci = &mut c[i * n..(i + 1) * n];
            for p in 0..k {
                let s = alpha * at(i, p);
                if s == 0.0 {
                    continue;
                }
                for (cij, bv) in ci.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                    *cij += s * bv;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_roundtrip() {
        let t = Tensor::from_rows(2, 3, vec![1.0, -2.5, 3.0, 0.0, 1e-300, f64::MAX]).unwrap();
        let mut buf = Vec::new();
        t.write_snapshot(&mut buf);
        assert_eq!(buf.len(), 4 + 16 + 48);
        let (back, used) = Tensor::read_snapshot(&buf).unwrap();
        assert_eq!(back, t);
        assert_eq!(used, buf.len());
        assert!(Tensor::read_snapshot(&buf[..20]).is_err());
    }

    #[test]
    fn non_finite_detected() {
        let t = Tensor::row(vec![1.0, f64::NAN]);
        assert!(matches!(t.check_finite(), Err(TensorError::NonFinite { index: 1, .. })));
    }

    #[test]
    fn gemm_transposes() {
        // a: 2x3, b: 3x2
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [7.0, 8.0, 9.0, 10.0, 11.0, 12.0];
        let mut c = [0.0; 4];
        gemm(2, 3, 2, 1.0, &a, false, &b, false, 0.0, &mut c);
        assert_eq!(c, [58.0, 64.0, 139.0, 154.0]);
        // a^T (3x2 stored as 2x3) times a (2x3) -> 3x3
        let mut d = [0.0; 9];
        gemm(3, 2, 3, 1.0, &a, true, &a, false, 0.0, &mut d);
        assert_eq!(d, [17.0, 22.0, 27.0, 22.0, 29.0, 36.0, 27.0, 36.0, 45.0]);
        // a (2x3) times a^T -> 2x2
        let mut e = [0.0; 4];
        gemm(2, 3, 2, 1.0, &a, false, &a, true, 0.0, &mut e);
        assert_eq!(e, [14.0, 32.0, 32.0, 77.0]);
    }

    #[test]
    fn skinny_and_blocked_kernels_agree() {
        use rand::Rng as _;
        let mut r = crate::rng::rng(3);
        for &(m, k, n) in &[(1, 20, 30), (20, 1, 30), (20, 30, 1), (9, 10, 11), (3, 17, 2)] {
            for (at, bt) in [(false, false), (true, false), (false, true), (true, true)] {
                let a: Vec<f64> = (0..m * k).map(|_| r.random_range(-1.0..1.0)).collect();
                let b: Vec<f64> = (0..k * n).map(|_| r.random_range(-1.0..1.0)).collect();
                let c0: Vec<f64> = (0..m * n).map(|_| r.random_range(-1.0..1.0)).collect();
                let mut fast = c0.clone();
                skinny_gemm(m, k, n, 0.7, &a, at, &b, bt, 1.0, &mut fast);
                let mut naive = c0.clone();
                for i in 0..m {
                    for j in 0..n {
                        let mut s = 0.0;
                        for p in 0..k {
                            let x = if at { a[p * m + i] } else { a[i * k + p] };
                            let y = if bt { b[j * k + p] } else { b[p * n + j] };
                            s += x * y;
                        }
                        naive[i * n + j] += 0.7 * s;
                    }
                }
                let mut blocked = c0.clone();
                gemm(m, k, n, 0.7, &a, at, &b, bt, 1.0, &mut blocked);
                for ((x, y), z) in fast.iter().zip(&naive).zip(&blocked) {
                    assert!((x - y).abs() < 1e-12 && (y - z).abs() < 1e-12);
                }
            }
        }
    }
}

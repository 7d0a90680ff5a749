//! Square matrices cut into blocks along a fixed partition of the index set,
//! with absent blocks standing for zero.

use ndarray::{s, Array2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Matrix = Array2<C64>;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    blocks: Vec<Option<Matrix>>,
}

fn offsets_of(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0;
    out.push(0);
    for s in sizes {
        acc += s;
        out.push(acc);
    }
    out
}

/// `tr(XY)` without forming the product.
pub fn trace_of_product(x: &Matrix, y: &Matrix) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for ((a, b), v) in x.indexed_iter() {
        acc += v * y[[b, a]];
    }
    acc
}

/// `Σ_ab x_ab conj(y_ab)`, i.e. `tr(X Y^*)`.
pub fn inner_product(x: &Matrix, y: &Matrix) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

impl BlockMatrix {
    pub fn zeros(sizes: &[usize]) -> Self {
        let n = sizes.len();
        Self {
            sizes: sizes.to_vec(),
            offsets: offsets_of(sizes),
            blocks: vec![None; n * n],
        }
    }

    /// Every block of a dense matrix.
    pub fn from_dense(m: &Matrix, sizes: &[usize]) -> Self {
        let mut out = Self::zeros(sizes);
        let n = sizes.len();
        for i in 0..n {
            for j in 0..n {
                let (r, c) = (out.range(i), out.range(j));
                out.blocks[i * n + j] = Some(m.slice(s![r.0..r.1, c.0..c.1]).to_owned());
            }
        }
        out
    }

    /// Block-diagonal matrix with the given diagonal blocks (`None` for zero).
    pub fn diagonal(sizes: &[usize], diag: Vec<Option<Matrix>>) -> Self {
        let mut out = Self::zeros(sizes);
        let n = sizes.len();
        for (i, b) in diag.into_iter().enumerate() {
            out.blocks[i * n + i] = b;
        }
        out
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.n()]
    }

    fn range(&self, i: usize) -> (usize, usize) {
        (self.offsets[i], self.offsets[i + 1])
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&Matrix> {
        self.blocks[i * self.n() + j].as_ref()
    }

    pub fn add_to_block(&mut self, i: usize, j: usize, m: &Matrix) {
        let n = self.n();
        match &mut self.blocks[i * n + j] {
            Some(b) => *b += m,
            slot => *slot = Some(m.clone()),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let d = self.dim();
        let mut out = Matrix::zeros((d, d));
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                if let Some(b) = self.block(i, j) {
                    let (r, c) = (self.range(i), self.range(j));
                    out.slice_mut(s![r.0..r.1, c.0..c.1]).assign(b);
                }
            }
        }
        out
    }

    /// `self + c · other`.
    pub fn add_scaled(&mut self, c: f64, other: &BlockMatrix) {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                if let Some(b) = other.block(i, j) {
                    let scaled = if c == 1.0 {
                        b.clone()
                    } else {
                        b.mapv(|x| x * c)
                    };
                    self.add_to_block(i, j, &scaled);
                }
            }
        }
    }

    pub fn adjoint(&self) -> BlockMatrix {
        let n = self.n();
        let mut out = Self::zeros(&self.sizes);
        for i in 0..n {
            for j in 0..n {
                if let Some(b) = self.block(i, j) {
                    out.blocks[j * n + i] = Some(b.t().mapv(|x| x.conj()));
                }
            }
        }
        out
    }

    /// Product skipping absent blocks.
    pub fn mul(&self, other: &BlockMatrix) -> BlockMatrix {
        let n = self.n();
        let mut out = Self::zeros(&self.sizes);
        for i in 0..n {
            for k in 0..n {
                let Some(x) = self.block(i, k) else { continue };
                for j in 0..n {
                    if let Some(y) = other.block(k, j) {
                        out.add_to_block(i, j, &x.dot(y));
                    }
                }
            }
        }
        out
    }

    /// Diagonal blocks of `self · u · self` (for Hermitian `self` these are
    /// the compressions `p_i (A U A) p_i`).
    pub fn diagonal_of_conjugation(&self, u: &BlockMatrix) -> Vec<Matrix> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let size = self.sizes[i];
                let mut acc = Matrix::zeros((size, size));
                for k in 0..n {
                    let Some(aik) = self.block(i, k) else {
                        continue;
                    };
                    for l in 0..n {
                        let (Some(ukl), Some(ali)) = (u.block(k, l), self.block(l, i)) else {
                            continue;
                        };
                        acc += &aik.dot(ukl).dot(ali);
                    }
                }
                acc
            })
            .collect()
    }

    /// `tr(self · other)`.
    pub fn trace_with(&self, other: &BlockMatrix) -> C64 {
        let n = self.n();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (self.block(i, j), other.block(j, i)) {
                    acc += trace_of_product(x, y);
                }
            }
        }
        acc
    }

    /// `Σ_ij tr(X_ij Y_ij^*)`.
    pub fn inner_product(&self, other: &BlockMatrix) -> C64 {
        let n = self.n();
        let mut acc = C64::new(0.0, 0.0);
        for idx in 0..n * n {
            if let (Some(x), Some(y)) = (&self.blocks[idx], &other.blocks[idx]) {
                acc += inner_product(x, y);
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.blocks
            .iter()
            .flatten()
            .all(|b| b.iter().all(|x| x.re == 0.0 && x.im == 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(d: usize, seed: f64) -> Matrix {
        Matrix::from_shape_fn((d, d), |(i, j)| {
            C64::new(
                ((i * 7 + j) as f64 * seed).sin(),
                ((i + 3 * j) as f64 * seed).cos(),
            )
        })
    }

    #[test]
    fn block_algebra_matches_dense() {
        let sizes = [2, 3, 1];
        let x = sample(6, 0.3);
        let y = sample(6, 0.7);
        let bx = BlockMatrix::from_dense(&x, &sizes);
        let by = BlockMatrix::from_dense(&y, &sizes);
        assert_eq!(bx.to_dense(), x);
        let prod = bx.mul(&by).to_dense();
        let diff = &prod - &x.dot(&y);
        assert!(diff.iter().all(|v| v.norm() < 1e-12));
        let tr: C64 = x.dot(&y).diag().sum();
        assert!((bx.trace_with(&by) - tr).norm() < 1e-12);
        let diag = bx.diagonal_of_conjugation(&by);
        let full = x.dot(&y).dot(&x);
        assert!((&diag[1] - &full.slice(s![2..5, 2..5]))
            .iter()
            .all(|v| v.norm() < 1e-12));
        let adj = bx.adjoint().to_dense();
        assert_eq!(adj, x.t().mapv(|v| v.conj()));
    }
}

//! Dense row-major `f64` matrices and the handful of kernels the model needs.
//!
//! Shapes are always explicit. Nothing broadcasts; a mismatch is an error
//! that names both shapes.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("{op}: shape mismatch {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("target id {target} out of range for {len} logits")]
    TargetOutOfRange { target: usize, len: usize },
    #[error("data length {len} does not match shape {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumError> {
        if data.len() != rows * cols {
            return Err(NumError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, NumError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(NumError::Shape {
                    op: "from_rows",
                    lhs: (1, cols),
                    rhs: (1, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn scale(&mut self, k: f64) {
        self.data.iter_mut().for_each(|x| *x *= k);
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self += other`, elementwise.
    pub fn add_assign(&mut self, other: &Matrix) -> Result<(), NumError> {
        self.same_shape("add_assign", other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    fn same_shape(&self, op: &'static str, other: &Matrix) -> Result<(), NumError> {
        if self.shape() != other.shape() {
            return Err(NumError::Shape {
                op,
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        Ok(())
    }

    /// `out = self · x` for a vector `x` of length `cols`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(r), x);
        }
    }

    /// `out += self · x`.
    pub fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(r), x);
        }
    }

    /// `out += selfᵀ · y` for a vector `y` of length `rows`.
    pub fn matvec_t_acc(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                axpy(yr, self.row(r), out);
            }
        }
    }

    /// `self += u ⊗ v` (outer product; `u` indexes rows).
    pub fn outer_acc(&mut self, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (r, &ur) in u.iter().enumerate() {
            if ur != 0.0 {
                axpy(ur, v, self.row_mut(r));
            }
        }
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `y += a · x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, NumError> {
    if a.cols != b.rows {
        return Err(NumError::Shape {
            op: "matmul",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let mut c = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for t in 0..a.cols {
            let av = a.get(i, t);
            if av != 0.0 {
                axpy(av, b.row(t), c.row_mut(i));
            }
        }
    }
    Ok(c)
}

/// Max-shifted softmax.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>, NumError> {
    let mut out = vec![0.0; v.len()];
    softmax_into(v, &mut out)?;
    Ok(out)
}

pub fn softmax_into(v: &[f64], out: &mut [f64]) -> Result<(), NumError> {
    if v.is_empty() {
        return Err(NumError::Empty("softmax"));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - max).exp();
        total += *o;
    }
    let inv = 1.0 / total;
    out.iter_mut().for_each(|o| *o *= inv);
    Ok(())
}

/// `-log softmax(logits)[target]`, computed via log-sum-exp.
pub fn log_softmax_at(logits: &[f64], target: usize) -> Result<f64, NumError> {
    if logits.is_empty() {
        return Err(NumError::Empty("log_softmax"));
    }
    if target >= logits.len() {
        return Err(NumError::TargetOutOfRange {
            target,
            len: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    Ok(logits[target] - lse)
}

/// Cross-entropy of `target` under `softmax(logits)` and its gradient
/// `softmax(logits) - onehot(target)`.
pub fn cross_entropy_from_logits(
    logits: &[f64],
    target: usize,
) -> Result<(f64, Vec<f64>), NumError> {
    let loss = -log_softmax_at(logits, target)?;
    let mut grad = softmax(logits)?;
    grad[target] -= 1.0;
    Ok((loss, grad))
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(matmul(&Matrix::identity(2), &a).unwrap(), a);
    }

    #[test]
    fn matmul_zero() {
        let a = m(&[&[1.0, 2.0, 3.0], &[3.0, 4.0, 5.0]]);
        let z = Matrix::zeros(3, 4);
        assert_eq!(matmul(&a, &z).unwrap(), Matrix::zeros(2, 4));
    }

    #[test]
    fn matmul_hand_computed() {
        // 1*5+2*7=19, 1*6+2*8=22, 3*5+4*7=43, 3*6+4*8=50
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(
            matmul(&a, &b).unwrap(),
            m(&[&[19.0, 22.0], &[43.0, 50.0]])
        );
    }

    #[test]
    fn matmul_mismatch_names_shapes() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "{msg}");
    }

    #[test]
    fn softmax_examples() {
        let s = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for p in s {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let s = softmax(&[2f64.ln(), 0.0]).unwrap();
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let (loss, grad) = cross_entropy_from_logits(&[0.0, 0.0], 1).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        assert_eq!(grad, vec![0.5, -0.5]);
        for t in 0..4 {
            let (loss, _) = cross_entropy_from_logits(&[0.3; 4], t).unwrap();
            assert!((loss - 1.386294).abs() < 1e-6);
        }
        assert!(matches!(
            cross_entropy_from_logits(&[0.0, 1.0], 2),
            Err(NumError::TargetOutOfRange { .. })
        ));
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 1..12)
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_shift_invariant(v in vec_strategy(), c in -50.0f64..50.0) {
            let s = softmax(&v).unwrap();
            let total: f64 = s.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(s.iter().all(|&p| p > 0.0 && p <= 1.0));
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let s2 = softmax(&shifted).unwrap();
            for (a, b) in s.iter().zip(&s2) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn cross_entropy_gradient_matches_central_differences(v in vec_strategy(), t in 0usize..12) {
            let target = t % v.len();
            let (_, grad) = cross_entropy_from_logits(&v, target).unwrap();
            let eps = 1e-6;
            for k in 0..v.len() {
                let mut plus = v.clone();
                plus[k] += eps;
                let mut minus = v.clone();
                minus[k] -= eps;
                let lp = -log_softmax_at(&plus, target).unwrap();
                let lm = -log_softmax_at(&minus, target).unwrap();
                let fd = (lp - lm) / (2.0 * eps);
                // Denominator floored at 1e-2: the difference quotient
                // carries ~1e-9 absolute rounding noise at eps = 1e-6.
                let denom = grad[k].abs().max(fd.abs()).max(1e-2);
                prop_assert!((fd - grad[k]).abs() / denom < 1e-6,
                    "k={k} analytic={} fd={fd}", grad[k]);
            }
        }

        #[test]
        fn matmul_associative(seed in any::<u64>(), m_ in 1usize..5, k in 1usize..5, n in 1usize..5, p in 1usize..5) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let mut rand = |r, c| Matrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0));
            let a = rand(m_, k);
            let b = rand(k, n);
            let c = rand(n, p);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            // Scale by |A||B||C| so cancellation does not inflate the ratio.
            let abs = |x: &Matrix| Matrix::from_fn(x.rows(), x.cols(), |r, c| x.get(r, c).abs());
            let scale = matmul(&matmul(&abs(&a), &abs(&b)).unwrap(), &abs(&c)).unwrap();
            for ((x, y), s) in left.data().iter().zip(right.data()).zip(scale.data()) {
                prop_assert!((x - y).abs() <= 1e-9 * s.max(1e-300));
            }
        }
    }
}

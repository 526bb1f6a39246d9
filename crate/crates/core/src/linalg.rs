//! Small dense linear-algebra helpers shared by the embedding and unlearning
//! code: an operation counter for matrix products and a warm-started power
//! iteration for spectral norms.

use nalgebra::{DMatrix, DVector};

/// Counts scalar multiply-adds performed by the counted helpers below.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCount(pub u64);

impl OpCount {
    pub fn add(&mut self, n: usize) {
        self.0 += n as u64;
    }
}

pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>, ops: &mut OpCount) -> DMatrix<f64> {
    ops.add(a.nrows() * a.ncols() * b.ncols());
    a * b
}

pub fn matvec(a: &DMatrix<f64>, x: &DVector<f64>, ops: &mut OpCount) -> DVector<f64> {
    ops.add(a.nrows() * a.ncols());
    a * x
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration. `start` is used as the initial vector when it is nonzero and
/// overwritten with the final iterate.
pub fn power_iteration_psd(m: &DMatrix<f64>, start: &mut DVector<f64>, rel_tol: f64, max_iter: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    if start.len() != n || start.norm() == 0.0 {
        // deterministic start with nonzero overlap on generic eigenvectors
        *start = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 1e-3);
    }
    let mut v = start.normalize();
    let mut value = 0.0_f64;
    for _ in 0..max_iter {
        let mv = m * &v;
        let next = v.dot(&mv);
        let norm = mv.norm();
        if norm == 0.0 {
            value = 0.0;
            break;
        }
        v = mv / norm;
        let done = (next - value).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE);
        value = next;
        if done {
            break;
        }
    }
    *start = v;
    value.max(0.0)
}

pub fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_matches_eigen() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let exact = a.clone().symmetric_eigen().eigenvalues.max();
        let mut v = DVector::zeros(0);
        let est = power_iteration_psd(&a, &mut v, 1e-12, 1000);
        assert!((est - exact).abs() < 1e-9);
    }

    #[test]
    fn counted_products() {
        let mut ops = OpCount::default();
        let a = DMatrix::<f64>::zeros(3, 4);
        let b = DMatrix::<f64>::zeros(4, 5);
        matmul(&a, &b, &mut ops);
        matvec(&a, &DVector::zeros(4), &mut ops);
        assert_eq!(ops.0, 60 + 12);
    }
}

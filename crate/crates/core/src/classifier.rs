//! Regularized linear classifier trained on embeddings with an optional
//! random linear term in the objective:
//!
//! ```text
//! L_b(w) = sum_i l(w^T z_i, y_i) + (lambda n / 2) |w|^2 + b^T w,   b ~ N(0, alpha^2)^d
//! ```
//!
//! Training uses damped Newton steps, which is cheap at embedding
//! dimensions and reaches the 1e-8 gradient tolerance the unlearning
//! bounds rely on.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gradient-norm tolerance for [`train`].
pub const GRAD_TOL: f64 = 1e-8;
const MAX_NEWTON_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Logistic,
    Linear,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" => Ok(LossKind::Logistic),
            "linear" | "ridge" => Ok(LossKind::Linear),
            other => Err(Error::Parameter(format!("unknown loss {other:?}"))),
        }
    }
}

/// A loss and the constants bounding it:
/// `|grad l| <= C1`, `|l'| <= C2`, `l'` is `gamma1`-Lipschitz and `l''` is
/// `gamma2`-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub kind: LossKind,
    pub c1: f64,
    pub c2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl LossModel {
    pub fn logistic() -> Self {
        LossModel {
            kind: LossKind::Logistic,
            c1: 1.0,
            c2: 1.0,
            gamma1: 0.25,
            gamma2: 0.25,
        }
    }

    /// Squared error `(t - y)^2` with no 1/2 factor. Its second derivative
    /// is constant, so `gamma2 = 0`; the first-derivative constants are
    /// unbounded and never enter a bound.
    pub fn linear() -> Self {
        LossModel {
            kind: LossKind::Linear,
            c1: f64::INFINITY,
            c2: f64::INFINITY,
            gamma1: 2.0,
            gamma2: 0.0,
        }
    }

    pub fn from_kind(kind: LossKind) -> Self {
        match kind {
            LossKind::Logistic => Self::logistic(),
            LossKind::Linear => Self::linear(),
        }
    }

    pub fn value(&self, t: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => softplus(-y * t),
            LossKind::Linear => (t - y) * (t - y),
        }
    }

    /// Derivative with respect to the score `t`.
    pub fn d1(&self, t: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => y * (sigmoid(y * t) - 1.0),
            LossKind::Linear => 2.0 * (t - y),
        }
    }

    pub fn d2(&self, t: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => {
                let s = sigmoid(y * t);
                s * (1.0 - s)
            }
            LossKind::Linear => 2.0,
        }
    }

    /// `grad_w l(w^T z, y)`.
    pub fn sample_grad(&self, w: &DVector<f64>, z: &DVector<f64>, y: f64) -> DVector<f64> {
        z * self.d1(w.dot(z), y)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn check_shapes(w: &DVector<f64>, z: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if z.ncols() != w.len() || z.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "weights {}, data {}x{}, labels {}",
            w.len(),
            z.nrows(),
            z.ncols(),
            y.len()
        )));
    }
    Ok(())
}

/// `sum_i l(w^T z_i, y_i) + (lambda n / 2)|w|^2 (+ b^T w)`.
pub fn objective(
    w: &DVector<f64>,
    z: &DMatrix<f64>,
    y: &[f64],
    noise: Option<&DVector<f64>>,
    lambda: f64,
    loss: &LossModel,
) -> Result<f64> {
    check_shapes(w, z, y)?;
    let scores = z * w;
    let data: f64 = scores.iter().zip(y).map(|(t, yi)| loss.value(*t, *yi)).sum();
    let reg = 0.5 * lambda * z.nrows() as f64 * w.norm_squared();
    Ok(data + reg + noise.map_or(0.0, |b| b.dot(w)))
}

/// `sum_i l'(w^T z_i, y_i) z_i + lambda n w (+ b)`.
pub fn loss_grad(
    w: &DVector<f64>,
    z: &DMatrix<f64>,
    y: &[f64],
    noise: Option<&DVector<f64>>,
    lambda: f64,
    loss: &LossModel,
) -> Result<DVector<f64>> {
    check_shapes(w, z, y)?;
    if let Some(b) = noise {
        if b.len() != w.len() {
            return Err(Error::Shape(format!("noise {} for weights {}", b.len(), w.len())));
        }
    }
    let scores = z * w;
    let coeffs = DVector::from_iterator(y.len(), scores.iter().zip(y).map(|(t, yi)| loss.d1(*t, *yi)));
    let mut g = z.tr_mul(&coeffs) + w * (lambda * z.nrows() as f64);
    if let Some(b) = noise {
        g += b;
    }
    Ok(g)
}

/// `Z^T diag(l''(w^T z_i, y_i)) Z + lambda n I`.
pub fn loss_hessian(
    w: &DVector<f64>,
    z: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    loss: &LossModel,
) -> Result<DMatrix<f64>> {
    check_shapes(w, z, y)?;
    let scores = z * w;
    let mut weighted = z.clone();
    for (i, (t, yi)) in scores.iter().zip(y).enumerate() {
        let c = loss.d2(*t, *yi);
        weighted.row_mut(i).scale_mut(c);
    }
    let mut h = z.tr_mul(&weighted);
    let reg = lambda * z.nrows() as f64;
    for i in 0..h.nrows() {
        h[(i, i)] += reg;
    }
    // exact symmetry for the Cholesky factorization
    let sym = (&h + h.transpose()) * 0.5;
    Ok(sym)
}

/// Solves `H x = rhs` for symmetric positive definite `H`.
pub fn spd_solve(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    h.clone()
        .cholesky()
        .map(|c| c.solve(rhs))
        .ok_or_else(|| Error::Numerical("Hessian is not positive definite".into()))
}

fn check_labels(y: &[f64]) -> Result<()> {
    match y.iter().find(|v| **v != 1.0 && **v != -1.0) {
        Some(bad) => Err(Error::Label(*bad)),
        None => Ok(()),
    }
}

/// Trained weights plus everything needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub weights: DVector<f64>,
    pub lambda: f64,
    pub noise: DVector<f64>,
    pub noise_scale: f64,
    pub rng_seed: u64,
    pub loss: LossModel,
    /// Gradient norm of the perturbed objective at return.
    pub grad_norm: f64,
}

/// Draws `b ~ N(0, alpha^2)^d` from a ChaCha8 stream seeded with `seed`.
pub fn sample_noise(d: usize, alpha: f64, seed: u64) -> Result<DVector<f64>> {
    if alpha == 0.0 {
        return Ok(DVector::zeros(d));
    }
    let normal = Normal::new(0.0, alpha).map_err(|e| Error::Parameter(format!("noise scale: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DVector::from_fn(d, |_, _| normal.sample(&mut rng)))
}

/// Minimizes the perturbed objective for a fixed noise vector.
pub fn minimize(
    z: &DMatrix<f64>,
    y: &[f64],
    noise: &DVector<f64>,
    lambda: f64,
    loss: &LossModel,
    start: DVector<f64>,
) -> Result<(DVector<f64>, f64)> {
    let mut w = start;
    let mut g = loss_grad(&w, z, y, Some(noise), lambda, loss)?;
    let mut gn = g.norm();
    for _ in 0..MAX_NEWTON_STEPS {
        if gn <= GRAD_TOL {
            return Ok((w, gn));
        }
        let h = loss_hessian(&w, z, y, lambda, loss)?;
        let step = -spd_solve(&h, &g)?;
        let f0 = objective(&w, z, y, Some(noise), lambda, loss)?;
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let cand = &w + &step * t;
            let f1 = objective(&cand, z, y, Some(noise), lambda, loss)?;
            if f1 <= f0 + 1e-4 * t * slope {
                accepted = Some(cand);
                break;
            }
            // close to the optimum objective differences drown in rounding;
            // fall back to the gradient norm
            if t == 1.0 {
                let gc = loss_grad(&cand, z, y, Some(noise), lambda, loss)?.norm();
                if gc < gn {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            break;
        };
        w = next;
        g = loss_grad(&w, z, y, Some(noise), lambda, loss)?;
        gn = g.norm();
    }
    if gn <= GRAD_TOL {
        Ok((w, gn))
    } else {
        Err(Error::NotConverged {
            grad_norm: gn,
            iterations: MAX_NEWTON_STEPS,
        })
    }
}

/// Samples the noise vector and returns the unique minimizer of the
/// perturbed objective. Labels must be -1 or +1.
pub fn train(z: &DMatrix<f64>, y: &[f64], lambda: f64, alpha: f64, seed: u64, loss: LossModel) -> Result<ModelState> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::Parameter(format!("alpha must be nonnegative, got {alpha}")));
    }
    if z.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows, {} labels", z.nrows(), y.len())));
    }
    check_labels(y)?;
    let d = z.ncols();
    let noise = sample_noise(d, alpha, seed)?;
    let (weights, grad_norm) = minimize(z, y, &noise, lambda, &loss, DVector::zeros(d))?;
    Ok(ModelState {
        weights,
        lambda,
        noise,
        noise_scale: alpha,
        rng_seed: seed,
        loss,
        grad_norm,
    })
}

/// Score and `{-1, +1}` label; a zero score maps to +1.
pub fn predict(w: &DVector<f64>, z: &DVector<f64>) -> (f64, i8) {
    let s = w.dot(z);
    (s, if s >= 0.0 { 1 } else { -1 })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    loss: LossKind,
    lambda: f64,
    alpha: f64,
    seed: u64,
    grad_norm: f64,
    weights: Vec<f64>,
    noise: Vec<f64>,
}

const SNAPSHOT_VERSION: u32 = 1;

impl ModelState {
    pub fn to_json(&self) -> Result<String> {
        let s = Snapshot {
            version: SNAPSHOT_VERSION,
            loss: self.loss.kind,
            lambda: self.lambda,
            alpha: self.noise_scale,
            seed: self.rng_seed,
            grad_norm: self.grad_norm,
            weights: self.weights.iter().copied().collect(),
            noise: self.noise.iter().copied().collect(),
        };
        serde_json::to_string_pretty(&s).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<ModelState> {
        let s: Snapshot = serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        if s.version != SNAPSHOT_VERSION {
            return Err(Error::Serde(format!("unsupported snapshot version {}", s.version)));
        }
        if s.weights.len() != s.noise.len() {
            return Err(Error::Serde("weights and noise lengths differ".into()));
        }
        Ok(ModelState {
            weights: DVector::from_vec(s.weights),
            lambda: s.lambda,
            noise: DVector::from_vec(s.noise),
            noise_scale: s.alpha,
            rng_seed: s.seed,
            loss: LossModel::from_kind(s.loss),
            grad_norm: s.grad_norm,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelState> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Per-model seed: the base seed for the first model, a mixed one after.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    if index == 0 {
        return seed;
    }
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One-versus-all wrapper. Two classes use a single binary model whose
/// positive class is the larger label.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub classes: Vec<i64>,
    pub models: Vec<ModelState>,
}

impl Classifier {
    /// Positive class of each binary model.
    pub fn positives(classes: &[i64]) -> Vec<i64> {
        if classes.len() == 2 {
            vec![classes[1]]
        } else {
            classes.to_vec()
        }
    }

    pub fn targets(positive: i64, labels: &[i64]) -> Vec<f64> {
        labels.iter().map(|&l| if l == positive { 1.0 } else { -1.0 }).collect()
    }

    pub fn train(
        z: &DMatrix<f64>,
        labels: &[i64],
        classes: &[i64],
        lambda: f64,
        alpha: f64,
        seed: u64,
        loss: LossModel,
    ) -> Result<Classifier> {
        if classes.len() < 2 {
            return Err(Error::Parameter(format!("need at least two classes, got {classes:?}")));
        }
        let models = Self::positives(classes)
            .iter()
            .enumerate()
            .map(|(k, &pos)| {
                train(
                    z,
                    &Self::targets(pos, labels),
                    lambda,
                    alpha,
                    derive_seed(seed, k as u64),
                    loss,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Classifier {
            classes: classes.to_vec(),
            models,
        })
    }

    /// Highest-scoring class; ties go to the lowest class index.
    pub fn predict(&self, z: &DVector<f64>) -> i64 {
        if self.models.len() == 1 {
            let (_, label) = predict(&self.models[0].weights, z);
            return if label > 0 { self.classes[1] } else { self.classes[0] };
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, m) in self.models.iter().enumerate() {
            let s = m.weights.dot(z);
            if s > best_score {
                best = k;
                best_score = s;
            }
        }
        self.classes[best]
    }

    pub fn accuracy(&self, z: &DMatrix<f64>, labels: &[i64]) -> f64 {
        if labels.is_empty() {
            return 0.0;
        }
        let hits = (0..z.nrows())
            .filter(|&i| self.predict(&z.row(i).transpose()) == labels[i])
            .count();
        hits as f64 / labels.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_problem(n: usize, d: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        (z, y)
    }

    #[test]
    fn ridge_closed_form() {
        // (2 Z^T Z + lambda n I) w = 2 Z^T y with Z = I, n = 2, lambda = 0.5
        let z = DMatrix::identity(2, 2);
        let m = train(&z, &[1.0, -1.0], 0.5, 0.0, 0, LossModel::linear()).unwrap();
        assert_abs_diff_eq!(m.weights[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.weights[1], -2.0 / 3.0, epsilon = 1e-12);
        let g = loss_grad(&m.weights, &z, &[1.0, -1.0], None, 0.5, &LossModel::linear()).unwrap();
        assert!(g.norm() <= GRAD_TOL);
    }

    #[test]
    fn logistic_positive_labels_push_constant_column_up() {
        let mut z = DMatrix::from_element(6, 2, 1.0);
        for i in 0..6 {
            z[(i, 1)] = (i as f64 - 2.5) / 3.0;
        }
        let m = train(&z, &[1.0; 6], 0.1, 0.0, 0, LossModel::logistic()).unwrap();
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let (z, y) = random_problem(30, 4, 1);
        let a = train(&z, &y, 0.01, 0.3, 42, LossModel::logistic()).unwrap();
        let b = train(&z, &y, 0.01, 0.3, 42, LossModel::logistic()).unwrap();
        assert_eq!(a, b);
        let c = train(&z, &y, 0.01, 0.3, 43, LossModel::logistic()).unwrap();
        assert_ne!(a.noise, c.noise);
    }

    #[test]
    fn parameter_and_label_errors() {
        let (z, y) = random_problem(5, 2, 1);
        assert!(matches!(
            train(&z, &y, 0.0, 0.0, 0, LossModel::logistic()),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            train(&z, &[0.0, 1.0, 1.0, 1.0, 1.0], 0.1, 0.0, 0, LossModel::logistic()),
            Err(Error::Label(_))
        ));
        assert!(matches!(
            loss_grad(&DVector::zeros(3), &z, &y, None, 0.1, &LossModel::logistic()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn logistic_gradient_at_zero() {
        let z = DMatrix::from_row_slice(1, 3, &[0.2, -0.4, 1.0]);
        let g = loss_grad(&DVector::zeros(3), &z, &[1.0], None, 0.7, &LossModel::logistic()).unwrap();
        let expect = z.row(0).transpose() * -0.5;
        assert!((g - expect).amax() < 1e-15);
    }

    #[test]
    fn duplicated_rows_double_data_gradient() {
        let (z, y) = random_problem(7, 3, 2);
        let w = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let loss = LossModel::logistic();
        let single = loss_grad(&w, &z, &y, None, 0.0, &loss).unwrap();
        let z2 = DMatrix::from_fn(14, 3, |i, j| z[(i % 7, j)]);
        let y2: Vec<f64> = (0..14).map(|i| y[i % 7]).collect();
        let double = loss_grad(&w, &z2, &y2, None, 0.0, &loss).unwrap();
        assert!((double - single * 2.0).amax() < 1e-14);
    }

    #[test]
    fn hessian_closed_forms() {
        let (z, y) = random_problem(9, 3, 3);
        let lambda = 0.2;
        let reg = DMatrix::identity(3, 3) * (lambda * 9.0);
        let lin = loss_hessian(
            &DVector::from_vec(vec![1.0, 2.0, 3.0]),
            &z,
            &y,
            lambda,
            &LossModel::linear(),
        )
        .unwrap();
        assert!((lin - (z.transpose() * &z * 2.0 + &reg)).amax() < 1e-12);
        let log = loss_hessian(&DVector::zeros(3), &z, &y, lambda, &LossModel::logistic()).unwrap();
        assert!((log - (z.transpose() * &z * 0.25 + &reg)).amax() < 1e-12);
    }

    #[test]
    fn hessian_min_eigenvalue_at_least_lambda_n() {
        for seed in 0..10 {
            let (z, y) = random_problem(20, 8, seed);
            let w = DVector::from_fn(8, |i, _| (i as f64 - 4.0) * 0.7);
            let h = loss_hessian(&w, &z, &y, 0.05, &LossModel::logistic()).unwrap();
            let min = h.symmetric_eigen().eigenvalues.min();
            assert!(min >= 0.05 * 20.0 - 1e-10);
        }
    }

    #[test]
    fn gradient_hessian_finite_differences() {
        let (z, y) = random_problem(12, 4, 4);
        let loss = LossModel::logistic();
        let w = DVector::from_vec(vec![0.4, -1.1, 0.3, 0.9]);
        let h = loss_hessian(&w, &z, &y, 0.1, &loss).unwrap();
        let eps = 1e-6;
        for c in 0..4 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[c] += eps;
            wm[c] -= eps;
            let fd = (loss_grad(&wp, &z, &y, None, 0.1, &loss).unwrap()
                - loss_grad(&wm, &z, &y, None, 0.1, &loss).unwrap())
                / (2.0 * eps);
            let col = h.column(c);
            assert!((&fd - col).norm() <= 1e-5 * col.norm());
        }
    }

    #[test]
    fn logistic_constants_hold_on_dense_grid() {
        let loss = LossModel::logistic();
        let mut max_d1: f64 = 0.0;
        let mut max_lip1: f64 = 0.0;
        let mut max_lip2: f64 = 0.0;
        let step = 1e-3;
        let mut t = -50.0;
        while t < 50.0 {
            for y in [-1.0, 1.0] {
                max_d1 = max_d1.max(loss.d1(t, y).abs());
                max_lip1 = max_lip1.max(((loss.d1(t + step, y) - loss.d1(t, y)) / step).abs());
                max_lip2 = max_lip2.max(((loss.d2(t + step, y) - loss.d2(t, y)) / step).abs());
            }
            t += step;
        }
        assert!(max_d1 <= loss.c2);
        assert!(max_lip1 <= loss.gamma1 + 1e-9);
        assert!(max_lip2 <= loss.gamma2);
    }

    #[test]
    fn prediction_tie_rules() {
        let z = DVector::from_vec(vec![0.3, -2.0]);
        assert_eq!(predict(&DVector::zeros(2), &z).1, 1);
        assert!(predict(&z, &z).0 > 0.0);
        let m = |w: Vec<f64>| ModelState {
            weights: DVector::from_vec(w),
            lambda: 1.0,
            noise: DVector::zeros(2),
            noise_scale: 0.0,
            rng_seed: 0,
            loss: LossModel::logistic(),
            grad_norm: 0.0,
        };
        let ova = Classifier {
            classes: vec![3, 5, 7],
            models: vec![m(vec![1.0, 0.0]), m(vec![0.0, 1.0]), m(vec![1.0, 0.0])],
        };
        // identical scores for classes 3 and 7 pick 3
        assert_eq!(ova.predict(&DVector::from_vec(vec![1.0, 0.0])), 3);
        assert_eq!(ova.predict(&DVector::from_vec(vec![0.0, 1.0])), 5);
    }

    #[test]
    fn wrapper_and_binary_paths_agree() {
        let (z, y) = random_problem(25, 3, 5);
        let labels: Vec<i64> = y.iter().map(|v| if *v > 0.0 { 1 } else { 0 }).collect();
        let ova = Classifier::train(&z, &labels, &[0, 1], 0.05, 0.2, 9, LossModel::logistic()).unwrap();
        let direct = train(&z, &y, 0.05, 0.2, 9, LossModel::logistic()).unwrap();
        assert_eq!(ova.models.len(), 1);
        assert_eq!(ova.models[0], direct);
    }

    #[test]
    fn snapshot_roundtrip() {
        let (z, y) = random_problem(10, 3, 6);
        let m = train(&z, &y, 0.1, 0.5, 77, LossModel::logistic()).unwrap();
        let back = ModelState::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(ModelState::from_json("{\"version\": 9}").is_err());
    }
}

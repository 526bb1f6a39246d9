//! Wavelet kernels and per-graph filter banks.
//!
//! Two spectral families (monic cubic, itersine) are evaluated through an
//! eigendecomposition of the normalized Laplacian `I - D^{-1/2} A D^{-1/2}`,
//! whose spectrum lies in `[0, 2]`. The two polynomial families (diffusion,
//! geometric) are dyadic differences of powers of a lazy operator and never
//! need an eigendecomposition:
//!
//! ```text
//! H_0 = I - T,    H_j = T^(2^(j-1)) - T^(2^j),  j = 1..J
//! diffusion: T = (I + D^{-1/2} A D^{-1/2}) / 2
//! geometric: T = (I + A D^{-1}) / 2
//! ```
//!
//! Nodes of degree zero (isolated or masked) are treated as carrying a self
//! loop of unit weight in the normalized operator, so the lazy operator has a
//! 1 on their diagonal and every column of the geometric walk sums to one.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{matmul, OpCount};

/// Largest graph accepted by the eigendecomposition-based families.
pub const SPECTRAL_MAX_NODES: usize = 512;

/// Largest graph for which certified bounds use a full SVD of the stacked
/// filter matrix; larger banks go through the eigenvalues of its Gram matrix.
pub const STACKED_SVD_MAX_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    MonicCubic,
    Itersine,
    Diffusion,
    Geometric,
}

impl FamilyKind {
    pub fn is_polynomial(self) -> bool {
        matches!(self, FamilyKind::Diffusion | FamilyKind::Geometric)
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::MonicCubic => "monic-cubic",
            FamilyKind::Itersine => "itersine",
            FamilyKind::Diffusion => "diffusion",
            FamilyKind::Geometric => "geometric",
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "monic-cubic" | "moniccubic" => Ok(FamilyKind::MonicCubic),
            "itersine" => Ok(FamilyKind::Itersine),
            "diffusion" => Ok(FamilyKind::Diffusion),
            "geometric" => Ok(FamilyKind::Geometric),
            other => Err(Error::Parameter(format!("unknown wavelet family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletFamily {
    pub kind: FamilyKind,
    /// J, the number of scales.
    pub scales: usize,
    /// Q, the number of moments recorded per path. Only geometric uses it.
    pub moments: usize,
}

impl WaveletFamily {
    pub fn new(kind: FamilyKind, scales: usize, moments: usize) -> Result<Self> {
        if scales == 0 || moments == 0 {
            return Err(Error::Parameter(format!(
                "wavelet family needs J >= 1 and Q >= 1, got J={scales}, Q={moments}"
            )));
        }
        Ok(WaveletFamily { kind, scales, moments })
    }

    /// Moments actually used: Q for geometric, 1 otherwise.
    pub fn effective_moments(&self) -> usize {
        if self.kind == FamilyKind::Geometric {
            self.moments
        } else {
            1
        }
    }

    /// Number of filters in a bank: J + 1 for the polynomial families
    /// (indices 0..=J), J for the spectral ones (indices 1..=J).
    pub fn filter_count(&self) -> usize {
        if self.kind.is_polynomial() {
            self.scales + 1
        } else {
            self.scales
        }
    }

    /// Scale index of the first filter.
    pub fn first_scale(&self) -> usize {
        if self.kind.is_polynomial() {
            0
        } else {
            1
        }
    }

    /// Highest power of the lazy operator needed, `2^J`.
    pub fn max_power(&self) -> usize {
        1usize << self.scales
    }
}

/// Base monic cubic kernel.
pub fn monic_cubic(lambda: f64) -> f64 {
    if lambda < 1.0 {
        lambda
    } else if lambda <= 2.0 {
        -5.0 + 11.0 * lambda - 6.0 * lambda * lambda + lambda.powi(3)
    } else {
        2.0 / lambda
    }
}

/// Itersine kernel at scale `j`, supported on `[j/2 - 1, j/2]`.
pub fn itersine(j: usize, lambda: f64) -> f64 {
    let j = j as f64;
    if lambda < j / 2.0 - 1.0 || lambda > j / 2.0 {
        return 0.0;
    }
    let c = (std::f64::consts::PI * (lambda - (j - 1.0) / 2.0)).cos();
    (std::f64::consts::FRAC_PI_2 * c * c).sin()
}

/// Maps a normalized-Laplacian eigenvalue in `[0, 2]` onto the itersine
/// range `[0, (J - 1) / 2]`, where consecutive kernels tile to unit energy.
fn itersine_argument(scales: usize, lambda: f64) -> f64 {
    lambda * (scales as f64 - 1.0) / 4.0
}

/// Scale-`j` kernel of the given family.
///
/// Spectral families take an eigenvalue of the normalized Laplacian. Monic
/// cubic uses `h(2^(J-j) * lambda)`, so the coarsest index `J` has its
/// pass band at the top of `[0, 2]` and each smaller index halves it.
/// Polynomial families take an eigenvalue `mu` of the lazy operator and
/// return the response of `H_j`.
pub fn eval_kernel(family: &WaveletFamily, j: usize, lambda: f64) -> Result<f64> {
    let first = family.first_scale();
    if j < first || j > family.scales {
        return Err(Error::Parameter(format!(
            "scale {j} outside {first}..={} for {}",
            family.scales,
            family.kind.name()
        )));
    }
    Ok(match family.kind {
        FamilyKind::MonicCubic => monic_cubic((2.0f64).powi((family.scales - j) as i32) * lambda),
        FamilyKind::Itersine => itersine(j, itersine_argument(family.scales, lambda)),
        FamilyKind::Diffusion | FamilyKind::Geometric => {
            if j == 0 {
                1.0 - lambda
            } else {
                let lo = 1i32 << (j - 1);
                lambda.powi(lo) - lambda.powi(2 * lo)
            }
        }
    })
}

/// `D^{-1/2} A D^{-1/2}` with unit diagonal on degree-zero nodes.
pub fn normalized_adjacency(graph: &Graph) -> DMatrix<f64> {
    let a = graph.adjacency();
    let d = graph.degrees();
    let inv_sqrt: Vec<f64> = d.iter().map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 }).collect();
    let g = graph.node_count();
    let mut n = DMatrix::from_fn(g, g, |i, j| a[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    for i in 0..g {
        if d[i] == 0.0 {
            n[(i, i)] = 1.0;
        }
    }
    n
}

/// `A D^{-1}` with unit diagonal on degree-zero nodes (column stochastic).
pub fn random_walk(graph: &Graph) -> DMatrix<f64> {
    let a = graph.adjacency();
    let d = graph.degrees();
    let g = graph.node_count();
    let mut w = DMatrix::from_fn(g, g, |i, j| if d[j] > 0.0 { a[(i, j)] / d[j] } else { 0.0 });
    for i in 0..g {
        if d[i] == 0.0 {
            w[(i, i)] = 1.0;
        }
    }
    w
}

/// The lazy operator of a polynomial family.
pub fn lazy_operator(graph: &Graph, kind: FamilyKind) -> Result<DMatrix<f64>> {
    let inner = match kind {
        FamilyKind::Diffusion => normalized_adjacency(graph),
        FamilyKind::Geometric => random_walk(graph),
        other => return Err(Error::Unsupported(other.name().into())),
    };
    let g = graph.node_count();
    Ok((DMatrix::identity(g, g) + inner) * 0.5)
}

pub fn normalized_laplacian(graph: &Graph) -> DMatrix<f64> {
    let g = graph.node_count();
    DMatrix::identity(g, g) - normalized_adjacency(graph)
}

/// Low-pass row vector `u`: scattering coefficients are `u^T s`.
/// Uniform averaging over active nodes, except diffusion which weights by
/// degree (`d / |d|_1`, falling back to uniform on edgeless graphs).
pub fn low_pass(graph: &Graph, kind: FamilyKind) -> DVector<f64> {
    let g = graph.node_count();
    if kind == FamilyKind::Diffusion {
        let d = graph.degrees();
        let total = d.sum();
        if total > 0.0 {
            return d / total;
        }
    }
    let active = graph.active_count() as f64;
    DVector::from_fn(g, |i, _| if graph.is_active(i) { 1.0 / active } else { 0.0 })
}

/// Empirical or certified frame constants of a bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    /// `F = sqrt(sum_{l<L} B^(2l))`.
    pub fn energy_constant(&self, layers: usize) -> f64 {
        energy_constant(self.upper, layers)
    }
}

pub fn energy_constant(upper: f64, layers: usize) -> f64 {
    (0..layers).map(|l| upper.powi(2 * l as i32)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub family: WaveletFamily,
    pub filters: Vec<DMatrix<f64>>,
    pub low_pass: DVector<f64>,
    pub frame: Option<FrameBounds>,
}

impl FilterBank {
    pub fn node_count(&self) -> usize {
        self.low_pass.len()
    }

    /// Bank made of arbitrary filter matrices with uniform averaging.
    pub fn from_filters(family: WaveletFamily, filters: Vec<DMatrix<f64>>) -> Result<FilterBank> {
        let g = filters
            .first()
            .map(|f| f.nrows())
            .ok_or_else(|| Error::Parameter("empty filter bank".into()))?;
        if filters.iter().any(|f| f.nrows() != g || f.ncols() != g) {
            return Err(Error::Shape("filters must all be g x g".into()));
        }
        Ok(FilterBank {
            family,
            filters,
            low_pass: DVector::from_element(g, 1.0 / g as f64),
            frame: None,
        })
    }

    /// Polynomial bank from dyadic powers `T^(2^j)`, `j = 0..=J`.
    pub fn from_dyadic_powers(
        family: WaveletFamily,
        dyadic: &[&DMatrix<f64>],
        low_pass: DVector<f64>,
        ops: &mut OpCount,
    ) -> Result<FilterBank> {
        if dyadic.len() != family.scales + 1 {
            return Err(Error::Cache(format!(
                "need {} dyadic powers, got {}",
                family.scales + 1,
                dyadic.len()
            )));
        }
        let g = dyadic[0].nrows();
        let mut filters = Vec::with_capacity(family.scales + 1);
        filters.push(DMatrix::identity(g, g) - dyadic[0]);
        for j in 1..=family.scales {
            filters.push(dyadic[j - 1] - dyadic[j]);
        }
        ops.add(g * g * filters.len());
        Ok(FilterBank {
            family,
            filters,
            low_pass,
            frame: None,
        })
    }
}

/// Builds the bank for one graph. Polynomial families use repeated squaring
/// of the lazy operator; spectral families diagonalize the normalized
/// Laplacian (limited to [`SPECTRAL_MAX_NODES`]).
pub fn build_filter_bank(graph: &Graph, family: &WaveletFamily) -> Result<FilterBank> {
    build_filter_bank_counted(graph, family, &mut OpCount::default())
}

pub fn build_filter_bank_counted(graph: &Graph, family: &WaveletFamily, ops: &mut OpCount) -> Result<FilterBank> {
    let g = graph.node_count();
    if family.kind.is_polynomial() {
        let t = lazy_operator(graph, family.kind)?;
        ops.add(g * g);
        let mut dyadic = Vec::with_capacity(family.scales + 1);
        dyadic.push(t);
        for j in 1..=family.scales {
            let sq = matmul(&dyadic[j - 1], &dyadic[j - 1], ops);
            dyadic.push(sq);
        }
        let refs: Vec<&DMatrix<f64>> = dyadic.iter().collect();
        return FilterBank::from_dyadic_powers(*family, &refs, low_pass(graph, family.kind), ops);
    }

    if g > SPECTRAL_MAX_NODES {
        return Err(Error::Parameter(format!(
            "{} filters need an eigendecomposition; graph has {g} > {SPECTRAL_MAX_NODES} nodes",
            family.kind.name()
        )));
    }
    let eig = normalized_laplacian(graph).symmetric_eigen();
    ops.add(g * g * g);
    let v = &eig.eigenvectors;
    let mut filters = Vec::with_capacity(family.scales);
    for j in 1..=family.scales {
        let response: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&l| eval_kernel(family, j, l.clamp(0.0, 2.0)))
            .collect::<Result<_>>()?;
        let mut scaled = v.clone();
        for (c, h) in response.iter().enumerate() {
            scaled.column_mut(c).scale_mut(*h);
        }
        filters.push(matmul(&scaled, &v.transpose(), ops));
    }
    Ok(FilterBank {
        family: *family,
        filters,
        low_pass: low_pass(graph, family.kind),
        frame: None,
    })
}

fn filtered_energy(bank: &FilterBank, x: &DVector<f64>) -> f64 {
    bank.filters.iter().map(|h| (h * x).norm_squared()).sum()
}

/// Min/max of `sqrt(sum_j |H_j x|^2)` over random unit vectors.
pub fn estimate_frame_bounds(bank: &FilterBank, trials: usize, seed: u64) -> Result<FrameBounds> {
    if trials == 0 {
        return Err(Error::Parameter("frame estimation needs at least one trial".into()));
    }
    let g = bank.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..trials {
        let x = DVector::from_fn(g, |_, _| StandardNormal.sample(&mut rng)).normalize();
        let e = filtered_energy(bank, &x).sqrt();
        lo = lo.min(e);
        hi = hi.max(e);
    }
    Ok(FrameBounds { lower: lo, upper: hi })
}

/// Exact frame constants from the extreme singular values of the stacked
/// filter matrix `[H_1; ...; H_J]`.
pub fn certified_frame_bounds(bank: &FilterBank) -> Result<FrameBounds> {
    let g = bank.node_count();
    let k = bank.filters.len();
    if g <= STACKED_SVD_MAX_NODES {
        let mut stacked = DMatrix::zeros(k * g, g);
        for (i, h) in bank.filters.iter().enumerate() {
            stacked.view_mut((i * g, 0), (g, g)).copy_from(h);
        }
        let sv = stacked.svd(false, false).singular_values;
        return Ok(FrameBounds {
            lower: sv.min().max(0.0),
            upper: sv.max(),
        });
    }
    let mut gram = DMatrix::zeros(g, g);
    for h in &bank.filters {
        gram += h.transpose() * h;
    }
    let ev = gram.symmetric_eigen().eigenvalues;
    Ok(FrameBounds {
        lower: ev.min().max(0.0).sqrt(),
        upper: ev.max().max(0.0).sqrt(),
    })
}

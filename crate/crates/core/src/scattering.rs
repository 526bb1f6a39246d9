//! Scattering tree forward pass.
//!
//! The root of the tree is the input signal; every tree node at layer `l`
//! spawns one child per filter, `rho(H_j s)` with `rho = |.|`. Each tree node
//! contributes `u^T s` (plus higher moments for the geometric family) to the
//! embedding. Coordinates are laid out breadth first: by layer, then path in
//! lexicographic order, then moment.
//!
//! After a node removal the polynomial families can be updated from a
//! [`PowerCache`] of the lazy operator's powers instead of rebuilding them,
//! see [`embed_incremental`].

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph};
use crate::linalg::{matmul, matvec, OpCount};
use crate::wavelets::{build_filter_bank_counted, lazy_operator, low_pass, FilterBank, WaveletFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    #[default]
    Abs,
}

impl Nonlinearity {
    fn apply(self, v: &mut DVector<f64>) {
        match self {
            Nonlinearity::Abs => v.apply(|x| *x = x.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringConfig {
    pub family: WaveletFamily,
    /// L, number of tree layers including the root.
    pub layers: usize,
    pub nonlinearity: Nonlinearity,
    /// When false the embedding keeps only the first moment, so its length is
    /// `sum_l J_eff^l` whatever Q is.
    pub count_moments: bool,
}

impl ScatteringConfig {
    pub fn new(family: WaveletFamily, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::Parameter("scattering needs at least one layer".into()));
        }
        Ok(ScatteringConfig {
            family,
            layers,
            nonlinearity: Nonlinearity::Abs,
            count_moments: true,
        })
    }

    pub fn moments(&self) -> usize {
        if self.count_moments {
            self.family.effective_moments()
        } else {
            1
        }
    }

    /// Number of tree nodes, `sum_{l<L} J_eff^l`.
    pub fn tree_size(&self) -> usize {
        let b = self.family.filter_count();
        (0..self.layers).map(|l| b.pow(l as u32)).sum()
    }

    pub fn dim(&self) -> usize {
        self.moments() * self.tree_size()
    }

    /// Coordinate labels in layout order.
    pub fn path_index(&self) -> Vec<PathKey> {
        let first = self.family.first_scale();
        let b = self.family.filter_count();
        let mut keys = Vec::with_capacity(self.dim());
        let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
        for l in 0..self.layers {
            for path in &layer {
                for q in 1..=self.moments() {
                    keys.push(PathKey {
                        scales: path.clone(),
                        moment: q,
                    });
                }
            }
            if l + 1 < self.layers {
                layer = layer
                    .iter()
                    .flat_map(|p| {
                        (0..b).map(move |j| {
                            let mut next = p.clone();
                            next.push(first + j);
                            next
                        })
                    })
                    .collect();
            }
        }
        keys
    }
}

/// A scattering tree path `(j_1, ..., j_l)` and moment `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathKey {
    pub scales: Vec<usize>,
    pub moment: usize,
}

impl PathKey {
    pub fn layer(&self) -> usize {
        self.scales.len()
    }

    /// `phi`, `phi_0_2`, `phi_1_q3`, ...
    pub fn label(&self) -> String {
        let mut s = String::from("phi");
        for j in &self.scales {
            s.push('_');
            s.push_str(&j.to_string());
        }
        if self.moment > 1 {
            s.push_str(&format!("_q{}", self.moment));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: DVector<f64>,
    pub path_index: Vec<PathKey>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, key: &PathKey) -> Option<f64> {
        self.path_index.iter().position(|k| k == key).map(|i| self.values[i])
    }
}

fn coefficient(u: &DVector<f64>, s: &DVector<f64>, q: usize) -> f64 {
    if q == 1 {
        u.dot(s)
    } else {
        u.iter().zip(s.iter()).map(|(w, v)| w * v.abs().powi(q as i32)).sum()
    }
}

/// Runs the tree on `x` with a prebuilt bank.
pub fn embed_with_bank(
    x: &DVector<f64>,
    bank: &FilterBank,
    config: &ScatteringConfig,
    ops: &mut OpCount,
) -> Result<Embedding> {
    let g = x.len();
    if bank.node_count() != g || bank.filters.iter().any(|h| h.nrows() != g || h.ncols() != g) {
        return Err(Error::Shape(format!(
            "filter bank built for {} nodes, signal has {g}",
            bank.node_count()
        )));
    }
    if bank.filters.len() != config.family.filter_count() {
        return Err(Error::Shape(format!(
            "bank has {} filters, config expects {}",
            bank.filters.len(),
            config.family.filter_count()
        )));
    }
    let q_max = config.moments();
    let mut values = Vec::with_capacity(config.dim());
    let mut layer = vec![x.clone()];
    for l in 0..config.layers {
        for s in &layer {
            for q in 1..=q_max {
                values.push(coefficient(&bank.low_pass, s, q));
            }
            ops.add(g * q_max);
        }
        if l + 1 < config.layers {
            let mut next = Vec::with_capacity(layer.len() * bank.filters.len());
            for s in &layer {
                for h in &bank.filters {
                    let mut child = matvec(h, s, ops);
                    config.nonlinearity.apply(&mut child);
                    next.push(child);
                }
            }
            layer = next;
        }
    }
    Ok(Embedding {
        values: DVector::from_vec(values),
        path_index: config.path_index(),
    })
}

/// Embeds one graph from scratch.
pub fn embed(graph: &Graph, config: &ScatteringConfig) -> Result<Embedding> {
    embed_counted(graph, config, &mut OpCount::default())
}

pub fn embed_counted(graph: &Graph, config: &ScatteringConfig, ops: &mut OpCount) -> Result<Embedding> {
    let bank = build_filter_bank_counted(graph, &config.family, ops)?;
    embed_with_bank(graph.features(), &bank, config, ops)
}

/// Embeds every graph of the dataset; row `i` of the matrix is graph `i`.
pub fn embed_dataset(dataset: &Dataset, config: &ScatteringConfig) -> Result<(DMatrix<f64>, Vec<i64>)> {
    let rows: Vec<DVector<f64>> = dataset
        .graphs
        .par_iter()
        .map(|g| embed(g, config).map(|e| e.values))
        .collect::<Result<_>>()?;
    let d = config.dim();
    let mut z = DMatrix::zeros(rows.len(), d);
    for (i, r) in rows.iter().enumerate() {
        z.row_mut(i).copy_from(&r.transpose());
    }
    let y = dataset.graphs.iter().map(|g| g.label).collect();
    Ok((z, y))
}

/// Writes one row per graph with a header of path labels.
pub fn write_embeddings_csv(
    path: impl AsRef<Path>,
    config: &ScatteringConfig,
    z: &DMatrix<f64>,
    graph_ids: &[usize],
    labels: &[i64],
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut header = vec!["graph_id".to_string(), "label".to_string()];
    header.extend(config.path_index().iter().map(PathKey::label));
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for i in 0..z.nrows() {
        let mut line = format!("{},{}", graph_ids[i], labels[i]);
        for v in z.row(i).iter() {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Stored powers `T^1 .. T^K` of one graph's lazy operator, `K = 2^J`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCache {
    family: WaveletFamily,
    powers: Vec<DMatrix<f64>>,
}

impl PowerCache {
    pub fn build(graph: &Graph, family: &WaveletFamily) -> Result<PowerCache> {
        Self::build_counted(graph, family, &mut OpCount::default())
    }

    pub fn build_counted(graph: &Graph, family: &WaveletFamily, ops: &mut OpCount) -> Result<PowerCache> {
        if !family.kind.is_polynomial() {
            return Err(Error::Unsupported(family.kind.name().into()));
        }
        let t = lazy_operator(graph, family.kind)?;
        let g = t.nrows();
        ops.add(g * g);
        let k = family.max_power();
        let mut powers = Vec::with_capacity(k);
        powers.push(t);
        for _ in 1..k {
            let next = matmul(powers.last().unwrap(), &powers[0], ops);
            powers.push(next);
        }
        Ok(PowerCache {
            family: *family,
            powers,
        })
    }

    pub fn family(&self) -> &WaveletFamily {
        &self.family
    }

    /// Largest stored exponent.
    pub fn degree(&self) -> usize {
        self.powers.len()
    }

    pub fn node_count(&self) -> usize {
        self.powers[0].nrows()
    }

    /// `T^k` for `1 <= k <= K`.
    pub fn power(&self, k: usize) -> &DMatrix<f64> {
        &self.powers[k - 1]
    }

    fn dyadic(&self) -> Vec<&DMatrix<f64>> {
        (0..=self.family.scales).map(|j| self.power(1 << j)).collect()
    }

    /// Bank for the cached operator.
    pub fn filter_bank(&self, graph: &Graph, ops: &mut OpCount) -> Result<FilterBank> {
        FilterBank::from_dyadic_powers(self.family, &self.dyadic(), low_pass(graph, self.family.kind), ops)
    }

    /// Replaces the cached powers after the operator changed by a low-rank
    /// term `T' = T + U V^T`, using
    /// `T'^m = T^m + sum_{i<m} (T'^i U)(V^T T^(m-1-i))`.
    fn apply_low_rank_update(&mut self, new_op: DMatrix<f64>, u: &DMatrix<f64>, vt: &DMatrix<f64>, ops: &mut OpCount) {
        let k = self.degree();
        let g = self.node_count();
        let r = u.ncols();
        // a_i = T'^i U
        let mut a = Vec::with_capacity(k);
        a.push(u.clone());
        for i in 1..k {
            let next = matmul(&new_op, &a[i - 1], ops);
            a.push(next);
        }
        // b_p = V^T T^p with the old powers
        let mut b = Vec::with_capacity(k);
        b.push(vt.clone());
        for p in 1..k {
            b.push(matmul(vt, &self.powers[p - 1], ops));
        }
        let mut updated = Vec::with_capacity(k);
        for m in 1..=k {
            let mut left = DMatrix::zeros(g, m * r);
            let mut right = DMatrix::zeros(m * r, g);
            for i in 0..m {
                left.view_mut((0, i * r), (g, r)).copy_from(&a[i]);
                right.view_mut((i * r, 0), (r, g)).copy_from(&b[m - 1 - i]);
            }
            updated.push(&self.powers[m - 1] + matmul(&left, &right, ops));
        }
        updated[0] = new_op;
        self.powers = updated;
    }
}

/// Factor `delta = U V^T` from its sparsity. Rows listed in `cover` become
/// one rank-one term each; the rest of every changed column another. When
/// every nonzero lies in a covered row or column the rank is at most
/// `2 |cover|`; the factor is exact for any cover.
fn sparse_low_rank(delta: &DMatrix<f64>, cover: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let g = delta.nrows();
    let mut in_cover = vec![false; g];
    for &r in cover {
        in_cover[r] = true;
    }
    let rows: Vec<usize> = (0..g)
        .filter(|&r| in_cover[r] && delta.row(r).iter().any(|v| *v != 0.0))
        .collect();
    let cols: Vec<usize> = (0..g)
        .filter(|&c| (0..g).any(|r| !in_cover[r] && delta[(r, c)] != 0.0))
        .collect();
    let rank = rows.len() + cols.len();
    let mut u = DMatrix::zeros(g, rank);
    let mut vt = DMatrix::zeros(rank, g);
    for (k, &r) in rows.iter().enumerate() {
        u[(r, k)] = 1.0;
        vt.row_mut(k).copy_from(&delta.row(r));
    }
    for (i, &c) in cols.iter().enumerate() {
        let k = rows.len() + i;
        for r in 0..g {
            if !in_cover[r] {
                u[(r, k)] = delta[(r, c)];
            }
        }
        vt[(k, c)] = 1.0;
    }
    (u, vt)
}

#[derive(Debug, Clone)]
pub struct IncrementalEmbedding {
    /// Graph after removal, in masked form.
    pub graph: Graph,
    pub embedding: Embedding,
    /// Scalar multiply-adds spent on the cache update and the new embedding.
    pub ops: OpCount,
    /// Rank of the operator change.
    pub rank: usize,
    /// True when the change was dense enough that rebuilding the powers was
    /// cheaper than the low-rank update.
    pub rebuilt: bool,
}

/// Embedding of `graph` with `removed_node` masked out, updating `cache`
/// (built on `graph`'s operator) in place.
pub fn embed_incremental(
    graph: &Graph,
    removed_node: usize,
    cache: &mut PowerCache,
    config: &ScatteringConfig,
) -> Result<IncrementalEmbedding> {
    if !config.family.kind.is_polynomial() {
        return Err(Error::Unsupported(config.family.kind.name().into()));
    }
    if cache.family.kind != config.family.kind {
        return Err(Error::Cache(format!(
            "cache holds {} powers, config asks for {}",
            cache.family.kind.name(),
            config.family.kind.name()
        )));
    }
    if cache.degree() < config.family.max_power() {
        return Err(Error::Cache(format!(
            "cache degree {} below the {} powers needed for J={}",
            cache.degree(),
            config.family.max_power(),
            config.family.scales
        )));
    }
    if cache.node_count() != graph.node_count() {
        return Err(Error::Cache(format!(
            "cache built for {} nodes, graph has {}",
            cache.node_count(),
            graph.node_count()
        )));
    }
    let masked = graph.mask_node(removed_node)?;
    let mut ops = OpCount::default();
    let g = graph.node_count();
    let new_op = lazy_operator(&masked, config.family.kind)?;
    ops.add(g * g);
    let delta = &new_op - cache.power(1);
    ops.add(g * g);
    // only rows and columns of the node and its neighbours change
    let cover: Vec<usize> = std::iter::once(removed_node)
        .chain(graph.neighbors(removed_node))
        .collect();
    let (u, vt) = sparse_low_rank(&delta, &cover);
    ops.add(g * g);
    let rank = u.ncols();

    // low-rank update costs ~ K^2 r g^2 / 2, a rebuild ~ K g^3
    let k = cache.degree();
    let rebuilt = k * rank > 2 * g;
    if rebuilt {
        let mut fresh = PowerCache::build_counted(&masked, &cache.family, &mut ops)?;
        fresh.family = cache.family;
        *cache = fresh;
    } else {
        cache.apply_low_rank_update(new_op, &u, &vt, &mut ops);
    }
    let bank = cache.filter_bank(&masked, &mut ops)?;
    let embedding = embed_with_bank(masked.features(), &bank, config, &mut ops)?;
    Ok(IncrementalEmbedding {
        graph: masked,
        embedding,
        ops,
        rank,
        rebuilt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelets::FamilyKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(kind: FamilyKind, j: usize, l: usize, q: usize) -> ScatteringConfig {
        ScatteringConfig::new(WaveletFamily::new(kind, j, q).unwrap(), l).unwrap()
    }

    fn random_graph(g: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..g {
            for j in (i + 1)..g {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        let x = DVector::from_fn(g, |_, _| rng.random_range(-1.0..1.0));
        Graph::from_edges(0, 1, g, &edges, x).unwrap()
    }

    #[test]
    fn dimension_counts() {
        assert_eq!(cfg(FamilyKind::Itersine, 3, 2, 1).dim(), 4);
        assert_eq!(cfg(FamilyKind::Geometric, 3, 2, 1).dim(), 5);
        assert_eq!(cfg(FamilyKind::Geometric, 4, 3, 3).dim(), 3 * 31);
        let mut c = cfg(FamilyKind::Geometric, 4, 3, 3);
        c.count_moments = false;
        assert_eq!(c.dim(), 31);
        assert_eq!(c.path_index().len(), 31);
        assert_eq!(cfg(FamilyKind::Diffusion, 2, 2, 5).dim(), 4);
    }

    #[test]
    fn path_layout_is_breadth_first() {
        let c = cfg(FamilyKind::Geometric, 1, 3, 2);
        let labels: Vec<String> = c.path_index().iter().map(PathKey::label).collect();
        assert_eq!(
            labels,
            [
                "phi",
                "phi_q2",
                "phi_0",
                "phi_0_q2",
                "phi_1",
                "phi_1_q2",
                "phi_0_0",
                "phi_0_0_q2",
                "phi_0_1",
                "phi_0_1_q2",
                "phi_1_0",
                "phi_1_0_q2",
                "phi_1_1",
                "phi_1_1_q2"
            ]
        );
    }

    #[test]
    fn zero_signal_embeds_to_zero() {
        let g = random_graph(6, 0.5, 1).with_features(DVector::zeros(6)).unwrap();
        for kind in [
            FamilyKind::Geometric,
            FamilyKind::Diffusion,
            FamilyKind::Itersine,
            FamilyKind::MonicCubic,
        ] {
            let e = embed(&g, &cfg(kind, 3, 3, 2)).unwrap();
            assert!(e.values.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn single_node_diffusion() {
        let g = Graph::from_edges(0, 1, 1, &[], DVector::from_vec(vec![0.6])).unwrap();
        let e = embed(&g, &cfg(FamilyKind::Diffusion, 2, 3, 1)).unwrap();
        assert_eq!(e.values[0], 0.6);
        assert!(e.values.iter().skip(1).all(|v| *v == 0.0));
    }

    #[test]
    fn bank_mismatch_is_an_error() {
        let g = random_graph(5, 0.5, 2);
        let c = cfg(FamilyKind::Geometric, 2, 2, 1);
        let bank = crate::wavelets::build_filter_bank(&random_graph(4, 0.5, 2), &c.family).unwrap();
        assert!(matches!(
            embed_with_bank(g.features(), &bank, &c, &mut OpCount::default()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn power_cache_consistency() {
        let g = random_graph(7, 0.4, 3);
        let f = WaveletFamily::new(FamilyKind::Geometric, 3, 1).unwrap();
        let cache = PowerCache::build(&g, &f).unwrap();
        assert_eq!(cache.degree(), 8);
        for k in 2..=8 {
            let expect = cache.power(k - 1) * cache.power(1);
            assert!((cache.power(k) - expect).amax() < 1e-12);
        }
        let spectral = WaveletFamily::new(FamilyKind::Itersine, 3, 1).unwrap();
        assert!(matches!(PowerCache::build(&g, &spectral), Err(Error::Unsupported(_))));
    }

    #[test]
    fn low_rank_factor_is_exact() {
        let g = random_graph(8, 0.4, 4);
        for kind in [FamilyKind::Geometric, FamilyKind::Diffusion] {
            let t = lazy_operator(&g, kind).unwrap();
            let t2 = lazy_operator(&g.mask_node(3).unwrap(), kind).unwrap();
            let delta = &t2 - &t;
            let cover: Vec<usize> = std::iter::once(3).chain(g.neighbors(3)).collect();
            for c in [&cover[..], &[]] {
                let (u, vt) = sparse_low_rank(&delta, c);
                assert!((&u * &vt - &delta).amax() == 0.0);
            }
            assert!(sparse_low_rank(&delta, &cover).0.ncols() <= 2 * cover.len());
        }
    }

    #[test]
    fn incremental_matches_scratch() {
        for seed in 0..6 {
            let g = random_graph(6, 0.5, seed);
            for kind in [FamilyKind::Diffusion, FamilyKind::Geometric] {
                let c = cfg(kind, 2, 3, 2);
                let mut cache = PowerCache::build(&g, &c.family).unwrap();
                let node = seed as usize % 6;
                let inc = embed_incremental(&g, node, &mut cache, &c).unwrap();
                let scratch = embed(&g.remove_node(node).unwrap(), &c).unwrap();
                assert!((&inc.embedding.values - &scratch.values).amax() < 1e-10);
                let rebuilt = PowerCache::build(&inc.graph, &c.family).unwrap();
                for k in 1..=cache.degree() {
                    assert!((cache.power(k) - rebuilt.power(k)).amax() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn isolated_node_removal_is_exact() {
        let mut g = random_graph(6, 0.6, 9);
        let mut a = g.adjacency().clone();
        a.row_mut(5).fill(0.0);
        a.column_mut(5).fill(0.0);
        g = Graph::new(0, 1, a, g.features().clone()).unwrap();
        let c = cfg(FamilyKind::Geometric, 2, 3, 1);
        let mut cache = PowerCache::build(&g, &c.family).unwrap();
        let inc = embed_incremental(&g, 5, &mut cache, &c).unwrap();
        let masked = embed(&g.mask_node(5).unwrap(), &c).unwrap();
        assert_eq!(inc.rank, 0);
        assert!((&inc.embedding.values - &masked.values).amax() < 1e-14);
    }

    #[test]
    fn incremental_errors() {
        let g = random_graph(6, 0.5, 1);
        let c = cfg(FamilyKind::Geometric, 3, 2, 1);
        let small = WaveletFamily::new(FamilyKind::Geometric, 2, 1).unwrap();
        let mut cache = PowerCache::build(&g, &small).unwrap();
        assert!(matches!(embed_incremental(&g, 0, &mut cache, &c), Err(Error::Cache(_))));
        let spectral = cfg(FamilyKind::MonicCubic, 3, 2, 1);
        assert!(matches!(
            embed_incremental(&g, 0, &mut cache, &spectral),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn embeddings_csv_has_path_header() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(FamilyKind::Itersine, 2, 2, 1);
        let ds = Dataset::new(vec![random_graph(5, 0.5, 1)]);
        let (z, y) = embed_dataset(&ds, &c).unwrap();
        assert_eq!((z.nrows(), z.ncols()), (1, 3));
        let p = dir.path().join("emb.csv");
        write_embeddings_csv(&p, &c, &z, &[0], &y).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("graph_id,label,phi,phi_1,phi_2\n"));
    }
}

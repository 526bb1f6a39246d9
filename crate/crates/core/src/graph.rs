//! Graph and dataset model, TU-style dataset ingestion, feature normalization
//! and the two structural edits served by the unlearning engine.
//!
//! Node removal has two representations. [`Graph::remove_node`] shrinks the
//! graph (row/column and feature entry deleted). [`Graph::mask_node`] keeps
//! the dimension and zeroes the node's feature and incident edges, which is
//! the form the power-cache path works in. A masked node is *inactive*: it
//! no longer counts towards the averaging denominator of the low-pass
//! operator, so both forms embed identically.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub graph_id: usize,
    pub label: i64,
    adjacency: DMatrix<f64>,
    features: DVector<f64>,
    active: Vec<bool>,
}

impl Graph {
    /// Builds a graph from a symmetric, zero-diagonal adjacency and a feature
    /// vector. Features are stored as given; see [`Graph::normalized`].
    pub fn new(graph_id: usize, label: i64, adjacency: DMatrix<f64>, features: DVector<f64>) -> Result<Self> {
        let g = adjacency.nrows();
        if g == 0 {
            return Err(Error::Structure(format!("graph {graph_id} has no nodes")));
        }
        if adjacency.ncols() != g || features.len() != g {
            return Err(Error::Shape(format!(
                "graph {graph_id}: adjacency {}x{} with {} features",
                adjacency.nrows(),
                adjacency.ncols(),
                features.len()
            )));
        }
        for i in 0..g {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::Structure(format!("graph {graph_id}: self loop on node {i}")));
            }
            for j in (i + 1)..g {
                let (a, b) = (adjacency[(i, j)], adjacency[(j, i)]);
                if a != b {
                    return Err(Error::Structure(format!(
                        "graph {graph_id}: adjacency not symmetric at ({i}, {j})"
                    )));
                }
                if a < 0.0 {
                    return Err(Error::Structure(format!(
                        "graph {graph_id}: negative edge weight at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Graph {
            graph_id,
            label,
            adjacency,
            features,
            active: vec![true; g],
        })
    }

    /// Unweighted graph from a 0-based edge list.
    pub fn from_edges(
        graph_id: usize,
        label: i64,
        nodes: usize,
        edges: &[(usize, usize)],
        features: DVector<f64>,
    ) -> Result<Self> {
        let mut adjacency = DMatrix::zeros(nodes, nodes);
        for &(i, j) in edges {
            if i >= nodes || j >= nodes {
                return Err(Error::NodeOutOfRange { index: i.max(j), nodes });
            }
            if i == j {
                return Err(Error::Structure(format!("graph {graph_id}: self loop on node {i}")));
            }
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
        Graph::new(graph_id, label, adjacency, features)
    }

    /// Dimension of the adjacency, counting masked nodes.
    pub fn node_count(&self) -> usize {
        self.adjacency.nrows()
    }

    /// Nodes that have not been masked out.
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.active.get(node).copied().unwrap_or(false)
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn features(&self) -> &DVector<f64> {
        &self.features
    }

    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_fn(self.node_count(), |i, _| self.adjacency.row(i).sum())
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let row = self.adjacency.row(node);
        (0..self.node_count()).filter(move |&j| row[j] != 0.0)
    }

    pub fn edge_count(&self) -> usize {
        let g = self.node_count();
        let mut m = 0;
        for i in 0..g {
            for j in (i + 1)..g {
                if self.adjacency[(i, j)] != 0.0 {
                    m += 1;
                }
            }
        }
        m
    }

    /// Per-graph max-abs rescale so that every |x[j]| <= 1. A zero signal is
    /// left unchanged.
    pub fn normalized(mut self) -> Self {
        let max = self.features.amax();
        if max > 0.0 {
            self.features /= max;
            // guard against a last-ulp overshoot from the division
            self.features.apply(|v| *v = v.clamp(-1.0, 1.0));
        }
        self
    }

    /// Replaces features with raw node degrees, then max-abs normalizes.
    pub fn with_degree_features(mut self) -> Self {
        self.features = self.degrees();
        self.normalized()
    }

    pub fn with_features(mut self, features: DVector<f64>) -> Result<Self> {
        if features.len() != self.node_count() {
            return Err(Error::Shape(format!(
                "{} features for {} nodes",
                features.len(),
                self.node_count()
            )));
        }
        self.features = features;
        Ok(self)
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                index: node,
                nodes: self.node_count(),
            });
        }
        Ok(())
    }

    /// Copy with `x[node] = 0`; adjacency is untouched.
    pub fn zero_feature(&self, node: usize) -> Result<Graph> {
        self.check_node(node)?;
        let mut out = self.clone();
        out.features[node] = 0.0;
        Ok(out)
    }

    /// Shrink form of node removal: row, column and feature entry deleted.
    pub fn remove_node(&self, node: usize) -> Result<Graph> {
        self.check_node(node)?;
        if self.node_count() < 2 || (self.is_active(node) && self.active_count() < 2) {
            return Err(Error::DegenerateGraph(self.graph_id));
        }
        let adjacency = self.adjacency.clone().remove_row(node).remove_column(node);
        let features = self.features.clone().remove_row(node);
        let mut active = self.active.clone();
        active.remove(node);
        Ok(Graph {
            graph_id: self.graph_id,
            label: self.label,
            adjacency,
            features,
            active,
        })
    }

    /// Masked form of node removal: same dimension, zero feature, zero
    /// incident edges, node marked inactive. Equivalent to
    /// `S' = S + E S + S E` with `E = -e_k e_k^T`.
    pub fn mask_node(&self, node: usize) -> Result<Graph> {
        self.check_node(node)?;
        if !self.is_active(node) {
            return Err(Error::StaleRequest(format!(
                "node {node} of graph {} is already removed",
                self.graph_id
            )));
        }
        if self.active_count() < 2 {
            return Err(Error::DegenerateGraph(self.graph_id));
        }
        let mut out = self.clone();
        out.adjacency.row_mut(node).fill(0.0);
        out.adjacency.column_mut(node).fill(0.0);
        out.features[node] = 0.0;
        out.active[node] = false;
        Ok(out)
    }

    /// Drops every masked node, yielding the shrink form.
    pub fn compact(&self) -> Graph {
        let keep: Vec<usize> = (0..self.node_count()).filter(|&i| self.active[i]).collect();
        let adjacency = DMatrix::from_fn(keep.len(), keep.len(), |i, j| self.adjacency[(keep[i], keep[j])]);
        let features = DVector::from_fn(keep.len(), |i, _| self.features[keep[i]]);
        Graph {
            graph_id: self.graph_id,
            label: self.label,
            adjacency,
            features,
            active: vec![true; keep.len()],
        }
    }

    /// Relabels nodes: node `i` of the result is node `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let g = self.node_count();
        let mut seen = vec![false; g];
        if perm.len() != g || perm.iter().any(|&p| p >= g || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Parameter("not a permutation".into()));
        }
        Ok(Graph {
            graph_id: self.graph_id,
            label: self.label,
            adjacency: DMatrix::from_fn(g, g, |i, j| self.adjacency[(perm[i], perm[j])]),
            features: DVector::from_fn(g, |i, _| self.features[perm[i]]),
            active: perm.iter().map(|&p| self.active[p]).collect(),
        })
    }
}

/// Disjoint index sets into [`Dataset::graphs`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Shuffles `0..n` with `seed` and cuts it by the given ratios.
    pub fn random(n: usize, ratios: [f64; 3], seed: u64) -> Result<Split> {
        let sum: f64 = ratios.iter().sum();
        if ratios.iter().any(|r| *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "split ratios {ratios:?} must be nonnegative and sum to 1"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = (ratios[0] * n as f64).round() as usize;
        let n_val = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
        let test = idx.split_off(n_train + n_val);
        let validation = idx.split_off(n_train);
        Ok(Split {
            train: idx,
            validation,
            test,
        })
    }

    pub fn all_train(n: usize) -> Split {
        Split {
            train: (0..n).collect(),
            ..Default::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.validation).chain(&self.test) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Structure(format!("split index {i} repeated or out of range")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Structure("split does not cover every graph".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graphs: Vec<Graph>,
    pub split: Split,
}

impl Dataset {
    pub fn new(graphs: Vec<Graph>) -> Dataset {
        let split = Split::all_train(graphs.len());
        Dataset { graphs, split }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn with_split(mut self, split: Split) -> Result<Dataset> {
        split.validate(self.len())?;
        self.split = split;
        Ok(self)
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<i64> {
        let mut c: Vec<i64> = self.graphs.iter().map(|g| g.label).collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// Dataset layouts understood by [`load_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// `A.txt`, `graph_indicator.txt`, `graph_labels.txt` and optionally
    /// `node_attributes.txt`, each optionally prefixed `<NAME>_`.
    #[default]
    TuEdgeList,
}

fn find_file(dir: &Path, stem: &str) -> Option<PathBuf> {
    let plain = dir.join(format!("{stem}.txt"));
    if plain.is_file() {
        return Some(plain);
    }
    let suffix = format!("_{stem}.txt");
    let mut hits: Vec<PathBuf> = fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(&suffix))
        })
        .collect();
    hits.sort();
    hits.into_iter().next()
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Loads a dataset directory. Edges are symmetrized; graphs without node
/// attributes get degree features; features are max-abs normalized per graph.
pub fn load_dataset(dir: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    let DatasetFormat::TuEdgeList = format;
    let dir = dir.as_ref();
    let need = |stem: &str| {
        find_file(dir, stem).ok_or_else(|| {
            Error::io(
                dir.join(format!("{stem}.txt")),
                std::io::Error::new(std::io::ErrorKind::NotFound, "missing dataset file"),
            )
        })
    };
    let a_path = need("A")?;
    let ind_path = need("graph_indicator")?;
    let lab_path = need("graph_labels")?;

    let mut indicator = Vec::new();
    for (ln, l) in read_lines(&ind_path)? {
        let v: usize = l
            .parse()
            .map_err(|_| parse_err(&ind_path, ln, format!("expected graph id, got {l:?}")))?;
        if v == 0 {
            return Err(parse_err(&ind_path, ln, "graph ids are 1-based"));
        }
        indicator.push(v);
    }
    let mut labels = Vec::new();
    for (ln, l) in read_lines(&lab_path)? {
        let v: i64 = l
            .parse()
            .map_err(|_| parse_err(&lab_path, ln, format!("expected integer label, got {l:?}")))?;
        labels.push(v);
    }
    let n_graphs = labels.len();
    if let Some(&bad) = indicator.iter().find(|&&g| g > n_graphs) {
        return Err(Error::Structure(format!(
            "graph id {bad} in {} exceeds the {n_graphs} labels",
            ind_path.display()
        )));
    }

    // global node -> (graph, local index)
    let mut local = Vec::with_capacity(indicator.len());
    let mut sizes = vec![0usize; n_graphs];
    for &gid in &indicator {
        local.push((gid - 1, sizes[gid - 1]));
        sizes[gid - 1] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Structure(format!("graph {} has no nodes", empty + 1)));
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_graphs];
    for (ln, l) in read_lines(&a_path)? {
        let mut it = l.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(&a_path, ln, format!("expected \"i,j\", got {l:?}")));
        };
        let parse = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| parse_err(&a_path, ln, format!("bad node index {s:?}")))
        };
        let (i, j) = (parse(a)?, parse(b)?);
        for v in [i, j] {
            if v == 0 || v > local.len() {
                return Err(Error::Structure(format!(
                    "{}:{ln}: node {v} outside declared range 1..={}",
                    a_path.display(),
                    local.len()
                )));
            }
        }
        let ((gi, li), (gj, lj)) = (local[i - 1], local[j - 1]);
        if gi != gj {
            return Err(Error::Structure(format!(
                "{}:{ln}: edge {i},{j} joins graphs {} and {}",
                a_path.display(),
                gi + 1,
                gj + 1
            )));
        }
        if li == lj {
            log::warn!("{}:{ln}: dropping self loop on node {i}", a_path.display());
            continue;
        }
        edges[gi].push((li, lj));
    }

    let attributes = match find_file(dir, "node_attributes") {
        Some(p) => {
            let mut attrs = Vec::new();
            for (ln, l) in read_lines(&p)? {
                let first = l.split(',').next().unwrap_or("").trim();
                if l.contains(',') {
                    return Err(parse_err(&p, ln, "only one attribute per node is supported"));
                }
                let v: f64 = first
                    .parse()
                    .map_err(|_| parse_err(&p, ln, format!("expected a real, got {l:?}")))?;
                attrs.push(v);
            }
            if attrs.len() != local.len() {
                return Err(Error::Structure(format!(
                    "{} has {} rows for {} nodes",
                    p.display(),
                    attrs.len(),
                    local.len()
                )));
            }
            Some(attrs)
        }
        None => None,
    };

    let mut per_graph_attrs: Vec<Vec<f64>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    if let Some(attrs) = &attributes {
        for (node, &(g, _)) in local.iter().enumerate() {
            per_graph_attrs[g].push(attrs[node]);
        }
    }

    let mut graphs = Vec::with_capacity(n_graphs);
    for gid in 0..n_graphs {
        let base = Graph::from_edges(gid, labels[gid], sizes[gid], &edges[gid], DVector::zeros(sizes[gid]))?;
        let graph = if attributes.is_some() {
            base.with_features(DVector::from_vec(std::mem::take(&mut per_graph_attrs[gid])))?
                .normalized()
        } else {
            base.with_degree_features()
        };
        graphs.push(graph);
    }
    Ok(Dataset::new(graphs))
}

/// Writes the TU edge-list layout read by [`load_dataset`].
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>, with_attributes: bool) -> Result<()> {
    use std::fmt::Write as _;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (mut a, mut ind, mut lab, mut attr) = (String::new(), String::new(), String::new(), String::new());
    let mut offset = 0usize;
    for (gi, g) in dataset.graphs.iter().enumerate() {
        let g = g.compact();
        let n = g.node_count();
        for i in 0..n {
            let _ = writeln!(ind, "{}", gi + 1);
            let _ = writeln!(attr, "{}", g.features()[i]);
            for j in (i + 1)..n {
                if g.adjacency()[(i, j)] != 0.0 {
                    let _ = writeln!(a, "{},{}", offset + i + 1, offset + j + 1);
                }
            }
        }
        let _ = writeln!(lab, "{}", g.label);
        offset += n;
    }
    let mut files: BTreeMap<&str, &String> = BTreeMap::new();
    files.insert("A.txt", &a);
    files.insert("graph_indicator.txt", &ind);
    files.insert("graph_labels.txt", &lab);
    if with_attributes {
        files.insert("node_attributes.txt", &attr);
    }
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    fn path3() -> Graph {
        Graph::from_edges(0, 1, 3, &[(0, 1), (1, 2)], DVector::from_vec(vec![1.0, -0.5, 0.2])).unwrap()
    }

    #[test]
    fn triangle_loads_with_full_adjacency() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "A.txt", "1,2\n2,3\n1,3\n");
        write(dir.path(), "graph_indicator.txt", "1\n1\n1\n");
        write(dir.path(), "graph_labels.txt", "1\n");
        write(dir.path(), "node_attributes.txt", "1.0\n1.0\n1.0\n");
        let ds = load_dataset(dir.path(), DatasetFormat::TuEdgeList).unwrap();
        let g = &ds.graphs[0];
        assert_eq!(g.node_count(), 3);
        let expect = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(g.adjacency(), &expect);
        assert_eq!(g.features().as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn single_node_feature_rescaled() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "A.txt", "");
        write(dir.path(), "graph_indicator.txt", "1\n");
        write(dir.path(), "graph_labels.txt", "0\n");
        write(dir.path(), "node_attributes.txt", "5.0\n");
        let ds = load_dataset(dir.path(), DatasetFormat::TuEdgeList).unwrap();
        assert_eq!(ds.graphs[0].features().as_slice(), &[1.0]);
    }

    #[test]
    fn indicator_partitions_graphs() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "MUTAG_A.txt", "1,2\n");
        write(dir.path(), "MUTAG_graph_indicator.txt", "1\n1\n2\n");
        write(dir.path(), "MUTAG_graph_labels.txt", "1\n-1\n");
        let ds = load_dataset(dir.path(), DatasetFormat::TuEdgeList).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.graphs[0].node_count(), 2);
        assert_eq!(ds.graphs[1].node_count(), 1);
        // degree features: both endpoints have degree 1, isolated node 0
        assert_eq!(ds.graphs[0].features().as_slice(), &[1.0, 1.0]);
        assert_eq!(ds.graphs[1].features().as_slice(), &[0.0]);
    }

    #[test]
    fn loader_errors() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "graph_indicator.txt", "1\n1\n2\n");
        write(dir.path(), "graph_labels.txt", "1\n0\n");

        write(dir.path(), "A.txt", "1,2\n2;3\n");
        match load_dataset(dir.path(), DatasetFormat::TuEdgeList) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        write(dir.path(), "A.txt", "1,9\n");
        assert!(matches!(
            load_dataset(dir.path(), DatasetFormat::TuEdgeList),
            Err(Error::Structure(_))
        ));
        write(dir.path(), "A.txt", "2,3\n");
        assert!(matches!(
            load_dataset(dir.path(), DatasetFormat::TuEdgeList),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn duplicate_directions_collapse() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "A.txt", "1,2\n2,1\n");
        write(dir.path(), "graph_indicator.txt", "1\n1\n");
        write(dir.path(), "graph_labels.txt", "1\n");
        let ds = load_dataset(dir.path(), DatasetFormat::TuEdgeList).unwrap();
        assert_eq!(ds.graphs[0].adjacency()[(0, 1)], 1.0);
        assert_eq!(ds.graphs[0].edge_count(), 1);
    }

    #[test]
    fn zero_feature_examples() {
        let g = path3();
        let z = g.zero_feature(2).unwrap();
        assert_eq!(z.features().as_slice(), &[1.0, -0.5, 0.0]);
        assert_eq!(z.adjacency(), g.adjacency());
        let zeros = Graph::from_edges(0, 0, 2, &[(0, 1)], DVector::zeros(2)).unwrap();
        assert_eq!(zeros.zero_feature(0).unwrap(), zeros);
        assert!(matches!(g.zero_feature(3), Err(Error::NodeOutOfRange { .. })));
        for v in 0..3 {
            let diff = (g.features() - g.zero_feature(v).unwrap().features()).norm();
            assert_eq!(diff, g.features()[v].abs());
            assert!(diff <= 1.0);
        }
    }

    #[test]
    fn remove_node_shrink_and_mask() {
        let g = path3();
        let s = g.remove_node(2).unwrap();
        assert_eq!(s.node_count(), 2);
        assert_eq!(s.edge_count(), 1);
        assert_eq!(s.adjacency()[(0, 1)], 1.0);

        let m = g.mask_node(2).unwrap();
        assert_eq!(m.node_count(), 3);
        assert_eq!(m.active_count(), 2);
        assert!(m.adjacency().row(2).iter().all(|v| *v == 0.0));
        assert!(m.adjacency().column(2).iter().all(|v| *v == 0.0));
        assert_eq!(m.features()[2], 0.0);
        assert_eq!(m.compact(), s);
    }

    #[test]
    fn mask_matches_diagonal_perturbation() {
        // S' = S + ES + SE with E = diag(0, 0, -1), evaluated entry by entry
        let g = path3();
        let s = g.adjacency();
        let mut e = DMatrix::zeros(3, 3);
        e[(2, 2)] = -1.0;
        let mut expect = DMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut v = s[(i, j)];
                for k in 0..3 {
                    v += e[(i, k)] * s[(k, j)] + s[(i, k)] * e[(k, j)];
                }
                expect[(i, j)] = v;
            }
        }
        assert_eq!(g.mask_node(2).unwrap().adjacency(), &expect);
    }

    #[test]
    fn last_node_is_degenerate() {
        let g = Graph::from_edges(7, 0, 1, &[], DVector::from_vec(vec![0.3])).unwrap();
        assert!(matches!(g.remove_node(0), Err(Error::DegenerateGraph(7))));
        assert!(matches!(g.mask_node(0), Err(Error::DegenerateGraph(7))));
        let two = path3().mask_node(0).unwrap().mask_node(1).unwrap();
        assert!(matches!(two.mask_node(2), Err(Error::DegenerateGraph(_))));
        assert!(matches!(two.mask_node(0), Err(Error::StaleRequest(_))));
    }

    #[test]
    fn split_is_a_partition() {
        let s = Split::random(50, [0.1, 0.1, 0.8], 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (5, 5, 40));
        s.validate(50).unwrap();
        assert!(Split::random(10, [0.5, 0.5, 0.5], 0).is_err());
    }

    #[test]
    fn write_then_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::new(vec![
            path3(),
            Graph::from_edges(1, -1, 2, &[(0, 1)], DVector::from_vec(vec![1.0, 0.5])).unwrap(),
        ]);
        write_dataset(&ds, dir.path(), true).unwrap();
        let back = load_dataset(dir.path(), DatasetFormat::TuEdgeList).unwrap();
        assert_eq!(back.graphs[0].adjacency(), ds.graphs[0].adjacency());
        assert_eq!(back.graphs[1].label, -1);
        assert_eq!(back.graphs[0].features(), ds.graphs[0].features());
    }
}

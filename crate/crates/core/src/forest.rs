//! Random-forest regression with a tree-dispersion confidence.
//!
//! Trees are greedy CART regressors (variance reduction, midpoint
//! thresholds). Tree `i` draws its bootstrap sample and per-node feature
//! subsets from ChaCha8 stream `i` of the forest seed, so a forest is the
//! same whether its trees are grown sequentially or in parallel.
//!
//! # Model file layout
//!
//! All integers little-endian:
//!
//! ```text
//! magic        b"PHQFOREST"
//! version      u32 (= 1)
//! n_trees      u32
//! max_depth    u32 (u32::MAX = unlimited)
//! min_leaf     u32
//! mtry         u32 (0 = default ⌈cols/3⌉)
//! bootstrap    u8
//! seed         u64
//! n_features   u32
//! per tree:    n_nodes u32, then nodes in pre-order:
//!              0x00 value:f64            (leaf)
//!              0x01 feature:u32 thr:f64  (split; left subtree follows)
//! ```

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datamodel::Modality;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means ⌈cols/3⌉.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            mtry: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, cols: usize) -> usize {
        self.mtry.unwrap_or_else(|| cols.div_ceil(3)).max(1)
    }

    pub fn validate(&self, cols: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        let mtry = self.resolved_mtry(cols);
        if mtry > cols {
            return Err(Error::Config(format!("mtry {mtry} exceeds {cols} columns")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted regression tree stored as a flat pre-order node list.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

fn check_data(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Empty("no training rows".into()));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let cols = x[0].len();
    if cols == 0 {
        return Err(Error::Empty("no feature columns".into()));
    }
    if let Some(row) = x.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch {
            expected: cols,
            found: row.len(),
        });
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Invalid("training data must be finite".into()));
    }
    Ok(cols)
}

struct Builder<'a, R> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: &'a ForestParams,
    mtry: usize,
    cols: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Leaf mean, clamped to the sample range to absorb rounding.
fn mean_of(y: &[f64], rows: &[usize]) -> f64 {
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(y[i]), hi.max(y[i])));
    (rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64).clamp(lo, hi)
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // keep `a <= m < b` so the upper value is routed right
    if m >= b {
        a
    } else {
        m
    }
}

impl<R: Rng> Builder<'_, R> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: mean_of(self.y, rows),
        });

        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        let first = self.y[rows[0]];
        let constant = rows.iter().all(|&i| self.y[i] == first);
        if !depth_ok || constant || rows.len() < 2 * self.params.min_samples_leaf {
            return id;
        }

        let mut features: Vec<usize> = sample(self.rng, self.cols, self.mtry).into_vec();
        features.sort_unstable();
        let Some(best) = self.best_split(rows, &features) else {
            return id;
        };

        let (feature, threshold) = (best.feature, best.threshold);
        let split_at = partition(rows, |&i| self.x[i][feature] <= threshold);
        let (left_rows, right_rows) = rows.split_at_mut(split_at);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Minimum summed child SSE over the candidate features. Candidates are
    /// scanned by ascending feature and threshold and only a strictly
    /// smaller score replaces the incumbent.
    fn best_split(&self, rows: &[usize], features: &[usize]) -> Option<SplitChoice> {
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf;
        let total_sum: f64 = rows.iter().map(|&i| self.y[i]).sum();
        let total_sq: f64 = rows.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let mut best: Option<SplitChoice> = None;
        let mut order: Vec<usize> = rows.to_vec();

        for &f in features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for k in 0..n - 1 {
                let yi = self.y[order[k]];
                left_sum += yi;
                left_sq += yi * yi;
                let (lo, hi) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                let n_left = k + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let n_right = (n - n_left) as f64;
                let right_sum = total_sum - left_sum;
                let right_sq = total_sq - left_sq;
                let score = (left_sq - left_sum * left_sum / n_left as f64)
                    + (right_sq - right_sum * right_sum / n_right);
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(SplitChoice {
                        feature: f,
                        threshold: midpoint(lo, hi),
                        score,
                    });
                }
            }
        }
        best
    }
}

/// In-place stable-enough partition; returns the count satisfying `pred`.
fn partition(rows: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let mut left: Vec<usize> = Vec::with_capacity(rows.len());
    let mut right: Vec<usize> = Vec::with_capacity(rows.len());
    for &r in rows.iter() {
        if pred(&r) {
            left.push(r);
        } else {
            right.push(r);
        }
    }
    let n = left.len();
    rows[..n].copy_from_slice(&left);
    rows[n..].copy_from_slice(&right);
    n
}

fn grow_tree<R: Rng>(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &mut [usize],
    params: &ForestParams,
    cols: usize,
    rng: &mut R,
) -> RegressionTree {
    let mut builder = Builder {
        x,
        y,
        params,
        mtry: params.resolved_mtry(cols),
        cols,
        rng,
        nodes: Vec::new(),
    };
    builder.grow(rows, 0);
    RegressionTree {
        nodes: builder.nodes,
    }
}

/// Grow one CART tree on all rows, drawing feature subsets from `rng`.
pub fn fit_tree<R: Rng>(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ForestParams,
    rng: &mut R,
) -> Result<RegressionTree> {
    let cols = check_data(x, y)?;
    params.validate(cols)?;
    let mut rows: Vec<usize> = (0..x.len()).collect();
    Ok(grow_tree(x, y, &mut rows, params, cols, rng))
}

/// The random stream owned by tree `index` of a forest seeded with `seed`.
pub fn tree_stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// A fitted forest together with the parameters it was grown with.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    params: ForestParams,
    n_features: usize,
    trees: Vec<RegressionTree>,
}

impl Forest {
    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    /// Per-tree outputs for one row.
    pub fn tree_predictions(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.predict(x)).collect())
    }

    pub fn predict(&self, x: &[f64], modality: Modality) -> Result<PredictionWithConfidence> {
        Ok(PredictionWithConfidence::from_tree_outputs(
            &self.tree_predictions(x)?,
            modality,
        ))
    }
}

/// Grow `params.n_trees` trees in parallel.
pub fn fit_forest(x: &[Vec<f64>], y: &[f64], params: &ForestParams) -> Result<Forest> {
    let cols = check_data(x, y)?;
    params.validate(cols)?;
    let n = x.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree_stream(params.seed, i);
            let mut rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(x, y, &mut rows, params, cols, &mut rng)
        })
        .collect();
    Ok(Forest {
        params: *params,
        n_features: cols,
        trees,
    })
}

/// Forest mean plus the population std of the individual tree outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionWithConfidence {
    pub mean: f64,
    pub std: f64,
    pub modality: Modality,
}

impl PredictionWithConfidence {
    pub fn from_tree_outputs(outputs: &[f64], modality: Modality) -> Self {
        assert!(!outputs.is_empty(), "a forest has at least one tree");
        let n = outputs.len() as f64;
        let lo = outputs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = outputs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // rounding in the sum can push the quotient just outside the range
        let mean = (outputs.iter().sum::<f64>() / n).clamp(lo, hi);
        let std = if lo == hi {
            0.0
        } else {
            (outputs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
        };
        Self {
            mean,
            std,
            modality,
        }
    }
}

pub fn predict_forest(
    forest: &Forest,
    x: &[f64],
    modality: Modality,
) -> Result<PredictionWithConfidence> {
    forest.predict(x, modality)
}

const MAGIC: &[u8; 9] = b"PHQFOREST";
pub const MODEL_VERSION: u32 = 1;
const UNLIMITED: u32 = u32::MAX;

fn to_u32(v: usize, what: &str) -> u32 {
    u32::try_from(v).unwrap_or_else(|_| panic!("{what} {v} does not fit the model format"))
}

pub fn serialize_model(forest: &Forest) -> Vec<u8> {
    let p = &forest.params;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(p.n_trees, "n_trees").to_le_bytes());
    let depth = p.max_depth.map_or(UNLIMITED, |d| to_u32(d, "max_depth").min(UNLIMITED - 1));
    out.extend_from_slice(&depth.to_le_bytes());
    out.extend_from_slice(&to_u32(p.min_samples_leaf, "min_samples_leaf").to_le_bytes());
    out.extend_from_slice(&p.mtry.map_or(0, |m| to_u32(m, "mtry")).to_le_bytes());
    out.push(u8::from(p.bootstrap));
    out.extend_from_slice(&p.seed.to_le_bytes());
    out.extend_from_slice(&to_u32(forest.n_features, "n_features").to_le_bytes());
    for tree in &forest.trees {
        out.extend_from_slice(&to_u32(tree.nodes.len(), "node count").to_le_bytes());
        write_preorder(&tree.nodes, 0, &mut out);
    }
    out
}

fn write_preorder(nodes: &[Node], i: usize, out: &mut Vec<u8>) {
    match nodes[i] {
        Node::Leaf { value } => {
            out.push(0);
            out.extend_from_slice(&value.to_le_bytes());
        }
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push(1);
            out.extend_from_slice(&to_u32(feature, "feature").to_le_bytes());
            out.extend_from_slice(&threshold.to_le_bytes());
            write_preorder(nodes, left, out);
            write_preorder(nodes, right, out);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corrupt(format!("truncated at byte {}", self.pos)))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_preorder(
    r: &mut Reader<'_>,
    nodes: &mut Vec<Node>,
    budget: usize,
    n_features: usize,
) -> Result<usize> {
    if nodes.len() >= budget {
        return Err(Error::Corrupt("tree has more nodes than declared".into()));
    }
    let id = nodes.len();
    match r.u8()? {
        0 => {
            let value = r.f64()?;
            if !value.is_finite() {
                return Err(Error::Corrupt("non-finite leaf value".into()));
            }
            nodes.push(Node::Leaf { value });
        }
        1 => {
            let feature = r.u32()? as usize;
            if feature >= n_features {
                return Err(Error::Corrupt(format!("feature index {feature} out of range")));
            }
            let threshold = r.f64()?;
            nodes.push(Node::Leaf { value: 0.0 });
            let left = read_preorder(r, nodes, budget, n_features)?;
            let right = read_preorder(r, nodes, budget, n_features)?;
            nodes[id] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        tag => return Err(Error::Corrupt(format!("unknown node tag {tag}"))),
    }
    Ok(id)
}

pub fn deserialize_model(bytes: &[u8]) -> Result<Forest> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()).ok() != Some(&MAGIC[..]) {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::VersionMismatch {
            expected: MODEL_VERSION,
            found: version,
        });
    }
    let n_trees = r.u32()? as usize;
    let max_depth = match r.u32()? {
        UNLIMITED => None,
        d => Some(d as usize),
    };
    let min_samples_leaf = r.u32()? as usize;
    let mtry = match r.u32()? {
        0 => None,
        m => Some(m as usize),
    };
    let bootstrap = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(Error::Corrupt(format!("bad bootstrap flag {b}"))),
    };
    let seed = r.u64()?;
    let n_features = r.u32()? as usize;
    let params = ForestParams {
        n_trees,
        max_depth,
        min_samples_leaf,
        mtry,
        bootstrap,
        seed,
    };
    if n_trees == 0 || n_features == 0 {
        return Err(Error::Corrupt("empty forest header".into()));
    }

    let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
    for _ in 0..n_trees {
        let n_nodes = r.u32()? as usize;
        let mut nodes = Vec::with_capacity(n_nodes.min(1 << 20));
        read_preorder(&mut r, &mut nodes, n_nodes, n_features)?;
        if nodes.len() != n_nodes {
            return Err(Error::Corrupt("node count disagrees with header".into()));
        }
        trees.push(RegressionTree { nodes });
    }
    if r.pos != bytes.len() {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(Forest {
        params,
        n_features,
        trees,
    })
}

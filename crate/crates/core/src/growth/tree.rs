//! CART classification trees (Gini impurity) and bagged forests.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use super::features::{FeatureLayout, Transition, N_TRANSITIONS};
use crate::error::{Error, Result};
use crate::nn::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    /// Depth limit; the root has depth 0. `None` grows until leaves are pure
    /// or cannot be split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: Some(12),
            min_samples_leaf: 1,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// Tree node. Children of a split are stored in pre-order: the left child
/// immediately follows its parent, the right child is at `right`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { feature: usize, threshold: f64, right: usize },
    Leaf { counts: [usize; N_TRANSITIONS] },
}

/// Majority label of a count vector, ties to the first label.
pub fn majority(counts: &[usize; N_TRANSITIONS]) -> Transition {
    let mut best = 0;
    for k in 1..N_TRANSITIONS {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    Transition::from_index(best).expect("valid index")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub n_features: usize,
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn from_nodes(n_features: usize, nodes: Vec<Node>) -> Result<Self> {
        let tree = Self { n_features, nodes };
        tree.validate()?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Checks that the node list is a well-formed pre-order binary tree.
    fn validate(&self) -> Result<()> {
        fn walk(nodes: &[Node], i: usize, n_features: usize) -> Result<usize> {
            match nodes.get(i) {
                None => Err(Error::Validation(format!("tree node {i} missing"))),
                Some(Node::Leaf { .. }) => Ok(i + 1),
                Some(Node::Split { feature, threshold, right }) => {
                    if *feature >= n_features || !threshold.is_finite() {
                        return Err(Error::Validation(format!("tree node {i} has an invalid split")));
                    }
                    let end_left = walk(nodes, i + 1, n_features)?;
                    if end_left != *right {
                        return Err(Error::Validation(format!(
                            "tree node {i}: right child at {right}, left subtree ends at {end_left}"
                        )));
                    }
                    walk(nodes, *right, n_features)
                }
            }
        }
        let end = walk(&self.nodes, 0, self.n_features)?;
        if end != self.nodes.len() {
            return Err(Error::Validation(format!(
                "tree has {} nodes but the root subtree spans {end}",
                self.nodes.len()
            )));
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> (usize, usize) {
            match &nodes[i] {
                Node::Leaf { .. } => (0, i + 1),
                Node::Split { right, .. } => {
                    let (dl, _) = walk(nodes, i + 1);
                    let (dr, end) = walk(nodes, *right);
                    (1 + dl.max(dr), end)
                }
            }
        }
        walk(&self.nodes, 0).0
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn leaf_counts(&self, x: &[f64]) -> Result<&[usize; N_TRANSITIONS]> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch(format!(
                "feature vector of length {} for a tree over {} features",
                x.len(),
                self.n_features
            )));
        }
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return Ok(counts),
                Node::Split { feature, threshold, right } => {
                    i = if x[*feature] <= *threshold { i + 1 } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Transition> {
        Ok(majority(self.leaf_counts(x)?))
    }
}

fn check_dataset(x: &[Vec<f64>], y: &[Transition]) -> Result<usize> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let d = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "rows of length {} and {}",
            d,
            row.len()
        )));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Value("non-finite feature value".into()));
    }
    Ok(d)
}

/// Split quality `Σ c_L²/n_L + Σ c_R²/n_R` held as an exact fraction; larger
/// means lower weighted Gini impurity.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(sq_left: u128, n_left: u128, sq_right: u128, n_right: u128) -> Self {
        Score {
            num: sq_left * n_right + sq_right * n_left,
            den: n_left * n_right,
        }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Transition],
    cfg: TreeConfig,
    nodes: Vec<Node>,
}

fn sum_sq(c: &[usize; N_TRANSITIONS]) -> u128 {
    c.iter().map(|&v| (v as u128) * (v as u128)).sum()
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> [usize; N_TRANSITIONS] {
        let mut c = [0; N_TRANSITIONS];
        for &i in rows {
            c[self.y[i].index()] += 1;
        }
        c
    }

    /// Best `(feature, threshold)` over all features, if any split is valid.
    fn best_split(&self, rows: &mut [usize], total: &[usize; N_TRANSITIONS]) -> Option<(usize, f64)> {
        let n = rows.len();
        let msl = self.cfg.min_samples_leaf;
        let mut best: Option<(Score, usize, f64)> = None;
        for f in 0..self.x[rows[0]].len() {
            rows.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = [0usize; N_TRANSITIONS];
            for k in 0..n - 1 {
                left[self.y[rows[k]].index()] += 1;
                let lo = self.x[rows[k]][f];
                let hi = self.x[rows[k + 1]][f];
                let n_left = k + 1;
                if lo == hi || n_left < msl || n - n_left < msl {
                    continue;
                }
                let mut right = *total;
                for (r, l) in right.iter_mut().zip(&left) {
                    *r -= l;
                }
                let score = Score::new(sum_sq(&left), n_left as u128, sum_sq(&right), (n - n_left) as u128);
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                if best.as_ref().is_none_or(|(b, _, _)| score.cmp(b) == Ordering::Greater) {
                    best = Some((score, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&mut self, rows: &mut [usize], depth: usize) {
        let counts = self.counts(rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
        let size_ok = rows.len() >= 2 * self.cfg.min_samples_leaf;
        let split = if !pure && depth_ok && size_ok {
            self.best_split(rows, &counts)
        } else {
            None
        };
        let Some((feature, threshold)) = split else {
            self.nodes.push(Node::Leaf { counts });
            return;
        };
        let at = self.nodes.len();
        self.nodes.push(Node::Split { feature, threshold, right: 0 });
        rows.sort_by_key(|&i| self.x[i][feature] > threshold);
        let n_left = rows.iter().filter(|&&i| self.x[i][feature] <= threshold).count();
        let (l, r) = rows.split_at_mut(n_left);
        self.build(l, depth + 1);
        let right_at = self.nodes.len();
        if let Node::Split { right, .. } = &mut self.nodes[at] {
            *right = right_at;
        }
        self.build(r, depth + 1);
    }
}

/// Greedy CART fit minimizing weighted Gini impurity. Thresholds are midpoints
/// between consecutive distinct values; rows with `x[f] <= threshold` go
/// left. Ties go to the lowest feature index, then the lowest threshold.
pub fn fit_tree(x: &[Vec<f64>], y: &[Transition], cfg: &TreeConfig) -> Result<DecisionTree> {
    cfg.validate()?;
    let d = check_dataset(x, y)?;
    let mut rows: Vec<usize> = (0..x.len()).collect();
    fit_rows(x, y, &mut rows, d, cfg)
}

fn fit_rows(x: &[Vec<f64>], y: &[Transition], rows: &mut [usize], d: usize, cfg: &TreeConfig) -> Result<DecisionTree> {
    let mut b = Builder {
        x,
        y,
        cfg: *cfg,
        nodes: Vec::new(),
    };
    b.build(rows, 0);
    Ok(DecisionTree {
        n_features: d,
        nodes: b.nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    /// Plurality vote of the trees, ties to the first label.
    pub fn predict(&self, x: &[f64]) -> Result<Transition> {
        let mut votes = [0usize; N_TRANSITIONS];
        for t in &self.trees {
            votes[t.predict(x)?.index()] += 1;
        }
        Ok(majority(&votes))
    }
}

/// Bagged ensemble: tree `k` is fit on a bootstrap sample drawn from a
/// generator seeded with `seed + k`. Trees are fit in parallel.
pub fn fit_forest(x: &[Vec<f64>], y: &[Transition], cfg: &TreeConfig, n_trees: usize, seed: u64) -> Result<Forest> {
    cfg.validate()?;
    let d = check_dataset(x, y)?;
    if n_trees == 0 {
        return Err(Error::Config("a forest needs at least one tree".into()));
    }
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(seed.wrapping_add(k as u64));
            let mut rows: Vec<usize> = (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect();
            fit_rows(x, y, &mut rows, d, cfg)
        })
        .collect::<Result<_>>()?;
    Ok(Forest { trees })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Tree(DecisionTree),
    Forest(Forest),
}

impl Classifier {
    pub fn predict(&self, x: &[f64]) -> Result<Transition> {
        match self {
            Classifier::Tree(t) => t.predict(x),
            Classifier::Forest(f) => f.predict(x),
        }
    }

    fn trees(&self) -> &[DecisionTree] {
        match self {
            Classifier::Tree(t) => std::slice::from_ref(t),
            Classifier::Forest(f) => &f.trees,
        }
    }
}

pub const MODEL_MAGIC: &str = "roadgrowth-model";
pub const MODEL_VERSION: u32 = 1;

/// A fitted transition classifier bound to the feature layout it was trained
/// on.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthModel {
    pub layout: FeatureLayout,
    pub classifier: Classifier,
}

impl GrowthModel {
    pub fn new(layout: FeatureLayout, classifier: Classifier) -> Result<Self> {
        for t in classifier.trees() {
            if t.n_features != layout.len() {
                return Err(Error::DimensionMismatch(format!(
                    "tree over {} features for a layout of {}",
                    t.n_features,
                    layout.len()
                )));
            }
        }
        Ok(Self { layout, classifier })
    }

    /// Fails unless `layout` matches the training layout.
    pub fn check_layout(&self, layout: &FeatureLayout) -> Result<()> {
        if layout.hash() != self.layout.hash() {
            return Err(Error::Validation(format!(
                "feature layout {} does not match the model's {}",
                layout.describe(),
                self.layout.describe()
            )));
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Transition> {
        self.classifier.predict(x)
    }

    /// Versioned text form: header, layout line, then every tree as a
    /// pre-order node list (`S feature threshold` or `L c0 c1 c2 c3`).
    pub fn to_text(&self) -> String {
        let l = &self.layout;
        let mut s = format!("{MODEL_MAGIC} {MODEL_VERSION}\n");
        let _ = writeln!(
            s,
            "layout radius={} raster={} road={} hash={:016x}",
            l.radius,
            l.raster_len,
            l.road_len,
            l.hash()
        );
        let kind = match &self.classifier {
            Classifier::Tree(_) => "tree",
            Classifier::Forest(_) => "forest",
        };
        let trees = self.classifier.trees();
        let _ = writeln!(s, "{kind} {}", trees.len());
        for t in trees {
            let _ = writeln!(s, "nodes {}", t.nodes.len());
            for n in &t.nodes {
                match n {
                    Node::Split { feature, threshold, .. } => {
                        let _ = writeln!(s, "S {feature} {threshold}");
                    }
                    Node::Leaf { counts } => {
                        let _ = writeln!(s, "L {} {} {} {}", counts[0], counts[1], counts[2], counts[3]);
                    }
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(text.lines().count() + 1, format!("missing {what}")))
        };
        let (ln, header) = next("header")?;
        if header != format!("{MODEL_MAGIC} {MODEL_VERSION}") {
            return Err(Error::parse(ln, format!("unsupported model header {header:?}")));
        }

        let (ln, layout_line) = next("layout")?;
        let mut fields = layout_line.split_whitespace();
        if fields.next() != Some("layout") {
            return Err(Error::parse(ln, "expected a layout line"));
        }
        let mut kv = std::collections::BTreeMap::new();
        for f in fields {
            let (k, v) = f.split_once('=').ok_or_else(|| Error::parse(ln, format!("bad field {f:?}")))?;
            kv.insert(k, v);
        }
        let num = |k: &str| -> Result<usize> {
            kv.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(ln, format!("missing or invalid {k}")))
        };
        let layout = FeatureLayout {
            radius: num("radius")?,
            raster_len: num("raster")?,
            road_len: num("road")?,
        };
        let stored = kv.get("hash").ok_or_else(|| Error::parse(ln, "missing hash"))?;
        if *stored != format!("{:016x}", layout.hash()) {
            return Err(Error::parse(ln, format!("layout hash {stored} does not match the layout")));
        }

        let (ln, kind_line) = next("classifier line")?;
        let (kind, count) = kind_line
            .split_once(' ')
            .and_then(|(k, c)| Some((k, c.parse::<usize>().ok()?)))
            .ok_or_else(|| Error::parse(ln, "expected `tree 1` or `forest <n>`"))?;
        if (kind == "tree" && count != 1) || (kind != "tree" && kind != "forest") || count == 0 {
            return Err(Error::parse(ln, format!("bad classifier line {kind_line:?}")));
        }

        let mut trees = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, nodes_line) = next("node count")?;
            let n_nodes: usize = nodes_line
                .strip_prefix("nodes ")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(ln, "expected `nodes <n>`"))?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let (ln, line) = next("node")?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                let node = match toks.as_slice() {
                    ["S", f, t] => Node::Split {
                        feature: f.parse().map_err(|_| Error::parse(ln, "bad feature index"))?,
                        threshold: t.parse().map_err(|_| Error::parse(ln, "bad threshold"))?,
                        right: 0,
                    },
                    ["L", c @ ..] if c.len() == N_TRANSITIONS => {
                        let mut counts = [0; N_TRANSITIONS];
                        for (dst, v) in counts.iter_mut().zip(c) {
                            *dst = v.parse().map_err(|_| Error::parse(ln, "bad leaf count"))?;
                        }
                        Node::Leaf { counts }
                    }
                    _ => return Err(Error::parse(ln, format!("bad node line {line:?}"))),
                };
                nodes.push(node);
            }
            link_preorder(&mut nodes, ln)?;
            trees.push(DecisionTree::from_nodes(layout.len(), nodes)?);
        }
        if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(ln, format!("unexpected data {extra:?}")));
        }
        let classifier = if kind == "tree" {
            Classifier::Tree(trees.pop().expect("one tree"))
        } else {
            Classifier::Forest(Forest { trees })
        };
        GrowthModel::new(layout, classifier)
    }
}

/// Fills in right-child indices of a pre-order node list.
fn link_preorder(nodes: &mut [Node], line: usize) -> Result<()> {
    fn walk(nodes: &mut [Node], i: usize, line: usize) -> Result<usize> {
        match nodes.get(i) {
            None => Err(Error::parse(line, "truncated tree")),
            Some(Node::Leaf { .. }) => Ok(i + 1),
            Some(Node::Split { .. }) => {
                let r = walk(nodes, i + 1, line)?;
                if let Node::Split { right, .. } = &mut nodes[i] {
                    *right = r;
                }
                walk(nodes, r, line)
            }
        }
    }
    let end = walk(nodes, 0, line)?;
    if end != nodes.len() {
        return Err(Error::parse(line, "tree has unreachable nodes"));
    }
    Ok(())
}

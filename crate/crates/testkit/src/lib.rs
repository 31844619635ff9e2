//! Slow, independent reference implementations used only by tests.
//!
//! Nothing here shares code with the paths it checks: clipping, PBR
//! extraction, metric counting, LSTM steps and tree traversal are all
//! re-derived from their definitions.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roadgrowth_core::nn::Parameters;
use roadgrowth_core::{BuiltupGrid, GeoCoord, GeoTransform, Land, Polyline, RoadNetwork};

/// Random grid (at most `max_side` cells a side) with up to `max_roads`
/// random polylines inside its extent. About a third of the vertices are
/// snapped to cell edges or corners.
pub fn random_road_scenario(seed: u64, max_side: usize, max_roads: usize) -> (GeoTransform, RoadNetwork) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.gen_range(1..=max_side);
    let cols = rng.gen_range(1..=max_side);
    let cell = [1.0, 0.5, 30.0][rng.gen_range(0..3)];
    let gt = GeoTransform::new(1000.0, 5000.0, cell, cell, rows, cols).expect("valid transform");
    let n_roads = rng.gen_range(0..=max_roads);
    let mut lines = Vec::with_capacity(n_roads);
    while lines.len() < n_roads {
        let n = rng.gen_range(2..10);
        let pts: Vec<GeoCoord> = (0..n)
            .map(|_| {
                let mut u = rng.gen_range(0.0..cols as f64);
                let mut v = rng.gen_range(0.0..rows as f64);
                if rng.gen_bool(0.35) {
                    u = u.round();
                    v = if rng.gen_bool(0.5) { v.round() } else { v };
                }
                GeoCoord::new(gt.origin_x + u * cell, gt.origin_y - v * cell)
            })
            .collect();
        if let Ok(line) = Polyline::new(pts) {
            lines.push(line);
        }
    }
    (gt, RoadNetwork::from_polylines(lines))
}

/// Axis-aligned box as `(min_x, min_y, max_x, max_y)`.
pub type Rect = (f64, f64, f64, f64);

/// Box of the `(2r+1)^2` window around `(row, col)`, truncated at the grid
/// border, computed from the transform fields directly.
pub fn window_rect(gt: &GeoTransform, row: usize, col: usize, r: usize) -> Rect {
    let r0 = row.saturating_sub(r);
    let r1 = (row + r).min(gt.n_rows - 1);
    let c0 = col.saturating_sub(r);
    let c1 = (col + r).min(gt.n_cols - 1);
    (
        gt.origin_x + c0 as f64 * gt.pixel_w,
        gt.origin_y - (r1 + 1) as f64 * gt.pixel_h,
        gt.origin_x + (c1 + 1) as f64 * gt.pixel_w,
        gt.origin_y - r0 as f64 * gt.pixel_h,
    )
}

/// Visible parameter interval of `a -> b` inside `rect`, found by clipping
/// against one half-plane at a time.
pub fn visible_interval(a: (f64, f64), b: (f64, f64), rect: Rect) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let d = (b.0 - a.0, b.1 - a.1);
    // each constraint: value(t) = start + t * slope >= 0
    let constraints = [
        (a.0 - rect.0, d.0),
        (rect.2 - a.0, -d.0),
        (a.1 - rect.1, d.1),
        (rect.3 - a.1, -d.1),
    ];
    for (start, slope) in constraints {
        if slope == 0.0 {
            if start < 0.0 {
                return None;
            }
        } else {
            let t = -start / slope;
            if slope > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

fn lerp_clamped(a: (f64, f64), b: (f64, f64), t: f64, rect: Rect) -> (f64, f64) {
    if t <= 0.0 {
        a
    } else if t >= 1.0 {
        b
    } else {
        (
            (a.0 + t * (b.0 - a.0)).clamp(rect.0, rect.2),
            (a.1 + t * (b.1 - a.1)).clamp(rect.1, rect.3),
        )
    }
}

/// Maximal runs of a polyline inside `rect`. A run continues across a
/// vertex only when the segment before it leaves at its end and the next
/// one enters at its start. Single-point runs are dropped.
pub fn clip_runs(points: &[(f64, f64)], rect: Rect) -> Vec<Vec<(f64, f64)>> {
    let mut runs = Vec::new();
    let mut cur: Vec<(f64, f64)> = Vec::new();
    let mut open = false;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        match visible_interval(a, b, rect) {
            None => {
                runs.push(std::mem::take(&mut cur));
                open = false;
            }
            Some((t0, t1)) => {
                if !(open && t0 <= 0.0) {
                    runs.push(std::mem::take(&mut cur));
                    cur.push(lerp_clamped(a, b, t0, rect));
                }
                let exit = lerp_clamped(a, b, t1, rect);
                if cur.last() != Some(&exit) {
                    cur.push(exit);
                }
                open = t1 >= 1.0;
            }
        }
    }
    runs.push(cur);
    runs.retain(|r| r.len() >= 2);
    runs
}

/// Euclidean length of the parts of a polyline inside `rect`, computed by
/// cutting every segment at its crossings with the four box lines and
/// keeping the sub-segments whose midpoint lies inside.
pub fn inside_length(points: &[(f64, f64)], rect: Rect) -> f64 {
    let mut total = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut ts = vec![0.0, 1.0];
        for (v0, v1, line) in [(a.0, b.0, rect.0), (a.0, b.0, rect.2), (a.1, b.1, rect.1), (a.1, b.1, rect.3)] {
            if v1 != v0 {
                let t = (line - v0) / (v1 - v0);
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        let seg_len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        for k in ts.windows(2) {
            let m = (k[0] + k[1]) / 2.0;
            let (x, y) = (a.0 + m * (b.0 - a.0), a.1 + m * (b.1 - a.1));
            if x >= rect.0 && x <= rect.2 && y >= rect.1 && y <= rect.3 {
                total += (k[1] - k[0]) * seg_len;
            }
        }
    }
    total
}

pub fn polyline_length(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .sum()
}

fn xy(c: &GeoCoord) -> (f64, f64) {
    (c.x, c.y)
}

/// Fragment sequences of every pixel without any spatial index: every road
/// is clipped against every pixel's window. Keys are `(row, col)`.
pub fn brute_force_pbr(
    roads: &RoadNetwork,
    gt: &GeoTransform,
    radius: usize,
    max_len: usize,
) -> BTreeMap<(usize, usize), Vec<Vec<(f64, f64)>>> {
    let mut out = BTreeMap::new();
    for row in 0..gt.n_rows {
        for col in 0..gt.n_cols {
            let rect = window_rect(gt, row, col, radius);
            let mut seqs = Vec::new();
            for road in roads.roads() {
                let pts: Vec<(f64, f64)> = road.geometry.points().iter().map(xy).collect();
                for mut run in clip_runs(&pts, rect) {
                    run.truncate(max_len);
                    seqs.push(run);
                }
            }
            if !seqs.is_empty() {
                out.insert((row, col), seqs);
            }
        }
    }
    out
}

/// Compares two sets of sequences up to ordering, matching coordinates
/// within `tol`. Returns a description of the first difference.
pub fn same_sequence_sets(a: &[Vec<(f64, f64)>], b: &[Vec<(f64, f64)>], tol: f64) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("{} sequences vs {}", a.len(), b.len()));
    }
    let close = |s: &Vec<(f64, f64)>, t: &Vec<(f64, f64)>| {
        s.len() == t.len()
            && s.iter()
                .zip(t)
                .all(|(p, q)| (p.0 - q.0).abs() <= tol && (p.1 - q.1).abs() <= tol)
    };
    let mut used = vec![false; b.len()];
    for s in a {
        match (0..b.len()).find(|&j| !used[j] && close(s, &b[j])) {
            Some(j) => used[j] = true,
            None => return Err(format!("no match for sequence {s:?}")),
        }
    }
    Ok(())
}

/// Checks the defining properties of a digital line from `p` to `q`:
/// correct endpoints, one cell per step along the major axis, 8-connected
/// steps, and every cell within half a cell of the ideal line along the
/// minor axis.
pub fn check_digital_line(p: (i64, i64), q: (i64, i64), cells: &[(i64, i64)]) -> Result<(), String> {
    let (dr, dc) = (q.0 - p.0, q.1 - p.1);
    let n = dr.abs().max(dc.abs());
    if cells.len() as i64 != n + 1 {
        return Err(format!("{} cells for a line of {} steps", cells.len(), n));
    }
    if cells.first() != Some(&p) || cells.last() != Some(&q) {
        return Err("endpoints differ".into());
    }
    for w in cells.windows(2) {
        if (w[1].0 - w[0].0).abs() > 1 || (w[1].1 - w[0].1).abs() > 1 || w[0] == w[1] {
            return Err(format!("step {:?} -> {:?} is not an 8-connected move", w[0], w[1]));
        }
    }
    for (k, &(r, c)) in cells.iter().enumerate() {
        let t = if n == 0 { 0.0 } else { k as f64 / n as f64 };
        let (ir, ic) = (p.0 as f64 + t * dr as f64, p.1 as f64 + t * dc as f64);
        let (er, ec) = ((r as f64 - ir).abs(), (c as f64 - ic).abs());
        if er > 0.5 + 1e-9 || ec > 0.5 + 1e-9 {
            return Err(format!("cell ({r}, {c}) is {er:.3}/{ec:.3} away from the ideal line"));
        }
    }
    Ok(())
}

/// Cells `(row, col)` met by sampling the ideal segment between two cell
/// centres every `step` cells. A sample exactly on a cell boundary counts for
/// both neighbours.
pub fn dense_sample_cells(p: (i64, i64), q: (i64, i64), step: f64) -> std::collections::BTreeSet<(i64, i64)> {
    let (dr, dc) = ((q.0 - p.0) as f64, (q.1 - p.1) as f64);
    let n = ((dr.abs().max(dc.abs())) / step).ceil().max(1.0) as usize;
    let mut out = std::collections::BTreeSet::new();
    let candidates = |v: f64| -> Vec<i64> {
        let f = (v + 0.5).floor();
        if (v + 0.5 - f).abs() < 1e-9 {
            vec![f as i64 - 1, f as i64]
        } else {
            vec![f as i64]
        }
    };
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let (r, c) = (p.0 as f64 + t * dr, p.1 as f64 + t * dc);
        for rr in candidates(r) {
            for cc in candidates(c) {
                out.insert((rr, cc));
            }
        }
    }
    out
}

/// Cells `(row, col)` of a grid whose closed box contains some sample of
/// the segment `a -> b` (map coordinates), sampled every `step` map units.
pub fn dense_sample_cover(gt: &GeoTransform, a: (f64, f64), b: (f64, f64), step: f64) -> std::collections::BTreeSet<(usize, usize)> {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let n = (len / step).ceil().max(1.0) as usize;
    let mut out = std::collections::BTreeSet::new();
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let u = (a.0 + t * (b.0 - a.0) - gt.origin_x) / gt.pixel_w;
        let v = (gt.origin_y - (a.1 + t * (b.1 - a.1))) / gt.pixel_h;
        let col = (u.floor().max(0.0) as usize).min(gt.n_cols - 1);
        let row = (v.floor().max(0.0) as usize).min(gt.n_rows - 1);
        out.insert((row, col));
    }
    out
}

/// Three aligned built-up maps with random states; the built-up rate and the
/// no-data rate are drawn per map so that degenerate cases (no change, all
/// change, no valid cells) show up.
pub fn random_builtup_triple(seed: u64, rows: usize, cols: usize) -> [BuiltupGrid; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gt = GeoTransform::new(0.0, rows as f64, 1.0, 1.0, rows, cols).expect("valid transform");
    [0, 1, 2].map(|_| {
        let p_built = [0.0, 0.1, 0.5, 0.9, 1.0][rng.gen_range(0..5)];
        let p_nodata = [0.0, 0.0, 0.05, 1.0][rng.gen_range(0..4)];
        let cells = (0..gt.n_cells())
            .map(|_| {
                if rng.gen_bool(p_nodata) {
                    Land::NoData
                } else {
                    Land::from_bool(rng.gen_bool(p_built))
                }
            })
            .collect();
        BuiltupGrid::new(gt, cells).expect("matching size")
    })
}

/// `[A, B, C, D, E]` by a plain double loop over rows and columns.
pub fn count_areas(t0: &BuiltupGrid, t1: &BuiltupGrid, pred: &BuiltupGrid) -> [u64; 5] {
    let gt = t0.transform;
    let mut n = [0u64; 5];
    for row in 0..gt.n_rows {
        for col in 0..gt.n_cols {
            let i = row * gt.n_cols + col;
            let (a, b, p) = (t0.cells()[i], t1.cells()[i], pred.cells()[i]);
            if a == Land::NoData || b == Land::NoData || p == Land::NoData {
                continue;
            }
            let observed = a != b;
            let predicted = a != p;
            let k = match (observed, predicted) {
                (true, false) => 0,
                (true, true) => 1,
                (false, true) => 3,
                (false, false) => 4,
            };
            n[k] += 1;
        }
    }
    n
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest relative error between an analytic gradient and central
/// differences of `loss` over every parameter of `model`.
pub fn max_gradient_error<P, F>(model: &P, analytic: &P, loss: F, h: f64, floor: f64) -> f64
where
    P: Parameters,
    F: Fn(&P) -> f64,
{
    let x = model.flatten();
    let mut probe = model.clone();
    let numeric = central_difference(
        |v| {
            probe.set_flat(v).expect("same length");
            loss(&probe)
        },
        &x,
        h,
    );
    analytic
        .flatten()
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n, floor))
        .fold(0.0, f64::max)
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// LSTM weights in plain nested vectors: `w[g][unit][j]` over `z = [x, h]`,
/// gates ordered forget, input, candidate, output.
#[derive(Debug, Clone)]
pub struct RefLstm {
    pub w: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
}

impl RefLstm {
    /// Builds from the eight flat tensors `w_f, w_i, w_c, w_o, b_f, b_i,
    /// b_c, b_o` with `hidden` units over `z_len` inputs.
    pub fn from_flat(tensors: &[&[f64]], hidden: usize, z_len: usize) -> Self {
        assert_eq!(tensors.len(), 8);
        let w = (0..4)
            .map(|g| (0..hidden).map(|u| tensors[g][u * z_len..(u + 1) * z_len].to_vec()).collect())
            .collect();
        let b = (4..8).map(|g| tensors[g].to_vec()).collect();
        Self { w, b }
    }

    pub fn step(&self, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z: Vec<f64> = x.iter().chain(h).copied().collect();
        let n = self.b[0].len();
        let mut h_new = vec![0.0; n];
        let mut c_new = vec![0.0; n];
        for u in 0..n {
            let pre = |g: usize| self.b[g][u] + (0..z.len()).map(|j| self.w[g][u][j] * z[j]).sum::<f64>();
            let f = logistic(pre(0));
            let i = logistic(pre(1));
            let g = pre(2).tanh();
            let o = logistic(pre(3));
            c_new[u] = f * c[u] + i * g;
            h_new[u] = o * c_new[u].tanh();
        }
        (h_new, c_new)
    }

    /// Hidden states of a run from the zero state.
    pub fn run(&self, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.b[0].len();
        let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
        inputs
            .iter()
            .map(|x| {
                let (h2, c2) = self.step(x, &h, &c);
                h = h2;
                c = c2;
                h.clone()
            })
            .collect()
    }
}

/// Scalar sequence autoencoder assembled from reference parts: encoder run,
/// dense bridge with bias, decoder fed the bridged code at every step, and a
/// bias-free scalar readout.
#[derive(Debug, Clone)]
pub struct RefAutoencoder {
    pub encoder: RefLstm,
    pub bridge_w: Vec<Vec<f64>>,
    pub bridge_b: Vec<f64>,
    pub decoder: RefLstm,
    pub readout_w: Vec<f64>,
}

impl RefAutoencoder {
    /// From the model's flat tensor list: 8 encoder tensors, bridge weight
    /// and bias, 8 decoder tensors, readout weight.
    pub fn from_flat(t: &[&[f64]], n: usize) -> Self {
        assert_eq!(t.len(), 19);
        Self {
            encoder: RefLstm::from_flat(&t[0..8], n, 1 + n),
            bridge_w: (0..n).map(|u| t[8][u * n..(u + 1) * n].to_vec()).collect(),
            bridge_b: t[9].to_vec(),
            decoder: RefLstm::from_flat(&t[10..18], n, 2 * n),
            readout_w: t[18].to_vec(),
        }
    }

    pub fn encode(&self, seq: &[f64]) -> Vec<f64> {
        let inputs: Vec<Vec<f64>> = seq.iter().map(|&v| vec![v]).collect();
        self.encoder.run(&inputs).pop().expect("non-empty sequence")
    }

    pub fn decode(&self, code: &[f64], len: usize) -> Vec<f64> {
        let bridged: Vec<f64> = self
            .bridge_w
            .iter()
            .zip(&self.bridge_b)
            .map(|(row, b)| b + row.iter().zip(code).map(|(w, x)| w * x).sum::<f64>())
            .collect();
        self.decoder
            .run(&vec![bridged; len])
            .iter()
            .map(|h| h.iter().zip(&self.readout_w).map(|(a, w)| a * w).sum())
            .collect()
    }

    pub fn loss(&self, seq: &[f64]) -> f64 {
        let rec = self.decode(&self.encode(seq), seq.len());
        rec.iter().zip(seq).map(|(r, s)| (r - s).powi(2)).sum::<f64>() / seq.len() as f64
    }
}

/// Parsed model file: one node list per tree.
#[derive(Debug, Clone, PartialEq)]
pub enum TextNode {
    Split(usize, f64),
    Leaf([usize; 4]),
}

/// Reads the tree lists of a serialized growth model, ignoring the header
/// and layout lines.
pub fn parse_model_trees(text: &str) -> Vec<Vec<TextNode>> {
    let mut trees = Vec::new();
    for line in text.lines().skip(3) {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f[0] {
            "nodes" => trees.push(Vec::new()),
            "S" => trees
                .last_mut()
                .expect("node before list")
                .push(TextNode::Split(f[1].parse().unwrap(), f[2].parse().unwrap())),
            "L" => {
                let c = [1, 2, 3, 4].map(|k| f[k].parse().unwrap());
                trees.last_mut().expect("node before list").push(TextNode::Leaf(c));
            }
            other => panic!("unexpected line {other:?}"),
        }
    }
    trees
}

/// Walks a pre-order node list recursively: the left subtree starts right
/// after a split and the right subtree after the whole left subtree.
/// Returns the leaf counts reached by `x`.
pub fn walk_preorder(nodes: &[TextNode], x: &[f64]) -> [usize; 4] {
    fn subtree_end(nodes: &[TextNode], i: usize) -> usize {
        match nodes[i] {
            TextNode::Leaf(_) => i + 1,
            TextNode::Split(..) => subtree_end(nodes, subtree_end(nodes, i + 1)),
        }
    }
    let mut i = 0;
    loop {
        match nodes[i] {
            TextNode::Leaf(c) => return c,
            TextNode::Split(f, t) => {
                i = if x[f] <= t { i + 1 } else { subtree_end(nodes, i + 1) };
            }
        }
    }
}

/// Label index with the most votes, ties to the lowest index.
pub fn argmax_first(counts: &[usize; 4]) -> usize {
    let mut best = 0;
    for k in 1..4 {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    best
}

/// Prediction of a serialized model: majority of the reached leaf for one
/// tree, plurality of the trees' majorities for a forest.
pub fn predict_from_text(trees: &[Vec<TextNode>], x: &[f64]) -> usize {
    let mut votes = [0usize; 4];
    for t in trees {
        votes[argmax_first(&walk_preorder(t, x))] += 1;
    }
    argmax_first(&votes)
}

/// Weighted Gini impurity of a split given label lists.
fn gini(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let n = labels.len() as f64;
    let mut c = [0usize; 4];
    for &l in labels {
        c[l] += 1;
    }
    1.0 - c.iter().map(|&k| (k as f64 / n).powi(2)).sum::<f64>()
}

/// Lowest weighted child impurity over every feature and every midpoint
/// between consecutive distinct values, with the first such split in
/// (feature, threshold) order. `None` if no feature has two values.
pub fn best_split_exhaustive(x: &[Vec<f64>], y: &[usize]) -> Option<(usize, f64, f64)> {
    let n = y.len() as f64;
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = {
                let mut l = Vec::new();
                let mut r = Vec::new();
                for (row, &lab) in x.iter().zip(y) {
                    if row[f] <= thr {
                        l.push(lab);
                    } else {
                        r.push(lab);
                    }
                }
                (l, r)
            };
            let score = (l.len() as f64 * gini(&l) + r.len() as f64 * gini(&r)) / n;
            if best.is_none_or(|(_, _, s)| score < s - 1e-12) {
                best = Some((f, thr, score));
            }
        }
    }
    best
}

/// Every depth-limited tree over the given candidate thresholds, searched
/// exhaustively; returns the best training accuracy reachable at `depth`.
pub fn best_accuracy_at_depth(x: &[Vec<f64>], y: &[usize], depth: usize) -> f64 {
    fn majority_hits(idx: &[usize], y: &[usize]) -> usize {
        let mut c = [0usize; 4];
        for &i in idx {
            c[y[i]] += 1;
        }
        c.into_iter().max().unwrap_or(0)
    }
    fn search(x: &[Vec<f64>], y: &[usize], idx: &[usize], depth: usize) -> usize {
        let mut best = majority_hits(idx, y);
        if depth == 0 {
            return best;
        }
        for f in 0..x[0].len() {
            let mut vals: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let thr = (w[0] + w[1]) / 2.0;
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= thr);
                best = best.max(search(x, y, &l, depth - 1) + search(x, y, &r, depth - 1));
            }
        }
        best
    }
    let idx: Vec<usize> = (0..y.len()).collect();
    search(x, y, &idx, depth) as f64 / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_of_crossing_segment() {
        let (t0, t1) = visible_interval((-1.0, 0.5), (2.0, 0.5), (0.0, 0.0, 1.0, 1.0)).unwrap();
        assert!((t0 - 1.0 / 3.0).abs() < 1e-12 && (t1 - 2.0 / 3.0).abs() < 1e-12);
        assert!(visible_interval((2.0, 2.0), (3.0, 3.0), (0.0, 0.0, 1.0, 1.0)).is_none());
    }

    #[test]
    fn runs_split_on_reentry() {
        let pts = [(-0.5, 0.5), (0.5, 0.5), (0.5, 1.5), (0.7, 1.5), (0.7, 0.2)];
        let runs = clip_runs(&pts, (0.0, 0.0, 1.0, 1.0));
        assert_eq!(runs, vec![vec![(0.0, 0.5), (0.5, 0.5), (0.5, 1.0)], vec![(0.7, 1.0), (0.7, 0.2)]]);
    }

    #[test]
    fn inside_length_of_diagonal() {
        let l = inside_length(&[(-1.0, -1.0), (2.0, 2.0)], (0.0, 0.0, 1.0, 1.0));
        assert!((l - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn digital_line_checker() {
        assert!(check_digital_line((0, 0), (1, 2), &[(0, 0), (0, 1), (1, 2)]).is_ok());
        assert!(check_digital_line((0, 0), (0, 2), &[(0, 0), (1, 1), (0, 2)]).is_err());
    }

    #[test]
    fn xor_needs_two_levels() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 2, 2, 0];
        assert_eq!(best_accuracy_at_depth(&x, &y, 1), 0.5);
        assert_eq!(best_accuracy_at_depth(&x, &y, 2), 1.0);
    }

    #[test]
    fn finite_difference_of_quadratic() {
        let g = central_difference(|v| v[0] * v[0] + 3.0 * v[1], &[2.0, 5.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }
}

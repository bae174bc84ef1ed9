//! Unit-capacity min-cost flow over split-node detection graphs.
//!
//! Node numbering: source `0`, sink `2N + 1`, and for graph detection
//! `k in 1..=N` a pre-node `2k - 1` and a post-node `2k` joined by the
//! observation edge. Enter edges leave the source, exit edges reach the sink,
//! and transition edges run from `post(i)` to `pre(j)` with `frame(j) > frame(i)`.
//!
//! [`solve_mcf`] runs successive shortest paths with node potentials and
//! keeps augmenting while the cheapest residual path has negative cost, so
//! the number of trajectories falls out of the costs. [`brute_force_mcf`]
//! enumerates every feasible path set and exists as an oracle for tests.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::mask::Tracklet;
use crate::model::Window;

/// Real costs are compared as integers after multiplying by this factor.
pub const COST_SCALE: f64 = 1e6;

pub fn scale_cost(cost: f64) -> i64 {
    (cost * COST_SCALE).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Enter,
    Observation,
    Transition,
    Exit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
    pub capacity: u32,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Default)]
pub struct FlowGraph {
    frames: Vec<u32>,
    labels: Vec<usize>,
    edges: Vec<Edge>,
}

pub const SOURCE: usize = 0;

pub fn pre_node(k: usize) -> usize {
    2 * k - 1
}

pub fn post_node(k: usize) -> usize {
    2 * k
}

/// Detection number owning a detection node id (either half).
pub fn detection_of(node: usize) -> usize {
    node.div_ceil(2)
}

impl FlowGraph {
    /// Graph over `frames.len()` detections labelled `1..=N`.
    pub fn new(frames: Vec<u32>) -> Self {
        let labels = (1..=frames.len()).collect();
        Self {
            frames,
            labels,
            edges: Vec::new(),
        }
    }

    /// Graph whose detection `k` stands for window detection `labels[k - 1]`.
    pub fn with_labels(frames: Vec<u32>, labels: Vec<usize>) -> Result<Self> {
        if frames.len() != labels.len() {
            return Err(Error::MalformedGraph(format!(
                "{} frames but {} labels",
                frames.len(),
                labels.len()
            )));
        }
        Ok(Self {
            frames,
            labels,
            edges: Vec::new(),
        })
    }

    pub fn n_detections(&self) -> usize {
        self.frames.len()
    }

    pub fn n_nodes(&self) -> usize {
        2 * self.n_detections() + 2
    }

    pub fn sink(&self) -> usize {
        2 * self.n_detections() + 1
    }

    pub fn frames(&self) -> &[u32] {
        &self.frames
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn frame_of(&self, k: usize) -> u32 {
        self.frames[k - 1]
    }

    pub fn label_of(&self, k: usize) -> usize {
        self.labels[k - 1]
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    /// Appends an edge as-is. Structural checks happen in [`FlowGraph::validate`].
    pub fn push_edge(&mut self, edge: Edge) {
        self.edges.push(edge);
    }

    fn push(&mut self, from: usize, to: usize, cost: f64, kind: EdgeKind) {
        self.edges.push(Edge {
            from,
            to,
            cost,
            capacity: 1,
            kind,
        });
    }

    pub fn add_enter(&mut self, k: usize, cost: f64) {
        self.push(SOURCE, pre_node(k), cost, EdgeKind::Enter);
    }

    pub fn add_observation(&mut self, k: usize, cost: f64) {
        self.push(pre_node(k), post_node(k), cost, EdgeKind::Observation);
    }

    pub fn add_exit(&mut self, k: usize, cost: f64) {
        let sink = self.sink();
        self.push(post_node(k), sink, cost, EdgeKind::Exit);
    }

    pub fn add_transition(&mut self, from: usize, to: usize, cost: f64) {
        self.push(post_node(from), pre_node(to), cost, EdgeKind::Transition);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_detections();
        let sink = self.sink();
        let bad = |msg: String| Err(Error::MalformedGraph(msg));
        let is_pre = |v: usize| v >= 1 && v < sink && !v.is_multiple_of(2);
        let is_post = |v: usize| v >= 2 && v < sink && v.is_multiple_of(2);
        let mut seen = HashSet::new();
        let mut observations = vec![0usize; n + 1];
        for e in &self.edges {
            if e.capacity != 1 {
                return bad(format!(
                    "edge {}->{} has capacity {}",
                    e.from, e.to, e.capacity
                ));
            }
            if !e.cost.is_finite() {
                return bad(format!("edge {}->{} has non-finite cost", e.from, e.to));
            }
            if e.from > sink || e.to > sink {
                return bad(format!("edge {}->{} references unknown node", e.from, e.to));
            }
            if !seen.insert((e.from, e.to)) {
                return bad(format!("duplicate edge {}->{}", e.from, e.to));
            }
            let ok = match e.kind {
                EdgeKind::Enter => e.from == SOURCE && is_pre(e.to),
                EdgeKind::Exit => is_post(e.from) && e.to == sink,
                EdgeKind::Observation => is_pre(e.from) && e.to == e.from + 1,
                EdgeKind::Transition => {
                    is_post(e.from)
                        && is_pre(e.to)
                        && self.frame_of(detection_of(e.to)) > self.frame_of(detection_of(e.from))
                }
            };
            if !ok {
                return bad(format!(
                    "{:?} edge {}->{} has wrong endpoints",
                    e.kind, e.from, e.to
                ));
            }
            if e.kind == EdgeKind::Observation {
                observations[detection_of(e.from)] += 1;
            }
        }
        if let Some(k) = (1..=n).find(|&k| observations[k] != 1) {
            return bad(format!(
                "detection {k} has no observation edge (dangling node)"
            ));
        }
        Ok(())
    }

    fn edge_costs(&self) -> HashMap<(usize, usize), f64> {
        self.edges
            .iter()
            .map(|e| ((e.from, e.to), e.cost))
            .collect()
    }

    /// Source, then detections in `(frame, k)` order as pre/post pairs, then sink.
    fn topological_order(&self) -> Vec<usize> {
        let mut dets: Vec<usize> = (1..=self.n_detections()).collect();
        dets.sort_by_key(|&k| (self.frame_of(k), k));
        let mut order = Vec::with_capacity(self.n_nodes());
        order.push(SOURCE);
        for k in dets {
            order.push(pre_node(k));
            order.push(post_node(k));
        }
        order.push(self.sink());
        order
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowResult {
    /// Source-to-sink node paths, in the order their enter edge was first used.
    pub paths: Vec<Vec<usize>>,
    pub total_cost: f64,
    /// Total cost in units of `1 / COST_SCALE`.
    pub scaled_cost: i64,
    /// Scaled cost of each augmenting path, in augmentation order.
    pub augmentations: Vec<i64>,
}

const INF: i64 = i64::MAX / 4;

struct Residual {
    to: Vec<usize>,
    cap: Vec<u8>,
    cost: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn new(g: &FlowGraph) -> Self {
        let m = g.edges.len();
        let mut r = Self {
            to: Vec::with_capacity(2 * m),
            cap: Vec::with_capacity(2 * m),
            cost: Vec::with_capacity(2 * m),
            adj: vec![Vec::new(); g.n_nodes()],
        };
        for e in &g.edges {
            let c = scale_cost(e.cost);
            r.adj[e.from].push(r.to.len());
            r.to.push(e.to);
            r.cap.push(1);
            r.cost.push(c);
            r.adj[e.to].push(r.to.len());
            r.to.push(e.from);
            r.cap.push(0);
            r.cost.push(-c);
        }
        r
    }
}

/// Minimum-cost flow over all flow volumes by successive shortest paths.
pub fn solve_mcf(g: &FlowGraph) -> Result<FlowResult> {
    g.validate()?;
    let n = g.n_nodes();
    let sink = g.sink();
    let mut r = Residual::new(g);

    // Initial potentials: shortest distances on the DAG in topological order.
    let mut pot = vec![INF; n];
    pot[SOURCE] = 0;
    for u in g.topological_order() {
        if pot[u] == INF {
            continue;
        }
        for &a in &r.adj[u] {
            if r.cap[a] > 0 && pot[u] + r.cost[a] < pot[r.to[a]] {
                pot[r.to[a]] = pot[u] + r.cost[a];
            }
        }
    }
    if pot[sink] == INF {
        return Ok(FlowResult::default());
    }

    let mut dist = vec![INF; n];
    let mut prev_arc = vec![usize::MAX; n];
    let mut enter_step: HashMap<usize, usize> = HashMap::new();
    let mut augmentations = Vec::new();
    loop {
        dist.fill(INF);
        prev_arc.fill(usize::MAX);
        dist[SOURCE] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, SOURCE)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &a in &r.adj[u] {
                let v = r.to[a];
                if r.cap[a] == 0 || pot[v] == INF {
                    continue;
                }
                let reduced = r.cost[a] + pot[u] - pot[v];
                debug_assert!(reduced >= 0, "negative reduced cost {reduced}");
                let nd = d + reduced;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev_arc[v] = a;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        if dist[sink] == INF {
            break;
        }
        let path_cost = dist[sink] + pot[sink] - pot[SOURCE];
        if path_cost >= 0 {
            break;
        }
        let mut v = sink;
        while v != SOURCE {
            let a = prev_arc[v];
            r.cap[a] -= 1;
            r.cap[a ^ 1] += 1;
            v = r.to[a ^ 1];
            if v == SOURCE {
                enter_step.entry(a).or_insert(augmentations.len());
            }
        }
        augmentations.push(path_cost);
        let cutoff = dist[sink];
        for u in 0..n {
            if pot[u] != INF {
                pot[u] += dist[u].min(cutoff);
            }
        }
    }

    // Decode the final flow: rerouting may have changed earlier paths.
    let mut starts: Vec<(usize, usize)> = r.adj[SOURCE]
        .iter()
        .filter(|&&a| a % 2 == 0 && r.cap[a] == 0)
        .map(|&a| (enter_step.get(&a).copied().unwrap_or(usize::MAX), a))
        .collect();
    starts.sort();
    let mut paths = Vec::with_capacity(starts.len());
    for (_, a) in starts {
        let mut path = vec![SOURCE, r.to[a]];
        let mut u = r.to[a];
        while u != sink {
            let next = r.adj[u]
                .iter()
                .find(|&&b| b % 2 == 0 && r.cap[b] == 0)
                .ok_or_else(|| Error::Invariant(format!("flow leaks at node {u}")))?;
            u = r.to[*next];
            path.push(u);
            if path.len() > n + 1 {
                return Err(Error::Invariant("cycle in decoded flow".into()));
            }
        }
        paths.push(path);
    }
    let result = finish(g, paths, augmentations);
    verify_result(g, &result)?;
    Ok(result)
}

fn finish(g: &FlowGraph, paths: Vec<Vec<usize>>, augmentations: Vec<i64>) -> FlowResult {
    let costs = g.edge_costs();
    let mut total_cost = 0.0;
    let mut scaled_cost = 0;
    for p in &paths {
        for w in p.windows(2) {
            let c = costs[&(w[0], w[1])];
            total_cost += c;
            scaled_cost += scale_cost(c);
        }
    }
    FlowResult {
        paths,
        total_cost,
        scaled_cost,
        augmentations,
    }
}

/// Checks path structure, edge existence, node-disjointness and the cost sum.
pub fn verify_result(g: &FlowGraph, r: &FlowResult) -> Result<()> {
    let kinds: HashMap<(usize, usize), (EdgeKind, i64)> = g
        .edges
        .iter()
        .map(|e| ((e.from, e.to), (e.kind, scale_cost(e.cost))))
        .collect();
    let sink = g.sink();
    let mut used = HashSet::new();
    let mut scaled = 0i64;
    for p in &r.paths {
        if p.len() < 4 || p[0] != SOURCE || *p.last().unwrap() != sink || p.len() % 2 != 0 {
            return Err(Error::Invariant(format!("bad path shape {p:?}")));
        }
        for (i, w) in p.windows(2).enumerate() {
            let expected = if i == 0 {
                EdgeKind::Enter
            } else if i == p.len() - 2 {
                EdgeKind::Exit
            } else if i % 2 == 1 {
                EdgeKind::Observation
            } else {
                EdgeKind::Transition
            };
            match kinds.get(&(w[0], w[1])) {
                Some((kind, c)) if *kind == expected => scaled += c,
                _ => {
                    return Err(Error::Invariant(format!(
                        "path {p:?} uses missing or mistyped edge {}->{}",
                        w[0], w[1]
                    )))
                }
            }
        }
        for &v in &p[1..p.len() - 1] {
            if !used.insert(v) {
                return Err(Error::Invariant(format!("node {v} used by two paths")));
            }
        }
    }
    if scaled != r.scaled_cost {
        return Err(Error::Invariant(format!(
            "cost mismatch: paths sum to {scaled}, result says {}",
            r.scaled_cost
        )));
    }
    Ok(())
}

/// Largest graph [`brute_force_mcf`] accepts.
pub const BRUTE_FORCE_CAP: usize = 14;

/// Exhaustive minimum over every set of node-disjoint source-sink paths.
///
/// Ties go to fewer paths, then to the lexicographically smallest sorted path list.
pub fn brute_force_mcf(g: &FlowGraph) -> Result<FlowResult> {
    let n = g.n_detections();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    g.validate()?;
    let mut search = Search::new(g);
    search.dfs(0, 0);
    let (paths, cost) = match search.best {
        Some((cost, _, paths)) => (paths, cost),
        None => (Vec::new(), 0),
    };
    let result = finish(g, paths, Vec::new());
    debug_assert_eq!(result.scaled_cost, cost);
    Ok(result)
}

struct Search {
    n: usize,
    sink: usize,
    order: Vec<usize>,
    enter: Vec<Option<i64>>,
    exit: Vec<Option<i64>>,
    obs: Vec<i64>,
    trans: Vec<Vec<Option<i64>>>,
    used: Vec<bool>,
    pred: Vec<usize>,
    succ: Vec<usize>,
    best: Option<(i64, usize, Vec<Vec<usize>>)>,
}

const NONE: usize = usize::MAX;

impl Search {
    fn new(g: &FlowGraph) -> Self {
        let n = g.n_detections();
        let mut s = Self {
            n,
            sink: g.sink(),
            order: (1..=n).collect(),
            enter: vec![None; n + 1],
            exit: vec![None; n + 1],
            obs: vec![0; n + 1],
            trans: vec![vec![None; n + 1]; n + 1],
            used: vec![false; n + 1],
            pred: vec![NONE; n + 1],
            succ: vec![NONE; n + 1],
            best: None,
        };
        s.order.sort_by_key(|&k| (g.frame_of(k), k));
        for e in &g.edges {
            let c = scale_cost(e.cost);
            match e.kind {
                EdgeKind::Enter => s.enter[detection_of(e.to)] = Some(c),
                EdgeKind::Exit => s.exit[detection_of(e.from)] = Some(c),
                EdgeKind::Observation => s.obs[detection_of(e.from)] = c,
                EdgeKind::Transition => s.trans[detection_of(e.from)][detection_of(e.to)] = Some(c),
            }
        }
        s
    }

    fn dfs(&mut self, pos: usize, cost: i64) {
        if pos == self.n {
            self.evaluate(cost);
            return;
        }
        let k = self.order[pos];
        self.dfs(pos + 1, cost);
        self.used[k] = true;
        if let Some(c) = self.enter[k] {
            self.pred[k] = SOURCE;
            self.dfs(pos + 1, cost + c + self.obs[k]);
        }
        for q in 0..pos {
            let j = self.order[q];
            if !self.used[j] || self.succ[j] != NONE {
                continue;
            }
            if let Some(c) = self.trans[j][k] {
                self.succ[j] = k;
                self.pred[k] = j;
                self.dfs(pos + 1, cost + c + self.obs[k]);
                self.succ[j] = NONE;
            }
        }
        self.used[k] = false;
        self.pred[k] = NONE;
    }

    fn evaluate(&mut self, mut cost: i64) {
        let mut n_paths = 0;
        for k in 1..=self.n {
            if !self.used[k] {
                continue;
            }
            if self.pred[k] == SOURCE {
                n_paths += 1;
            }
            if self.succ[k] == NONE {
                match self.exit[k] {
                    Some(c) => cost += c,
                    None => return,
                }
            }
        }
        if let Some((best_cost, best_paths, _)) = &self.best {
            match (cost, n_paths).cmp(&(*best_cost, *best_paths)) {
                Ordering::Greater => return,
                Ordering::Less => {}
                Ordering::Equal => {
                    let paths = self.paths();
                    if paths >= self.best.as_ref().unwrap().2 {
                        return;
                    }
                    self.best = Some((cost, n_paths, paths));
                    return;
                }
            }
        }
        let paths = self.paths();
        self.best = Some((cost, n_paths, paths));
    }

    fn paths(&self) -> Vec<Vec<usize>> {
        let mut paths: Vec<Vec<usize>> = (1..=self.n)
            .filter(|&k| self.used[k] && self.pred[k] == SOURCE)
            .map(|start| {
                let mut p = vec![SOURCE];
                let mut k = start;
                loop {
                    p.push(pre_node(k));
                    p.push(post_node(k));
                    if self.succ[k] == NONE {
                        break;
                    }
                    k = self.succ[k];
                }
                p.push(self.sink);
                p
            })
            .collect();
        paths.sort();
        paths
    }
}

/// Decodes solver paths into tracklets of window detections.
///
/// Tracklet ids follow path order, which is the solver's augmentation order.
pub fn extract_tracklets(
    g: &FlowGraph,
    result: &FlowResult,
    window: &Window,
) -> Result<Vec<Tracklet>> {
    let sink = g.sink();
    result
        .paths
        .iter()
        .enumerate()
        .map(|(id, path)| {
            let mut dets = Vec::new();
            for &node in path {
                if node == SOURCE || node == sink || node % 2 == 0 {
                    continue;
                }
                if node > sink {
                    return Err(Error::InvalidInput(format!(
                        "path references unknown node {node}"
                    )));
                }
                let label = g.label_of(detection_of(node));
                let det = window.detection(label).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "path node {node} maps to unknown detection {label}"
                    ))
                })?;
                dets.push(det.clone());
            }
            dets.sort_by_key(|d| (d.frame, d.index));
            Ok(Tracklet::from_detections(id, dets))
        })
        .collect()
}

/// Random split-node graph for solver tests and benchmarks.
///
/// Detections are spread uniformly over `n_frames`; transitions connect
/// frames at most `max_gap` apart with probability `edge_prob`. Costs use a
/// 1e-3 grid so integer scaling is exact.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    n_detections: usize,
    n_frames: u32,
    max_gap: u32,
    edge_prob: f64,
) -> FlowGraph {
    let n_frames = n_frames.max(1);
    let mut frames: Vec<u32> = (0..n_detections)
        .map(|_| rng.gen_range(0..n_frames))
        .collect();
    frames.sort_unstable();
    let mut g = FlowGraph::new(frames);
    let grid = |rng: &mut R, lo: f64, hi: f64| (rng.gen_range(lo..hi) * 1000.0).round() / 1000.0;
    for k in 1..=n_detections {
        if rng.gen_bool(0.9) {
            let c = grid(rng, 0.0, 3.0);
            g.add_enter(k, c);
        }
        let c = grid(rng, -5.0, 1.0);
        g.add_observation(k, c);
        if rng.gen_bool(0.9) {
            let c = grid(rng, 0.0, 3.0);
            g.add_exit(k, c);
        }
    }
    for i in 1..=n_detections {
        for j in 1..=n_detections {
            let (fi, fj) = (g.frame_of(i), g.frame_of(j));
            if fj > fi && fj - fi <= max_gap && rng.gen_bool(edge_prob) {
                let c = grid(rng, -1.0, 3.0);
                g.add_transition(i, j, c);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single() -> FlowGraph {
        let mut g = FlowGraph::new(vec![7]);
        g.add_enter(1, 1.0);
        g.add_observation(1, -3.0);
        g.add_exit(1, 1.0);
        g
    }

    #[test]
    fn empty_graph() {
        let g = FlowGraph::new(vec![]);
        let r = solve_mcf(&g).unwrap();
        assert!(r.paths.is_empty());
        assert_eq!(r.total_cost, 0.0);
        let b = brute_force_mcf(&g).unwrap();
        assert!(b.paths.is_empty());
        assert_eq!(b.scaled_cost, 0);
    }

    #[test]
    fn single_detection() {
        let g = single();
        let r = solve_mcf(&g).unwrap();
        assert_eq!(r.paths, vec![vec![0, 1, 2, 3]]);
        assert_eq!(r.total_cost, -1.0);
        assert_eq!(
            brute_force_mcf(&g).unwrap(),
            FlowResult {
                augmentations: vec![],
                ..r
            }
        );
    }

    #[test]
    fn positive_detection_is_left_out() {
        let mut g = single();
        g.edges[1].cost = -1.5;
        let r = solve_mcf(&g).unwrap();
        assert!(r.paths.is_empty());
    }

    /// Two detections in consecutive frames: either one path through both
    /// (1 + (-2) + 0.5 + (-2) + 1 = -1.5) or two singleton paths
    /// (2 * (1 - 2 + 1) = 0). The joined hypothesis wins.
    #[test]
    fn competing_hypotheses_joined() {
        let mut g = FlowGraph::new(vec![0, 1]);
        for k in 1..=2 {
            g.add_enter(k, 1.0);
            g.add_observation(k, -2.0);
            g.add_exit(k, 1.0);
        }
        g.add_transition(1, 2, 0.5);
        let r = solve_mcf(&g).unwrap();
        assert_eq!(r.paths, vec![vec![0, 1, 2, 3, 4, 5]]);
        assert!((r.total_cost + 1.5).abs() < 1e-12);
        assert_eq!(brute_force_mcf(&g).unwrap().scaled_cost, r.scaled_cost);
    }

    /// Same shape with an expensive transition (3.0): joined costs
    /// 1 - 2 + 3 - 2 + 1 = 1, singletons 2 * (1 - 2.5 + 1) = -1 with obs -2.5.
    #[test]
    fn competing_hypotheses_split() {
        let mut g = FlowGraph::new(vec![0, 1]);
        for k in 1..=2 {
            g.add_enter(k, 1.0);
            g.add_observation(k, -2.5);
            g.add_exit(k, 1.0);
        }
        g.add_transition(1, 2, 3.0);
        let r = solve_mcf(&g).unwrap();
        assert_eq!(r.paths, vec![vec![0, 1, 2, 5], vec![0, 3, 4, 5]]);
        assert!((r.total_cost + 1.0).abs() < 1e-12);
        let b = brute_force_mcf(&g).unwrap();
        assert_eq!(b.scaled_cost, r.scaled_cost);
        assert_eq!(b.paths, r.paths);
    }

    /// A later augmentation must reroute an earlier path through a residual arc.
    #[test]
    fn rerouting_through_residual_arcs() {
        // 1 and 2 in frame 0, 3 and 4 in frame 1. The cheapest single path is
        // 1 -> 4, but the optimum with two paths is 1 -> 3 and 2 -> 4.
        let mut g = FlowGraph::new(vec![0, 0, 1, 1]);
        for k in 1..=4 {
            g.add_enter(k, 0.0);
            g.add_observation(k, -1.0);
            g.add_exit(k, 0.0);
        }
        g.add_transition(1, 4, -3.0);
        g.add_transition(1, 3, -2.0);
        g.add_transition(2, 4, -2.0);
        let r = solve_mcf(&g).unwrap();
        let b = brute_force_mcf(&g).unwrap();
        assert_eq!(r.scaled_cost, b.scaled_cost);
        assert_eq!(r.scaled_cost, scale_cost(-8.0));
        assert!(r.augmentations.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn malformed_graphs_rejected() {
        let mut g = single();
        g.edges[0].capacity = 2;
        assert!(matches!(solve_mcf(&g), Err(Error::MalformedGraph(_))));

        let mut g = FlowGraph::new(vec![0, 1]);
        g.add_observation(1, -1.0);
        assert!(matches!(solve_mcf(&g), Err(Error::MalformedGraph(_))));

        let mut g = FlowGraph::new(vec![3, 1]);
        g.add_observation(1, -1.0);
        g.add_observation(2, -1.0);
        g.add_transition(1, 2, 0.0);
        assert!(matches!(g.validate(), Err(Error::MalformedGraph(_))));

        let mut g = single();
        g.push_edge(Edge {
            from: 0,
            to: 9,
            cost: 0.0,
            capacity: 1,
            kind: EdgeKind::Enter,
        });
        assert!(g.validate().is_err());

        let mut g = single();
        g.add_enter(1, 0.0);
        assert!(g.validate().is_err());
    }

    #[test]
    fn brute_force_cap() {
        let g = FlowGraph::new(vec![0; BRUTE_FORCE_CAP + 1]);
        assert!(matches!(brute_force_mcf(&g), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn random_graphs_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.gen_range(0..=8);
            let g = random_graph(&mut rng, n, 3, 3, 0.5);
            let r = solve_mcf(&g).unwrap();
            let b = brute_force_mcf(&g).unwrap();
            assert_eq!(r.scaled_cost, b.scaled_cost);
            assert!(r.augmentations.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

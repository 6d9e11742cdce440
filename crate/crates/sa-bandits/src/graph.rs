//! Arm graphs, loss landscapes, and the energy-landscape constants that
//! parameterize every bound: critical depth, covering depth, and the local
//! constants `L` and `R`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use thiserror::Error;

/// Per-invariant outcome of a graph validity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    /// `a' in N(a)` if and only if `a in N(a')`.
    pub adjacency_symmetric: bool,
    /// `g(a, a') == g(a', a)` on every edge.
    pub weights_symmetric: bool,
    /// All selection weights strictly positive.
    pub positive_weights: bool,
    /// No arm lists itself as a neighbour.
    pub no_self_loops: bool,
    /// The undirected graph is connected (breadth-first traversal).
    pub connected: bool,
    /// All endpoint indices in range.
    pub indices_in_range: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.adjacency_symmetric
            && self.weights_symmetric
            && self.positive_weights
            && self.no_self_loops
            && self.connected
            && self.indices_in_range
    }

    fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.indices_in_range {
            out.push("indices_in_range");
        }
        if !self.adjacency_symmetric {
            out.push("adjacency_symmetry");
        }
        if !self.weights_symmetric {
            out.push("weight_symmetry");
        }
        if !self.positive_weights {
            out.push("positive_weights");
        }
        if !self.no_self_loops {
            out.push("no_self_loops");
        }
        if !self.connected {
            out.push("connectivity");
        }
        out
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "pass")
        } else {
            write!(f, "fail: {}", self.failures().join(", "))
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph ({0})")]
    InvalidGraph(ValidationReport),
    #[error("need at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("losses must have a unique minimizer; arms {0} and {1} tie at the minimum")]
    NonUniqueOptimum(usize, usize),
    #[error("landscape has {losses} losses but graph has {arms} arms")]
    SizeMismatch { losses: usize, arms: usize },
    #[error("losses must be finite")]
    NonFiniteLoss,
}

/// Undirected arm graph with symmetric positive selection weights.
///
/// `g(a, a')` is the unnormalized probability of proposing `a'` from `a`;
/// `g(a)` is the row total. Immutable after construction, so it can be
/// shared freely across parallel replications.
#[derive(Debug, Clone)]
pub struct ArmGraph {
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    totals: Vec<f64>,
}

/// Checks the graph invariants on a directed entry list.
///
/// Entries are `(from, to, weight)`. An undirected edge is expected to appear
/// in both orientations; a missing reverse entry fails adjacency symmetry and
/// mismatched reverse weights fail weight symmetry. Connectivity is decided by
/// breadth-first traversal over the union of the listed entries.
pub fn validate(arm_count: usize, entries: &[(usize, usize, f64)]) -> ValidationReport {
    let mut report = ValidationReport {
        adjacency_symmetric: true,
        weights_symmetric: true,
        positive_weights: true,
        no_self_loops: true,
        connected: true,
        indices_in_range: true,
    };
    for &(a, b, w) in entries {
        if a >= arm_count || b >= arm_count {
            report.indices_in_range = false;
        }
        if a == b {
            report.no_self_loops = false;
        }
        if !(w > 0.0) || !w.is_finite() {
            report.positive_weights = false;
        }
    }
    if !report.indices_in_range {
        report.connected = false;
        return report;
    }
    for &(a, b, w) in entries {
        if a == b {
            continue;
        }
        match entries.iter().find(|&&(x, y, _)| x == b && y == a) {
            None => report.adjacency_symmetric = false,
            Some(&(_, _, back)) => {
                if back != w {
                    report.weights_symmetric = false;
                }
            }
        }
    }
    // BFS over the undirected closure.
    let mut adj = vec![Vec::new(); arm_count];
    for &(a, b, _) in entries {
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; arm_count];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    report.connected = seen.iter().all(|&s| s);
    report
}

impl ArmGraph {
    /// Builds a graph from undirected edges `(a, b, weight)`.
    ///
    /// Each edge may be listed once (the reverse direction is implied) or in
    /// both orientations; conflicting duplicate weights are rejected as a
    /// weight-symmetry failure.
    pub fn from_edges(arm_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        if arm_count < 2 {
            return Err(GraphError::TooFewArms(arm_count));
        }
        // Expand to a directed entry list, detecting conflicting duplicates.
        let mut directed: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 2);
        let mut conflict = false;
        for &(a, b, w) in edges {
            for &(x, y, v) in [(a, b, w), (b, a, w)].iter() {
                match directed.iter().find(|&&(p, q, _)| p == x && q == y) {
                    Some(&(_, _, prev)) if prev != v => conflict = true,
                    Some(_) => {}
                    None => directed.push((x, y, v)),
                }
            }
        }
        let mut report = validate(arm_count, &directed);
        if conflict {
            report.weights_symmetric = false;
        }
        if !report.is_valid() {
            return Err(GraphError::InvalidGraph(report));
        }
        let mut neighbors = vec![Vec::new(); arm_count];
        let mut weights = vec![Vec::new(); arm_count];
        for &(a, b, w) in &directed {
            neighbors[a].push(b);
            weights[a].push(w);
        }
        for a in 0..arm_count {
            let mut idx: Vec<usize> = (0..neighbors[a].len()).collect();
            idx.sort_by_key(|&i| neighbors[a][i]);
            neighbors[a] = idx.iter().map(|&i| neighbors[a][i]).collect();
            weights[a] = idx.iter().map(|&i| weights[a][i]).collect();
        }
        let totals = weights.iter().map(|row| row.iter().sum()).collect();
        Ok(Self { neighbors, weights, totals })
    }

    /// Path graph `0 - 1 - ... - k-1` with unit weights.
    pub fn path(arm_count: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (0..arm_count.saturating_sub(1))
            .map(|a| (a, a + 1, 1.0))
            .collect();
        Self::from_edges(arm_count, &edges)
    }

    /// Complete graph on `arm_count` arms with unit weights.
    pub fn complete(arm_count: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for a in 0..arm_count {
            for b in (a + 1)..arm_count {
                edges.push((a, b, 1.0));
            }
        }
        Self::from_edges(arm_count, &edges)
    }

    pub fn arm_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Neighbour list of `a`, sorted by index, excluding `a`.
    pub fn neighbors(&self, a: usize) -> &[usize] {
        &self.neighbors[a]
    }

    /// Selection weights parallel to [`Self::neighbors`].
    pub fn weights(&self, a: usize) -> &[f64] {
        &self.weights[a]
    }

    /// `g(a) = sum over a' in N(a) of g(a, a')`.
    pub fn weight_total(&self, a: usize) -> f64 {
        self.totals[a]
    }

    /// `g(a, b)`, or 0 when `b` is not a neighbour of `a`.
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        match self.neighbors[a].binary_search(&b) {
            Ok(i) => self.weights[a][i],
            Err(_) => 0.0,
        }
    }

    /// Proposal probability `g(a, b) / g(a)`.
    pub fn proposal_prob(&self, a: usize, b: usize) -> f64 {
        self.weight(a, b) / self.totals[a]
    }

    /// Samples a neighbour of `a` with probability proportional to `g(a, .)`.
    pub fn propose<R: rand::Rng + ?Sized>(&self, a: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.totals[a];
        let mut acc = 0.0;
        for (i, &w) in self.weights[a].iter().enumerate() {
            acc += w;
            if u < acc {
                return self.neighbors[a][i];
            }
        }
        *self.neighbors[a].last().expect("non-empty neighbourhood")
    }

    /// True when every arm is adjacent to every other arm.
    pub fn is_complete(&self) -> bool {
        let k = self.arm_count();
        self.neighbors.iter().all(|n| n.len() == k - 1)
    }

    /// Hop-count eccentricity of `a`.
    pub fn eccentricity(&self, a: usize) -> usize {
        let mut dist = vec![usize::MAX; self.arm_count()];
        dist[a] = 0;
        let mut queue = std::collections::VecDeque::from([a]);
        let mut far = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    far = far.max(dist[v]);
                    queue.push_back(v);
                }
            }
        }
        far
    }

    /// Hop-count diameter.
    pub fn diameter(&self) -> usize {
        (0..self.arm_count()).map(|a| self.eccentricity(a)).max().unwrap_or(0)
    }
}

/// Loss landscape over the arms: the loss vector, its unique minimizer, and
/// the suboptimality gaps.
#[derive(Debug, Clone)]
pub struct Landscape {
    losses: Vec<f64>,
    optimal: usize,
}

impl Landscape {
    /// Builds a landscape from losses, rejecting ties at the minimum.
    pub fn new(losses: Vec<f64>) -> Result<Self, GraphError> {
        if losses.len() < 2 {
            return Err(GraphError::TooFewArms(losses.len()));
        }
        if losses.iter().any(|x| !x.is_finite()) {
            return Err(GraphError::NonFiniteLoss);
        }
        let mut optimal = 0;
        for (i, &x) in losses.iter().enumerate().skip(1) {
            if x < losses[optimal] {
                optimal = i;
            }
        }
        if let Some(tie) = losses
            .iter()
            .enumerate()
            .position(|(i, &x)| i != optimal && x == losses[optimal])
        {
            return Err(GraphError::NonUniqueOptimum(optimal, tie));
        }
        Ok(Self { losses, optimal })
    }

    /// Builds a landscape from rewards by negating them into losses.
    pub fn from_rewards(rewards: &[f64]) -> Result<Self, GraphError> {
        Self::new(rewards.iter().map(|r| -r).collect())
    }

    pub fn arm_count(&self) -> usize {
        self.losses.len()
    }

    pub fn loss(&self, a: usize) -> f64 {
        self.losses[a]
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Index of the unique loss minimizer.
    pub fn optimal_arm(&self) -> usize {
        self.optimal
    }

    /// Suboptimality gap of `a`; zero exactly at the optimal arm.
    pub fn gap(&self, a: usize) -> f64 {
        self.losses[a] - self.losses[self.optimal]
    }

    pub fn gaps(&self) -> Vec<f64> {
        (0..self.losses.len()).map(|a| self.gap(a)).collect()
    }

    /// Smallest nonzero gap.
    pub fn min_gap(&self) -> f64 {
        (0..self.losses.len())
            .filter(|&a| a != self.optimal)
            .map(|a| self.gap(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest gap.
    pub fn max_gap(&self) -> f64 {
        (0..self.losses.len()).map(|a| self.gap(a)).fold(0.0, f64::max)
    }

    /// Checks the landscape against a graph's arm count.
    pub fn check_matches(&self, graph: &ArmGraph) -> Result<(), GraphError> {
        if self.arm_count() != graph.arm_count() {
            return Err(GraphError::SizeMismatch {
                losses: self.arm_count(),
                arms: graph.arm_count(),
            });
        }
        Ok(())
    }

    /// The `2.2`-style linear-graph instance with losses
    /// `(1-delta, 1+delta, 1+2*delta, 1)`.
    pub fn linear_counterexample(delta: f64) -> Result<Self, GraphError> {
        Self::new(vec![1.0 - delta, 1.0 + delta, 1.0 + 2.0 * delta, 1.0])
    }
}

struct HeapEntry {
    elevation: f64,
    arm: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.elevation == other.elevation
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Min-heap on elevation.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .elevation
            .partial_cmp(&self.elevation)
            .unwrap_or(Ordering::Equal)
    }
}

/// Minimum path elevation from every arm to `target`.
///
/// The elevation of a path is the largest loss among the arms on it,
/// endpoints included. Computed with a bottleneck (minimax) variant of
/// Dijkstra's algorithm starting at `target`.
pub fn min_elevation_to(graph: &ArmGraph, landscape: &Landscape, target: usize) -> Vec<f64> {
    let k = graph.arm_count();
    let mut best = vec![f64::INFINITY; k];
    let mut done = vec![false; k];
    let mut heap = BinaryHeap::new();
    best[target] = landscape.loss(target);
    heap.push(HeapEntry { elevation: best[target], arm: target });
    while let Some(HeapEntry { elevation, arm }) = heap.pop() {
        if done[arm] {
            continue;
        }
        done[arm] = true;
        for &next in graph.neighbors(arm) {
            let cand = elevation.max(landscape.loss(next));
            if cand < best[next] {
                best[next] = cand;
                heap.push(HeapEntry { elevation: cand, arm: next });
            }
        }
    }
    best
}

/// Critical depth: the smallest `h >= 0` such that every arm communicates
/// with the optimal arm at height `h`, i.e. some path from the arm to the
/// optimum never climbs above the arm's own loss plus `h`.
///
/// Zero on fully connected graphs (the direct hop never climbs), and zero
/// whenever losses decrease monotonically toward the optimum along some path.
pub fn critical_depth(graph: &ArmGraph, landscape: &Landscape) -> f64 {
    let elev = min_elevation_to(graph, landscape, landscape.optimal_arm());
    (0..graph.arm_count())
        .map(|a| elev[a] - landscape.loss(a))
        .fold(0.0, f64::max)
}

/// Covering depth `d`: the largest, over arms, number of neighbourhood
/// expansions needed before the accumulated set covers all arms. Fully
/// connected graphs use the convention `d = 0`; otherwise the expansion
/// count from `a` equals the hop eccentricity of `a`.
pub fn covering_depth(graph: &ArmGraph) -> usize {
    if graph.is_complete() {
        return 0;
    }
    graph.diameter()
}

/// The local landscape constants
/// `L = max_i max_{j in N(i)} |mu_j - mu_i|` and
/// `R = min_i min_{j in N(i)} g(i,j) / g(i)`.
pub fn landscape_constants(graph: &ArmGraph, landscape: &Landscape) -> (f64, f64) {
    let mut big_l = 0.0f64;
    let mut big_r = 1.0f64;
    for a in 0..graph.arm_count() {
        for (idx, &b) in graph.neighbors(a).iter().enumerate() {
            big_l = big_l.max((landscape.loss(b) - landscape.loss(a)).abs());
            big_r = big_r.min(graph.weights(a)[idx] / graph.weight_total(a));
        }
    }
    (big_l, big_r)
}

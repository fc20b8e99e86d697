use std::collections::BTreeSet;
use std::fmt::Write as _;

use petgraph::algo::{connected_components, dijkstra};
use petgraph::graph::{NodeIndex, UnGraph};

use crate::autodiff::RngStream;
use crate::error::{Error, Result};

/// Undirected graph with positive integer edge weights.
///
/// Edges are stored once as `(u, v, w)` with `u < v`, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, u64)>,
    pub source: usize,
}

impl WeightedGraph {
    pub fn new(n: usize, source: usize, edges: impl IntoIterator<Item = (usize, usize, u64)>) -> Result<Self> {
        if n == 0 || source >= n {
            return Err(Error::InvalidConfig(format!("graph with {n} nodes cannot have source {source}")));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (u, v, w) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::InvalidConfig(format!("invalid edge ({u}, {v}) for {n} nodes")));
            }
            if w == 0 {
                return Err(Error::InvalidConfig(format!("edge ({u}, {v}) has zero weight")));
            }
            let (a, b) = (u.min(v), u.max(v));
            if !seen.insert((a, b)) {
                return Err(Error::InvalidConfig(format!("duplicate edge ({a}, {b})")));
            }
            out.push((a, b, w));
        }
        out.sort_unstable();
        Ok(WeightedGraph { n, edges: out, source })
    }

    /// Neighbours of every node as `(neighbour, weight)`, ascending by id.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn max_edge_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.2).max().unwrap_or(0)
    }

    /// Finite stand-in for "unreached": larger than any simple-path length.
    pub fn unreached_distance(&self) -> f64 {
        (self.n as u64 * self.max_edge_weight() + 1) as f64
    }

    fn to_petgraph(&self) -> UnGraph<(), u64> {
        let mut g = UnGraph::with_capacity(self.n, self.edges.len());
        for _ in 0..self.n {
            g.add_node(());
        }
        for &(u, v, w) in &self.edges {
            g.add_edge(NodeIndex::new(u), NodeIndex::new(v), w);
        }
        g
    }

    pub fn is_connected(&self) -> bool {
        connected_components(&self.to_petgraph()) == 1
    }

    /// First line `n source`, then one `u v w` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.source);
        for &(u, v, w) in &self.edges {
            let _ = writeln!(s, "{u} {v} {w}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };
        let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "missing `n source` header".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let [n, source] = head[..] else {
            return Err(parse_err(hl, format!("expected `n source`, got `{header}`")));
        };
        let n: usize = n.parse().map_err(|e| parse_err(hl, format!("node count: {e}")))?;
        let source: usize = source.parse().map_err(|e| parse_err(hl, format!("source: {e}")))?;
        let mut edges = Vec::new();
        for (i, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [u, v, w] = parts[..] else {
                return Err(parse_err(i, format!("expected `u v w`, got `{line}`")));
            };
            let u = u.parse().map_err(|e| parse_err(i, format!("u: {e}")))?;
            let v = v.parse().map_err(|e| parse_err(i, format!("v: {e}")))?;
            let w = w.parse().map_err(|e| parse_err(i, format!("w: {e}")))?;
            edges.push((u, v, w));
        }
        WeightedGraph::new(n, source, edges)
    }
}

/// Random spanning tree (each node attaches to a uniform earlier node, then
/// labels are shuffled) plus every other pair with probability `1/(2n)`.
/// Weights are uniform in `[1, max_weight]`; the source is node 0.
pub fn random_graph(n: usize, max_weight: u64, rng: &mut RngStream) -> Result<WeightedGraph> {
    if n < 2 || max_weight < 1 {
        return Err(Error::InvalidConfig(format!("random_graph needs n >= 2 and max_weight >= 1, got {n}, {max_weight}")));
    }
    let parents: Vec<usize> = (1..n).map(|i| rng.index(i)).collect();
    let mut label: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut label);
    let mut pairs = BTreeSet::new();
    for (i, &p) in parents.iter().enumerate() {
        let (a, b) = (label[i + 1], label[p]);
        pairs.insert((a.min(b), a.max(b)));
    }
    let p_extra = 1.0 / (2.0 * n as f64);
    for u in 0..n {
        for v in u + 1..n {
            if !pairs.contains(&(u, v)) && rng.bernoulli(p_extra) {
                pairs.insert((u, v));
            }
        }
    }
    let edges: Vec<_> = pairs
        .into_iter()
        .map(|(u, v)| (u, v, rng.int_inclusive(1, max_weight as i64) as u64))
        .collect();
    WeightedGraph::new(n, 0, edges)
}

/// Synchronous Bellman-Ford. Returns the `n + 1` tables `d^0, ..., d^n`;
/// `d^0` is 0 at the source and [`WeightedGraph::unreached_distance`]
/// elsewhere.
pub fn bellman_ford(graph: &WeightedGraph) -> Vec<Vec<f64>> {
    let adj = graph.adjacency();
    let init = graph.unreached_distance();
    let mut d: Vec<f64> = (0..graph.n).map(|v| if v == graph.source { 0.0 } else { init }).collect();
    let mut out = Vec::with_capacity(graph.n + 1);
    out.push(d.clone());
    for _ in 0..graph.n {
        let next: Vec<f64> = (0..graph.n)
            .map(|v| adj[v].iter().fold(d[v], |best, &(u, w)| best.min(d[u] + w as f64)))
            .collect();
        d = next;
        out.push(d.clone());
    }
    out
}

/// Shortest-path distances from petgraph's Dijkstra; `None` if unreachable.
pub fn reference_distances(graph: &WeightedGraph) -> Vec<Option<u64>> {
    let g = graph.to_petgraph();
    let dist = dijkstra(&g, NodeIndex::new(graph.source), None, |e| *e.weight());
    (0..graph.n).map(|v| dist.get(&NodeIndex::new(v)).copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_distances() {
        let g = WeightedGraph::new(3, 0, [(0, 1, 3), (1, 2, 4)]).unwrap();
        assert_eq!(bellman_ford(&g).last().unwrap(), &vec![0.0, 3.0, 7.0]);
        let g = WeightedGraph::new(2, 0, [(0, 1, 6)]).unwrap();
        assert_eq!(bellman_ford(&g).last().unwrap(), &vec![0.0, 6.0]);
    }

    #[test]
    fn two_node_random_graph_is_one_edge() {
        let g = random_graph(2, 10, &mut RngStream::new(0)).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert!(g.is_connected());
    }

    #[test]
    fn random_graphs_are_connected_trees_plus_extras() {
        let mut rng = RngStream::new(1);
        for _ in 0..200 {
            let g = random_graph(10, 10, &mut rng).unwrap();
            assert!(g.is_connected());
            assert!(g.edges.len() >= 9);
            assert!(g.edges.iter().all(|e| (1..=10).contains(&e.2)));
            assert_eq!(g.source, 0);
        }
    }

    #[test]
    fn extra_edge_count_matches_expectation() {
        // 36 non-tree pairs, each kept with p = 1/20.
        let p = 1.0 / 20.0;
        let expected = 36.0 * p;
        let sd = (36.0 * p * (1.0 - p) / 1000.0_f64).sqrt();
        let total: usize = (0..1000u64)
            .map(|s| random_graph(10, 10, &mut RngStream::new(s)).unwrap().edges.len() - 9)
            .sum();
        let mean = total as f64 / 1000.0;
        assert!((mean - expected).abs() < 3.0 * sd, "mean extras {mean}, expected {expected}");
    }

    #[test]
    fn iterates_are_monotone_and_start_correctly() {
        let g = random_graph(8, 5, &mut RngStream::new(3)).unwrap();
        let it = bellman_ford(&g);
        assert_eq!(it.len(), 9);
        assert_eq!(it[0][0], 0.0);
        assert!(it[0][1..].iter().all(|&d| d == g.unreached_distance()));
        for w in it.windows(2) {
            assert!(w[1].iter().zip(&w[0]).all(|(a, b)| a <= b));
            assert_eq!(w[1][g.source], 0.0);
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = random_graph(9, 7, &mut RngStream::new(12)).unwrap();
        let back = WeightedGraph::from_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn malformed_edge_lists_rejected() {
        assert!(WeightedGraph::from_edge_list("").is_err());
        assert!(WeightedGraph::from_edge_list("3 0\n0 1\n").is_err());
        assert!(WeightedGraph::from_edge_list("3 0\n0 1 0\n").is_err());
        assert!(WeightedGraph::from_edge_list("3 5\n0 1 2\n").is_err());
        let err = WeightedGraph::from_edge_list("2 0\n0 x 1\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}

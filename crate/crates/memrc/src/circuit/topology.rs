//! Random network topology generation and the line-oriented text format.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::CircuitError;
use crate::seeds::{self, stream};

/// One two-terminal device between circuit nodes `a` and `b`. The orientation
/// matters: branch voltage is `v_a - v_b` and the device polarity follows it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub id: usize,
    pub a: usize,
    pub b: usize,
}

/// Graph of devices between circuit nodes with input, ground, and readout
/// terminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkTopology {
    pub node_count: usize,
    pub edges: Vec<Edge>,
    pub input_node: usize,
    pub ground_node: usize,
    pub readout_pairs: Vec<(usize, usize)>,
    /// Duplicate unordered node pairs are rejected unless explicitly enabled.
    pub multi_edges: bool,
}

impl NetworkTopology {
    /// Validating constructor for simple (non-multi-edge) topologies.
    pub fn new(
        node_count: usize,
        edges: Vec<Edge>,
        input_node: usize,
        ground_node: usize,
        readout_pairs: Vec<(usize, usize)>,
    ) -> Result<Self, CircuitError> {
        let topo = Self {
            node_count,
            edges,
            input_node,
            ground_node,
            readout_pairs,
            multi_edges: false,
        };
        topo.validate()?;
        Ok(topo)
    }

    /// Constructor that skips validation, for diagnostics and tests that need
    /// deliberately degenerate structure (disconnected components, multi-edges).
    pub fn new_unchecked(
        node_count: usize,
        edges: Vec<Edge>,
        input_node: usize,
        ground_node: usize,
        readout_pairs: Vec<(usize, usize)>,
        multi_edges: bool,
    ) -> Self {
        Self { node_count, edges, input_node, ground_node, readout_pairs, multi_edges }
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let n = self.node_count;
        let bad = |msg: String| Err(CircuitError::InvalidTopology(msg));
        if n < 2 {
            return bad(format!("need at least 2 nodes, got {n}"));
        }
        if self.input_node >= n || self.ground_node >= n {
            return bad("terminal node index out of range".into());
        }
        if self.input_node == self.ground_node {
            return bad("input and ground must differ".into());
        }
        let mut seen = HashSet::new();
        for e in &self.edges {
            if e.a >= n || e.b >= n {
                return bad(format!("edge {} references node out of range", e.id));
            }
            if e.a == e.b {
                return bad(format!("edge {} is a self-loop on node {}", e.id, e.a));
            }
            let key = (e.a.min(e.b), e.a.max(e.b));
            if !seen.insert(key) && !self.multi_edges {
                return bad(format!("duplicate edge between {} and {}", key.0, key.1));
            }
        }
        for &(p, q) in &self.readout_pairs {
            if p >= n || q >= n {
                return bad("readout node index out of range".into());
            }
            if p == q {
                return bad(format!("readout pair ({p}, {q}) is degenerate"));
            }
            if p == self.ground_node || q == self.ground_node {
                return bad("readout pairs must not include the ground node".into());
            }
        }
        if !self.is_connected() {
            return bad("graph is not connected".into());
        }
        Ok(())
    }

    /// Breadth-first reachability over the device graph.
    pub fn is_connected(&self) -> bool {
        if self.node_count == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            adj[e.a].push(e.b);
            adj[e.b].push(e.a);
        }
        let mut visited = vec![false; self.node_count];
        let mut queue = std::collections::VecDeque::from([0usize]);
        visited[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.node_count
    }

    pub fn device_count(&self) -> usize {
        self.edges.len()
    }

    /// Serializes to the line-oriented text format:
    /// a `nodes=<n> input=<i> ground=<g>` header, one `edge <id> <a> <b>` line
    /// per device, then one `readout <p> <q>` line per pair.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "nodes={} input={} ground={}",
            self.node_count, self.input_node, self.ground_node
        );
        for e in &self.edges {
            let _ = writeln!(out, "edge {} {} {}", e.id, e.a, e.b);
        }
        for &(p, q) in &self.readout_pairs {
            let _ = writeln!(out, "readout {p} {q}");
        }
        out
    }

    /// Parses and validates the `dump` format.
    pub fn load(text: &str) -> Result<Self, CircuitError> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, msg: String| CircuitError::Format { line: line + 1, msg };

        let (hdr_idx, header) = lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or_else(|| parse_err(0, "empty topology text".into()))?;
        let mut nodes = None;
        let mut input = None;
        let mut ground = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| parse_err(hdr_idx, format!("bad header field `{field}`")))?;
            let value: usize = value
                .parse()
                .map_err(|_| parse_err(hdr_idx, format!("bad header value `{value}`")))?;
            match key {
                "nodes" => nodes = Some(value),
                "input" => input = Some(value),
                "ground" => ground = Some(value),
                _ => return Err(parse_err(hdr_idx, format!("unknown header key `{key}`"))),
            }
        }
        let (nodes, input, ground) = match (nodes, input, ground) {
            (Some(n), Some(i), Some(g)) => (n, i, g),
            _ => return Err(parse_err(hdr_idx, "header needs nodes=, input=, ground=".into())),
        };

        let mut edges = Vec::new();
        let mut readout_pairs = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("edge") => {
                    let nums: Vec<usize> = tok
                        .map(|t| t.parse().map_err(|_| parse_err(idx, format!("bad edge `{line}`"))))
                        .collect::<Result<_, _>>()?;
                    if nums.len() != 3 {
                        return Err(parse_err(idx, format!("edge needs 3 fields: `{line}`")));
                    }
                    edges.push(Edge { id: nums[0], a: nums[1], b: nums[2] });
                }
                Some("readout") => {
                    let nums: Vec<usize> = tok
                        .map(|t| {
                            t.parse().map_err(|_| parse_err(idx, format!("bad readout `{line}`")))
                        })
                        .collect::<Result<_, _>>()?;
                    if nums.len() != 2 {
                        return Err(parse_err(idx, format!("readout needs 2 fields: `{line}`")));
                    }
                    readout_pairs.push((nums[0], nums[1]));
                }
                Some(other) => {
                    return Err(parse_err(idx, format!("unknown record `{other}`")));
                }
                None => {}
            }
        }
        Self::new(nodes, edges, input, ground, readout_pairs)
    }
}

/// Generates a connected random network in which every node carries exactly
/// `k_degree` device terminals (one node absorbs the odd leftover stub when
/// `n_nodes * k_degree` is odd), for a total of `ceil(n*k/2)` devices.
/// Terminals and readout pairs are drawn from the same seeded stream, so the
/// whole topology is a pure function of the seed.
pub fn generate_topology(
    n_nodes: usize,
    k_degree: usize,
    n_readout_pairs: usize,
    rng_seed: u64,
) -> Result<NetworkTopology, CircuitError> {
    if n_nodes < 3 {
        return Err(CircuitError::InvalidArgument(format!("need at least 3 nodes, got {n_nodes}")));
    }
    if k_degree < 1 || k_degree >= n_nodes {
        return Err(CircuitError::InvalidArgument(format!(
            "degree must satisfy 1 <= k < n, got k={k_degree} n={n_nodes}"
        )));
    }
    if n_readout_pairs < 1 {
        return Err(CircuitError::InvalidArgument("need at least one readout pair".into()));
    }
    let pool = n_nodes - 1; // ground is excluded from readout pairs
    let max_pairs = pool * (pool - 1) / 2;
    if n_readout_pairs > max_pairs {
        return Err(CircuitError::InvalidArgument(format!(
            "{n_readout_pairs} readout pairs requested but only {max_pairs} distinct pairs exist"
        )));
    }

    const MAX_ATTEMPTS: u64 = 1000;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng =
            ChaCha12Rng::seed_from_u64(seeds::derive(rng_seed, stream::TOPOLOGY, attempt));
        let Some(edges) = try_pairing(n_nodes, k_degree, &mut rng) else {
            continue;
        };
        let input_node = rng.random_range(0..n_nodes);
        let ground_node = loop {
            let g = rng.random_range(0..n_nodes);
            if g != input_node {
                break g;
            }
        };
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n_readout_pairs);
        let mut seen = HashSet::new();
        while pairs.len() < n_readout_pairs {
            let p = rng.random_range(0..n_nodes);
            let q = rng.random_range(0..n_nodes);
            if p == q || p == ground_node || q == ground_node {
                continue;
            }
            if seen.insert((p.min(q), p.max(q))) {
                pairs.push((p, q));
            }
        }
        let topo = NetworkTopology {
            node_count: n_nodes,
            edges,
            input_node,
            ground_node,
            readout_pairs: pairs,
            multi_edges: false,
        };
        if topo.is_connected() {
            debug_assert!(topo.validate().is_ok());
            return Ok(topo);
        }
    }
    Err(CircuitError::GenerationFailed { attempts: MAX_ATTEMPTS as usize })
}

/// Configuration-model pairing: k stubs per node (one extra stub on a random
/// node when the total is odd), shuffled and paired, rejecting self-loops and
/// duplicates. Returns None when no valid shuffle is found.
fn try_pairing(n_nodes: usize, k_degree: usize, rng: &mut ChaCha12Rng) -> Option<Vec<Edge>> {
    let mut stubs: Vec<usize> = Vec::with_capacity(n_nodes * k_degree + 1);
    for node in 0..n_nodes {
        stubs.extend(std::iter::repeat_n(node, k_degree));
    }
    if stubs.len() % 2 == 1 {
        stubs.push(rng.random_range(0..n_nodes));
    }

    'shuffles: for _ in 0..200 {
        stubs.shuffle(rng);
        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue 'shuffles;
            }
            edges.push(Edge { id: edges.len(), a, b });
        }
        return Some(edges);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_nodes_degree_two_is_the_triangle() {
        let topo = generate_topology(3, 2, 1, 7).unwrap();
        assert_eq!(topo.edges.len(), 3);
        let mut degree = [0usize; 3];
        for e in &topo.edges {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        assert_eq!(degree, [2, 2, 2]);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_topology(20, 5, 3, 99).unwrap();
        let b = generate_topology(20, 5, 3, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_topology(20, 5, 3, 100).unwrap();
        assert_ne!(a, c);
    }

    /// Independent reachability oracle: union-find over the edge list.
    fn connected_by_union_find(topo: &NetworkTopology) -> bool {
        let mut parent: Vec<usize> = (0..topo.node_count).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &topo.edges {
            let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        (0..topo.node_count).all(|v| find(&mut parent, v) == root)
    }

    #[test]
    fn twenty_nodes_degree_five_gives_fifty_connected_edges() {
        for seed in 0..20 {
            let topo = generate_topology(20, 5, 2, seed).unwrap();
            assert_eq!(topo.edges.len(), 50);
            assert!(connected_by_union_find(&topo));
            let mut degree = vec![0usize; 20];
            for e in &topo.edges {
                degree[e.a] += 1;
                degree[e.b] += 1;
            }
            assert!(degree.iter().all(|&d| d == 5), "degrees {degree:?}");
        }
    }

    #[test]
    fn odd_stub_total_rounds_up() {
        // 5 nodes * 3 = 15 stubs -> 8 edges, one node at degree 4
        let topo = generate_topology(5, 3, 1, 3).unwrap();
        assert_eq!(topo.edges.len(), 8);
        let mut degree = vec![0usize; 5];
        for e in &topo.edges {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        assert_eq!(degree.iter().sum::<usize>(), 16);
        assert_eq!(degree.iter().filter(|&&d| d == 3).count(), 4);
        assert_eq!(degree.iter().filter(|&&d| d == 4).count(), 1);
    }

    #[test]
    fn readout_pairs_exclude_ground_and_are_distinct() {
        let topo = generate_topology(12, 4, 6, 21).unwrap();
        let mut seen = HashSet::new();
        for &(p, q) in &topo.readout_pairs {
            assert_ne!(p, q);
            assert_ne!(p, topo.ground_node);
            assert_ne!(q, topo.ground_node);
            assert!(seen.insert((p.min(q), p.max(q))));
        }
        assert_eq!(topo.readout_pairs.len(), 6);
    }

    #[test]
    fn dump_load_round_trip() {
        let topo = generate_topology(15, 4, 3, 5).unwrap();
        let text = topo.dump();
        let back = NetworkTopology::load(&text).unwrap();
        assert_eq!(topo, back);
    }

    #[test]
    fn load_rejects_malformed_text() {
        assert!(NetworkTopology::load("").is_err());
        assert!(NetworkTopology::load("nodes=3 input=0\nedge 0 0 1").is_err());
        assert!(matches!(
            NetworkTopology::load("nodes=3 input=0 ground=2\nedge 0 0 bogus"),
            Err(CircuitError::Format { line: 2, .. })
        ));
        // self loop caught by validation
        let text = "nodes=3 input=0 ground=2\nedge 0 1 1\nedge 1 0 1\nedge 2 1 2\nreadout 0 1";
        assert!(matches!(
            NetworkTopology::load(text),
            Err(CircuitError::InvalidTopology(_))
        ));
    }

    #[test]
    fn validation_rejects_bad_terminals() {
        let edges = vec![Edge { id: 0, a: 0, b: 1 }, Edge { id: 1, a: 1, b: 2 }];
        assert!(NetworkTopology::new(3, edges.clone(), 0, 0, vec![]).is_err());
        assert!(NetworkTopology::new(3, edges.clone(), 0, 2, vec![(0, 2)]).is_err());
        assert!(NetworkTopology::new(3, edges, 0, 2, vec![(0, 1)]).is_ok());
    }
}

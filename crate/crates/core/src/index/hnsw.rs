//! Hierarchical navigable small-world graph over the rows of a store.
//!
//! Construction is single-threaded and deterministic: rows are inserted in
//! ascending id order and each row's level comes from a seeded hash of its id.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use xxhash_rust::xxh3::xxh3_64_with_seed;

const MAX_LEVEL: usize = 16;

/// A node with its similarity to the current query. Orders so that the
/// greatest element is the best match: higher score, then lower node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scored {
    pub score: f64,
    pub node: u32,
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Similarity oracle between a query and graph nodes, and between two nodes.
pub(crate) trait Space {
    fn len(&self) -> usize;
    fn node_sim(&self, a: u32, b: u32) -> f64;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct HnswGraph {
    pub m: usize,
    pub entry: u32,
    pub max_level: usize,
    /// `links[node][level]`; a node has `level + 1` lists.
    pub links: Vec<Vec<Vec<u32>>>,
}

/// Level drawn from the exponential distribution with scale 1/ln(M).
pub(crate) fn level_for(id: &str, seed: u64, m: usize) -> usize {
    let h = xxh3_64_with_seed(id.as_bytes(), seed ^ 0x9E37_79B9_7F4A_7C15);
    // uniform in (0, 1]
    let u = ((h >> 11) + 1) as f64 / (1u64 << 53) as f64;
    let ml = 1.0 / (m as f64).ln();
    ((-u.ln() * ml).floor() as usize).min(MAX_LEVEL)
}

pub(crate) struct Visited {
    bits: Vec<u64>,
}

impl Visited {
    fn new(n: usize) -> Self {
        Self {
            bits: vec![0; n.div_ceil(64)],
        }
    }

    /// Marks `node`; returns true if it was not yet visited.
    fn insert(&mut self, node: u32) -> bool {
        let (w, b) = (node as usize / 64, node as usize % 64);
        let fresh = self.bits[w] & (1 << b) == 0;
        self.bits[w] |= 1 << b;
        fresh
    }

    fn clear(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = 0);
    }
}

impl HnswGraph {
    fn max_links(&self, level: usize) -> usize {
        if level == 0 {
            2 * self.m
        } else {
            self.m
        }
    }

    /// Builds the graph; `order` lists nodes in insertion order and `levels`
    /// gives each node's top level.
    pub fn build<S: Space>(
        space: &S,
        order: &[u32],
        levels: &[usize],
        m: usize,
        ef_construction: usize,
    ) -> Self {
        let n = space.len();
        let mut graph = HnswGraph {
            m,
            entry: 0,
            max_level: 0,
            links: levels.iter().map(|&l| vec![Vec::new(); l + 1]).collect(),
        };
        let mut visited = Visited::new(n);
        let mut inserted = false;
        for &q in order {
            let level = levels[q as usize];
            if !inserted {
                graph.entry = q;
                graph.max_level = level;
                inserted = true;
                continue;
            }
            let sim = |x: u32| space.node_sim(q, x);
            let mut ep = Scored {
                score: sim(graph.entry),
                node: graph.entry,
            };
            for l in (level + 1..=graph.max_level).rev() {
                ep = graph.greedy(&sim, ep, l);
            }
            let mut entry_points = vec![ep];
            for l in (0..=level.min(graph.max_level)).rev() {
                visited.clear();
                let found = graph.search_layer(
                    &sim,
                    &entry_points,
                    ef_construction,
                    l,
                    &mut visited,
                    |_| true,
                );
                let chosen = select_neighbors(space, &found, m);
                for &nb in &chosen {
                    graph.connect(space, nb, q, l);
                }
                graph.links[q as usize][l] = chosen;
                entry_points = found;
            }
            if level > graph.max_level {
                graph.entry = q;
                graph.max_level = level;
            }
        }
        graph
    }

    fn connect<S: Space>(&mut self, space: &S, node: u32, new: u32, level: usize) {
        let cap = self.max_links(level);
        let list = &mut self.links[node as usize][level];
        list.push(new);
        if list.len() <= cap {
            return;
        }
        let mut cands: Vec<Scored> = list
            .iter()
            .map(|&x| Scored {
                score: space.node_sim(node, x),
                node: x,
            })
            .collect();
        cands.sort_unstable_by(|a, b| b.cmp(a));
        self.links[node as usize][level] = select_neighbors(space, &cands, cap);
    }

    /// Hill-climbs on one layer from `ep`.
    pub fn greedy(&self, sim: &impl Fn(u32) -> f64, mut ep: Scored, level: usize) -> Scored {
        loop {
            let mut improved = false;
            for &nb in &self.links[ep.node as usize][level] {
                let cand = Scored {
                    score: sim(nb),
                    node: nb,
                };
                if cand > ep {
                    ep = cand;
                    improved = true;
                }
            }
            if !improved {
                return ep;
            }
        }
    }

    /// Best-first beam search on one layer. Every reachable node is traversed
    /// regardless of `accept`, but only accepted nodes enter the result beam.
    /// Returns accepted nodes best first.
    fn search_layer(
        &self,
        sim: &impl Fn(u32) -> f64,
        entry_points: &[Scored],
        ef: usize,
        level: usize,
        visited: &mut Visited,
        accept: impl Fn(u32) -> bool,
    ) -> Vec<Scored> {
        let mut candidates: BinaryHeap<Scored> = BinaryHeap::new();
        let mut results: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
        for &ep in entry_points {
            if visited.insert(ep.node) {
                candidates.push(ep);
                if accept(ep.node) {
                    results.push(Reverse(ep));
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        while let Some(c) = candidates.pop() {
            if results.len() >= ef {
                if let Some(Reverse(worst)) = results.peek() {
                    if c < *worst {
                        break;
                    }
                }
            }
            for &nb in &self.links[c.node as usize][level] {
                if !visited.insert(nb) {
                    continue;
                }
                let cand = Scored {
                    score: sim(nb),
                    node: nb,
                };
                let admit =
                    results.len() < ef || results.peek().is_some_and(|Reverse(w)| cand > *w);
                if admit {
                    candidates.push(cand);
                    if accept(nb) {
                        results.push(Reverse(cand));
                        if results.len() > ef {
                            results.pop();
                        }
                    }
                }
            }
        }
        let mut out: Vec<Scored> = results.into_iter().map(|Reverse(s)| s).collect();
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }

    /// Descends from the entry point, then runs a filtered beam search on the
    /// base layer.
    pub fn search(
        &self,
        n: usize,
        sim: &impl Fn(u32) -> f64,
        ef: usize,
        accept: impl Fn(u32) -> bool,
    ) -> Vec<Scored> {
        if self.links.is_empty() {
            return Vec::new();
        }
        let mut ep = Scored {
            score: sim(self.entry),
            node: self.entry,
        };
        for l in (1..=self.max_level).rev() {
            ep = self.greedy(sim, ep, l);
        }
        let mut visited = Visited::new(n);
        self.search_layer(sim, &[ep], ef, 0, &mut visited, accept)
    }
}

/// Neighbor-diversity heuristic: walk candidates best first and keep one only
/// if it is closer to the query than to every neighbor already kept.
fn select_neighbors<S: Space>(space: &S, candidates: &[Scored], m: usize) -> Vec<u32> {
    let mut kept: Vec<u32> = Vec::with_capacity(m);
    for c in candidates {
        if kept.len() >= m {
            break;
        }
        let diverse = kept.iter().all(|&r| space.node_sim(c.node, r) < c.score);
        if diverse {
            kept.push(c.node);
        }
    }
    kept
}

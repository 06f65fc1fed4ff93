//! Hierarchical navigable small-world graph over the rows of a collection.
//!
//! The graph stores only adjacency; vectors live in the owning collection
//! and are passed in on every call. Node levels are a pure function of
//! `(seed, row)`, so inserting rows in order always yields the same graph,
//! whether built in one pass or grown incrementally.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnParams {
    /// Target out-degree on upper layers; layer 0 allows twice this.
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for AnnParams {
    fn default() -> Self {
        AnnParams {
            m: 16,
            ef_construction: 200,
            ef_search: 200,
            seed: 0x5eed_0f_a11,
        }
    }
}

const MAX_LEVEL: usize = 16;

#[inline]
pub(crate) fn dot_f32(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    acc.iter().sum::<f32>() + tail
}

/// Heap key: distance then row, so every ordering is total.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Scored {
    dist: f32,
    row: u32,
}

impl Eq for Scored {}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.row.cmp(&other.row))
    }
}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Rows<'a> {
    data: &'a [f32],
    dim: usize,
}

impl Rows<'_> {
    #[inline]
    fn row(&self, i: u32) -> &[f32] {
        let s = i as usize * self.dim;
        &self.data[s..s + self.dim]
    }

    #[inline]
    fn dist(&self, q: &[f32], i: u32) -> f32 {
        1.0 - dot_f32(q, self.row(i))
    }
}

#[derive(Debug, Clone)]
pub struct Hnsw {
    params: AnnParams,
    /// links[row][layer]
    links: Vec<Vec<Vec<u32>>>,
    entry: Option<u32>,
    top: usize,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl Hnsw {
    pub fn new(params: AnnParams) -> Self {
        Hnsw {
            params,
            links: Vec::new(),
            entry: None,
            top: 0,
        }
    }

    /// Builds the graph over all `data.len() / dim` rows in row order.
    pub fn build(params: AnnParams, data: &[f32], dim: usize) -> Self {
        let mut h = Hnsw::new(params);
        let n = if dim == 0 { 0 } else { data.len() / dim };
        for row in 0..n {
            h.insert(row as u32, data, dim);
        }
        h
    }

    pub fn params(&self) -> AnnParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    fn level_for(&self, row: u32) -> usize {
        let h = splitmix64(self.params.seed ^ splitmix64(row as u64));
        // uniform in (0, 1]
        let u = ((h >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
        let ml = 1.0 / (self.params.m.max(2) as f64).ln();
        ((-u.ln() * ml).floor() as usize).min(MAX_LEVEL)
    }

    fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            self.params.m * 2
        } else {
            self.params.m
        }
    }

    /// Appends `row`, which must equal the current node count.
    pub fn insert(&mut self, row: u32, data: &[f32], dim: usize) {
        assert_eq!(row as usize, self.links.len(), "rows must be inserted in order");
        let rows = Rows { data, dim };
        let level = self.level_for(row);
        self.links.push(vec![Vec::new(); level + 1]);

        let Some(mut ep) = self.entry else {
            self.entry = Some(row);
            self.top = level;
            return;
        };
        let q = rows.row(row).to_vec();
        let n = self.links.len();

        for layer in (level + 1..=self.top).rev() {
            ep = self.greedy(&rows, &q, ep, layer);
        }
        let mut eps = vec![ep];
        for layer in (0..=level.min(self.top)).rev() {
            let found = self.search_layer(&rows, &q, &eps, self.params.ef_construction, layer, n);
            let chosen = self.select_neighbors(&rows, &found, self.params.m);
            self.links[row as usize][layer] = chosen.clone();
            for nb in chosen {
                let list = &mut self.links[nb as usize][layer];
                list.push(row);
                if list.len() > self.max_degree(layer) {
                    let base = rows.row(nb).to_vec();
                    let mut cands: Vec<Scored> = self.links[nb as usize][layer]
                        .iter()
                        .map(|&r| Scored {
                            dist: rows.dist(&base, r),
                            row: r,
                        })
                        .collect();
                    cands.sort();
                    let kept = self.select_neighbors(&rows, &cands, self.max_degree(layer));
                    self.links[nb as usize][layer] = kept;
                }
            }
            eps = found.iter().map(|s| s.row).collect();
        }
        if level > self.top {
            self.top = level;
            self.entry = Some(row);
        }
    }

    fn greedy(&self, rows: &Rows<'_>, q: &[f32], mut ep: u32, layer: usize) -> u32 {
        let mut best = rows.dist(q, ep);
        loop {
            let mut moved = false;
            for &nb in &self.links[ep as usize][layer] {
                let d = rows.dist(q, nb);
                if d < best || (d == best && nb < ep) {
                    best = d;
                    ep = nb;
                    moved = true;
                }
            }
            if !moved {
                return ep;
            }
        }
    }

    /// Beam search on one layer; result sorted by ascending distance.
    fn search_layer(&self, rows: &Rows<'_>, q: &[f32], eps: &[u32], ef: usize, layer: usize, n: usize) -> Vec<Scored> {
        let mut visited = vec![0u64; n.div_ceil(64)];
        let mut mark = |r: u32| {
            let (w, b) = (r as usize / 64, r as usize % 64);
            let seen = visited[w] >> b & 1 == 1;
            visited[w] |= 1 << b;
            seen
        };
        let mut candidates: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
        let mut results: BinaryHeap<Scored> = BinaryHeap::new();
        for &e in eps {
            if mark(e) {
                continue;
            }
            let s = Scored {
                dist: rows.dist(q, e),
                row: e,
            };
            candidates.push(Reverse(s));
            results.push(s);
        }
        while results.len() > ef {
            results.pop();
        }
        while let Some(Reverse(c)) = candidates.pop() {
            if let Some(worst) = results.peek() {
                if results.len() >= ef && c.dist > worst.dist {
                    break;
                }
            }
            for &nb in &self.links[c.row as usize][layer] {
                if mark(nb) {
                    continue;
                }
                let s = Scored {
                    dist: rows.dist(q, nb),
                    row: nb,
                };
                let admit = results.len() < ef || results.peek().is_some_and(|w| s < *w);
                if admit {
                    candidates.push(Reverse(s));
                    results.push(s);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        results.into_sorted_vec()
    }

    /// Diversity heuristic: keep a candidate only if it is closer to the base
    /// than to any already kept neighbour, then top up with the pruned ones.
    fn select_neighbors(&self, rows: &Rows<'_>, sorted: &[Scored], m: usize) -> Vec<u32> {
        let mut kept: Vec<Scored> = Vec::with_capacity(m);
        let mut pruned = Vec::new();
        for &c in sorted {
            if kept.len() >= m {
                break;
            }
            let crow = rows.row(c.row);
            let diverse = kept.iter().all(|k| rows.dist(crow, k.row) > c.dist);
            if diverse {
                kept.push(c);
            } else {
                pruned.push(c);
            }
        }
        for c in pruned {
            if kept.len() >= m {
                break;
            }
            kept.push(c);
        }
        kept.into_iter().map(|s| s.row).collect()
    }

    /// Up to `ef` approximate nearest rows for a unit query, nearest first.
    pub fn search(&self, data: &[f32], dim: usize, query: &[f32], ef: usize) -> Vec<u32> {
        let Some(mut ep) = self.entry else {
            return Vec::new();
        };
        let rows = Rows { data, dim };
        for layer in (1..=self.top).rev() {
            ep = self.greedy(&rows, query, ep, layer);
        }
        self.search_layer(&rows, query, &[ep], ef.max(1), 0, self.links.len())
            .into_iter()
            .map(|s| s.row)
            .collect()
    }
}

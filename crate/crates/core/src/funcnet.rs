//! Per-time-step functional networks from windowed channel similarity.
//!
//! A frame's graph has one node per channel and an edge wherever the
//! Pearson correlation of the two windowed waveforms reaches the
//! configured threshold. Each frame carries node degrees, a community
//! partition with its Newman modularity Q, and shortest-path betweenness.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::config::AnalysisConfig;
use crate::error::Error;
use crate::event::EventRecord;
use crate::Result;

/// Symmetric boolean adjacency with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    bits: Vec<bool>,
}

impl Adjacency {
    pub fn new(n: usize) -> Adjacency {
        Adjacency {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn set(&mut self, i: usize, j: usize) {
        assert!(i != j, "no self loops");
        self.bits[i * self.n + j] = true;
        self.bits[j * self.n + i] = true;
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.get(i, j)).count()
    }

    pub fn edge_count(&self) -> usize {
        let mut m = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j) {
                    m += 1;
                }
            }
        }
        m
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j))
    }
}

/// One frame of the functional network with its derived metrics.
#[derive(Debug, Clone)]
pub struct FrameNetwork {
    pub frame_index: usize,
    /// Window start time in seconds.
    pub frame_time: f64,
    pub adjacency: Adjacency,
    pub degrees: Vec<u32>,
    /// Community label per node, compacted to 0..k.
    pub partition: Vec<u32>,
    /// Newman modularity of `partition`.
    pub q: f64,
    /// Unnormalized shortest-path betweenness per node.
    pub betweenness: Vec<f64>,
}

/// The per-frame slice consumed by the profile and sign-chain stages.
///
/// Both measured frames and synthetic frame series produce this shape.
#[derive(Debug, Clone)]
pub struct FrameMetrics {
    pub frame_index: usize,
    pub frame_time: f64,
    pub q: f64,
    pub degrees: Vec<u32>,
    pub betweenness: Vec<f64>,
}

impl FrameNetwork {
    /// Derive all frame metrics from a raw adjacency.
    pub fn from_adjacency(frame_index: usize, frame_time: f64, adjacency: Adjacency) -> FrameNetwork {
        let degrees: Vec<u32> = (0..adjacency.n())
            .map(|i| adjacency.degree(i) as u32)
            .collect();
        let (q, partition) = modularity(&adjacency);
        let betweenness = betweenness(&adjacency);
        FrameNetwork {
            frame_index,
            frame_time,
            adjacency,
            degrees,
            partition,
            q,
            betweenness,
        }
    }

    pub fn metrics(&self) -> FrameMetrics {
        FrameMetrics {
            frame_index: self.frame_index,
            frame_time: self.frame_time,
            q: self.q,
            degrees: self.degrees.clone(),
            betweenness: self.betweenness.clone(),
        }
    }

    pub fn mean_degree(&self) -> f64 {
        crate::stats::mean(&self.degrees.iter().map(|&k| k as f64).collect::<Vec<_>>())
    }
}

/// Build the functional network for one window.
///
/// An edge joins channels whose Pearson correlation over the window is at
/// least the similarity threshold. A channel with zero variance in the
/// window keeps its node and is simply isolated.
pub fn build_frame(
    event: &EventRecord,
    frame_index: usize,
    config: &AnalysisConfig,
) -> Result<FrameNetwork> {
    let w = config.window_length;
    let start = frame_index * config.stride;
    let end = start + w;
    let t = event.sample_count();
    if end > t {
        return Err(Error::WindowOutOfRange {
            start,
            end,
            samples: t,
        });
    }
    let n = event.channel_count();

    // centered windows per channel; zero-variance channels are flagged
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms: Vec<f64> = Vec::with_capacity(n);
    for ch in &event.channels {
        let win = &ch[start..end];
        let mu = crate::stats::mean(win);
        let dev: Vec<f64> = win.iter().map(|v| v - mu).collect();
        let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
        centered.push(dev);
        norms.push(norm);
    }

    let mut adj = Adjacency::new(n);
    for i in 0..n {
        if norms[i] == 0.0 {
            continue;
        }
        for j in (i + 1)..n {
            if norms[j] == 0.0 {
                continue;
            }
            let dot: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum();
            let r = dot / (norms[i] * norms[j]);
            if r >= config.similarity_threshold {
                adj.set(i, j);
            }
        }
    }

    let frame_time = start as f64 * event.sample_interval;
    Ok(FrameNetwork::from_adjacency(frame_index, frame_time, adj))
}

/// Build the ordered frame series for a whole event.
///
/// One frame per stride step; `frame_time` is the window start time.
pub fn frame_series(event: &EventRecord, config: &AnalysisConfig) -> Result<Vec<FrameNetwork>> {
    config.validate()?;
    event.validate()?;
    let t = event.sample_count();
    let w = config.window_length;
    if 2 * w > t {
        return Err(Error::EventTooShort {
            needed: 2 * w,
            window: w,
            got: t,
        });
    }
    let count = (t - w) / config.stride + 1;
    (0..count)
        .into_par_iter()
        .map(|i| build_frame(event, i, config).map_err(|e| e.at_frame(i)))
        .collect()
}

/// Newman modularity of a given partition: Q = sum_c (e_cc - a_c^2).
pub fn partition_modularity(adj: &Adjacency, partition: &[u32]) -> f64 {
    let m = adj.edge_count();
    if m == 0 {
        return 0.0;
    }
    let k = partition.iter().map(|&c| c as usize).max().unwrap_or(0) + 1;
    let mut within = vec![0.0f64; k];
    let mut ends = vec![0.0f64; k];
    for i in 0..adj.n() {
        for j in (i + 1)..adj.n() {
            if adj.get(i, j) {
                let (ci, cj) = (partition[i] as usize, partition[j] as usize);
                if ci == cj {
                    within[ci] += 1.0;
                }
                ends[ci] += 1.0;
                ends[cj] += 1.0;
            }
        }
    }
    let m = m as f64;
    (0..k)
        .map(|c| within[c] / m - (ends[c] / (2.0 * m)).powi(2))
        .sum()
}

/// Greedy agglomerative modularity maximization.
///
/// Starts from singleton communities and repeatedly merges the connected
/// pair with the largest modularity gain, ties broken by the smallest
/// (community id, community id) pair. The returned partition is the best
/// one seen anywhere along that merge trajectory, so the result is
/// deterministic and never worse than the starting point.
///
/// An empty edge set is the defined degenerate case: Q = 0 with every
/// node its own community.
pub fn modularity(adj: &Adjacency) -> (f64, Vec<u32>) {
    let n = adj.n();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let m = adj.edge_count();
    if m == 0 {
        return (0.0, compact_labels(&(0..n).collect::<Vec<usize>>()));
    }
    let m = m as f64;

    struct Comm {
        nodes: Vec<usize>,
        within: f64,
        ends: f64,
        links: BTreeMap<usize, f64>,
    }

    let mut comms: BTreeMap<usize, Comm> = (0..n)
        .map(|i| {
            let mut links = BTreeMap::new();
            for j in adj.neighbors(i) {
                links.insert(j, 1.0 / m);
            }
            (
                i,
                Comm {
                    nodes: vec![i],
                    within: 0.0,
                    ends: adj.degree(i) as f64 / (2.0 * m),
                    links,
                },
            )
        })
        .collect();

    let score = |cs: &BTreeMap<usize, Comm>| -> f64 {
        cs.values().map(|c| c.within - c.ends * c.ends).sum()
    };
    let snapshot = |cs: &BTreeMap<usize, Comm>| -> Vec<usize> {
        let mut owner = vec![0usize; n];
        for (&id, c) in cs {
            for &node in &c.nodes {
                owner[node] = id;
            }
        }
        owner
    };

    let mut best_q = score(&comms);
    let mut best = snapshot(&comms);

    while comms.len() > 1 {
        // best connected pair by modularity gain
        let mut pick: Option<(f64, usize, usize)> = None;
        for (&i, ci) in &comms {
            for (&j, &e_ij) in &ci.links {
                if j <= i {
                    continue;
                }
                let gain = e_ij - 2.0 * ci.ends * comms[&j].ends;
                let better = match pick {
                    None => true,
                    Some((g, pi, pj)) => gain > g || (gain == g && (i, j) < (pi, pj)),
                };
                if better {
                    pick = Some((gain, i, j));
                }
            }
        }
        let Some((_, i, j)) = pick else {
            break; // only disconnected communities remain
        };

        let cj = comms.remove(&j).expect("community j");
        let e_ij = comms[&i].links[&j];
        {
            let ci = comms.get_mut(&i).expect("community i");
            ci.within += cj.within + e_ij;
            ci.ends += cj.ends;
            ci.nodes.extend(cj.nodes);
            ci.links.remove(&j);
            for (&c, &w) in &cj.links {
                if c != i {
                    *ci.links.entry(c).or_insert(0.0) += w;
                }
            }
        }
        // redirect neighbor links from j to i
        let neighbor_ids: Vec<usize> = cj.links.keys().copied().filter(|&c| c != i).collect();
        for c in neighbor_ids {
            let comm = comms.get_mut(&c).expect("neighbor community");
            if let Some(w) = comm.links.remove(&j) {
                *comm.links.entry(i).or_insert(0.0) += w;
            }
        }

        let q = score(&comms);
        if q > best_q {
            best_q = q;
            best = snapshot(&comms);
        }
    }

    (best_q, compact_labels(&best))
}

fn compact_labels(owner: &[usize]) -> Vec<u32> {
    let mut map: BTreeMap<usize, u32> = BTreeMap::new();
    let mut next = 0u32;
    owner
        .iter()
        .map(|&o| {
            *map.entry(o).or_insert_with(|| {
                let l = next;
                next += 1;
                l
            })
        })
        .collect()
}

/// Unnormalized shortest-path betweenness over unordered node pairs
/// (Brandes' algorithm). Multiple shortest paths share credit
/// fractionally; disconnected pairs contribute nothing; isolated nodes
/// score zero.
pub fn betweenness(adj: &Adjacency) -> Vec<f64> {
    let n = adj.n();
    let mut centrality = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut sigma = vec![0.0f64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    let mut queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();

    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = -1);
        sigma.iter_mut().for_each(|v| *v = 0.0);
        delta.iter_mut().for_each(|v| *v = 0.0);
        preds.iter_mut().for_each(|p| p.clear());
        stack.clear();
        queue.clear();

        dist[s] = 0;
        sigma[s] = 1.0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for w in adj.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    // each unordered pair was visited from both endpoints
    centrality.iter_mut().for_each(|c| *c *= 0.5);
    centrality
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn adj_from_edges(n: usize, edges: &[(usize, usize)]) -> Adjacency {
        let mut adj = Adjacency::new(n);
        for &(i, j) in edges {
            adj.set(i, j);
        }
        adj
    }

    fn random_adjacency(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Adjacency {
        let mut adj = Adjacency::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p {
                    adj.set(i, j);
                }
            }
        }
        adj
    }

    /// Brute-force betweenness: enumerate shortest-path counts from both
    /// endpoints of every pair. Independent of the Brandes path.
    fn brute_betweenness(adj: &Adjacency) -> Vec<f64> {
        let n = adj.n();
        let bfs = |s: usize| -> (Vec<i64>, Vec<f64>) {
            let mut dist = vec![-1i64; n];
            let mut cnt = vec![0.0f64; n];
            let mut q = std::collections::VecDeque::new();
            dist[s] = 0;
            cnt[s] = 1.0;
            q.push_back(s);
            while let Some(v) = q.pop_front() {
                for w in adj.neighbors(v) {
                    if dist[w] < 0 {
                        dist[w] = dist[v] + 1;
                        q.push_back(w);
                    }
                    if dist[w] == dist[v] + 1 {
                        cnt[w] += cnt[v];
                    }
                }
            }
            (dist, cnt)
        };
        let per_source: Vec<(Vec<i64>, Vec<f64>)> = (0..n).map(bfs).collect();
        let mut b = vec![0.0f64; n];
        for s in 0..n {
            for t in (s + 1)..n {
                let (ds, cs) = &per_source[s];
                let (dt, ct) = &per_source[t];
                if ds[t] < 0 {
                    continue;
                }
                let total = cs[t];
                for v in 0..n {
                    if v == s || v == t {
                        continue;
                    }
                    if ds[v] >= 0 && dt[v] >= 0 && ds[v] + dt[v] == ds[t] {
                        b[v] += cs[v] * ct[v] / total;
                    }
                }
            }
        }
        b
    }

    /// Exhaustive modularity optimum over all partitions (n <= 8 only).
    fn exhaustive_best_q(adj: &Adjacency) -> f64 {
        let n = adj.n();
        assert!(n <= 8);
        let mut best = f64::NEG_INFINITY;
        let mut labels = vec![0u32; n];
        fn rec(adj: &Adjacency, labels: &mut Vec<u32>, i: usize, maxl: u32, best: &mut f64) {
            if i == labels.len() {
                let q = partition_modularity(adj, labels);
                if q > *best {
                    *best = q;
                }
                return;
            }
            for l in 0..=maxl + 1 {
                labels[i] = l;
                rec(adj, labels, i + 1, maxl.max(l), best);
            }
        }
        rec(adj, &mut labels, 1, 0, &mut best);
        best
    }

    fn test_event(channels: Vec<Vec<f64>>) -> EventRecord {
        EventRecord::new("t", 1e-6, channels, None).unwrap()
    }

    #[test]
    fn identical_channels_connect() {
        let base: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let other: Vec<f64> = (0..64).map(|i| ((i * i) as f64 * 0.11).cos()).collect();
        let ev = test_event(vec![base.clone(), base, other]);
        let cfg = AnalysisConfig {
            window_length: 32,
            stride: 8,
            similarity_threshold: 0.99,
            ..Default::default()
        };
        let f = build_frame(&ev, 0, &cfg).unwrap();
        assert!(f.adjacency.get(0, 1));
    }

    #[test]
    fn anticorrelated_pair_no_edge() {
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let third: Vec<f64> = (0..64).map(|i| (i as f64 * 1.7).cos()).collect();
        let ev = test_event(vec![x, neg, third]);
        let cfg = AnalysisConfig {
            window_length: 32,
            stride: 8,
            similarity_threshold: 0.5,
            ..Default::default()
        };
        let f = build_frame(&ev, 0, &cfg).unwrap();
        assert!(!f.adjacency.get(0, 1), "correlation -1 sits below any positive threshold");
    }

    #[test]
    fn white_noise_produces_no_edges_at_high_threshold() {
        // Monte-Carlo null model: estimate P(|r| >= 0.9) for W=256 i.i.d.
        // samples, then check the built frames against that expectation.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut tail = 0usize;
        let trials = 2000;
        for _ in 0..trials {
            let a: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if crate::stats::pearson(&a, &b) >= 0.9 {
                tail += 1;
            }
        }
        assert_eq!(tail, 0, "null-model tail beyond 0.9 should be empty at W=256");

        let n = 8;
        let t = 2048;
        let channels: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let ev = test_event(channels);
        let cfg = AnalysisConfig {
            window_length: 256,
            stride: 128,
            similarity_threshold: 0.9,
            ..Default::default()
        };
        let frames = frame_series(&ev, &cfg).unwrap();
        let edges: usize = frames.iter().map(|f| f.adjacency.edge_count()).sum();
        assert_eq!(edges, 0);
    }

    #[test]
    fn zero_variance_window_keeps_isolated_node() {
        let flat = vec![2.5f64; 64];
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.4).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 0.99 + 1e-4).collect();
        let ev = test_event(vec![flat, x, y]);
        let cfg = AnalysisConfig {
            window_length: 64,
            stride: 1,
            similarity_threshold: 0.8,
            ..Default::default()
        };
        let f = build_frame(&ev, 0, &cfg).unwrap();
        assert_eq!(f.degrees[0], 0);
        assert_eq!(f.betweenness[0], 0.0);
        assert!(f.adjacency.get(1, 2));
    }

    #[test]
    fn frame_count_arithmetic() {
        let mk = |t: usize| {
            test_event(
                (0..3)
                    .map(|c| (0..t).map(|i| ((i + c) as f64 * 0.7).sin()).collect())
                    .collect(),
            )
        };
        let cfg = AnalysisConfig {
            window_length: 100,
            stride: 50,
            ..Default::default()
        };
        assert_eq!(frame_series(&mk(1000), &cfg).unwrap().len(), 19);

        let cfg2 = AnalysisConfig {
            window_length: 100,
            stride: 900,
            ..Default::default()
        };
        assert_eq!(frame_series(&mk(1000), &cfg2).unwrap().len(), 2);

        let cfg3 = AnalysisConfig {
            window_length: 2000,
            stride: 1,
            ..Default::default()
        };
        assert!(frame_series(&mk(1000), &cfg3).is_err());
    }

    #[test]
    fn modularity_two_triangles() {
        let adj = adj_from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        let (q, partition) = modularity(&adj);
        assert!((q - 0.5).abs() < 1e-12);
        assert_eq!(partition[0], partition[1]);
        assert_eq!(partition[0], partition[2]);
        assert_eq!(partition[3], partition[4]);
        assert_ne!(partition[0], partition[3]);
        // exhaustive search confirms 0.5 is the global optimum
        assert!((exhaustive_best_q(&adj) - 0.5).abs() < 1e-12);
        // stored Q matches the stored partition
        assert!((partition_modularity(&adj, &partition) - q).abs() < 1e-12);
    }

    #[test]
    fn modularity_complete_graph_is_zero() {
        let mut edges = Vec::new();
        for i in 0..5 {
            for j in (i + 1)..5 {
                edges.push((i, j));
            }
        }
        let adj = adj_from_edges(5, &edges);
        let (q, partition) = modularity(&adj);
        assert!((q - 0.0).abs() < 1e-12);
        // single community: e_cc - a_c^2 = 1 - 1
        assert!(partition.iter().all(|&c| c == partition[0]));
        assert!((exhaustive_best_q(&adj) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn modularity_empty_graph() {
        let adj = Adjacency::new(4);
        let (q, partition) = modularity(&adj);
        assert_eq!(q, 0.0);
        assert_eq!(partition, vec![0, 1, 2, 3]);
    }

    #[test]
    fn greedy_never_beats_exhaustive_and_matches_pins() {
        // Pinned greedy Q per fixture guards against silent drift of the
        // deterministic merge order.
        let pins: [(u64, f64); 10] = [
            (0, 0.0),
            (1, 0.0799999999999999),
            (2, 0.2083333333333333),
            (3, 0.10000000000000009),
            (4, 0.195),
            (5, 0.16666666666666663),
            (6, 0.0799999999999999),
            (7, 0.04938271604938266),
            (8, 0.5),
            (9, 0.195),
        ];
        for (seed, pinned) in pins {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 4 + (seed as usize % 5);
            let adj = random_adjacency(&mut rng, n, 0.45);
            let (q, partition) = modularity(&adj);
            let opt = exhaustive_best_q(&adj);
            assert!(
                q <= opt + 1e-12,
                "greedy Q {q} exceeds exhaustive optimum {opt} (seed {seed})"
            );
            assert!((partition_modularity(&adj, &partition) - q).abs() < 1e-12);
            assert!(
                (q - pinned).abs() < 1e-12,
                "seed {seed}: greedy Q drifted: {q} vs pinned {pinned}"
            );
        }
    }

    #[test]
    fn betweenness_path_graph() {
        let adj = adj_from_edges(3, &[(0, 1), (1, 2)]);
        let b = betweenness(&adj);
        assert!((b[1] - 1.0).abs() < 1e-12);
        assert_eq!(b[0], 0.0);
        assert_eq!(b[2], 0.0);
    }

    #[test]
    fn betweenness_star() {
        let adj = adj_from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let b = betweenness(&adj);
        assert!((b[0] - 6.0).abs() < 1e-12, "C(4,2) leaf pairs through the hub");
        for leaf in 1..5 {
            assert_eq!(b[leaf], 0.0);
        }
    }

    #[test]
    fn betweenness_complete_graph_zero() {
        let mut edges = Vec::new();
        for i in 0..6 {
            for j in (i + 1)..6 {
                edges.push((i, j));
            }
        }
        let b = betweenness(&adj_from_edges(6, &edges));
        assert!(b.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn betweenness_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let n = rng.gen_range(2..=8);
            let p = rng.gen_range(0.2..0.8);
            let adj = random_adjacency(&mut rng, n, p);
            let fast = betweenness(&adj);
            let slow = brute_betweenness(&adj);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12, "{fast:?} vs {slow:?}");
            }
        }
    }

    #[test]
    fn relabeling_permutes_metrics() {
        // degrees and betweenness permute exactly, and the modularity of
        // the corresponding (relabeled) partition is unchanged. The greedy
        // search itself breaks ties by community id, so its Q is pinned by
        // the regression fixtures rather than asserted label-invariant.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.gen_range(3..=8);
            let adj = random_adjacency(&mut rng, n, 0.5);
            // random permutation
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let mut padj = Adjacency::new(n);
            for i in 0..n {
                for j in (i + 1)..n {
                    if adj.get(i, j) {
                        padj.set(perm[i], perm[j]);
                    }
                }
            }
            let f = FrameNetwork::from_adjacency(0, 0.0, adj);
            for i in 0..n {
                assert_eq!(f.degrees[i], padj.degree(perm[i]) as u32);
            }
            let pb = betweenness(&padj);
            for i in 0..n {
                assert!((f.betweenness[i] - pb[perm[i]]).abs() < 1e-12);
            }
            let mut ppart = vec![0u32; n];
            for i in 0..n {
                ppart[perm[i]] = f.partition[i];
            }
            assert!((partition_modularity(&padj, &ppart) - f.q).abs() < 1e-12);
        }
    }

    #[test]
    fn raising_threshold_never_adds_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 6;
        let t = 512;
        // mixed common-mode + noise so correlations span a range
        let common: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let channels: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: f64 = rng.gen_range(0.0..1.0);
                (0..t)
                    .map(|i| w * common[i] + (1.0 - w) * rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let ev = test_event(channels);
        for (lo, hi) in [(0.2, 0.4), (0.4, 0.7), (0.55, 0.9)] {
            let mk = |thr: f64| AnalysisConfig {
                window_length: 128,
                stride: 64,
                similarity_threshold: thr,
                ..Default::default()
            };
            let loose = frame_series(&ev, &mk(lo)).unwrap();
            let tight = frame_series(&ev, &mk(hi)).unwrap();
            for (a, b) in loose.iter().zip(&tight) {
                for i in 0..n {
                    for j in (i + 1)..n {
                        if b.adjacency.get(i, j) {
                            assert!(a.adjacency.get(i, j));
                        }
                    }
                }
            }
        }
    }
}

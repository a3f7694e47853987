//! Refinement engine internals: signature construction, interning, rounds.
//!
//! Within a round, tuple signatures are computed in parallel over chunks of
//! the immutable previous-round table; interning is a single serial pass in
//! tuple order, so color ids never depend on thread count.

use super::{
    ColorTable, EngineError, Histogram, Method, RefinementConfig, RefinementResult, Rounds,
};
use crate::geometry::{canonicalize_distances, distance_matrix, PointCloud, QuantizedDistanceMatrix};
use rayon::prelude::*;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::ops::Range;

/// FxHash-style multiply-xor hasher; fast on the u32 words signatures are
/// made of, and fully deterministic.
#[derive(Default)]
pub(crate) struct FxHasher {
    hash: u64,
}

const FX_SEED: u64 = 0x517c_c1b7_2722_0a95;

impl Hasher for FxHasher {
    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        let mut chunks = bytes.chunks_exact(8);
        for c in chunks.by_ref() {
            let w = u64::from_le_bytes(c.try_into().unwrap());
            self.hash = (self.hash.rotate_left(5) ^ w).wrapping_mul(FX_SEED);
        }
        let rem = chunks.remainder();
        if !rem.is_empty() {
            let mut w = 0u64;
            for (i, &b) in rem.iter().enumerate() {
                w |= (b as u64) << (8 * i);
            }
            self.hash = (self.hash.rotate_left(5) ^ w).wrapping_mul(FX_SEED);
        }
    }

    #[inline]
    fn write_u32(&mut self, v: u32) {
        self.hash = (self.hash.rotate_left(5) ^ v as u64).wrapping_mul(FX_SEED);
    }

    #[inline]
    fn write_usize(&mut self, v: usize) {
        self.hash = (self.hash.rotate_left(5) ^ v as u64).wrapping_mul(FX_SEED);
    }

    #[inline]
    fn finish(&self) -> u64 {
        self.hash
    }
}

type FxBuild = BuildHasherDefault<FxHasher>;

/// Signature -> dense color id dictionary; fresh per round, so each round's
/// ids are dense 0..C in first-encounter order.
struct Interner {
    map: HashMap<Box<[u32]>, u32, FxBuild>,
}

impl Interner {
    fn new() -> Self {
        Interner {
            map: HashMap::default(),
        }
    }

    #[inline]
    fn intern(&mut self, key: &[u32]) -> u32 {
        if let Some(&id) = self.map.get(key) {
            return id;
        }
        let id = self.map.len() as u32;
        self.map.insert(key.into(), id);
        id
    }

    fn len(&self) -> usize {
        self.map.len()
    }
}

/// A cloud reduced to what refinement sees: quantized classes and labels.
pub(crate) struct DistGraph {
    pub n: usize,
    pub classes: Vec<u32>,
    pub labels: Vec<u32>,
}

impl DistGraph {
    #[inline]
    fn class(&self, i: usize, j: usize) -> u32 {
        self.classes[i * self.n + j]
    }
}

/// Quantize all clouds jointly so the class alphabet is shared.
pub(crate) fn build_graphs(clouds: &[&PointCloud], tau: f64) -> Vec<DistGraph> {
    let mats: Vec<_> = clouds.iter().map(|c| distance_matrix(c)).collect();
    let refs: Vec<&_> = mats.iter().collect();
    let qs = canonicalize_distances(&refs, tau);
    clouds
        .iter()
        .zip(qs)
        .map(|(c, q)| DistGraph {
            n: c.len(),
            classes: q.classes,
            labels: c.labels.clone(),
        })
        .collect()
}

/// Flat buffer of concatenated signature keys for a chunk of tuples.
struct KeyChunk {
    words: Vec<u32>,
    ends: Vec<u32>,
}

impl KeyChunk {
    fn with_capacity(tuples: usize, words_per: usize) -> Self {
        KeyChunk {
            words: Vec::with_capacity(tuples * words_per),
            ends: Vec::with_capacity(tuples),
        }
    }

    fn keys(&self) -> impl Iterator<Item = &[u32]> {
        let mut start = 0usize;
        self.ends.iter().map(move |&e| {
            let s = start;
            start = e as usize;
            &self.words[s..e as usize]
        })
    }
}

const CHUNK: usize = 8192;

fn chunk_ranges(total: usize) -> Vec<Range<usize>> {
    (0..total)
        .step_by(CHUNK.max(1))
        .map(|s| s..(s + CHUNK).min(total))
        .collect()
}

/// Row-major tuple odometer; position 0 is the most significant digit.
struct Odometer {
    pos: Vec<usize>,
    n: usize,
}

impl Odometer {
    fn at(index: usize, n: usize, k: usize) -> Self {
        let mut pos = vec![0usize; k];
        let mut r = index;
        for j in (0..k).rev() {
            pos[j] = r % n;
            r /= n;
        }
        Odometer { pos, n }
    }

    #[inline]
    fn advance(&mut self) {
        for j in (0..self.pos.len()).rev() {
            self.pos[j] += 1;
            if self.pos[j] < self.n {
                return;
            }
            self.pos[j] = 0;
        }
    }
}

fn strides(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|j| n.pow((k - 1 - j) as u32)).collect()
}

/// Append sorted-run-length encoding with a leading run count.
fn rle_u32(sorted: &[u32], out: &mut Vec<u32>) {
    let header = out.len();
    out.push(0);
    let mut runs = 0u32;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut c = 1u32;
        while i + c as usize < sorted.len() && sorted[i + c as usize] == v {
            c += 1;
        }
        out.push(v);
        out.push(c);
        runs += 1;
        i += c as usize;
    }
    out[header] = runs;
}

fn rle_u64(sorted: &[u64], out: &mut Vec<u32>) {
    let header = out.len();
    out.push(0);
    let mut runs = 0u32;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut c = 1u32;
        while i + c as usize < sorted.len() && sorted[i + c as usize] == v {
            c += 1;
        }
        out.push((v >> 32) as u32);
        out.push(v as u32);
        out.push(c);
        runs += 1;
        i += c as usize;
    }
    out[header] = runs;
}

fn rle_u128(sorted: &[u128], out: &mut Vec<u32>) {
    let header = out.len();
    out.push(0);
    let mut runs = 0u32;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut c = 1u32;
        while i + c as usize < sorted.len() && sorted[i + c as usize] == v {
            c += 1;
        }
        out.push((v >> 96) as u32);
        out.push((v >> 64) as u32);
        out.push((v >> 32) as u32);
        out.push(v as u32);
        out.push(c);
        runs += 1;
        i += c as usize;
    }
    out[header] = runs;
}

/// Initial signature: ordered labels plus the ordered upper triangle of the
/// tuple's class matrix. Tuples with different equality patterns land in
/// different classes automatically because repeated nodes put zeros in the
/// matrix.
fn init_keys(g: &DistGraph, k: usize, range: Range<usize>) -> KeyChunk {
    let mut chunk = KeyChunk::with_capacity(range.len(), k + k * (k - 1) / 2);
    let mut odo = Odometer::at(range.start, g.n, k);
    for _ in range {
        for &p in &odo.pos {
            chunk.words.push(g.labels[p]);
        }
        for i in 0..k {
            for j in (i + 1)..k {
                chunk.words.push(g.class(odo.pos[i], odo.pos[j]));
            }
        }
        chunk.ends.push(chunk.words.len() as u32);
        odo.advance();
    }
    chunk
}

fn node_round_keys(
    g: &DistGraph,
    colors: &[u32],
    with_edges: bool,
    range: Range<usize>,
) -> KeyChunk {
    let n = g.n;
    let mut chunk = KeyChunk::with_capacity(range.len(), n + 2);
    let mut buf32: Vec<u32> = Vec::with_capacity(n);
    let mut buf64: Vec<u64> = Vec::with_capacity(n);
    for i in range {
        chunk.words.push(colors[i]);
        if with_edges {
            buf64.clear();
            for j in 0..n {
                if j != i {
                    buf64.push(((g.class(i, j) as u64) << 32) | colors[j] as u64);
                }
            }
            buf64.sort_unstable();
            rle_u64(&buf64, &mut chunk.words);
        } else {
            buf32.clear();
            for j in 0..n {
                if j != i {
                    buf32.push(colors[j]);
                }
            }
            buf32.sort_unstable();
            rle_u32(&buf32, &mut chunk.words);
        }
        chunk.ends.push(chunk.words.len() as u32);
    }
    chunk
}

/// One multiset of replaced-position colors per position, ordered over
/// positions; the candidate node ranges over all of V including the current
/// occupant.
fn kwl_keys(
    g: &DistGraph,
    colors: &[u32],
    k: usize,
    strd: &[usize],
    range: Range<usize>,
) -> KeyChunk {
    let n = g.n;
    let mut chunk = KeyChunk::with_capacity(range.len(), 1 + k * (n + 1));
    let mut buf: Vec<u32> = Vec::with_capacity(n);
    let mut odo = Odometer::at(range.start, n, k);
    for t in range {
        chunk.words.push(colors[t]);
        for j in 0..k {
            let base = t - odo.pos[j] * strd[j];
            buf.clear();
            let mut idx = base;
            for _ in 0..n {
                buf.push(colors[idx]);
                idx += strd[j];
            }
            buf.sort_unstable();
            rle_u32(&buf, &mut chunk.words);
        }
        chunk.ends.push(chunk.words.len() as u32);
        odo.advance();
    }
    chunk
}

/// Folklore update: for every candidate node an ordered vector of the k
/// replaced-tuple colors, aggregated as one multiset over candidates.
fn kfwl_keys(
    g: &DistGraph,
    colors: &[u32],
    k: usize,
    strd: &[usize],
    range: Range<usize>,
) -> KeyChunk {
    assert!(k <= 4, "packed folklore signatures support k <= 4");
    let n = g.n;
    let mut chunk = KeyChunk::with_capacity(range.len(), 1 + n * (k + 1));
    let mut buf: Vec<u128> = Vec::with_capacity(n);
    let mut bases: Vec<usize> = vec![0; k];
    let mut odo = Odometer::at(range.start, n, k);
    for t in range {
        chunk.words.push(colors[t]);
        for j in 0..k {
            bases[j] = t - odo.pos[j] * strd[j];
        }
        buf.clear();
        for w in 0..n {
            let mut packed = 0u128;
            for j in 0..k {
                packed = (packed << 32) | colors[bases[j] + w * strd[j]] as u128;
            }
            buf.push(packed);
        }
        buf.sort_unstable();
        rle_u128(&buf, &mut chunk.words);
        chunk.ends.push(chunk.words.len() as u32);
        odo.advance();
    }
    chunk
}

/// Edge state: the edge's distance class plus, for every ordered position
/// pair (u, v) with u < v, the multiset of colors of tuples holding node i
/// at u and node j at v. Computed for all ordered (i, j) including i == j.
fn kewl_edge_keys(
    g: &DistGraph,
    colors: &[u32],
    k: usize,
    strd: &[usize],
    range: Range<usize>,
) -> KeyChunk {
    let n = g.n;
    let free = k - 2;
    let free_count = n.pow(free as u32);
    let mut chunk = KeyChunk::with_capacity(range.len(), 2 + free_count);
    let mut buf: Vec<u32> = Vec::with_capacity(free_count);
    for e in range {
        let (i, j) = (e / n, e % n);
        chunk.words.push(g.class(i, j));
        for u in 0..k {
            for v in (u + 1)..k {
                let base = i * strd[u] + j * strd[v];
                buf.clear();
                // enumerate the k-2 free positions
                let free_strides: Vec<usize> = (0..k)
                    .filter(|&p| p != u && p != v)
                    .map(|p| strd[p])
                    .collect();
                match free {
                    0 => buf.push(colors[base]),
                    1 => {
                        let s = free_strides[0];
                        for w in 0..n {
                            buf.push(colors[base + w * s]);
                        }
                    }
                    _ => {
                        let mut odo = vec![0usize; free];
                        'outer: loop {
                            let mut idx = base;
                            for (d, &s) in odo.iter().zip(free_strides.iter()) {
                                idx += d * s;
                            }
                            buf.push(colors[idx]);
                            for d in (0..free).rev() {
                                odo[d] += 1;
                                if odo[d] < n {
                                    continue 'outer;
                                }
                                odo[d] = 0;
                            }
                            break;
                        }
                    }
                }
                buf.sort_unstable();
                rle_u32(&buf, &mut chunk.words);
            }
        }
        chunk.ends.push(chunk.words.len() as u32);
    }
    chunk
}

/// Edge-enhanced tuple update: like the k-WL update but every neighbor
/// contributes the pair (its color, the state of the edge between the
/// replaced-out node and the replacement).
fn kewl_tuple_keys(
    g: &DistGraph,
    colors: &[u32],
    edge_colors: &[u32],
    k: usize,
    strd: &[usize],
    range: Range<usize>,
) -> KeyChunk {
    let n = g.n;
    let mut chunk = KeyChunk::with_capacity(range.len(), 1 + k * (n + 1));
    let mut buf: Vec<u64> = Vec::with_capacity(n);
    let mut odo = Odometer::at(range.start, n, k);
    for t in range {
        chunk.words.push(colors[t]);
        for j in 0..k {
            let old = odo.pos[j];
            let base = t - old * strd[j];
            buf.clear();
            let mut idx = base;
            for w in 0..n {
                let ec = edge_colors[old * n + w];
                buf.push(((colors[idx] as u64) << 32) | ec as u64);
                idx += strd[j];
            }
            buf.sort_unstable();
            rle_u64(&buf, &mut chunk.words);
        }
        chunk.ends.push(chunk.words.len() as u32);
        odo.advance();
    }
    chunk
}

/// Build keys for all graphs in parallel chunks, then intern serially in
/// graph-then-tuple order.
fn intern_round(
    graphs: &[DistGraph],
    counts: &[usize],
    interner: &mut Interner,
    build: impl Fn(usize, Range<usize>) -> KeyChunk + Sync,
) -> Vec<Vec<u32>> {
    let chunk_lists: Vec<Vec<KeyChunk>> = graphs
        .iter()
        .enumerate()
        .map(|(gi, _)| {
            chunk_ranges(counts[gi])
                .into_par_iter()
                .map(|r| build(gi, r))
                .collect()
        })
        .collect();
    chunk_lists
        .into_iter()
        .zip(counts)
        .map(|(chunks, &count)| {
            let mut colors = Vec::with_capacity(count);
            for chunk in &chunks {
                for key in chunk.keys() {
                    colors.push(interner.intern(key));
                }
            }
            colors
        })
        .collect()
}

fn histogram(colors: &[u32]) -> Histogram {
    let mut counts: HashMap<u32, u64, FxBuild> = HashMap::default();
    for &c in colors {
        *counts.entry(c).or_default() += 1;
    }
    let mut h: Histogram = counts.into_iter().collect();
    h.sort_unstable();
    h
}

pub(crate) struct RunSide {
    pub histograms: Vec<Histogram>,
    pub colors: Vec<u32>,
}

pub(crate) struct MultiRun {
    pub sides: Vec<RunSide>,
    pub stable_round: Option<usize>,
    pub rounds_run: usize,
    k: usize,
    ns: Vec<usize>,
}

impl MultiRun {
    pub(crate) fn into_results(self) -> Vec<RefinementResult> {
        let MultiRun {
            sides,
            stable_round,
            rounds_run,
            k,
            ns,
        } = self;
        sides
            .into_iter()
            .zip(ns)
            .map(|(side, n)| {
                let node_colors = pool_node_colors(&side.colors, n, k);
                RefinementResult {
                    per_round_histograms: side.histograms,
                    stable_round,
                    final_table: ColorTable {
                        colors: side.colors,
                        round: rounds_run,
                    },
                    node_colors,
                }
            })
            .collect()
    }
}

/// Node m's color pools the multiset of final colors of tuples whose first
/// entry is m; tuple index blocks are contiguous in the first position.
fn pool_node_colors(colors: &[u32], n: usize, k: usize) -> Vec<u32> {
    if k == 1 {
        return colors.to_vec();
    }
    let stride0 = n.pow((k - 1) as u32);
    let mut interner = Interner::new();
    let mut key: Vec<u32> = Vec::new();
    (0..n)
        .map(|m| {
            let mut block: Vec<u32> = colors[m * stride0..(m + 1) * stride0].to_vec();
            block.sort_unstable();
            key.clear();
            rle_u32(&block, &mut key);
            interner.intern(&key)
        })
        .collect()
}

fn histograms_diverge(sides: &[RunSide]) -> bool {
    let last = sides[0].histograms.len() - 1;
    sides
        .iter()
        .skip(1)
        .any(|s| s.histograms[last] != sides[0].histograms[last])
}

/// Run one refinement over several clouds with shared hashing.
///
/// `stop_on_divergence` ends the run as soon as some round's histograms
/// differ between clouds (the verdict cannot change back afterwards).
pub(crate) fn run_multi(
    graphs: &[DistGraph],
    cfg: &RefinementConfig,
    stop_on_divergence: bool,
) -> Result<MultiRun, EngineError> {
    let k = cfg.effective_k();
    let method = cfg.method;
    let counts: Vec<usize> = graphs.iter().map(|g| g.n.pow(k as u32)).collect();
    let strd: Vec<Vec<usize>> = graphs.iter().map(|g| strides(g.n, k)).collect();

    let mut interner = Interner::new();
    let init = intern_round(graphs, &counts, &mut interner, |gi, r| {
        if k == 1 {
            let g = &graphs[gi];
            let mut chunk = KeyChunk::with_capacity(r.len(), 1);
            for i in r {
                chunk.words.push(g.labels[i]);
                chunk.ends.push(chunk.words.len() as u32);
            }
            chunk
        } else {
            init_keys(&graphs[gi], k, r)
        }
    });
    let mut distinct = interner.len();
    drop(interner);

    let mut sides: Vec<RunSide> = init
        .into_iter()
        .map(|colors| RunSide {
            histograms: vec![histogram(&colors)],
            colors,
        })
        .collect();

    let total_tuples: usize = counts.iter().sum();
    let budget = match cfg.rounds {
        Rounds::Fixed(r) => r,
        Rounds::UntilStable => total_tuples + 1,
    };

    let mut run = MultiRun {
        sides,
        stable_round: None,
        rounds_run: 0,
        k,
        ns: graphs.iter().map(|g| g.n).collect(),
    };

    if stop_on_divergence && histograms_diverge(&run.sides) {
        return Ok(run);
    }

    for _t in 1..=budget {
        let prev: Vec<&[u32]> = run.sides.iter().map(|s| s.colors.as_slice()).collect();

        // Edge states (one fresh dictionary per round, shared across clouds)
        // are computed first from the current tuple colors.
        let edge_colors: Option<Vec<Vec<u32>>> = if method == Method::KEwl {
            let edge_counts: Vec<usize> = graphs.iter().map(|g| g.n * g.n).collect();
            let mut edge_interner = Interner::new();
            Some(intern_round(
                graphs,
                &edge_counts,
                &mut edge_interner,
                |gi, r| kewl_edge_keys(&graphs[gi], prev[gi], k, &strd[gi], r),
            ))
        } else {
            None
        };

        let mut interner = Interner::new();
        let new_colors = intern_round(graphs, &counts, &mut interner, |gi, r| {
            let g = &graphs[gi];
            match method {
                Method::Wl1 => node_round_keys(g, prev[gi], false, r),
                Method::Wl1e => node_round_keys(g, prev[gi], true, r),
                Method::KWl => kwl_keys(g, prev[gi], k, &strd[gi], r),
                Method::KFwl => kfwl_keys(g, prev[gi], k, &strd[gi], r),
                Method::KEwl => kewl_tuple_keys(
                    g,
                    prev[gi],
                    &edge_colors.as_ref().unwrap()[gi],
                    k,
                    &strd[gi],
                    r,
                ),
            }
        });
        let new_distinct = interner.len();
        drop(interner);

        if new_distinct == distinct {
            // The joint partition over all clouds' tuples stopped refining;
            // later rounds only relabel bijectively.
            run.stable_round = Some(run.rounds_run);
            break;
        }
        distinct = new_distinct;
        run.rounds_run += 1;
        for (side, colors) in run.sides.iter_mut().zip(new_colors) {
            side.histograms.push(histogram(&colors));
            side.colors = colors;
        }
        if stop_on_divergence && histograms_diverge(&run.sides) {
            break;
        }
    }

    if run.stable_round.is_none() && matches!(cfg.rounds, Rounds::UntilStable) {
        // Strict refinement can happen at most `total_tuples` times.
        run.stable_round = Some(run.rounds_run);
    }
    Ok(run)
}

/// Initial tuple coloring for a single quantized cloud, with a private
/// dictionary; for shared cross-cloud hashing run the pair entry points.
pub(crate) fn init_tuple_colors(
    q: &QuantizedDistanceMatrix,
    labels: &[u32],
    k: usize,
) -> ColorTable {
    let g = DistGraph {
        n: q.n,
        classes: q.classes.clone(),
        labels: labels.to_vec(),
    };
    let count = g.n.pow(k as u32);
    let mut interner = Interner::new();
    let colors = intern_round(std::slice::from_ref(&g), &[count], &mut interner, |_, r| {
        if k == 1 {
            let mut chunk = KeyChunk::with_capacity(r.len(), 1);
            for i in r {
                chunk.words.push(g.labels[i]);
                chunk.ends.push(chunk.words.len() as u32);
            }
            chunk
        } else {
            init_keys(&g, k, r)
        }
    })
    .pop()
    .unwrap();
    ColorTable { colors, round: 0 }
}

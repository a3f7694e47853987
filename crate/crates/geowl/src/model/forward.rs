//! The forward pass.
//!
//! Tuple updates within a round are data-parallel over tuples reading the
//! immutable previous state; every tuple's own computation runs in a fixed
//! order, so outputs are bitwise independent of the thread count. Final
//! reductions (readouts) are serial in tuple order.

use super::weights::{RoundWeights, WeightSet};
use super::{rbf_expand, ModelConfig, ModelError, ModelOutput, RbfParams, Variant};
use crate::geometry::{center_coordinates, distance_matrix, PointCloud, SquareMatrix};
use rayon::prelude::*;
use std::collections::HashMap;

/// Representations of all `n^k` ordered tuples, row-major in the tuple
/// index (first position most significant).
#[derive(Debug, Clone)]
pub struct TupleReps {
    pub n: usize,
    pub k: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl TupleReps {
    pub fn count(&self) -> usize {
        self.n.pow(self.k as u32)
    }

    pub fn rep(&self, tuple_index: usize) -> &[f64] {
        &self.data[tuple_index * self.dim..(tuple_index + 1) * self.dim]
    }
}

fn strides(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|j| n.pow((k - 1 - j) as u32)).collect()
}

fn decode(mut t: usize, n: usize, k: usize) -> Vec<usize> {
    let mut pos = vec![0usize; k];
    for j in (0..k).rev() {
        pos[j] = t % n;
        t /= n;
    }
    pos
}

struct Ctx {
    dmat: SquareMatrix,
    /// Flattened per-edge expansions, n*n rows of width H_e.
    rbf: Vec<f64>,
    rbf_dim: usize,
}

impl Ctx {
    fn new(pc: &PointCloud, params: &RbfParams) -> Ctx {
        let dmat = distance_matrix(pc);
        let n = pc.len();
        let dim = params.betas.len();
        let mut rbf = vec![0.0; n * n * dim];
        for (e, chunk) in rbf.chunks_exact_mut(dim).enumerate() {
            chunk.copy_from_slice(&rbf_expand(dmat.data[e], params));
        }
        Ctx {
            dmat,
            rbf,
            rbf_dim: dim,
        }
    }

    fn rbf_of(&self, i: usize, j: usize) -> &[f64] {
        let e = i * self.dmat.n + j;
        &self.rbf[e * self.rbf_dim..(e + 1) * self.rbf_dim]
    }
}

pub struct Model {
    cfg: ModelConfig,
    weights: WeightSet,
    rbf_params: RbfParams,
}

impl Model {
    pub fn new(cfg: ModelConfig) -> Result<Model, ModelError> {
        if cfg.k < 2 {
            return Err(ModelError::OrderTooSmall(cfg.k));
        }
        let rbf_params = RbfParams::standard(cfg.rbf_dim);
        let weights = WeightSet::new(&cfg);
        Ok(Model {
            cfg,
            weights,
            rbf_params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    fn guard(&self, n: usize) -> Result<usize, ModelError> {
        let count = (n as u128).pow(self.cfg.k as u32);
        if count > self.cfg.tuple_cap as u128 {
            return Err(ModelError::TooManyTuples {
                n,
                k: self.cfg.k,
                cap: self.cfg.tuple_cap,
            });
        }
        Ok(count as usize)
    }

    pub fn forward(&self, pc: &PointCloud) -> Result<ModelOutput, ModelError> {
        let ctx = Ctx::new(pc, &self.rbf_params);
        let mut reps = self.init_reps_ctx(pc, &ctx)?;
        for t in 0..self.cfg.rounds {
            reps = self.step_ctx(&reps, &ctx, t, false);
        }
        Ok(self.outputs(pc, reps))
    }

    /// Initial tuple representations from labels and the ordered distance
    /// matrix (Hadamard products of per-position and per-pair embeddings,
    /// times an equality-pattern embedding).
    pub fn init_reps(&self, pc: &PointCloud) -> Result<TupleReps, ModelError> {
        let ctx = Ctx::new(pc, &self.rbf_params);
        self.init_reps_ctx(pc, &ctx)
    }

    /// One message-passing round of the configured variant.
    pub fn step(&self, pc: &PointCloud, reps: &TupleReps, round: usize) -> TupleReps {
        let ctx = Ctx::new(pc, &self.rbf_params);
        self.step_ctx(reps, &ctx, round, false)
    }

    pub fn readout_scalar(&self, reps: &TupleReps) -> f64 {
        let w = &self.weights;
        let act = self.cfg.activation;
        let kk = w.hidden;
        let n = reps.n;
        let k = reps.k;
        let mut sum_diag = vec![0.0; kk];
        let mut sum_off = vec![0.0; kk];
        let mut hid = vec![0.0; kk];
        let mut out = vec![0.0; kk];
        // a tuple is diagonal iff all positions hold the same node
        let diag_step = if n > 1 { (reps.count() - 1) / (n - 1) } else { 1 };
        for t in 0..reps.count() {
            let is_diag = t % diag_step == 0 && decode(t, n, k).windows(2).all(|w| w[0] == w[1]);
            let (mlp, acc) = if is_diag {
                (&w.out_diag, &mut sum_diag)
            } else {
                (&w.out_off, &mut sum_off)
            };
            mlp.apply(act, reps.rep(t), &mut hid, &mut out);
            for (a, o) in acc.iter_mut().zip(out.iter()) {
                *a += o;
            }
        }
        let joined: Vec<f64> = sum_diag.into_iter().chain(sum_off).collect();
        let mut scalar = [0.0];
        w.out_final.apply(act, &joined, &mut hid, &mut scalar);
        scalar[0]
    }

    /// One vector per node, pooling all tuples whose first entry is that
    /// node.
    pub fn node_reps(&self, reps: &TupleReps) -> Vec<Vec<f64>> {
        let w = &self.weights;
        let act = self.cfg.activation;
        let kk = w.hidden;
        let n = reps.n;
        let block = reps.count() / n;
        let mut hid = vec![0.0; kk];
        let mut out = vec![0.0; kk];
        (0..n)
            .map(|m| {
                let mut acc = vec![0.0; kk];
                for t in m * block..(m + 1) * block {
                    w.node_phi.apply(act, reps.rep(t), &mut hid, &mut out);
                    for (a, o) in acc.iter_mut().zip(out.iter()) {
                        *a += o;
                    }
                }
                let mut rep = vec![0.0; kk];
                w.node_comb.apply(act, &acc, &mut hid, &mut rep);
                rep
            })
            .collect()
    }

    /// Equivariant vector: each node's centered coordinate weighted by a
    /// scalar function of its representation.
    pub fn equivariant_head(&self, pc: &PointCloud, node_reps: &[Vec<f64>]) -> [f64; 3] {
        let centered = center_coordinates(pc);
        let mut hid = vec![0.0; self.weights.hidden];
        let mut out = [0.0; 3];
        for (rep, x) in node_reps.iter().zip(centered.coords.iter()) {
            let mut wgt = [0.0];
            self.weights.equiv.apply(self.cfg.activation, rep, &mut hid, &mut wgt);
            for l in 0..3 {
                out[l] += wgt[0] * x[l];
            }
        }
        out
    }

    fn outputs(&self, pc: &PointCloud, reps: TupleReps) -> ModelOutput {
        let scalar = self.readout_scalar(&reps);
        let node_reps = self.node_reps(&reps);
        let equivariant = self.equivariant_head(pc, &node_reps);
        ModelOutput {
            tuple_reps: reps,
            scalar,
            node_reps,
            equivariant,
        }
    }

    fn init_reps_ctx(&self, pc: &PointCloud, ctx: &Ctx) -> Result<TupleReps, ModelError> {
        let n = pc.len();
        let count = self.guard(n)?;
        let k = self.cfg.k;
        let kk = self.cfg.hidden_dim;
        let act = self.cfg.activation;
        let w = &self.weights;

        // Per-position transforms of each distinct label's embedding.
        let mut label_maps: Vec<HashMap<u32, Vec<f64>>> = vec![HashMap::new(); k];
        let mut hid = vec![0.0; kk];
        for &label in &pc.labels {
            if label_maps[0].contains_key(&label) {
                continue;
            }
            let emb = w.label_embedding(label);
            for (i, map) in label_maps.iter_mut().enumerate() {
                let mut out = vec![0.0; kk];
                w.f_z[i].apply(act, &emb, &mut hid, &mut out);
                map.insert(label, out);
            }
        }

        // Per-pair transforms of each edge's expansion.
        let pair_count = k * (k - 1) / 2;
        let mut edge_maps: Vec<Vec<f64>> = Vec::with_capacity(pair_count);
        for p in 0..pair_count {
            let mut flat = vec![0.0; n * n * kk];
            for e in 0..n * n {
                let (i, j) = (e / n, e % n);
                let mut out = vec![0.0; kk];
                w.f_e[p].apply(act, ctx.rbf_of(i, j), &mut hid, &mut out);
                flat[e * kk..(e + 1) * kk].copy_from_slice(&out);
            }
            edge_maps.push(flat);
        }

        let mut data = vec![0.0; count * kk];
        data.par_chunks_mut(kk).enumerate().for_each(|(t, out)| {
            let pos = decode(t, n, k);
            // equality pattern: first-occurrence encoding of the positions
            let mut pat = vec![0u8; k];
            for i in 0..k {
                pat[i] = pos.iter().take(i).position(|&p| p == pos[i]).unwrap_or(i) as u8;
            }
            let pat = {
                // renumber to a restricted growth string
                let mut next = 0u8;
                let mut seen: Vec<(u8, u8)> = Vec::new();
                pat.iter()
                    .map(|&v| {
                        if let Some(&(_, r)) = seen.iter().find(|&&(o, _)| o == v) {
                            r
                        } else {
                            let r = next;
                            seen.push((v, r));
                            next += 1;
                            r
                        }
                    })
                    .collect::<Vec<u8>>()
            };
            out.copy_from_slice(&w.patterns[&pat]);
            for (i, p) in pos.iter().enumerate() {
                let z = &label_maps[i][&pc.labels[*p]];
                for (o, v) in out.iter_mut().zip(z.iter()) {
                    *o *= v;
                }
            }
            let mut pair = 0usize;
            for i in 0..k {
                for j in (i + 1)..k {
                    let e = pos[i] * n + pos[j];
                    let em = &edge_maps[pair][e * kk..(e + 1) * kk];
                    for (o, v) in out.iter_mut().zip(em.iter()) {
                        *o *= v;
                    }
                    pair += 1;
                }
            }
        });

        Ok(TupleReps {
            n,
            k,
            dim: kk,
            data,
        })
    }

    fn step_ctx(&self, reps: &TupleReps, ctx: &Ctx, round: usize, naive: bool) -> TupleReps {
        match (&self.weights.rounds[round], self.cfg.variant) {
            (RoundWeights::Plain { .. }, Variant::Plain) => self.step_plain(reps, round),
            (RoundWeights::Folklore { .. }, Variant::F) => {
                if naive {
                    self.step_folklore_naive(reps, round)
                } else {
                    self.step_folklore(reps, round)
                }
            }
            (RoundWeights::Edge { .. }, Variant::E) => self.step_edge(reps, ctx, round),
            _ => unreachable!("round weights match the configured variant"),
        }
    }

    /// Per-position neighbor sums: the replaced position ranges over all of
    /// V, so the sum only depends on the remaining positions and can be
    /// computed once per axis.
    fn step_plain(&self, reps: &TupleReps, round: usize) -> TupleReps {
        let RoundWeights::Plain { phis, comb } = &self.weights.rounds[round] else {
            unreachable!()
        };
        let (n, k, kk) = (reps.n, reps.k, reps.dim);
        let act = self.cfg.activation;
        let count = reps.count();
        let strd = strides(n, k);

        // S[j] holds, for every tuple, the pooled transformed neighbors at
        // position j.
        let mut sums: Vec<Vec<f64>> = Vec::with_capacity(k);
        for j in 0..k {
            let mut phi = vec![0.0; count * kk];
            phi.par_chunks_mut(kk).enumerate().for_each(|(t, out)| {
                let mut hid = vec![0.0; phis[j].dhid];
                phis[j].apply(act, reps.rep(t), &mut hid, out);
            });
            let mut s = vec![0.0; count * kk];
            let rows = count / n;
            for row in 0..rows {
                let high = row / strd[j];
                let low = row % strd[j];
                let base = high * strd[j] * n + low;
                let mut acc = vec![0.0; kk];
                for w in 0..n {
                    let t = base + w * strd[j];
                    for (a, v) in acc.iter_mut().zip(&phi[t * kk..(t + 1) * kk]) {
                        *a += v;
                    }
                }
                for w in 0..n {
                    let t = base + w * strd[j];
                    s[t * kk..(t + 1) * kk].copy_from_slice(&acc);
                }
            }
            sums.push(s);
        }

        let mut data = vec![0.0; count * kk];
        data.par_chunks_mut(kk).enumerate().for_each(|(t, out)| {
            let mut joined = Vec::with_capacity((k + 1) * kk);
            joined.extend_from_slice(reps.rep(t));
            for s in &sums {
                joined.extend_from_slice(&s[t * kk..(t + 1) * kk]);
            }
            let mut hid = vec![0.0; comb.dhid];
            comb.apply(act, &joined, &mut hid, out);
        });
        TupleReps {
            n,
            k,
            dim: kk,
            data,
        }
    }

    /// Folklore update via precomputed first-layer blocks: for candidate
    /// node w the ordered replacement vector's hidden preactivation is the
    /// sum of per-position contributions, so each is computed once per
    /// tuple instead of once per (tuple, candidate).
    fn step_folklore(&self, reps: &TupleReps, round: usize) -> TupleReps {
        let RoundWeights::Folklore { phi, comb } = &self.weights.rounds[round] else {
            unreachable!()
        };
        let (n, k, kk) = (reps.n, reps.k, reps.dim);
        let act = self.cfg.activation;
        let count = reps.count();
        let strd = strides(n, k);
        let dh = phi.dhid;

        // blocks[i][t'] = W1[:, i*K..(i+1)*K] h_{t'}
        let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(k);
        for i in 0..k {
            let mut b = vec![0.0; count * dh];
            b.par_chunks_mut(dh).enumerate().for_each(|(t, out)| {
                phi.layer1_block(reps.rep(t), i * kk, out);
            });
            blocks.push(b);
        }

        let mut data = vec![0.0; count * kk];
        data.par_chunks_mut(kk).enumerate().for_each(|(t, out)| {
            let pos = decode(t, n, k);
            let bases: Vec<usize> = (0..k).map(|i| t - pos[i] * strd[i]).collect();
            let mut hidden_sum = vec![0.0; dh];
            let mut hid = vec![0.0; dh];
            for w in 0..n {
                hid.copy_from_slice(&phi.b1);
                for i in 0..k {
                    let tt = bases[i] + w * strd[i];
                    for (h, v) in hid.iter_mut().zip(&blocks[i][tt * dh..(tt + 1) * dh]) {
                        *h += v;
                    }
                }
                act.apply(&mut hid);
                for (s, h) in hidden_sum.iter_mut().zip(hid.iter()) {
                    *s += h;
                }
            }
            let mut msg = vec![0.0; kk];
            phi.finish_summed(&hidden_sum, n as f64, &mut msg);
            let joined: Vec<f64> = reps.rep(t).iter().chain(msg.iter()).copied().collect();
            let mut chid = vec![0.0; comb.dhid];
            comb.apply(act, &joined, &mut chid, out);
        });
        TupleReps {
            n,
            k,
            dim: kk,
            data,
        }
    }

    /// Reference folklore update: concatenates the ordered replacement
    /// vector per candidate and applies the map directly.
    fn step_folklore_naive(&self, reps: &TupleReps, round: usize) -> TupleReps {
        let RoundWeights::Folklore { phi, comb } = &self.weights.rounds[round] else {
            unreachable!()
        };
        let (n, k, kk) = (reps.n, reps.k, reps.dim);
        let act = self.cfg.activation;
        let count = reps.count();
        let strd = strides(n, k);
        let mut data = vec![0.0; count * kk];
        data.par_chunks_mut(kk).enumerate().for_each(|(t, out)| {
            let pos = decode(t, n, k);
            let mut msg = vec![0.0; kk];
            let mut one = vec![0.0; kk];
            let mut hid = vec![0.0; phi.dhid];
            let mut joined = vec![0.0; k * kk];
            for w in 0..n {
                for i in 0..k {
                    let tt = t - pos[i] * strd[i] + w * strd[i];
                    joined[i * kk..(i + 1) * kk].copy_from_slice(reps.rep(tt));
                }
                phi.apply(act, &joined, &mut hid, &mut one);
                for (m, o) in msg.iter_mut().zip(one.iter()) {
                    *m += o;
                }
            }
            let joined2: Vec<f64> = reps.rep(t).iter().chain(msg.iter()).copied().collect();
            let mut chid = vec![0.0; comb.dhid];
            comb.apply(act, &joined2, &mut chid, out);
        });
        TupleReps {
            n,
            k,
            dim: kk,
            data,
        }
    }

    /// Edge-enhanced update: per-round edge states pool, for every ordered
    /// position pair, the tuples holding the edge's endpoints at those
    /// positions; each neighbor then contributes (its representation, the
    /// state of the replaced-to-replacement edge).
    fn step_edge(&self, reps: &TupleReps, ctx: &Ctx, round: usize) -> TupleReps {
        let RoundWeights::Edge {
            pair_phis,
            edge,
            phis,
            comb,
        } = &self.weights.rounds[round]
        else {
            unreachable!()
        };
        let (n, k, kk) = (reps.n, reps.k, reps.dim);
        let act = self.cfg.activation;
        let count = reps.count();
        let strd = strides(n, k);
        let pair_count = k * (k - 1) / 2;

        // pooled[p][edge] = sum over tuples with the endpoints at pair p
        let mut pooled: Vec<Vec<f64>> = vec![vec![0.0; n * n * kk]; pair_count];
        {
            let mut phi = vec![0.0; count * kk];
            for (p, pw) in pair_phis.iter().enumerate() {
                phi.par_chunks_mut(kk).enumerate().for_each(|(t, out)| {
                    let mut hid = vec![0.0; pw.dhid];
                    pw.apply(act, reps.rep(t), &mut hid, out);
                });
                // p-th pair (u, v) in lexicographic order
                let (mut u, mut v, mut idx) = (0, 1, 0);
                'find: for a in 0..k {
                    for b in (a + 1)..k {
                        if idx == p {
                            u = a;
                            v = b;
                            break 'find;
                        }
                        idx += 1;
                    }
                }
                let acc = &mut pooled[p];
                for t in 0..count {
                    let pos = decode(t, n, k);
                    let e = pos[u] * n + pos[v];
                    for (a, x) in acc[e * kk..(e + 1) * kk]
                        .iter_mut()
                        .zip(&phi[t * kk..(t + 1) * kk])
                    {
                        *a += x;
                    }
                }
            }
        }

        // edge states for all ordered pairs including i == j
        let he = ctx.rbf_dim;
        let mut estates = vec![0.0; n * n * kk];
        estates.par_chunks_mut(kk).enumerate().for_each(|(e, out)| {
            let mut joined = Vec::with_capacity(he + pair_count * kk);
            joined.extend_from_slice(&ctx.rbf[e * he..(e + 1) * he]);
            for p in pooled.iter() {
                joined.extend_from_slice(&p[e * kk..(e + 1) * kk]);
            }
            let mut hid = vec![0.0; edge.dhid];
            edge.apply(act, &joined, &mut hid, out);
        });

        // per-position messages over (neighbor rep, connecting edge state)
        let mut data = vec![0.0; count * kk];
        let dh = phis[0].dhid;
        // first-layer blocks of each phi applied to reps and edge states
        let mut rep_blocks: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut edge_blocks: Vec<Vec<f64>> = Vec::with_capacity(k);
        for j in 0..k {
            let mut rb = vec![0.0; count * dh];
            rb.par_chunks_mut(dh).enumerate().for_each(|(t, out)| {
                phis[j].layer1_block(reps.rep(t), 0, out);
            });
            rep_blocks.push(rb);
            let mut eb = vec![0.0; n * n * dh];
            eb.par_chunks_mut(dh).enumerate().for_each(|(e, out)| {
                phis[j].layer1_block(&estates[e * kk..(e + 1) * kk], kk, out);
            });
            edge_blocks.push(eb);
        }

        data.par_chunks_mut(kk).enumerate().for_each(|(t, out)| {
            let pos = decode(t, n, k);
            let mut joined = Vec::with_capacity((k + 1) * kk);
            joined.extend_from_slice(reps.rep(t));
            let mut hid = vec![0.0; dh];
            let mut msg = vec![0.0; kk];
            for j in 0..k {
                let base = t - pos[j] * strd[j];
                let mut hidden_sum = vec![0.0; dh];
                for w in 0..n {
                    let tt = base + w * strd[j];
                    let e = pos[j] * n + w;
                    hid.copy_from_slice(&phis[j].b1);
                    for (h, v) in hid.iter_mut().zip(&rep_blocks[j][tt * dh..(tt + 1) * dh]) {
                        *h += v;
                    }
                    for (h, v) in hid.iter_mut().zip(&edge_blocks[j][e * dh..(e + 1) * dh]) {
                        *h += v;
                    }
                    act.apply(&mut hid);
                    for (s, h) in hidden_sum.iter_mut().zip(hid.iter()) {
                        *s += h;
                    }
                }
                phis[j].finish_summed(&hidden_sum, n as f64, &mut msg);
                joined.extend_from_slice(&msg);
            }
            let mut chid = vec![0.0; comb.dhid];
            comb.apply(act, &joined, &mut chid, out);
        });
        TupleReps {
            n,
            k,
            dim: kk,
            data,
        }
    }

    /// Full forward pass with the reference (non-fused) folklore step; only
    /// meaningful for the `f` variant, used to validate the fast path.
    pub fn forward_folklore_naive(&self, pc: &PointCloud) -> Result<ModelOutput, ModelError> {
        let ctx = Ctx::new(pc, &self.rbf_params);
        let mut reps = self.init_reps_ctx(pc, &ctx)?;
        for t in 0..self.cfg.rounds {
            reps = self.step_ctx(&reps, &ctx, t, true);
        }
        Ok(self.outputs(pc, reps))
    }
}

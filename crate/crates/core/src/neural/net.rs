//! Forward and backward passes.
//!
//! Each reaction yields two branch inputs: reactant words fused with the edit
//! tags, and product words fused with the same edit tags. Both branches run
//! through the same BiLSTM weights; the two 2H representations feed a tanh
//! MLP and a sigmoid output. The backward pass is exact reverse-mode over the
//! whole composition, including the touched embedding rows.

use super::matrix::{add_assign, dot, real, sigmoid, Real};
use super::params::{GateParams, LstmParams, ModelParams};
use super::vocab::{Vocab, PAD};
use super::NeuralError;
use crate::smiles::TokenSequence;

/// Clamp applied to predicted probabilities before taking logs.
pub const PROB_EPS: f64 = 1e-7;

/// A d × h embedded sequence: `cols[t]` is the embedding of position t,
/// zero beyond `len`.
#[derive(Debug, Clone)]
pub struct EmbeddedSeq<T> {
    pub cols: Vec<Vec<T>>,
    pub len: usize,
    pub dim: usize,
}

/// Embed token ids, truncating at `max_len` and zero-padding the tail.
/// Trailing PAD ids count as padding, not content.
pub fn embed_ids<T: Real>(ids: &[usize], params: &ModelParams<T>) -> EmbeddedSeq<T> {
    let h = params.dims.max_len;
    let d = params.dims.embed;
    let content = ids
        .iter()
        .rposition(|&id| id != PAD)
        .map(|p| p + 1)
        .unwrap_or(0);
    let len = content.min(h);
    let mut cols = vec![vec![T::zero(); d]; h];
    for t in 0..len {
        cols[t].copy_from_slice(params.embedding.row(ids[t]));
    }
    EmbeddedSeq { cols, len, dim: d }
}

/// Embed a token sequence through the vocabulary (unknowns map to `<UNK>`).
pub fn embed<T: Real>(
    tokens: &TokenSequence,
    vocab: &Vocab,
    params: &ModelParams<T>,
) -> EmbeddedSeq<T> {
    embed_ids(&vocab.ids(&tokens.tokens), params)
}

/// All-zero embedded sequence; stands in for the edit-tag stream when that
/// feature is ablated.
pub fn zero_embedded<T: Real>(params: &ModelParams<T>) -> EmbeddedSeq<T> {
    EmbeddedSeq {
        cols: vec![vec![T::zero(); params.dims.embed]; params.dims.max_len],
        len: 0,
        dim: params.dims.embed,
    }
}

/// A fused 2d × h branch input with its valid-position count.
#[derive(Debug, Clone)]
pub struct BranchInput<T> {
    pub cols: Vec<Vec<T>>,
    pub valid_len: usize,
    pub width: usize,
}

/// Position-wise concatenation of a word stream and the edit-tag stream.
/// A position is valid if either stream still has content there.
pub fn fuse<T: Real>(
    seq: &EmbeddedSeq<T>,
    rsd: &EmbeddedSeq<T>,
) -> Result<BranchInput<T>, NeuralError> {
    if seq.cols.len() != rsd.cols.len() || seq.dim != rsd.dim {
        return Err(NeuralError::ShapeMismatch(format!(
            "fuse expects matching d x h shapes, got {}x{} vs {}x{}",
            seq.dim,
            seq.cols.len(),
            rsd.dim,
            rsd.cols.len()
        )));
    }
    let width = seq.dim + rsd.dim;
    let cols = seq
        .cols
        .iter()
        .zip(&rsd.cols)
        .map(|(a, b)| {
            let mut col = Vec::with_capacity(width);
            col.extend_from_slice(a);
            col.extend_from_slice(b);
            col
        })
        .collect();
    Ok(BranchInput {
        cols,
        valid_len: seq.len.max(rsd.len),
        width,
    })
}

#[derive(Debug, Clone)]
pub(crate) struct StepCache<T> {
    i: Vec<T>,
    f: Vec<T>,
    u: Vec<T>,
    g: Vec<T>,
    c: Vec<T>,
    tanh_c: Vec<T>,
    h: Vec<T>,
}

fn gate_preactivation<T: Real>(gate: &GateParams<T>, x: &[T], h_prev: &[T]) -> Vec<T> {
    let mut a = gate.b.clone();
    gate.w_x.matvec_acc(x, &mut a);
    gate.w_h.matvec_acc(h_prev, &mut a);
    a
}

fn lstm_step_cached<T: Real>(
    params: &LstmParams<T>,
    x: &[T],
    h_prev: &[T],
    c_prev: &[T],
) -> StepCache<T> {
    let i: Vec<T> = gate_preactivation(&params.input, x, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let f: Vec<T> = gate_preactivation(&params.forget, x, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let u: Vec<T> = gate_preactivation(&params.output, x, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let g: Vec<T> = gate_preactivation(&params.cell, x, h_prev)
        .into_iter()
        .map(|a| a.tanh())
        .collect();
    let c: Vec<T> = (0..i.len())
        .map(|j| f[j] * c_prev[j] + i[j] * g[j])
        .collect();
    let tanh_c: Vec<T> = c.iter().map(|&v| v.tanh()).collect();
    let h: Vec<T> = (0..i.len()).map(|j| tanh_c[j] * u[j]).collect();
    StepCache {
        i,
        f,
        u,
        g,
        c,
        tanh_c,
        h,
    }
}

/// One LSTM cell update; returns the next hidden and cell states.
pub fn lstm_step<T: Real>(
    params: &LstmParams<T>,
    x: &[T],
    h_prev: &[T],
    c_prev: &[T],
) -> (Vec<T>, Vec<T>) {
    let step = lstm_step_cached(params, x, h_prev, c_prev);
    (step.h, step.c)
}

#[derive(Debug, Clone)]
pub(crate) struct DirectionCache<T> {
    steps: Vec<StepCache<T>>,
    /// Input column index consumed at each step.
    positions: Vec<usize>,
}

impl<T: Real> DirectionCache<T> {
    fn final_h(&self, hidden: usize) -> Vec<T> {
        self.steps
            .last()
            .map(|s| s.h.clone())
            .unwrap_or_else(|| vec![T::zero(); hidden])
    }
}

fn run_direction<T: Real>(
    params: &LstmParams<T>,
    input: &BranchInput<T>,
    positions: impl Iterator<Item = usize>,
    hidden: usize,
) -> DirectionCache<T> {
    let mut cache = DirectionCache {
        steps: Vec::with_capacity(input.valid_len),
        positions: Vec::with_capacity(input.valid_len),
    };
    let zero = vec![T::zero(); hidden];
    for pos in positions {
        let (h_prev, c_prev) = match cache.steps.last() {
            Some(prev) => (prev.h.as_slice(), prev.c.as_slice()),
            None => (zero.as_slice(), zero.as_slice()),
        };
        let step = lstm_step_cached(params, &input.cols[pos], h_prev, c_prev);
        cache.steps.push(step);
        cache.positions.push(pos);
    }
    cache
}

#[derive(Debug, Clone)]
pub(crate) struct BranchCache<T> {
    fwd: DirectionCache<T>,
    bwd: DirectionCache<T>,
}

impl<T: Real> BranchCache<T> {
    fn output(&self, hidden: usize) -> Vec<T> {
        let mut out = self.fwd.final_h(hidden);
        out.extend(self.bwd.final_h(hidden));
        out
    }
}

fn bilstm_cached<T: Real>(input: &BranchInput<T>, params: &ModelParams<T>) -> BranchCache<T> {
    let hidden = params.dims.hidden;
    BranchCache {
        fwd: run_direction(&params.fwd, input, 0..input.valid_len, hidden),
        bwd: run_direction(&params.bwd, input, (0..input.valid_len).rev(), hidden),
    }
}

/// Branch representation: final forward state concatenated with the final
/// backward state (2H). All padding yields the zero vector.
pub fn bilstm<T: Real>(input: &BranchInput<T>, params: &ModelParams<T>) -> Vec<T> {
    bilstm_cached(input, params).output(params.dims.hidden)
}

#[derive(Debug, Clone)]
pub(crate) struct ForwardCache<T> {
    b1: BranchCache<T>,
    b2: BranchCache<T>,
    /// Concatenated branch representations (4H).
    v: Vec<T>,
    a1: Vec<T>,
    pub y: T,
}

pub(crate) fn forward_cached<T: Real>(
    m1: &BranchInput<T>,
    m2: &BranchInput<T>,
    params: &ModelParams<T>,
) -> ForwardCache<T> {
    let hidden = params.dims.hidden;
    let b1 = bilstm_cached(m1, params);
    let b2 = bilstm_cached(m2, params);
    let mut v = b1.output(hidden);
    v.extend(b2.output(hidden));
    let mut z1 = params.mlp.b1.clone();
    params.mlp.w1.matvec_acc(&v, &mut z1);
    let a1: Vec<T> = z1.into_iter().map(|z| z.tanh()).collect();
    let z2 = dot(&params.mlp.w2, &a1) + params.mlp.b2;
    let y = sigmoid(z2);
    ForwardCache { b1, b2, v, a1, y }
}

/// Probability that the reaction works, given the two fused branch inputs.
pub fn forward<T: Real>(m1: &BranchInput<T>, m2: &BranchInput<T>, params: &ModelParams<T>) -> T {
    forward_cached(m1, m2, params).y
}

/// Binary cross entropy for one prediction, with the probability clamped to
/// `[PROB_EPS, 1 - PROB_EPS]` so boundary predictions stay finite.
pub fn bce_loss<T: Real>(y_hat: T, target: bool) -> T {
    let eps = real::<T>(PROB_EPS);
    let y = y_hat.max(eps).min(T::one() - eps);
    if target {
        -y.ln()
    } else {
        -(T::one() - y).ln()
    }
}

/// Mean binary cross entropy over a batch.
pub fn bce_mean<T: Real>(pairs: &[(T, bool)]) -> T {
    if pairs.is_empty() {
        return T::zero();
    }
    let sum = pairs
        .iter()
        .fold(T::zero(), |acc, &(y, t)| acc + bce_loss(y, t));
    sum / real(pairs.len() as f64)
}

/// Token ids backing a branch input, used to route gradients to embedding
/// rows. `rsd_ids` is `None` when the edit-tag feature is ablated.
pub struct BranchTokens<'a> {
    pub seq_ids: &'a [usize],
    pub rsd_ids: Option<&'a [usize]>,
}

fn direction_backward<T: Real>(
    params: &LstmParams<T>,
    grads: &mut LstmParams<T>,
    cache: &DirectionCache<T>,
    input: &BranchInput<T>,
    d_final: &[T],
    dx: &mut [Vec<T>],
) {
    let hidden = d_final.len();
    let steps = cache.steps.len();
    let zero = vec![T::zero(); hidden];
    let mut dh = d_final.to_vec();
    let mut dc = vec![T::zero(); hidden];
    let one = T::one();
    for k in (0..steps).rev() {
        let step = &cache.steps[k];
        let (h_prev, c_prev) = if k == 0 {
            (zero.as_slice(), zero.as_slice())
        } else {
            (cache.steps[k - 1].h.as_slice(), cache.steps[k - 1].c.as_slice())
        };
        let pos = cache.positions[k];
        let x = &input.cols[pos];

        let mut da_i = vec![T::zero(); hidden];
        let mut da_f = vec![T::zero(); hidden];
        let mut da_u = vec![T::zero(); hidden];
        let mut da_c = vec![T::zero(); hidden];
        for j in 0..hidden {
            let tc = step.tanh_c[j];
            da_u[j] = dh[j] * tc * step.u[j] * (one - step.u[j]);
            dc[j] = dc[j] + dh[j] * step.u[j] * (one - tc * tc);
            da_f[j] = dc[j] * c_prev[j] * step.f[j] * (one - step.f[j]);
            da_i[j] = dc[j] * step.g[j] * step.i[j] * (one - step.i[j]);
            da_c[j] = dc[j] * step.i[j] * (one - step.g[j] * step.g[j]);
        }

        let gate_grads = [
            (&params.input, &mut grads.input, &da_i),
            (&params.forget, &mut grads.forget, &da_f),
            (&params.output, &mut grads.output, &da_u),
            (&params.cell, &mut grads.cell, &da_c),
        ];
        let mut dh_prev = vec![T::zero(); hidden];
        for (gate, gate_grad, da) in gate_grads {
            gate_grad.w_x.add_outer(da, x);
            gate_grad.w_h.add_outer(da, h_prev);
            add_assign(&mut gate_grad.b, da);
            gate.w_h.matvec_transpose_acc(da, &mut dh_prev);
            gate.w_x.matvec_transpose_acc(da, &mut dx[pos]);
        }
        for j in 0..hidden {
            dc[j] = dc[j] * step.f[j];
        }
        dh = dh_prev;
    }
}

fn branch_backward<T: Real>(
    params: &ModelParams<T>,
    grads: &mut ModelParams<T>,
    cache: &BranchCache<T>,
    input: &BranchInput<T>,
    tokens: &BranchTokens,
    d_out: &[T],
) {
    let hidden = params.dims.hidden;
    let d = params.dims.embed;
    let mut dx = vec![vec![T::zero(); input.width]; input.cols.len()];
    direction_backward(
        &params.fwd,
        &mut grads.fwd,
        &cache.fwd,
        input,
        &d_out[..hidden],
        &mut dx,
    );
    direction_backward(
        &params.bwd,
        &mut grads.bwd,
        &cache.bwd,
        input,
        &d_out[hidden..],
        &mut dx,
    );

    let h = params.dims.max_len;
    let seq_len = tokens
        .seq_ids
        .iter()
        .rposition(|&id| id != PAD)
        .map(|p| p + 1)
        .unwrap_or(0)
        .min(h);
    for t in 0..seq_len {
        let id = tokens.seq_ids[t];
        if id != PAD {
            add_assign(grads.embedding.row_mut(id), &dx[t][..d]);
        }
    }
    if let Some(rsd_ids) = tokens.rsd_ids {
        let rsd_len = rsd_ids
            .iter()
            .rposition(|&id| id != PAD)
            .map(|p| p + 1)
            .unwrap_or(0)
            .min(h);
        for t in 0..rsd_len {
            let id = rsd_ids[t];
            if id != PAD {
                add_assign(grads.embedding.row_mut(id), &dx[t][d..]);
            }
        }
    }
}

/// Accumulate exact gradients for one example into `grads`.
///
/// `d_z2` is the loss gradient at the pre-sigmoid output; for mean binary
/// cross entropy over a batch of size N it is `(y - target) / N`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward_example<T: Real>(
    params: &ModelParams<T>,
    grads: &mut ModelParams<T>,
    m1: &BranchInput<T>,
    m2: &BranchInput<T>,
    tok1: &BranchTokens,
    tok2: &BranchTokens,
    cache: &ForwardCache<T>,
    d_z2: T,
) {
    let hidden = params.dims.hidden;
    grads.mlp.b2 = grads.mlp.b2 + d_z2;
    let mut dz1 = vec![T::zero(); cache.a1.len()];
    for j in 0..cache.a1.len() {
        grads.mlp.w2[j] = grads.mlp.w2[j] + d_z2 * cache.a1[j];
        let da1 = d_z2 * params.mlp.w2[j];
        dz1[j] = da1 * (T::one() - cache.a1[j] * cache.a1[j]);
    }
    grads.mlp.w1.add_outer(&dz1, &cache.v);
    add_assign(&mut grads.mlp.b1, &dz1);
    let mut dv = vec![T::zero(); 4 * hidden];
    params.mlp.w1.matvec_transpose_acc(&dz1, &mut dv);

    branch_backward(params, grads, &cache.b1, m1, tok1, &dv[..2 * hidden]);
    branch_backward(params, grads, &cache.b2, m2, tok2, &dv[2 * hidden..]);
}

/// A reaction encoded as vocabulary ids, ready for the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedReaction {
    pub reactant_ids: Vec<usize>,
    pub product_ids: Vec<usize>,
    pub rsd_ids: Vec<usize>,
    pub label: bool,
}

/// Build the two fused branch inputs for an encoded reaction.
pub fn example_inputs<T: Real>(
    ex: &EncodedReaction,
    params: &ModelParams<T>,
    use_rsd: bool,
) -> (BranchInput<T>, BranchInput<T>) {
    let rsd_emb = if use_rsd {
        embed_ids(&ex.rsd_ids, params)
    } else {
        zero_embedded(params)
    };
    let m1 = fuse(&embed_ids(&ex.reactant_ids, params), &rsd_emb)
        .expect("branch shapes agree by construction");
    let m2 = fuse(&embed_ids(&ex.product_ids, params), &rsd_emb)
        .expect("branch shapes agree by construction");
    (m1, m2)
}

/// Probability for one encoded reaction.
pub fn score_example<T: Real>(ex: &EncodedReaction, params: &ModelParams<T>, use_rsd: bool) -> T {
    let (m1, m2) = example_inputs(ex, params, use_rsd);
    forward(&m1, &m2, params)
}

/// Forward + backward for one example; returns the (clamped) loss.
pub(crate) fn accumulate_example_grad<T: Real>(
    ex: &EncodedReaction,
    params: &ModelParams<T>,
    grads: &mut ModelParams<T>,
    use_rsd: bool,
    scale: T,
) -> T {
    let (m1, m2) = example_inputs(ex, params, use_rsd);
    let cache = forward_cached(&m1, &m2, params);
    let y = cache.y;
    let target = if ex.label { T::one() } else { T::zero() };
    let d_z2 = (y - target) * scale;
    let rsd1 = if use_rsd {
        Some(ex.rsd_ids.as_slice())
    } else {
        None
    };
    let tok1 = BranchTokens {
        seq_ids: &ex.reactant_ids,
        rsd_ids: rsd1,
    };
    let tok2 = BranchTokens {
        seq_ids: &ex.product_ids,
        rsd_ids: rsd1,
    };
    backward_example(params, grads, &m1, &m2, &tok1, &tok2, &cache, d_z2);
    bce_loss(y, ex.label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::params::ModelDims;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dims() -> ModelDims {
        ModelDims {
            vocab: 9,
            embed: 3,
            hidden: 4,
            max_len: 6,
        }
    }

    fn random_params(seed: u64) -> ModelParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ModelParams::init(dims(), &mut rng)
    }

    #[test]
    fn embed_empty_is_all_zero() {
        let p = random_params(0);
        let e = embed_ids(&[], &p);
        assert_eq!(e.len, 0);
        assert!(e.cols.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn embed_truncates_long_input() {
        let p = random_params(0);
        let ids: Vec<usize> = (0..150).map(|i| 2 + i % 3).collect();
        let e = embed_ids(&ids, &p);
        assert_eq!(e.len, p.dims.max_len);
        assert_eq!(e.cols.len(), p.dims.max_len);
        assert_eq!(e.cols[0], p.embedding.row(2).to_vec());
    }

    #[test]
    fn embed_ignores_trailing_pad() {
        let p = random_params(0);
        let e = embed_ids(&[2, 3, 0, 0], &p);
        assert_eq!(e.len, 2);
    }

    #[test]
    fn fuse_concatenates_columns() {
        let d = ModelDims {
            vocab: 3,
            embed: 2,
            hidden: 2,
            max_len: 1,
        };
        let seq = EmbeddedSeq {
            cols: vec![vec![1.0, 2.0]],
            len: 1,
            dim: 2,
        };
        let rsd = EmbeddedSeq {
            cols: vec![vec![3.0, 4.0]],
            len: 1,
            dim: 2,
        };
        let fused = fuse(&seq, &rsd).unwrap();
        assert_eq!(fused.cols[0], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(fused.valid_len, 1);
        assert_eq!(fused.width, 2 * d.embed);
    }

    #[test]
    fn fuse_zero_inputs_stay_zero() {
        let p = random_params(0);
        let z1 = zero_embedded(&p);
        let z2 = zero_embedded(&p);
        let fused = fuse(&z1, &z2).unwrap();
        assert_eq!(fused.valid_len, 0);
        assert!(fused.cols.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn fuse_shape_mismatch() {
        let a = EmbeddedSeq {
            cols: vec![vec![0.0; 2]],
            len: 0,
            dim: 2,
        };
        let b = EmbeddedSeq {
            cols: vec![vec![0.0; 3]],
            len: 0,
            dim: 3,
        };
        assert!(matches!(fuse(&a, &b), Err(NeuralError::ShapeMismatch(_))));
    }

    #[test]
    fn lstm_step_all_zero() {
        let p = ModelParams::<f64>::zeros(dims());
        let x = vec![0.0; 2 * dims().embed];
        let h = vec![0.0; dims().hidden];
        let c = vec![0.0; dims().hidden];
        let step = lstm_step_cached(&p.fwd, &x, &h, &c);
        assert!(step.i.iter().all(|&v| v == 0.5));
        assert!(step.f.iter().all(|&v| v == 0.5));
        assert!(step.u.iter().all(|&v| v == 0.5));
        assert!(step.c.iter().all(|&v| v == 0.0));
        assert!(step.h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_step_matches_scalar_oracle() {
        let p = random_params(5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n_in = 2 * dims().embed;
        let hdim = dims().hidden;
        let x: Vec<f64> = (0..n_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h_prev: Vec<f64> = (0..hdim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c_prev: Vec<f64> = (0..hdim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (h, c) = lstm_step(&p.fwd, &x, &h_prev, &c_prev);

        // Independent scalar evaluation of the five cell equations.
        let pre = |gate: &GateParams<f64>, j: usize| -> f64 {
            let mut a = gate.b[j];
            for (k, &xv) in x.iter().enumerate() {
                a += gate.w_x.row(j)[k] * xv;
            }
            for (k, &hv) in h_prev.iter().enumerate() {
                a += gate.w_h.row(j)[k] * hv;
            }
            a
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        for j in 0..hdim {
            let i = sig(pre(&p.fwd.input, j));
            let f = sig(pre(&p.fwd.forget, j));
            let u = sig(pre(&p.fwd.output, j));
            let g = pre(&p.fwd.cell, j).tanh();
            let cj = f * c_prev[j] + i * g;
            let hj = cj.tanh() * u;
            assert!((c[j] - cj).abs() < 1e-12);
            assert!((h[j] - hj).abs() < 1e-12);
        }
    }

    #[test]
    fn lstm_cell_state_bounded() {
        let p = random_params(9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let x: Vec<f64> = (0..2 * dims().embed)
                .map(|_| rng.gen_range(-3.0..3.0))
                .collect();
            let h_prev: Vec<f64> = (0..dims().hidden).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c_prev: Vec<f64> = (0..dims().hidden).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let (_, c) = lstm_step(&p.fwd, &x, &h_prev, &c_prev);
            for j in 0..c.len() {
                assert!(c[j].abs() <= c_prev[j].abs() + 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn bilstm_empty_input_is_zero() {
        let p = random_params(2);
        let input = fuse(&zero_embedded(&p), &zero_embedded(&p)).unwrap();
        let out = bilstm(&input, &p);
        assert_eq!(out.len(), 2 * dims().hidden);
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bilstm_output_width_fixed() {
        let p = random_params(3);
        for n in [1usize, 3, 6] {
            let ids: Vec<usize> = (0..n).map(|i| 2 + i % 4).collect();
            let input = fuse(&embed_ids(&ids, &p), &zero_embedded(&p)).unwrap();
            assert_eq!(bilstm(&input, &p).len(), 2 * dims().hidden);
        }
    }

    #[test]
    fn bilstm_palindrome_with_mirrored_weights() {
        let mut p = random_params(4);
        p.bwd = p.fwd.clone();
        let ids = vec![2, 3, 4, 3, 2];
        let input = fuse(&embed_ids(&ids, &p), &zero_embedded(&p)).unwrap();
        let out = bilstm(&input, &p);
        let hdim = dims().hidden;
        for j in 0..hdim {
            assert!(
                (out[j] - out[hdim + j]).abs() < 1e-12,
                "palindrome halves diverge at {j}"
            );
        }
    }

    #[test]
    fn forward_zero_head_is_half() {
        let p = ModelParams::<f64>::zeros(dims());
        let input = fuse(&zero_embedded(&p), &zero_embedded(&p)).unwrap();
        assert_eq!(forward(&input.clone(), &input, &p), 0.5);
    }

    #[test]
    fn forward_in_open_interval_and_asymmetric() {
        let p = random_params(8);
        let a = fuse(&embed_ids(&[2, 3, 4], &p), &zero_embedded(&p)).unwrap();
        let b = fuse(&embed_ids(&[5, 6], &p), &zero_embedded(&p)).unwrap();
        let y_ab = forward(&a, &b, &p);
        let y_ba = forward(&b, &a, &p);
        assert!(y_ab > 0.0 && y_ab < 1.0);
        assert!((y_ab - y_ba).abs() > 0.0, "head concatenation is ordered");
    }

    #[test]
    fn shared_weights_affect_both_branches() {
        let mut p = random_params(12);
        let in1 = fuse(&embed_ids(&[2, 3], &p), &zero_embedded(&p)).unwrap();
        let in2 = fuse(&embed_ids(&[4, 5], &p), &zero_embedded(&p)).unwrap();
        let before1 = bilstm(&in1, &p);
        let before2 = bilstm(&in2, &p);
        p.fwd.input.b[0] += 0.5;
        let after1 = bilstm(&in1, &p);
        let after2 = bilstm(&in2, &p);
        assert_ne!(before1, after1);
        assert_ne!(before2, after2);
    }

    #[test]
    fn bce_known_values() {
        assert!((bce_loss(0.5f64, true) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(bce_loss(1.0f64 - 1e-9, true) < 1e-6);
        let batch = [(0.9f64, true), (0.1, false)];
        let mean = bce_mean(&batch);
        assert!((mean - 0.10536051565782628).abs() < 1e-12);
        // Finite at the boundaries thanks to clamping.
        assert!(bce_loss(0.0f64, true).is_finite());
        assert!(bce_loss(1.0f64, false).is_finite());
    }

    #[test]
    fn masking_padding_extension_is_exact() {
        let p = random_params(21);
        let ex = EncodedReaction {
            reactant_ids: vec![2, 3, 4],
            product_ids: vec![5, 6],
            rsd_ids: vec![7, 8],
            label: true,
        };
        let y = score_example(&ex, &p, true);
        // Explicit trailing PADs on every stream.
        let padded = EncodedReaction {
            reactant_ids: vec![2, 3, 4, 0, 0],
            product_ids: vec![5, 6, 0],
            rsd_ids: vec![7, 8, 0, 0],
            label: true,
        };
        assert_eq!(y, score_example(&padded, &p, true));
        // Wider max_len with identical weights.
        let mut wide = p.clone();
        wide.dims.max_len += 7;
        assert_eq!(y, score_example(&ex, &wide, true));
    }

    #[test]
    fn saturated_output_has_near_zero_gradients() {
        let mut p = random_params(30);
        p.mlp.b2 = 60.0; // drives the sigmoid to 1 within f64
        let ex = EncodedReaction {
            reactant_ids: vec![2, 3],
            product_ids: vec![4],
            rsd_ids: vec![5],
            label: true,
        };
        let mut grads = ModelParams::zeros(p.dims);
        accumulate_example_grad(&ex, &p, &mut grads, true, 1.0);
        for (name, _, data) in grads.tensors() {
            for &g in data {
                assert!(g.abs() < 1e-12, "{name} gradient {g} not near zero");
            }
        }
    }

    #[test]
    fn untouched_embedding_rows_get_zero_gradient() {
        let p = random_params(31);
        let ex = EncodedReaction {
            reactant_ids: vec![2, 3],
            product_ids: vec![3],
            rsd_ids: vec![4],
            label: false,
        };
        let mut grads = ModelParams::zeros(p.dims);
        accumulate_example_grad(&ex, &p, &mut grads, true, 1.0);
        for row in [0usize, 1, 5, 6, 7, 8] {
            assert!(grads.embedding.row(row).iter().all(|&g| g == 0.0));
        }
        assert!(grads.embedding.row(2).iter().any(|&g| g != 0.0));
    }
}

use super::{check_params, Task};
use crate::error::{Result, TeonError};
use crate::linalg::Matrix;
use crate::optim::{ModelLayout, ParamSpec, Role};
use crate::rng;

/// Stack of single-head attention blocks on `seq × dim` token matrices, with
/// residual connections and no normalization:
///
/// ```text
/// A  = softmax(H Wq (H Wk)ᵀ / √dim)       (row-wise)
/// H₁ = H + A (H Wv) Wo
/// H₂ = H₁ + silu(H₁ W₁ + b₁) W₂
/// ```
///
/// The loss is `1/(2·B·seq) Σ_b ‖H_out − Y_b‖_F²` against targets
/// `Y_b = tanh(X_b R)` for a fixed random `R`.
#[derive(Clone, Debug)]
pub struct MicroAttention {
    layout: ModelLayout,
    dim: usize,
    hidden: usize,
    blocks: usize,
    inputs: Vec<Matrix>,
    targets: Vec<Matrix>,
    init: Vec<Matrix>,
}

/// Parameters of one block in layout order.
const PER_BLOCK: usize = 7;

impl MicroAttention {
    pub fn new(dim: usize, hidden: usize, seq: usize, batch: usize, blocks: usize, seed: u64) -> Result<Self> {
        if dim == 0 || hidden == 0 || seq == 0 || batch == 0 || blocks == 0 {
            return Err(TeonError::dim(format!(
                "micro_attention needs positive sizes (dim {dim}, hidden {hidden}, seq {seq}, batch {batch}, blocks {blocks})"
            )));
        }
        let mut r = rng::seeded(seed);
        let mut params = Vec::with_capacity(blocks * PER_BLOCK);
        for b in 0..blocks {
            for (role, shape) in [
                (Role::Query, (dim, dim)),
                (Role::Key, (dim, dim)),
                (Role::Value, (dim, dim)),
                (Role::Output, (dim, dim)),
                (Role::Mlp1, (dim, hidden)),
                (Role::Bias, (1, hidden)),
                (Role::Mlp2, (hidden, dim)),
            ] {
                params.push(ParamSpec::new(format!("block{b}.{role}"), role, b, shape));
            }
        }
        let init = params
            .iter()
            .map(|p| match p.role {
                Role::Bias => Matrix::zeros(p.shape.0, p.shape.1),
                _ => rng::gaussian_matrix::<f64>(&mut r, p.shape.0, p.shape.1).scale(0.5 / (p.shape.0 as f64).sqrt()),
            })
            .collect();
        let mixer = rng::gaussian_matrix::<f64>(&mut r, dim, dim).scale(1.0 / (dim as f64).sqrt());
        let inputs: Vec<Matrix> = (0..batch).map(|_| rng::gaussian_matrix(&mut r, seq, dim)).collect();
        let targets = inputs.iter().map(|x| x.matmul(&mixer).map(f64::tanh)).collect();
        Ok(Self {
            layout: ModelLayout::new(params),
            dim,
            hidden,
            blocks,
            inputs,
            targets,
            init,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn inputs(&self) -> &[Matrix] {
        &self.inputs
    }

    /// Output tokens for one input.
    pub fn forward(&self, params: &[Matrix], x: &Matrix) -> Result<Matrix> {
        check_params(&self.layout, params)?;
        let mut h = x.clone();
        for b in 0..self.blocks {
            h = self.block_forward(&params[b * PER_BLOCK..(b + 1) * PER_BLOCK], &h).out;
        }
        Ok(h)
    }

    fn block_forward(&self, p: &[Matrix], h: &Matrix) -> BlockCache {
        let (wq, wk, wv, wo, w1, b1, w2) = (&p[0], &p[1], &p[2], &p[3], &p[4], &p[5], &p[6]);
        let inv_sqrt = 1.0 / (self.dim as f64).sqrt();
        let q = h.matmul(wq);
        let k = h.matmul(wk);
        let v = h.matmul(wv);
        let attn = softmax_rows(&q.matmul_t(&k).scale(inv_sqrt));
        let mixed = attn.matmul(&v);
        let h1 = h.add(&mixed.matmul(wo));
        let pre = Matrix::from_fn(h1.rows(), self.hidden, |i, j| {
            (0..self.dim).map(|l| h1.get(i, l) * w1.get(l, j)).sum::<f64>() + b1.get(0, j)
        });
        let act = pre.map(silu);
        let out = h1.add(&act.matmul(w2));
        BlockCache {
            input: h.clone(),
            q,
            k,
            v,
            attn,
            mixed,
            h1,
            pre,
            act,
            out,
        }
    }
}

struct BlockCache {
    input: Matrix,
    q: Matrix,
    k: Matrix,
    v: Matrix,
    attn: Matrix,
    mixed: Matrix,
    h1: Matrix,
    pre: Matrix,
    act: Matrix,
    out: Matrix,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

fn softmax_rows(s: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(s.rows(), s.cols());
    for i in 0..s.rows() {
        let row = s.row(i);
        let peak = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&x| (x - peak).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (j, e) in exps.into_iter().enumerate() {
            out.set(i, j, e / total);
        }
    }
    out
}

impl Task for MicroAttention {
    fn name(&self) -> &str {
        "micro_attention"
    }

    fn layout(&self) -> &ModelLayout {
        &self.layout
    }

    fn init(&self) -> Vec<Matrix> {
        self.init.clone()
    }

    fn loss_and_grad(&self, params: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        check_params(&self.layout, params)?;
        let seq = self.inputs[0].rows();
        let norm = 1.0 / (self.inputs.len() * seq) as f64;
        let inv_sqrt = 1.0 / (self.dim as f64).sqrt();
        let mut grads: Vec<Matrix> = params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
        let mut loss = 0.0;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            let mut caches = Vec::with_capacity(self.blocks);
            let mut h = x.clone();
            for b in 0..self.blocks {
                let cache = self.block_forward(&params[b * PER_BLOCK..(b + 1) * PER_BLOCK], &h);
                h = cache.out.clone();
                caches.push(cache);
            }
            let residual = h.sub(y);
            loss += 0.5 * norm * residual.frobenius_sq();
            let mut d_out = residual.scale(norm);
            for b in (0..self.blocks).rev() {
                let c = &caches[b];
                let p = &params[b * PER_BLOCK..(b + 1) * PER_BLOCK];
                let g = &mut grads[b * PER_BLOCK..(b + 1) * PER_BLOCK];
                // MLP branch.
                g[6].add_scaled(1.0, &c.act.t_matmul(&d_out));
                let d_pre = d_out.matmul_t(&p[6]).zip_map(&c.pre, |d, u| d * silu_grad(u));
                g[4].add_scaled(1.0, &c.h1.t_matmul(&d_pre));
                for j in 0..self.hidden {
                    let col: f64 = (0..d_pre.rows()).map(|i| d_pre.get(i, j)).sum();
                    g[5].set(0, j, g[5].get(0, j) + col);
                }
                let d_h1 = d_out.add(&d_pre.matmul_t(&p[4]));
                // Attention branch.
                g[3].add_scaled(1.0, &c.mixed.t_matmul(&d_h1));
                let d_mixed = d_h1.matmul_t(&p[3]);
                let d_attn = d_mixed.matmul_t(&c.v);
                let d_v = c.attn.t_matmul(&d_mixed);
                let mut d_scores = Matrix::zeros(seq, seq);
                for i in 0..seq {
                    let dot: f64 = (0..seq).map(|j| d_attn.get(i, j) * c.attn.get(i, j)).sum();
                    for j in 0..seq {
                        d_scores.set(i, j, c.attn.get(i, j) * (d_attn.get(i, j) - dot) * inv_sqrt);
                    }
                }
                let d_q = d_scores.matmul(&c.k);
                let d_k = d_scores.t_matmul(&c.q);
                g[0].add_scaled(1.0, &c.input.t_matmul(&d_q));
                g[1].add_scaled(1.0, &c.input.t_matmul(&d_k));
                g[2].add_scaled(1.0, &c.input.t_matmul(&d_v));
                let mut d_in = d_h1;
                d_in.add_scaled(1.0, &d_q.matmul_t(&p[0]));
                d_in.add_scaled(1.0, &d_k.matmul_t(&p[1]));
                d_in.add_scaled(1.0, &d_v.matmul_t(&p[2]));
                d_out = d_in;
            }
        }
        Ok((loss, grads))
    }
}

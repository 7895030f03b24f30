//! Shared tanh encoder with softmax heads, its gradients and the optimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encode::{fnv1a64, FeatureVector};
use crate::error::{Error, Result};

/// `h = tanh(W_hᵀ x + b_h)`. `w` is row-major `input_dim × hidden`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// `p = softmax(W_oᵀ h + b_o)`. `w` is row-major `hidden × arity`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    pub hidden: usize,
    pub arity: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// One encoder read by every head.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub encoder: EncoderParams,
    pub heads: Vec<HeadParams>,
}

/// A training example: one input and one gold index per head.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub inputs: Vec<FeatureVector>,
    pub labels: Vec<usize>,
}

pub(crate) fn derive_seed(seed: u64, tag: &str, k: u64) -> u64 {
    // splitmix64 finalizer over the mixed inputs
    let mut z = seed ^ fnv1a64(tag.as_bytes()) ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn xavier(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect()
}

impl EncoderParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        EncoderParams {
            input_dim,
            hidden,
            w: vec![0.0; input_dim * hidden],
            b: vec![0.0; hidden],
        }
    }

    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "encoder", 0));
        EncoderParams {
            input_dim,
            hidden,
            w: xavier(input_dim, hidden, &mut rng),
            b: vec![0.0; hidden],
        }
    }

    pub fn hidden_of(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        if x.dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.dim(),
            });
        }
        let mut z = self.b.clone();
        for &(d, v) in x.entries() {
            let row = &self.w[d as usize * self.hidden..(d as usize + 1) * self.hidden];
            for (zj, wj) in z.iter_mut().zip(row) {
                *zj += v * wj;
            }
        }
        for zj in &mut z {
            *zj = zj.tanh();
        }
        Ok(z)
    }
}

impl HeadParams {
    pub fn zeros(hidden: usize, arity: usize) -> Self {
        HeadParams {
            hidden,
            arity,
            w: vec![0.0; hidden * arity],
            b: vec![0.0; arity],
        }
    }

    pub fn init(hidden: usize, arity: usize, seed: u64, index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "head", index as u64));
        HeadParams {
            hidden,
            arity,
            w: xavier(hidden, arity, &mut rng),
            b: vec![0.0; arity],
        }
    }

    pub fn probabilities(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.hidden {
            return Err(Error::DimensionMismatch {
                expected: self.hidden,
                got: h.len(),
            });
        }
        let mut z = self.b.clone();
        for (i, hi) in h.iter().enumerate() {
            let row = &self.w[i * self.arity..(i + 1) * self.arity];
            for (zk, wk) in z.iter_mut().zip(row) {
                *zk += hi * wk;
            }
        }
        Ok(softmax(&z))
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `softmax(W_oᵀ tanh(W_hᵀ x + b_h) + b_o)`.
pub fn forward(encoder: &EncoderParams, head: &HeadParams, x: &FeatureVector) -> Result<Vec<f64>> {
    if encoder.hidden != head.hidden {
        return Err(Error::DimensionMismatch {
            expected: encoder.hidden,
            got: head.hidden,
        });
    }
    head.probabilities(&encoder.hidden_of(x)?)
}

/// `α·L1 + β·L2`.
pub fn multitask_loss(l1: f64, l2: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(l1 >= 0.0) || !(l2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "losses must be non-negative, got {l1} and {l2}"
        )));
    }
    Ok(alpha * l1 + beta * l2)
}

fn cross_entropy(p: &[f64], gold: usize) -> f64 {
    -p[gold].max(f64::MIN_POSITIVE).ln()
}

impl Network {
    pub fn init(input_dim: usize, hidden: usize, arities: &[usize], seed: u64) -> Self {
        Network {
            encoder: EncoderParams::init(input_dim, hidden, seed),
            heads: arities
                .iter()
                .enumerate()
                .map(|(k, &a)| HeadParams::init(hidden, a, seed, k))
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Network {
            encoder: EncoderParams::zeros(self.encoder.input_dim, self.encoder.hidden),
            heads: self
                .heads
                .iter()
                .map(|h| HeadParams::zeros(h.hidden, h.arity))
                .collect(),
        }
    }

    pub fn arities(&self) -> Vec<usize> {
        self.heads.iter().map(|h| h.arity).collect()
    }

    /// Parameter tensors in a fixed order: encoder W, encoder b, then each
    /// head's W and b.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.encoder.w, &self.encoder.b];
        for h in &self.heads {
            v.push(&h.w);
            v.push(&h.b);
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![&mut self.encoder.w, &mut self.encoder.b];
        for h in &mut self.heads {
            v.push(&mut h.w);
            v.push(&mut h.b);
        }
        v
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn check_batch(&self, batch: &[&Example], weights: &[f64]) -> Result<()> {
        if weights.len() != self.heads.len() {
            return Err(Error::DimensionMismatch {
                expected: self.heads.len(),
                got: weights.len(),
            });
        }
        for ex in batch {
            if ex.inputs.len() != self.heads.len() || ex.labels.len() != self.heads.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.heads.len(),
                    got: ex.inputs.len().min(ex.labels.len()),
                });
            }
            for (head, &y) in self.heads.iter().zip(&ex.labels) {
                if y >= head.arity {
                    return Err(Error::InvalidArgument(format!(
                        "label index {y} outside head of arity {}",
                        head.arity
                    )));
                }
            }
        }
        Ok(())
    }

    fn penalty(&self, l2: f64) -> f64 {
        if l2 == 0.0 {
            return 0.0;
        }
        let sq = |w: &[f64]| w.iter().map(|v| v * v).sum::<f64>();
        let mut s = sq(&self.encoder.w);
        for h in &self.heads {
            s += sq(&h.w);
        }
        0.5 * l2 * s
    }

    /// Mean cross-entropy of each head over the batch.
    pub fn head_losses(&self, batch: &[&Example]) -> Result<Vec<f64>> {
        let mut losses = vec![0.0; self.heads.len()];
        for ex in batch {
            for (k, head) in self.heads.iter().enumerate() {
                let p = forward(&self.encoder, head, &ex.inputs[k])?;
                losses[k] += cross_entropy(&p, ex.labels[k]);
            }
        }
        let n = batch.len().max(1) as f64;
        Ok(losses.into_iter().map(|l| l / n).collect())
    }

    /// `Σ_k weights[k]·mean CE_k + (l2/2)·‖W‖²` over all weight matrices.
    pub fn loss(&self, batch: &[&Example], weights: &[f64], l2: f64) -> Result<f64> {
        self.check_batch(batch, weights)?;
        let losses = self.head_losses(batch)?;
        let data: f64 = losses.iter().zip(weights).map(|(l, w)| w * l).sum();
        Ok(data + self.penalty(l2))
    }

    /// Writes the gradient of [`Network::loss`] into `grad` (same shape as
    /// `self`) and returns the loss.
    pub fn loss_and_grad(
        &self,
        batch: &[&Example],
        weights: &[f64],
        l2: f64,
        grad: &mut Network,
    ) -> Result<f64> {
        self.check_batch(batch, weights)?;
        for t in grad.tensors_mut() {
            t.fill(0.0);
        }
        let n = batch.len().max(1) as f64;
        let hdim = self.encoder.hidden;
        let mut total = 0.0;
        for ex in batch {
            for (k, head) in self.heads.iter().enumerate() {
                let x = &ex.inputs[k];
                let h = self.encoder.hidden_of(x)?;
                let p = head.probabilities(&h)?;
                let y = ex.labels[k];
                total += weights[k] * cross_entropy(&p, y) / n;

                let scale = weights[k] / n;
                let dlogits: Vec<f64> = p
                    .iter()
                    .enumerate()
                    .map(|(c, pc)| scale * (pc - if c == y { 1.0 } else { 0.0 }))
                    .collect();
                let gh = &mut grad.heads[k];
                let mut dz = vec![0.0; hdim];
                for i in 0..hdim {
                    let row = i * head.arity;
                    let mut dh = 0.0;
                    for c in 0..head.arity {
                        gh.w[row + c] += h[i] * dlogits[c];
                        dh += head.w[row + c] * dlogits[c];
                    }
                    dz[i] = dh * (1.0 - h[i] * h[i]);
                }
                for (b, d) in gh.b.iter_mut().zip(&dlogits) {
                    *b += d;
                }
                let ge = &mut grad.encoder;
                for &(d, v) in x.entries() {
                    let row = &mut ge.w[d as usize * hdim..(d as usize + 1) * hdim];
                    for (g, dzj) in row.iter_mut().zip(&dz) {
                        *g += v * dzj;
                    }
                }
                for (b, d) in ge.b.iter_mut().zip(&dz) {
                    *b += d;
                }
            }
        }
        if l2 != 0.0 {
            for (g, w) in grad.encoder.w.iter_mut().zip(&self.encoder.w) {
                *g += l2 * w;
            }
            for (gh, head) in grad.heads.iter_mut().zip(&self.heads) {
                for (g, w) in gh.w.iter_mut().zip(&head.w) {
                    *g += l2 * w;
                }
            }
        }
        Ok(total + self.penalty(l2))
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &Network, learning_rate: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        let shapes: Vec<usize> = net.tensors().iter().map(|t| t.len()).collect();
        Adam {
            learning_rate,
            beta1,
            beta2,
            eps,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn update(&mut self, net: &mut Network, grad: &Network) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, g), m), v) in net
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                p[i] -= self.learning_rate * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

const GRADCHECK_SAMPLES: usize = 4096;

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-5)
}

/// Positions `(tensor, index)` checked by [`gradient_check`]: every
/// parameter of small networks, a seeded sample of large ones.
fn sample_positions(net: &Network) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = net
        .tensors()
        .iter()
        .enumerate()
        .flat_map(|(t, v)| (0..v.len()).map(move |i| (t, i)))
        .collect();
    if all.len() <= GRADCHECK_SAMPLES {
        return all;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0, "gradcheck", 0));
    (0..GRADCHECK_SAMPLES)
        .map(|_| all[rng.random_range(0..all.len())])
        .collect()
}

/// Max relative error between `analytic` and central finite differences of
/// the loss.
pub fn compare_gradients(
    net: &Network,
    analytic: &Network,
    batch: &[&Example],
    weights: &[f64],
    l2: f64,
    epsilon: f64,
) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} outside [1e-7, 1e-3]"
        )));
    }
    let mut probe = net.clone();
    let analytic_tensors = analytic.tensors();
    let mut worst: f64 = 0.0;
    for (t, i) in sample_positions(net) {
        let orig = net.tensors()[t][i];
        probe.tensors_mut()[t][i] = orig + epsilon;
        let up = probe.loss(batch, weights, l2)?;
        probe.tensors_mut()[t][i] = orig - epsilon;
        let down = probe.loss(batch, weights, l2)?;
        probe.tensors_mut()[t][i] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        worst = worst.max(relative_error(analytic_tensors[t][i], numeric));
    }
    Ok(worst)
}

/// Max relative error of the backpropagated gradient against central
/// finite differences.
pub fn gradient_check(
    net: &Network,
    batch: &[&Example],
    weights: &[f64],
    l2: f64,
    epsilon: f64,
) -> Result<f64> {
    let mut grad = net.zeros_like();
    net.loss_and_grad(batch, weights, l2, &mut grad)?;
    compare_gradients(net, &grad, batch, weights, l2, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::from_dense(v)
    }

    fn toy_batch(dim: usize, heads: usize, arity: usize, n: usize, seed: u64) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Example {
                inputs: (0..heads)
                    .map(|_| fv(&(0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>()))
                    .collect(),
                labels: (0..heads).map(|_| rng.random_range(0..arity)).collect(),
            })
            .collect()
    }

    #[test]
    fn zero_network_is_uniform() {
        let enc = EncoderParams::zeros(4, 3);
        let head = HeadParams::zeros(3, 10);
        let p = forward(&enc, &head, &fv(&[1.0, 2.0, 0.0, -1.0])).unwrap();
        for v in p {
            assert!((v - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_set_two_class() {
        let enc = EncoderParams {
            input_dim: 1,
            hidden: 1,
            w: vec![1.0],
            b: vec![0.0],
        };
        let head = HeadParams {
            hidden: 1,
            arity: 2,
            w: vec![2.0, 0.0],
            b: vec![0.0, 0.0],
        };
        assert_eq!(forward(&enc, &head, &fv(&[0.0])).unwrap(), vec![0.5, 0.5]);
        let p = forward(&enc, &head, &fv(&[50.0])).unwrap();
        // tanh saturates at 1, so p0 = e²/(e²+1)
        let e2 = 2f64.exp();
        assert!((p[0] - e2 / (e2 + 1.0)).abs() < 1e-12);
        assert!(p[0] > p[1]);
    }

    #[test]
    fn dimension_mismatch() {
        let enc = EncoderParams::zeros(4, 3);
        let head = HeadParams::zeros(3, 2);
        assert!(forward(&enc, &head, &fv(&[1.0])).is_err());
        let head = HeadParams::zeros(2, 2);
        assert!(forward(&enc, &head, &fv(&[1.0; 4])).is_err());
    }

    #[test]
    fn multitask_loss_examples() {
        assert!((multitask_loss(1.0, 2.0, 0.8, 0.2).unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(multitask_loss(3.0, 0.0, 0.8, 0.2).unwrap(), 0.8 * 3.0);
        assert_eq!(multitask_loss(0.7, 0.7, 0.5, 0.5).unwrap(), 0.7);
        assert!(multitask_loss(-1.0, 0.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn gradient_check_single_head() {
        let net = Network::init(6, 5, &[10], 3);
        let batch = toy_batch(6, 1, 10, 7, 1);
        let refs: Vec<&Example> = batch.iter().collect();
        let err = gradient_check(&net, &refs, &[1.0], 0.01, 1e-5).unwrap();
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn gradient_check_two_heads_weighted() {
        let net = Network::init(6, 5, &[10, 10], 4);
        let batch = toy_batch(6, 2, 10, 7, 2);
        let refs: Vec<&Example> = batch.iter().collect();
        let err = gradient_check(&net, &refs, &[0.8, 0.2], 0.0, 1e-5).unwrap();
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn corrupted_gradient_fails_check() {
        let net = Network::init(4, 3, &[3], 5);
        let batch = toy_batch(4, 1, 3, 5, 3);
        let refs: Vec<&Example> = batch.iter().collect();
        let mut grad = net.zeros_like();
        net.loss_and_grad(&refs, &[1.0], 0.0, &mut grad).unwrap();
        grad.encoder.w[2] += 1.0;
        let err = compare_gradients(&net, &grad, &refs, &[1.0], 0.0, 1e-5).unwrap();
        assert!(err > 1e-4);
    }

    #[test]
    fn epsilon_range_enforced() {
        let net = Network::init(2, 2, &[2], 0);
        let batch = toy_batch(2, 1, 2, 2, 0);
        let refs: Vec<&Example> = batch.iter().collect();
        assert!(gradient_check(&net, &refs, &[1.0], 0.0, 1e-2).is_err());
        assert!(gradient_check(&net, &refs, &[1.0], 0.0, 1e-8).is_err());
    }

    #[test]
    fn two_head_gradient_decomposes() {
        let net = Network::init(5, 4, &[10, 10], 9);
        let batch = toy_batch(5, 2, 10, 6, 4);
        let refs: Vec<&Example> = batch.iter().collect();
        let mut both = net.zeros_like();
        let mut g1 = net.zeros_like();
        let mut g2 = net.zeros_like();
        net.loss_and_grad(&refs, &[0.8, 0.2], 0.0, &mut both).unwrap();
        net.loss_and_grad(&refs, &[1.0, 0.0], 0.0, &mut g1).unwrap();
        net.loss_and_grad(&refs, &[0.0, 1.0], 0.0, &mut g2).unwrap();
        for ((c, a), b) in both.encoder.w.iter().zip(&g1.encoder.w).zip(&g2.encoder.w) {
            assert!((c - (0.8 * a + 0.2 * b)).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut net = Network::init(2, 2, &[2], 0);
        let mut grad = net.zeros_like();
        grad.heads[0].b = vec![1.0, -1.0];
        let before = net.heads[0].b.clone();
        let mut adam = Adam::new(&net, 0.1, 0.9, 0.999, 1e-8);
        adam.update(&mut net, &grad);
        // first Adam step has magnitude lr regardless of gradient scale
        assert!((net.heads[0].b[0] - (before[0] - 0.1)).abs() < 1e-9);
        assert!((net.heads[0].b[1] - (before[1] + 0.1)).abs() < 1e-9);
    }
}

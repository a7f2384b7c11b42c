//! Desk-scale training: full backpropagation through the projection,
//! both LSTM directions and the MaxOut layer, with momentum SGD.

use super::net::{lstm_forward, maxout_forward_cached, project_states, LstmTrace, Mat};
use super::{
    ctc_loss, sgd_momentum_step, softmax_rows, LabelSequence, SeqNetError, SeqNetParams,
};

/// Optimizer settings; the reference values are learning rate 1e-4 and
/// momentum 0.9.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_iterations: usize,
    /// Stop once mean per-sample loss (nats) drops below this.
    pub target_loss: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            momentum: 0.9,
            max_iterations: 5000,
            target_loss: 0.05,
            seed: 42,
        }
    }
}

/// One training sample: column-window strips plus the target labels.
pub type Sample = (Vec<Vec<f64>>, LabelSequence);

/// Gradient accumulator shaped like the parameter set.
struct Grads {
    maxout_w: Vec<Mat>,
    maxout_b: Vec<Vec<f64>>,
    fwd_w: Mat,
    fwd_u: Mat,
    fwd_b: Vec<f64>,
    bwd_w: Mat,
    bwd_u: Mat,
    bwd_b: Vec<f64>,
    proj_w: Mat,
    proj_b: Vec<f64>,
}

impl Grads {
    fn zeros_like(p: &SeqNetParams) -> Self {
        Self {
            maxout_w: p
                .maxout
                .weights
                .iter()
                .map(|w| Mat::zeros(w.rows, w.cols))
                .collect(),
            maxout_b: p.maxout.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            fwd_w: Mat::zeros(p.fwd.w.rows, p.fwd.w.cols),
            fwd_u: Mat::zeros(p.fwd.u.rows, p.fwd.u.cols),
            fwd_b: vec![0.0; p.fwd.b.len()],
            bwd_w: Mat::zeros(p.bwd.w.rows, p.bwd.w.cols),
            bwd_u: Mat::zeros(p.bwd.u.rows, p.bwd.u.cols),
            bwd_b: vec![0.0; p.bwd.b.len()],
            proj_w: Mat::zeros(p.proj_w.rows, p.proj_w.cols),
            proj_b: vec![0.0; p.proj_b.len()],
        }
    }

    /// Flat tensor views in the same order as
    /// [`SeqNetParams::tensors_mut`].
    fn tensors(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for w in &mut self.maxout_w {
            out.push(&mut w.data);
        }
        for b in &mut self.maxout_b {
            out.push(b);
        }
        out.push(&mut self.fwd_w.data);
        out.push(&mut self.fwd_u.data);
        out.push(&mut self.fwd_b);
        out.push(&mut self.bwd_w.data);
        out.push(&mut self.bwd_u.data);
        out.push(&mut self.bwd_b);
        out.push(&mut self.proj_w.data);
        out.push(&mut self.proj_b);
        out
    }
}

/// Holds the momentum state between updates of one parameter set.
pub struct Trainer {
    pub params: SeqNetParams,
    pub cfg: TrainConfig,
    velocity: Vec<Vec<f64>>,
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub iterations: usize,
    pub final_mean_loss: f64,
    pub converged: bool,
}

impl Trainer {
    pub fn new(params: SeqNetParams, cfg: TrainConfig) -> Self {
        let velocity = params.tensor_lens().iter().map(|&n| vec![0.0; n]).collect();
        Self {
            params,
            cfg,
            velocity,
        }
    }

    /// One full-batch update; returns the mean per-sample loss before the
    /// update. Gradients are summed over the batch.
    pub fn step(&mut self, samples: &[Sample]) -> Result<f64, SeqNetError> {
        let mut grads = Grads::zeros_like(&self.params);
        let mut total_loss = 0.0;
        for (strips, target) in samples {
            total_loss += accumulate_sample(&self.params, strips, target, &mut grads)?;
        }
        for ((p, v), g) in self
            .params
            .tensors_mut()
            .into_iter()
            .zip(self.velocity.iter_mut())
            .zip(grads.tensors())
        {
            sgd_momentum_step(p, v, g, self.cfg.learning_rate, self.cfg.momentum)?;
        }
        Ok(total_loss / samples.len() as f64)
    }

    /// Iterate until the mean loss falls below `target_loss` or the
    /// iteration budget runs out.
    pub fn run(&mut self, samples: &[Sample]) -> Result<TrainOutcome, SeqNetError> {
        let mut mean_loss = f64::INFINITY;
        for iter in 0..self.cfg.max_iterations {
            mean_loss = self.step(samples)?;
            if mean_loss < self.cfg.target_loss {
                return Ok(TrainOutcome {
                    iterations: iter + 1,
                    final_mean_loss: mean_loss,
                    converged: true,
                });
            }
        }
        Ok(TrainOutcome {
            iterations: self.cfg.max_iterations,
            final_mean_loss: mean_loss,
            converged: mean_loss < self.cfg.target_loss,
        })
    }
}

/// Convenience wrapper: initialize a head and train it on the samples.
pub fn train_head(
    params: SeqNetParams,
    samples: &[Sample],
    cfg: TrainConfig,
) -> Result<(SeqNetParams, TrainOutcome), SeqNetError> {
    let mut trainer = Trainer::new(params, cfg);
    let outcome = trainer.run(samples)?;
    Ok((trainer.params, outcome))
}

/// Forward one sample, add its parameter gradients into `grads`, and
/// return the CTC loss.
fn accumulate_sample(
    params: &SeqNetParams,
    strips: &[Vec<f64>],
    target: &LabelSequence,
    grads: &mut Grads,
) -> Result<f64, SeqNetError> {
    let t_len = strips.len();
    let hidden = params.fwd.hidden();

    let (features, winners) = maxout_forward_cached(strips, &params.maxout)?;
    let fwd_trace = lstm_forward(&features, &params.fwd, false);
    let bwd_trace = lstm_forward(&features, &params.bwd, true);
    let mut states = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut z = fwd_trace.hidden[t].clone();
        z.extend_from_slice(&bwd_trace.hidden[t_len - 1 - t]);
        states.push(z);
    }
    let logits = project_states(&states, params);
    let probs = softmax_rows(&logits);
    let (loss, dlogits) = ctc_loss(&probs, target)?;

    // Projection layer.
    let mut dstates = vec![vec![0.0; 2 * hidden]; t_len];
    for t in 0..t_len {
        grads.proj_w.outer_add(&dlogits[t], &states[t]);
        for (gb, &d) in grads.proj_b.iter_mut().zip(&dlogits[t]) {
            *gb += d;
        }
        params.proj_w.tr_matvec_add(&dlogits[t], &mut dstates[t]);
    }

    // Split state gradients per direction. The backward trace stores
    // steps in processing order (time reversed).
    let dh_fwd: Vec<&[f64]> = dstates.iter().map(|d| &d[..hidden]).collect();
    let dh_bwd: Vec<&[f64]> = (0..t_len)
        .map(|j| &dstates[t_len - 1 - j][hidden..])
        .collect();

    let mut dfeat = vec![vec![0.0; features[0].len()]; t_len];
    let time_fwd: Vec<usize> = (0..t_len).collect();
    let time_bwd: Vec<usize> = (0..t_len).rev().collect();
    lstm_backward(
        &params.fwd,
        &fwd_trace,
        &features,
        &dh_fwd,
        &time_fwd,
        (&mut grads.fwd_w, &mut grads.fwd_u, &mut grads.fwd_b),
        &mut dfeat,
    );
    lstm_backward(
        &params.bwd,
        &bwd_trace,
        &features,
        &dh_bwd,
        &time_bwd,
        (&mut grads.bwd_w, &mut grads.bwd_u, &mut grads.bwd_b),
        &mut dfeat,
    );

    // MaxOut layer: gradients flow through the winning piece only.
    for t in 0..t_len {
        for (u, (&d, &winner)) in dfeat[t].iter().zip(&winners[t]).enumerate() {
            if d == 0.0 {
                continue;
            }
            let j = winner as usize;
            grads.maxout_b[j][u] += d;
            let row_start = u * grads.maxout_w[j].cols;
            let row = &mut grads.maxout_w[j].data[row_start..row_start + strips[t].len()];
            for (w, &x) in row.iter_mut().zip(&strips[t]) {
                *w += d * x;
            }
        }
    }

    Ok(loss)
}

/// Backpropagation through time for one direction. `trace` steps are in
/// processing order; `time_of[j]` maps processing step `j` to the input
/// time index, and `dh_seq[j]` is the state gradient for processing step
/// `j`.
fn lstm_backward(
    params: &super::LstmParams,
    trace: &LstmTrace,
    inputs: &[Vec<f64>],
    dh_seq: &[&[f64]],
    time_of: &[usize],
    (gw, gu, gb): (&mut Mat, &mut Mat, &mut Vec<f64>),
    dinputs: &mut [Vec<f64>],
) {
    let h_dim = params.hidden();
    let steps = trace.hidden.len();
    let mut dh_next = vec![0.0; h_dim];
    let mut dc_next = vec![0.0; h_dim];
    let mut ds = vec![0.0; 4 * h_dim];
    let zero = vec![0.0; h_dim];
    for j in (0..steps).rev() {
        let [i, f, g, o] = &trace.gates[j];
        let tc = &trace.tanh_cell[j];
        let c_prev = if j > 0 { &trace.cell[j - 1] } else { &zero };
        let h_prev = if j > 0 { &trace.hidden[j - 1] } else { &zero };
        for u in 0..h_dim {
            let dh = dh_seq[j][u] + dh_next[u];
            let do_ = dh * tc[u];
            let dc = dc_next[u] + dh * o[u] * (1.0 - tc[u] * tc[u]);
            let di = dc * g[u];
            let df = dc * c_prev[u];
            let dg = dc * i[u];
            ds[u] = di * i[u] * (1.0 - i[u]);
            ds[h_dim + u] = df * f[u] * (1.0 - f[u]);
            ds[2 * h_dim + u] = dg * (1.0 - g[u] * g[u]);
            ds[3 * h_dim + u] = do_ * o[u] * (1.0 - o[u]);
            dc_next[u] = dc * f[u];
        }
        let t = time_of[j];
        gw.outer_add(&ds, &inputs[t]);
        gu.outer_add(&ds, h_prev);
        for (b, &d) in gb.iter_mut().zip(&ds) {
            *b += d;
        }
        params.w.tr_matvec_add(&ds, &mut dinputs[t]);
        dh_next.fill(0.0);
        params.u.tr_matvec_add(&ds, &mut dh_next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqnet::Alphabet;
    use rand::{Rng, SeedableRng};

    fn tiny() -> (SeqNetParams, Vec<Sample>) {
        let alphabet = Alphabet::new('-', vec!['a', 'b']).unwrap();
        let params = SeqNetParams::init_sized("en", alphabet.clone(), 7, 4, 3, 3, 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<Sample> = (0..3)
            .map(|s| {
                let t = 3 + s;
                let strips: Vec<Vec<f64>> = (0..t)
                    .map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect())
                    .collect();
                let target = alphabet.labels_of(if s % 2 == 0 { "ab" } else { "a" }).unwrap();
                (strips, target)
            })
            .collect();
        (params, samples)
    }

    /// Full-network finite-difference check: the analytic gradient of the
    /// summed batch loss must match central differences on a sample of
    /// parameters.
    #[test]
    fn full_backprop_matches_finite_differences() {
        let (params, samples) = tiny();

        let batch_loss = |p: &SeqNetParams| -> f64 {
            samples
                .iter()
                .map(|(strips, target)| {
                    let mut g = Grads::zeros_like(p);
                    accumulate_sample(p, strips, target, &mut g).unwrap()
                })
                .sum()
        };

        let mut grads = Grads::zeros_like(&params);
        for (strips, target) in &samples {
            accumulate_sample(&params, strips, target, &mut grads).unwrap();
        }

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let lens = params.tensor_lens();
        let eps = 1e-6;
        let mut grad_tensors = grads.tensors();
        for ti in 0..lens.len() {
            for _ in 0..4 {
                let idx = rng.gen_range(0..lens[ti]);
                let analytic = grad_tensors[ti][idx];
                let mut plus = params.clone();
                plus.tensors_mut()[ti][idx] += eps;
                let mut minus = params.clone();
                minus.tensors_mut()[ti][idx] -= eps;
                let fd = (batch_loss(&plus) - batch_loss(&minus)) / (2.0 * eps);
                let denom = analytic.abs().max(fd.abs()).max(1e-4);
                assert!(
                    (analytic - fd).abs() / denom < 1e-5,
                    "tensor {ti} idx {idx}: analytic {analytic} fd {fd}"
                );
            }
        }
    }

    #[test]
    fn training_reduces_loss() {
        let (params, samples) = tiny();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            max_iterations: 150,
            target_loss: 0.0,
            seed: 1,
        };
        let mut trainer = Trainer::new(params, cfg);
        let first = trainer.step(&samples).unwrap();
        let mut last = first;
        for _ in 0..149 {
            last = trainer.step(&samples).unwrap();
        }
        assert!(
            last < first * 0.5,
            "loss did not drop: first {first}, last {last}"
        );
    }
}

//! MaxOut feature extractor, bidirectional LSTM and the momentum-SGD
//! update. Reference scale: 32x8 input strips, 2 maxout pieces, 64
//! features, 64 LSTM units per direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Alphabet, FeatureSequence, ProbSequence, SeqNetError, softmax_rows};

pub const STRIP_HEIGHT: usize = 32;
pub const STRIP_WIDTH: usize = 8;
pub const INPUT_DIM: usize = STRIP_HEIGHT * STRIP_WIDTH;
pub const MAXOUT_PIECES: usize = 2;
pub const FEATURE_DIM: usize = 64;
pub const LSTM_HIDDEN: usize = 64;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out = A x + b` (b optional).
    pub fn matvec(&self, x: &[f64], bias: Option<&[f64]>, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = bias.map_or(0.0, |b| b[r]);
            acc += dot(row, x);
            out[r] = acc;
        }
    }

    /// `out += A^T y`.
    pub fn tr_matvec_add(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            let yr = y[r];
            if yr != 0.0 {
                for (o, &w) in out.iter_mut().zip(row) {
                    *o += yr * w;
                }
            }
        }
    }

    /// `A += y x^T`.
    pub fn outer_add(&mut self, y: &[f64], x: &[f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for r in 0..self.rows {
            let yr = y[r];
            if yr != 0.0 {
                let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
                for (w, &xv) in row.iter_mut().zip(x) {
                    *w += yr * xv;
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `k` affine pieces; a unit's activation is the maximum over pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxoutParams {
    pub weights: Vec<Mat>,
    pub biases: Vec<Vec<f64>>,
}

impl MaxoutParams {
    pub fn out_dim(&self) -> usize {
        self.weights.first().map_or(0, |w| w.rows)
    }

    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, |w| w.cols)
    }
}

/// One LSTM direction; gate order in the stacked `4H` dimension is input,
/// forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: Mat,
    pub u: Mat,
    pub b: Vec<f64>,
}

impl LstmParams {
    pub fn hidden(&self) -> usize {
        self.u.cols
    }
}

/// Parameters of one language head.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqNetParams {
    pub head_id: String,
    pub alphabet: Alphabet,
    pub maxout: MaxoutParams,
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    pub proj_w: Mat,
    pub proj_b: Vec<f64>,
}

impl SeqNetParams {
    /// Reference-scale initialization: Xavier-uniform weights, zero biases
    /// except the forget gate at 1.
    pub fn init(head_id: &str, alphabet: Alphabet, seed: u64) -> Self {
        Self::init_sized(
            head_id,
            alphabet,
            seed,
            INPUT_DIM,
            FEATURE_DIM,
            LSTM_HIDDEN,
            MAXOUT_PIECES,
        )
    }

    pub fn init_sized(
        head_id: &str,
        alphabet: Alphabet,
        seed: u64,
        input_dim: usize,
        feature_dim: usize,
        hidden: usize,
        pieces: usize,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xavier = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();

        let mo_scale = xavier(input_dim, feature_dim);
        let maxout = MaxoutParams {
            weights: (0..pieces)
                .map(|_| Mat::uniform(feature_dim, input_dim, mo_scale, &mut rng))
                .collect(),
            biases: vec![vec![0.0; feature_dim]; pieces],
        };

        let lstm_scale = xavier(feature_dim + hidden, hidden);
        let mut lstm = |rng: &mut ChaCha8Rng| {
            let mut b = vec![0.0; 4 * hidden];
            // Forget-gate block starts open.
            for v in &mut b[hidden..2 * hidden] {
                *v = 1.0;
            }
            LstmParams {
                w: Mat::uniform(4 * hidden, feature_dim, lstm_scale, rng),
                u: Mat::uniform(4 * hidden, hidden, lstm_scale, rng),
                b,
            }
        };
        let fwd = lstm(&mut rng);
        let bwd = lstm(&mut rng);

        let classes = alphabet.num_classes();
        let proj_scale = xavier(2 * hidden, classes);
        let proj_w = Mat::uniform(classes, 2 * hidden, proj_scale, &mut rng);
        let proj_b = vec![0.0; classes];

        Self {
            head_id: head_id.to_string(),
            alphabet,
            maxout,
            fwd,
            bwd,
            proj_w,
            proj_b,
        }
    }

    pub fn check_finite(&self) -> Result<(), SeqNetError> {
        let finite = self
            .maxout
            .weights
            .iter()
            .flat_map(|m| m.data.iter())
            .chain(self.maxout.biases.iter().flatten())
            .chain(self.fwd.w.data.iter())
            .chain(self.fwd.u.data.iter())
            .chain(self.fwd.b.iter())
            .chain(self.bwd.w.data.iter())
            .chain(self.bwd.u.data.iter())
            .chain(self.bwd.b.iter())
            .chain(self.proj_w.data.iter())
            .chain(self.proj_b.iter())
            .all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(SeqNetError::NonFiniteParam)
        }
    }

    /// Flat views over every parameter tensor, in a fixed order. The
    /// trainer's gradient and velocity buffers use the same layout.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for w in &mut self.maxout.weights {
            out.push(&mut w.data);
        }
        for b in &mut self.maxout.biases {
            out.push(b);
        }
        for lstm in [&mut self.fwd, &mut self.bwd] {
            out.push(&mut lstm.w.data);
            out.push(&mut lstm.u.data);
            out.push(&mut lstm.b);
        }
        out.push(&mut self.proj_w.data);
        out.push(&mut self.proj_b);
        out
    }

    pub fn tensor_lens(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for w in &self.maxout.weights {
            out.push(w.data.len());
        }
        for b in &self.maxout.biases {
            out.push(b.len());
        }
        for lstm in [&self.fwd, &self.bwd] {
            out.push(lstm.w.data.len());
            out.push(lstm.u.data.len());
            out.push(lstm.b.len());
        }
        out.push(self.proj_w.data.len());
        out.push(self.proj_b.len());
        out
    }
}

/// Per-strip MaxOut features: `h[u] = max_j (W_j[u] . x + b_j[u])`.
pub fn maxout_forward(
    strips: &[Vec<f64>],
    params: &MaxoutParams,
) -> Result<FeatureSequence, SeqNetError> {
    Ok(FeatureSequence(
        maxout_forward_cached(strips, params)?.0,
    ))
}

/// Forward pass that also records the winning piece per unit, for
/// backpropagation.
pub(crate) fn maxout_forward_cached(
    strips: &[Vec<f64>],
    params: &MaxoutParams,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<u8>>), SeqNetError> {
    let in_dim = params.in_dim();
    let out_dim = params.out_dim();
    let mut features = Vec::with_capacity(strips.len());
    let mut winners = Vec::with_capacity(strips.len());
    let mut piece_out = vec![0.0; out_dim];
    for (t, x) in strips.iter().enumerate() {
        if x.len() != in_dim {
            return Err(SeqNetError::ShapeMismatch(format!(
                "strip {t} has dim {}, expected {in_dim}",
                x.len()
            )));
        }
        let mut best = vec![f64::NEG_INFINITY; out_dim];
        let mut win = vec![0u8; out_dim];
        for (j, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
            w.matvec(x, Some(b), &mut piece_out);
            for u in 0..out_dim {
                if piece_out[u] > best[u] {
                    best[u] = piece_out[u];
                    win[u] = j as u8;
                }
            }
        }
        features.push(best);
        winners.push(win);
    }
    Ok((features, winners))
}

/// Everything one LSTM direction records during its forward pass.
#[derive(Debug, Clone, Default)]
pub(crate) struct LstmTrace {
    pub gates: Vec<[Vec<f64>; 4]>, // post-activation i, f, g, o per step
    pub cell: Vec<Vec<f64>>,
    pub tanh_cell: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
}

pub(crate) fn lstm_forward(
    inputs: &[Vec<f64>],
    params: &LstmParams,
    reverse: bool,
) -> LstmTrace {
    let h_dim = params.hidden();
    let t_len = inputs.len();
    let mut trace = LstmTrace {
        gates: Vec::with_capacity(t_len),
        cell: Vec::with_capacity(t_len),
        tanh_cell: Vec::with_capacity(t_len),
        hidden: Vec::with_capacity(t_len),
    };
    let mut h_prev = vec![0.0; h_dim];
    let mut c_prev = vec![0.0; h_dim];
    let mut pre = vec![0.0; 4 * h_dim];
    let order: Vec<usize> = if reverse {
        (0..t_len).rev().collect()
    } else {
        (0..t_len).collect()
    };
    for &t in &order {
        params.w.matvec(&inputs[t], Some(&params.b), &mut pre);
        params.u.matvec_add(&h_prev, &mut pre);
        let mut i = vec![0.0; h_dim];
        let mut f = vec![0.0; h_dim];
        let mut g = vec![0.0; h_dim];
        let mut o = vec![0.0; h_dim];
        let mut c = vec![0.0; h_dim];
        let mut tc = vec![0.0; h_dim];
        let mut h = vec![0.0; h_dim];
        for u in 0..h_dim {
            i[u] = sigmoid(pre[u]);
            f[u] = sigmoid(pre[h_dim + u]);
            g[u] = pre[2 * h_dim + u].tanh();
            o[u] = sigmoid(pre[3 * h_dim + u]);
            c[u] = f[u] * c_prev[u] + i[u] * g[u];
            tc[u] = c[u].tanh();
            h[u] = o[u] * tc[u];
        }
        trace.gates.push([i, f, g, o]);
        trace.cell.push(c.clone());
        trace.tanh_cell.push(tc);
        trace.hidden.push(h.clone());
        h_prev = h;
        c_prev = c;
    }
    // Traces are stored in processing order; callers index accordingly.
    trace
}

impl Mat {
    /// `out += A x`.
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            out[r] += dot(self.row(r), x);
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Concatenated bidirectional hidden states per step (pre-projection).
pub fn bilstm_states(
    x: &FeatureSequence,
    params: &SeqNetParams,
) -> Result<Vec<Vec<f64>>, SeqNetError> {
    params.check_finite()?;
    let t_len = x.len();
    let fwd = lstm_forward(&x.0, &params.fwd, false);
    let bwd = lstm_forward(&x.0, &params.bwd, true);
    let mut states = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut z = fwd.hidden[t].clone();
        // Backward trace is stored in processing order (last step first).
        z.extend_from_slice(&bwd.hidden[t_len - 1 - t]);
        states.push(z);
    }
    Ok(states)
}

/// Bidirectional LSTM over the features, projected and softmaxed per
/// step. Output length equals the input length.
pub fn bilstm_forward(
    x: &FeatureSequence,
    params: &SeqNetParams,
) -> Result<ProbSequence, SeqNetError> {
    let states = bilstm_states(x, params)?;
    let logits = project_states(&states, params);
    Ok(softmax_rows(&logits))
}

pub(crate) fn project_states(states: &[Vec<f64>], params: &SeqNetParams) -> Vec<Vec<f64>> {
    let classes = params.proj_w.rows;
    states
        .iter()
        .map(|z| {
            let mut row = vec![0.0; classes];
            params.proj_w.matvec(z, Some(&params.proj_b), &mut row);
            row
        })
        .collect()
}

/// One momentum-SGD update over parallel flat slices:
/// `v <- momentum * v + grad; param <- param - lr * v`.
pub fn sgd_momentum_step(
    params: &mut [f64],
    velocity: &mut [f64],
    grads: &[f64],
    learning_rate: f64,
    momentum: f64,
) -> Result<(), SeqNetError> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(SeqNetError::ShapeMismatch(format!(
            "params {}, velocity {}, grads {}",
            params.len(),
            velocity.len(),
            grads.len()
        )));
    }
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        *v = momentum * *v + g;
        *p -= learning_rate * *v;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_alphabet() -> Alphabet {
        Alphabet::new('-', vec!['a', 'b']).unwrap()
    }

    #[test]
    fn maxout_single_piece_is_affine() {
        let w = Mat::from_rows(vec![vec![1.0, -2.0, 0.5], vec![0.0, 1.0, 1.0]]);
        let b = vec![0.25, -1.0];
        let params = MaxoutParams {
            weights: vec![w.clone()],
            biases: vec![b.clone()],
        };
        let x = vec![2.0, 1.0, -1.0];
        let out = maxout_forward(&[x.clone()], &params).unwrap();
        for u in 0..2 {
            let want: f64 = w.row(u).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + b[u];
            assert_abs_diff_eq!(out.0[0][u], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn maxout_dominated_piece_never_wins() {
        let w = Mat::from_rows(vec![vec![1.0, 2.0], vec![-1.0, 0.5]]);
        let params = MaxoutParams {
            weights: vec![w.clone(), w.clone()],
            biases: vec![vec![0.0, 0.0], vec![-1.0, -1.0]],
        };
        let single = MaxoutParams {
            weights: vec![w],
            biases: vec![vec![0.0, 0.0]],
        };
        for x in [vec![0.3, -0.7], vec![5.0, 2.0], vec![-3.0, 1.0]] {
            let two = maxout_forward(&[x.clone()], &params).unwrap();
            let one = maxout_forward(&[x], &single).unwrap();
            assert_eq!(two.0, one.0);
        }
    }

    #[test]
    fn maxout_two_pieces_elementwise_max_oracle() {
        let w1 = Mat::from_rows(vec![vec![1.0, 0.0, -1.0], vec![0.5, 0.5, 0.5]]);
        let w2 = Mat::from_rows(vec![vec![-1.0, 1.0, 0.0], vec![2.0, -1.0, 0.0]]);
        let b1 = vec![0.1, -0.2];
        let b2 = vec![0.0, 0.3];
        let params = MaxoutParams {
            weights: vec![w1.clone(), w2.clone()],
            biases: vec![b1.clone(), b2.clone()],
        };
        let x = vec![0.7, -0.4, 1.2];
        let out = maxout_forward(&[x.clone()], &params).unwrap();
        for u in 0..2 {
            let a: f64 = w1.row(u).iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() + b1[u];
            let b: f64 = w2.row(u).iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() + b2[u];
            assert_abs_diff_eq!(out.0[0][u], a.max(b), epsilon = 1e-12);
        }
    }

    #[test]
    fn maxout_shape_mismatch_errors() {
        let params = MaxoutParams {
            weights: vec![Mat::zeros(2, 3)],
            biases: vec![vec![0.0; 2]],
        };
        assert!(maxout_forward(&[vec![1.0, 2.0]], &params).is_err());
    }

    fn frozen_params(hidden: usize, classes: usize) -> SeqNetParams {
        // Zero gate weights; forget bias saturated high so dynamics stay
        // at the initial state.
        let mut b = vec![0.0; 4 * hidden];
        for v in &mut b[hidden..2 * hidden] {
            *v = 100.0;
        }
        let lstm = LstmParams {
            w: Mat::zeros(4 * hidden, 2),
            u: Mat::zeros(4 * hidden, hidden),
            b,
        };
        SeqNetParams {
            head_id: "en".into(),
            alphabet: tiny_alphabet(),
            maxout: MaxoutParams {
                weights: vec![Mat::zeros(2, 2)],
                biases: vec![vec![0.0; 2]],
            },
            fwd: lstm.clone(),
            bwd: lstm,
            proj_w: Mat::zeros(classes, 2 * hidden),
            proj_b: vec![0.4, -0.3, 0.1],
        }
    }

    #[test]
    fn frozen_dynamics_yield_bias_softmax() {
        let params = frozen_params(3, 3);
        let x = FeatureSequence(vec![vec![0.0, 0.0]; 4]);
        let p = bilstm_forward(&x, &params).unwrap();
        let want = softmax_rows(&vec![vec![0.4, -0.3, 0.1]]);
        for row in p.rows() {
            for (got, want) in row.iter().zip(want.rows()[0].iter()) {
                assert_abs_diff_eq!(got, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_step_rows_normalize() {
        let params = SeqNetParams::init_sized("en", tiny_alphabet(), 9, 4, 3, 5, 2);
        let x = FeatureSequence(vec![vec![0.2, -0.1, 0.5]]);
        let p = bilstm_forward(&x, &params).unwrap();
        assert_eq!(p.len(), 1);
        let sum: f64 = p.rows()[0].iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nonfinite_parameter_rejected() {
        let mut params = SeqNetParams::init_sized("en", tiny_alphabet(), 9, 4, 3, 5, 2);
        params.fwd.w.data[7] = f64::NAN;
        let x = FeatureSequence(vec![vec![0.0; 3]]);
        assert!(matches!(
            bilstm_forward(&x, &params),
            Err(SeqNetError::NonFiniteParam)
        ));
    }

    #[test]
    fn deterministic_forward() {
        let params = SeqNetParams::init_sized("en", tiny_alphabet(), 31, 6, 4, 5, 2);
        let x = FeatureSequence(vec![vec![0.1; 6], vec![-0.2; 6], vec![0.7; 6]]);
        let a = bilstm_forward(&x, &params).unwrap();
        let b = bilstm_forward(&x, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hand_unrolled_recurrence_oracle() {
        // H = 1, D = 1: the whole recurrence is scalar and can be unrolled
        // by hand below.
        let fwd = LstmParams {
            w: Mat::from_rows(vec![vec![0.5], vec![-0.3], vec![0.8], vec![0.2]]),
            u: Mat::from_rows(vec![vec![0.1], vec![0.4], vec![-0.2], vec![0.3]]),
            b: vec![0.05, 1.0, -0.1, 0.0],
        };
        let bwd = LstmParams {
            w: Mat::from_rows(vec![vec![-0.4], vec![0.6], vec![0.25], vec![-0.15]]),
            u: Mat::from_rows(vec![vec![0.2], vec![-0.1], vec![0.35], vec![0.05]]),
            b: vec![-0.02, 0.9, 0.2, 0.1],
        };
        let params = SeqNetParams {
            head_id: "en".into(),
            alphabet: tiny_alphabet(),
            maxout: MaxoutParams {
                weights: vec![Mat::from_rows(vec![vec![1.0]])],
                biases: vec![vec![0.0]],
            },
            fwd: fwd.clone(),
            bwd: bwd.clone(),
            proj_w: Mat::from_rows(vec![vec![0.7, -0.2], vec![-0.5, 0.4], vec![0.1, 0.9]]),
            proj_b: vec![0.0, 0.1, -0.1],
        };
        let inputs = [0.3, -0.6, 0.9];
        let x = FeatureSequence(inputs.iter().map(|&v| vec![v]).collect());

        // Independent scalar unroll of the standard LSTM equations.
        let step = |p: &LstmParams, x: f64, h: f64, c: f64| -> (f64, f64) {
            let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
            let i = sig(p.w.data[0] * x + p.u.data[0] * h + p.b[0]);
            let f = sig(p.w.data[1] * x + p.u.data[1] * h + p.b[1]);
            let g = (p.w.data[2] * x + p.u.data[2] * h + p.b[2]).tanh();
            let o = sig(p.w.data[3] * x + p.u.data[3] * h + p.b[3]);
            let c_new = f * c + i * g;
            (o * c_new.tanh(), c_new)
        };
        let mut hf = vec![];
        let (mut h, mut c) = (0.0, 0.0);
        for &v in &inputs {
            let (nh, nc) = step(&fwd, v, h, c);
            h = nh;
            c = nc;
            hf.push(h);
        }
        let mut hb = vec![0.0; 3];
        let (mut h, mut c) = (0.0, 0.0);
        for (idx, &v) in inputs.iter().enumerate().rev() {
            let (nh, nc) = step(&bwd, v, h, c);
            h = nh;
            c = nc;
            hb[idx] = h;
        }
        let mut want_logits = Vec::new();
        for t in 0..3 {
            let z = [hf[t], hb[t]];
            want_logits.push(vec![
                0.7 * z[0] - 0.2 * z[1],
                -0.5 * z[0] + 0.4 * z[1] + 0.1,
                0.1 * z[0] + 0.9 * z[1] - 0.1,
            ]);
        }
        let want = softmax_rows(&want_logits);

        let got = bilstm_forward(&x, &params).unwrap();
        for (grow, wrow) in got.rows().iter().zip(want.rows()) {
            for (g, w) in grow.iter().zip(wrow) {
                assert_abs_diff_eq!(g, w, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn direction_symmetry() {
        // Reversing the input and swapping the direction blocks reverses
        // the pre-projection state sequence with its halves swapped.
        let params = SeqNetParams::init_sized("en", tiny_alphabet(), 77, 4, 3, 5, 2);
        let x = FeatureSequence(vec![
            vec![0.1, -0.2, 0.3],
            vec![0.5, 0.0, -0.4],
            vec![-0.6, 0.2, 0.1],
            vec![0.9, -0.9, 0.0],
        ]);
        let states = bilstm_states(&x, &params).unwrap();

        let mut swapped = params.clone();
        std::mem::swap(&mut swapped.fwd, &mut swapped.bwd);
        let reversed = FeatureSequence(x.0.iter().rev().cloned().collect());
        let rev_states = bilstm_states(&reversed, &swapped).unwrap();

        let h = 5;
        let t_len = x.len();
        for t in 0..t_len {
            let mirrored = &rev_states[t_len - 1 - t];
            let original = &states[t];
            for u in 0..h {
                assert_abs_diff_eq!(original[u], mirrored[h + u], epsilon = 1e-12);
                assert_abs_diff_eq!(original[h + u], mirrored[u], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sgd_zero_grad_zero_velocity_no_change() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut v = vec![0.0; 3];
        sgd_momentum_step(&mut p, &mut v, &[0.0; 3], 1e-4, 0.9).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn sgd_first_step_is_lr_times_grad() {
        let mut p = vec![1.0];
        let mut v = vec![0.0];
        sgd_momentum_step(&mut p, &mut v, &[2.0], 1e-4, 0.9).unwrap();
        assert_abs_diff_eq!(p[0], 1.0 - 1e-4 * 2.0, epsilon = 1e-15);
    }

    #[test]
    fn sgd_two_steps_accumulate_momentum() {
        // v1 = g, v2 = 0.9 g + g = 1.9 g; total decrease lr*g*(1 + 1.9).
        let mut p = vec![0.0];
        let mut v = vec![0.0];
        let g = 3.0;
        sgd_momentum_step(&mut p, &mut v, &[g], 1e-4, 0.9).unwrap();
        sgd_momentum_step(&mut p, &mut v, &[g], 1e-4, 0.9).unwrap();
        assert_abs_diff_eq!(p[0], -1e-4 * g * (1.0 + 1.9), epsilon = 1e-15);
    }

    #[test]
    fn sgd_shape_mismatch_errors() {
        let mut p = vec![0.0; 2];
        let mut v = vec![0.0; 2];
        assert!(sgd_momentum_step(&mut p, &mut v, &[1.0], 1e-4, 0.9).is_err());
    }
}

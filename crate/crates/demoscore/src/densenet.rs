//! Minimal feed-forward network engine with analytic gradients.
//!
//! Used for both the inverse dynamics model and the policy. Training is
//! plain Adam on mini-batches with a seeded shuffle; everything is f64
//! and single-threaded so that a fixed seed reproduces parameters
//! bit-identically.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }

    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed in terms of the pre-activation.
    fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out_dim x in_dim`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

impl DenseNet {
    /// Builds a network with the given layer sizes. `dims` includes the
    /// input and output dimensions. Hidden layers use `hidden`; the last
    /// layer uses `output`. Parameters are initialized uniformly in
    /// `±1/sqrt(fan_in)` from the seed.
    pub fn new(dims: &[usize], hidden: Activation, output: Activation, seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Config("zero-width layer".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (i, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut wv = Vec::with_capacity(fan_out * fan_in);
            for _ in 0..fan_out * fan_in {
                wv.push(rng.gen_range(-bound..=bound));
            }
            let mut bv = Vec::with_capacity(fan_out);
            for _ in 0..fan_out {
                bv.push(rng.gen_range(-bound..=bound));
            }
            let activation = if i == dims.len() - 2 { output } else { hidden };
            layers.push(Layer {
                weights: Array2::from_shape_vec((fan_out, fan_in), wv).expect("shape"),
                bias: Array1::from_vec(bv),
                activation,
            });
        }
        Ok(DenseNet { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].weights.nrows() != w[1].weights.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: w[0].weights.nrows(),
                    got: w[1].weights.ncols(),
                });
            }
        }
        Ok(DenseNet { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.nrows()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Single-vector forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite network input".into()));
        }
        let mut a = Array1::from_vec(x.to_vec());
        for layer in &self.layers {
            let z = layer.weights.dot(&a) + &layer.bias;
            a = z.mapv(|v| layer.activation.apply(v));
        }
        Ok(a.to_vec())
    }

    /// Batched forward pass; rows are samples.
    pub fn forward_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let mut a = x.clone();
        for layer in &self.layers {
            let mut z = a.dot(&layer.weights.t());
            z += &layer.bias;
            a = z.mapv(|v| layer.activation.apply(v));
        }
        Ok(a)
    }
}

/// Per-layer parameter gradients, same shapes as the network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    SmoothL1,
    Mse,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::SmoothL1 => "smooth_l1",
            LossKind::Mse => "mse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "smooth_l1" => Ok(LossKind::SmoothL1),
            "mse" => Ok(LossKind::Mse),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }

    /// Per-coordinate loss and derivative of the error `e = pred - target`.
    fn value_and_grad(&self, e: f64) -> (f64, f64) {
        match self {
            LossKind::SmoothL1 => {
                if e.abs() < 1.0 {
                    (0.5 * e * e, e)
                } else {
                    (e.abs() - 0.5, e.signum())
                }
            }
            LossKind::Mse => (e * e, 2.0 * e),
        }
    }
}

/// Mean loss over the batch (per-coordinate losses summed within each
/// sample) and its gradient with respect to every parameter.
pub fn loss_and_grad(
    net: &DenseNet,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    loss: LossKind,
) -> Result<(f64, Gradients)> {
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::Config("empty batch".into()));
    }
    if targets.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.nrows(),
        });
    }
    if targets.ncols() != net.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.output_dim(),
            got: targets.ncols(),
        });
    }
    if inputs.ncols() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: inputs.ncols(),
        });
    }

    // Forward pass, caching pre-activations and activations.
    let mut pre: Vec<Array2<f64>> = Vec::with_capacity(net.layers.len());
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(net.layers.len() + 1);
    acts.push(inputs.clone());
    for layer in &net.layers {
        let mut z = acts.last().unwrap().dot(&layer.weights.t());
        z += &layer.bias;
        acts.push(z.mapv(|v| layer.activation.apply(v)));
        pre.push(z);
    }

    // Loss on the output activations.
    let output = acts.last().unwrap();
    let mut total = 0.0;
    let mut out_grad = Array2::<f64>::zeros(output.raw_dim());
    Zip::from(&mut out_grad)
        .and(output)
        .and(targets)
        .for_each(|g, &p, &t| {
            let (v, d) = loss.value_and_grad(p - t);
            total += v;
            *g = d;
        });
    let loss_value = total / n as f64;
    out_grad.mapv_inplace(|g| g / n as f64);

    // Backward pass.
    let mut grads = vec![None; net.layers.len()];
    let mut delta = out_grad;
    for (l, layer) in net.layers.iter().enumerate().rev() {
        // delta currently holds dL/da_l; convert to dL/dz_l.
        Zip::from(&mut delta).and(&pre[l]).for_each(|d, &z| {
            *d *= layer.activation.derivative(z);
        });
        let dw = delta.t().dot(&acts[l]);
        let db = delta.sum_axis(Axis(0));
        if l > 0 {
            delta = delta.dot(&layer.weights);
        }
        grads[l] = Some((dw, db));
    }
    Ok((
        loss_value,
        Gradients {
            layers: grads.into_iter().map(|g| g.unwrap()).collect(),
        },
    ))
}

/// Adaptive-moment gradient descent with the standard decay constants.
pub struct Adam {
    m: Vec<(Array2<f64>, Array1<f64>)>,
    v: Vec<(Array2<f64>, Array1<f64>)>,
    t: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    pub fn new(net: &DenseNet) -> Self {
        let zeros = |l: &Layer| {
            (
                Array2::zeros(l.weights.raw_dim()),
                Array1::zeros(l.bias.raw_dim()),
            )
        };
        Adam {
            m: net.layers.iter().map(zeros).collect(),
            v: net.layers.iter().map(zeros).collect(),
            t: 0,
        }
    }

    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t);
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[l];
            let (mw, mb) = &mut self.m[l];
            let (vw, vb) = &mut self.v[l];
            Zip::from(&mut layer.weights)
                .and(&mut *mw)
                .and(&mut *vw)
                .and(gw)
                .for_each(|p, m, v, &g| {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
                });
            Zip::from(&mut layer.bias)
                .and(&mut *mb)
                .and(&mut *vb)
                .and(gb)
                .for_each(|p, m, v, &g| {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
                });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Trains the network in place on `(inputs, targets)` rows and returns
/// the per-epoch mean loss. Deterministic given the config seed; errors
/// with the offending epoch if the loss stops being finite.
pub fn train(
    net: &mut DenseNet,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::Config("empty training dataset".into()));
    }
    if targets.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.nrows(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(net);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let xb = select_rows(inputs, chunk);
            let tb = select_rows(targets, chunk);
            let (loss, grads) = loss_and_grad(net, &xb, &tb, cfg.loss)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            adam.step(net, &grads, cfg.learning_rate);
            loss_sum += loss * chunk.len() as f64;
        }
        let mean = loss_sum / n as f64;
        if !mean.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.push(mean);
    }
    Ok(history)
}

fn select_rows(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), m.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&m.row(i));
    }
    out
}

// ---------------------------------------------------------------------------
// Checkpoint format: structured text, full decimal precision.
//
//   densenet layers=2 input_dim=3 output_dim=1
//   layer in=3 out=8 activation=relu
//   <8 weight rows of 3 values>
//   <1 bias row of 8 values>
//   layer in=8 out=1 activation=identity
//   ...
// ---------------------------------------------------------------------------

pub fn write_checkpoint<W: Write>(w: &mut W, net: &DenseNet) -> Result<()> {
    let mut buf = String::new();
    let _ = writeln!(
        buf,
        "densenet layers={} input_dim={} output_dim={}",
        net.layers.len(),
        net.input_dim(),
        net.output_dim()
    );
    for layer in &net.layers {
        let _ = writeln!(
            buf,
            "layer in={} out={} activation={}",
            layer.weights.ncols(),
            layer.weights.nrows(),
            layer.activation.as_str()
        );
        for row in layer.weights.rows() {
            let values: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(buf, "{}", values.join(" "));
        }
        let values: Vec<String> = layer.bias.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(buf, "{}", values.join(" "));
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn save_checkpoint(path: &Path, net: &DenseNet) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_checkpoint(&mut f, net)
}

pub fn read_checkpoint<R: Read>(r: R, path: &str) -> Result<DenseNet> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines().enumerate();
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_string(),
        line: line + 1,
        message,
    };
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            None => Err(Error::Parse {
                path: path.to_string(),
                line: 0,
                message: "unexpected end of file".into(),
            }),
            Some((i, Ok(l))) => Ok((i, l)),
            Some((_, Err(e))) => Err(Error::Io(e)),
        }
    };

    let (i, header) = next()?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("densenet") {
        return Err(perr(i, "expected `densenet` header".into()));
    }
    let nlayers: usize = toks
        .next()
        .and_then(|t| t.strip_prefix("layers="))
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| perr(i, "bad layers field".into()))?;

    let parse_row = |line: &str, want: usize, i: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(i, format!("bad number: {e}")))?;
        if v.len() != want {
            return Err(perr(i, format!("expected {want} values, got {}", v.len())));
        }
        Ok(v)
    };

    let mut layers = Vec::with_capacity(nlayers);
    for _ in 0..nlayers {
        let (i, lh) = next()?;
        let mut toks = lh.split_whitespace();
        if toks.next() != Some("layer") {
            return Err(perr(i, "expected `layer` header".into()));
        }
        let fan_in: usize = toks
            .next()
            .and_then(|t| t.strip_prefix("in="))
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(i, "bad in field".into()))?;
        let fan_out: usize = toks
            .next()
            .and_then(|t| t.strip_prefix("out="))
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(i, "bad out field".into()))?;
        let activation = Activation::parse(
            toks.next()
                .and_then(|t| t.strip_prefix("activation="))
                .ok_or_else(|| perr(i, "bad activation field".into()))?,
        )?;
        let mut wv = Vec::with_capacity(fan_out * fan_in);
        for _ in 0..fan_out {
            let (i, line) = next()?;
            wv.extend(parse_row(&line, fan_in, i)?);
        }
        let (i, bline) = next()?;
        let bias = parse_row(&bline, fan_out, i)?;
        layers.push(Layer {
            weights: Array2::from_shape_vec((fan_out, fan_in), wv).expect("shape"),
            bias: Array1::from_vec(bias),
            activation,
        });
    }
    DenseNet::from_layers(layers)
}

pub fn load_checkpoint(path: &Path) -> Result<DenseNet> {
    let f = std::fs::File::open(path)?;
    read_checkpoint(f, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent re-implementation of the forward arithmetic using only
    /// scalar loops; the oracle for the batched path.
    fn forward_by_hand(net: &DenseNet, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for layer in net.layers() {
            let mut next = vec![0.0; layer.weights.nrows()];
            for (o, out) in next.iter_mut().enumerate() {
                let mut z = layer.bias[o];
                for (i, &xi) in a.iter().enumerate() {
                    z += layer.weights[(o, i)] * xi;
                }
                *out = layer.activation.apply(z);
            }
            a = next;
        }
        a
    }

    fn zero_net(dims: &[usize], output: Activation) -> DenseNet {
        let mut net = DenseNet::new(dims, Activation::Relu, output, 0).unwrap();
        for layer in net.layers.iter_mut() {
            layer.weights.fill(0.0);
            layer.bias.fill(0.0);
        }
        net
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = zero_net(&[3, 4, 2], Activation::Identity);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut net = zero_net(&[3, 3], Activation::Identity);
        for i in 0..3 {
            net.layers[0].weights[(i, i)] = 1.0;
        }
        let x = [0.5, -1.5, 2.0];
        assert_eq!(net.forward(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn forward_matches_hand_evaluation() {
        let net = DenseNet::new(&[5, 16, 16, 3], Activation::Tanh, Activation::Identity, 7)
            .unwrap();
        let x = [0.3, -0.7, 1.2, 0.0, -2.2];
        let got = net.forward(&x).unwrap();
        let want = forward_by_hand(&net, &x);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        // Batched path agrees with the vector path.
        let xb = Array2::from_shape_vec((1, 5), x.to_vec()).unwrap();
        let yb = net.forward_batch(&xb).unwrap();
        for (g, w) in yb.row(0).iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = DenseNet::new(&[3, 2], Activation::Relu, Activation::Identity, 0).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
        assert!(net.forward(&[1.0, 2.0, f64::NAN]).is_err());
    }

    #[test]
    fn smooth_l1_values() {
        // Error vector (2, 0): |2| - 0.5 + 0 = 1.5.
        let mut net = zero_net(&[1, 2], Activation::Identity);
        net.layers[0].bias[0] = 2.0;
        let x = Array2::from_shape_vec((1, 1), vec![0.0]).unwrap();
        let t = Array2::zeros((1, 2));
        let (loss, _) = loss_and_grad(&net, &x, &t, LossKind::SmoothL1).unwrap();
        assert_eq!(loss, 1.5);
    }

    #[test]
    fn perfect_prediction_zero_loss_zero_grad() {
        let net = DenseNet::new(&[2, 4, 2], Activation::Tanh, Activation::Identity, 3).unwrap();
        let x = Array2::from_shape_vec((3, 2), vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6]).unwrap();
        let t = net.forward_batch(&x).unwrap();
        for kind in [LossKind::SmoothL1, LossKind::Mse] {
            let (loss, grads) = loss_and_grad(&net, &x, &t, kind).unwrap();
            assert_eq!(loss, 0.0);
            for (gw, gb) in &grads.layers {
                assert!(gw.iter().all(|&g| g == 0.0));
                assert!(gb.iter().all(|&g| g == 0.0));
            }
        }
    }

    /// Central finite differences over every parameter.
    pub(crate) fn finite_difference_check(
        net: &DenseNet,
        x: &Array2<f64>,
        t: &Array2<f64>,
        kind: LossKind,
    ) -> f64 {
        let h = 1e-5;
        let (_, grads) = loss_and_grad(net, x, t, kind).unwrap();
        let mut worst: f64 = 0.0;
        let mut probe = net.clone();
        for l in 0..net.layers().len() {
            let wshape = net.layers()[l].weights.raw_dim();
            for idx in 0..wshape[0] * wshape[1] {
                let (r, c) = (idx / wshape[1], idx % wshape[1]);
                let orig = probe.layers[l].weights[(r, c)];
                probe.layers[l].weights[(r, c)] = orig + h;
                let (lp, _) = loss_and_grad(&probe, x, t, kind).unwrap();
                probe.layers[l].weights[(r, c)] = orig - h;
                let (lm, _) = loss_and_grad(&probe, x, t, kind).unwrap();
                probe.layers[l].weights[(r, c)] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let ga = grads.layers[l].0[(r, c)];
                let rel = (ga - fd).abs() / ga.abs().max(fd.abs()).max(1e-3);
                worst = worst.max(rel);
            }
            for b in 0..net.layers()[l].bias.len() {
                let orig = probe.layers[l].bias[b];
                probe.layers[l].bias[b] = orig + h;
                let (lp, _) = loss_and_grad(&probe, x, t, kind).unwrap();
                probe.layers[l].bias[b] = orig - h;
                let (lm, _) = loss_and_grad(&probe, x, t, kind).unwrap();
                probe.layers[l].bias[b] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let ga = grads.layers[l].1[b];
                let rel = (ga - fd).abs() / ga.abs().max(fd.abs()).max(1e-3);
                worst = worst.max(rel);
            }
        }
        worst
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for draw in 0..4u64 {
            let net = DenseNet::new(&[4, 10, 10, 2], Activation::Tanh, Activation::Identity, draw)
                .unwrap();
            let x = Array2::from_shape_fn((5, 4), |_| rng.gen_range(-2.0..2.0));
            let t = Array2::from_shape_fn((5, 2), |_| rng.gen_range(-2.0..2.0));
            for kind in [LossKind::SmoothL1, LossKind::Mse] {
                let worst = finite_difference_check(&net, &x, &t, kind);
                assert!(worst < 1e-4, "draw {draw}: max relative error {worst}");
            }
        }
    }

    fn linear_task(n: usize) -> (Array2<f64>, Array2<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-1.0..1.0));
        let t = Array2::from_shape_fn((n, 1), |(r, _)| {
            0.5 * x[(r, 0)] - 0.25 * x[(r, 1)] + 0.75 * x[(r, 2)] + 0.1
        });
        (x, t)
    }

    #[test]
    fn trains_linear_target_to_small_loss() {
        let (x, t) = linear_task(512);
        let mut net =
            DenseNet::new(&[3, 16, 1], Activation::Tanh, Activation::Identity, 2).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            batch_size: 64,
            epochs: 200,
            loss: LossKind::Mse,
            seed: 9,
        };
        let history = train(&mut net, &x, &t, &cfg).unwrap();
        assert!(history.last().unwrap() < &1e-3, "history {history:?}");
        assert!(history.last().unwrap() <= history.first().unwrap());
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let (x, t) = linear_task(16);
        let mut net =
            DenseNet::new(&[3, 8, 1], Activation::Relu, Activation::Identity, 2).unwrap();
        let before = net.clone();
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            batch_size: 8,
            epochs: 0,
            loss: LossKind::SmoothL1,
            seed: 9,
        };
        let history = train(&mut net, &x, &t, &cfg).unwrap();
        assert!(history.is_empty());
        assert_eq!(net, before);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let (x, t) = linear_task(64);
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            batch_size: 16,
            epochs: 5,
            loss: LossKind::SmoothL1,
            seed: 13,
        };
        let mut a = DenseNet::new(&[3, 8, 1], Activation::Relu, Activation::Identity, 4).unwrap();
        let mut b = a.clone();
        let ha = train(&mut a, &x, &t, &cfg).unwrap();
        let hb = train(&mut b, &x, &t, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
    }

    #[test]
    fn divergence_reports_epoch() {
        let (x, t) = linear_task(64);
        let mut net =
            DenseNet::new(&[3, 8, 1], Activation::Relu, Activation::Identity, 4).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e200,
            batch_size: 16,
            epochs: 10,
            loss: LossKind::Mse,
            seed: 13,
        };
        match train(&mut net, &x, &t, &cfg) {
            Err(Error::TrainingDiverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn checkpoint_roundtrip_exact() {
        let net = DenseNet::new(&[4, 12, 3], Activation::Tanh, Activation::Tanh, 21).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &net).unwrap();
        let back = read_checkpoint(&buf[..], "mem").unwrap();
        assert_eq!(net, back);
    }
}

//! Fully connected ReLU networks with sigmoid or softmax heads.

use super::{sigmoid, softmax, Input, Model};

pub(super) struct Trace {
    /// Layer inputs: `acts[0]` is the network input, `acts[l]` the output of
    /// hidden layer `l` after ReLU.
    acts: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub output: Vec<f64>,
}

impl Trace {
    pub fn penultimate(&self) -> &[f64] {
        self.acts.last().expect("at least the input layer")
    }
}

pub(super) fn input_vector(m: &Model, x: &Input) -> Vec<f64> {
    match *x {
        Input::Dense(v) => {
            assert_eq!(v.len(), m.spec.input_dim, "input width");
            v.to_vec()
        }
        Input::Conditioned { features, class } => {
            assert_eq!(features.len(), m.spec.input_dim, "embedding width");
            assert!(class < m.spec.num_classes, "class {class} out of range");
            let mut v = Vec::with_capacity(features.len() + m.spec.num_classes);
            v.extend_from_slice(features);
            v.extend((0..m.spec.num_classes).map(|c| if c == class { 1.0 } else { 0.0 }));
            v
        }
        Input::Pair { .. } => panic!("dense model needs feature input"),
    }
}

fn num_layers(m: &Model) -> usize {
    m.segments.len() / 2
}

fn affine(m: &Model, layer: usize, input: &[f64]) -> Vec<f64> {
    let w = &m.segments[2 * layer];
    let b = &m.segments[2 * layer + 1];
    let n_in = input.len();
    let weights = &m.params[w.offset..w.offset + w.len];
    let bias = &m.params[b.offset..b.offset + b.len];
    bias.iter()
        .enumerate()
        .map(|(o, bo)| {
            let row = &weights[o * n_in..(o + 1) * n_in];
            bo + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

pub(super) fn forward(m: &Model, x: &Input) -> Trace {
    let mut acts = vec![input_vector(m, x)];
    let layers = num_layers(m);
    for l in 0..layers - 1 {
        let z = affine(m, l, acts.last().unwrap());
        acts.push(z.into_iter().map(|v| v.max(0.0)).collect());
    }
    let logits = affine(m, layers - 1, acts.last().unwrap());
    let output = if m.spec.kind.is_binary() {
        vec![sigmoid(logits[0])]
    } else {
        softmax(&logits)
    };
    Trace { acts, logits, output }
}

pub(super) fn backward(m: &Model, x: &Input, upstream: &[f64], grad: &mut [f64]) {
    let trace = forward(m, x);
    let p = &trace.output;
    let mut delta: Vec<f64> = if m.spec.kind.is_binary() {
        vec![upstream[0] * p[0] * (1.0 - p[0])]
    } else {
        let dot: f64 = upstream.iter().zip(p).map(|(g, q)| g * q).sum();
        p.iter().zip(upstream).map(|(q, g)| q * (g - dot)).collect()
    };
    for l in (0..num_layers(m)).rev() {
        let input = &trace.acts[l];
        let n_in = input.len();
        let w = &m.segments[2 * l];
        let b = &m.segments[2 * l + 1];
        for (o, d) in delta.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            grad[b.offset + o] += d;
            let row = &mut grad[w.offset + o * n_in..w.offset + (o + 1) * n_in];
            for (g, a) in row.iter_mut().zip(input) {
                *g += d * a;
            }
        }
        if l == 0 {
            break;
        }
        let weights = &m.params[w.offset..w.offset + w.len];
        let mut prev = vec![0.0; n_in];
        for (o, d) in delta.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            for (pv, wv) in prev.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                *pv += d * wv;
            }
        }
        // ReLU gate: the stored activation is zero exactly where the unit was off.
        for (pv, a) in prev.iter_mut().zip(input) {
            if *a <= 0.0 {
                *pv = 0.0;
            }
        }
        delta = prev;
    }
}

//! Factor models over user-item pairs.

use super::{sigmoid, Input, Model, ModelKind};

fn pair(x: &Input) -> (usize, usize) {
    match *x {
        Input::Pair { user, item } => (user as usize, item as usize),
        ref other => panic!("factor model needs a user-item pair, got {other:?}"),
    }
}

fn rows<'a>(m: &'a Model, x: &Input) -> (&'a [f64], &'a [f64], usize, usize) {
    let (u, i) = pair(x);
    let d = m.spec.latent_dim;
    let users = &m.segments[0];
    let items = &m.segments[1];
    let uo = users.offset + u * d;
    let io = items.offset + i * d;
    (&m.params[uo..uo + d], &m.params[io..io + d], uo, io)
}

pub(super) fn logit(m: &Model, x: &Input) -> f64 {
    let (uv, iv, _, _) = rows(m, x);
    match m.spec.kind {
        ModelKind::Gmf => {
            let w = &m.params[m.segments[2].offset..][..m.spec.latent_dim];
            uv.iter().zip(iv).zip(w).map(|((a, b), c)| a * b * c).sum()
        }
        ModelKind::HPairwise => {
            let b = m.params[m.segments[2].offset];
            uv.iter().zip(iv).map(|(a, c)| a * c).sum::<f64>() + b
        }
        _ => uv.iter().zip(iv).map(|(a, b)| a * b).sum(),
    }
}

pub(super) fn forward(m: &Model, x: &Input) -> f64 {
    sigmoid(logit(m, x))
}

pub(super) fn backward(m: &Model, x: &Input, upstream: f64, grad: &mut [f64]) {
    let p = forward(m, x);
    let dz = upstream * p * (1.0 - p);
    if dz == 0.0 {
        return;
    }
    let d = m.spec.latent_dim;
    let (uv, iv, uo, io) = rows(m, x);
    match m.spec.kind {
        ModelKind::Gmf => {
            let wo = m.segments[2].offset;
            for k in 0..d {
                let w = m.params[wo + k];
                grad[uo + k] += dz * w * iv[k];
                grad[io + k] += dz * w * uv[k];
                grad[wo + k] += dz * uv[k] * iv[k];
            }
        }
        _ => {
            for k in 0..d {
                grad[uo + k] += dz * iv[k];
                grad[io + k] += dz * uv[k];
            }
            if m.spec.kind == ModelKind::HPairwise {
                grad[m.segments[2].offset] += dz;
            }
        }
    }
}

pub(super) fn embed(m: &Model, x: &Input) -> Vec<f64> {
    let (uv, iv, _, _) = rows(m, x);
    [uv, iv].concat()
}

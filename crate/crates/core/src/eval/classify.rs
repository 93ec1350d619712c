use crate::data::MultiClassDataset;
use crate::error::{Error, Result};
use crate::model::{Input, Predictor};
use crate::par;

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Fraction of rows whose argmax prediction equals the true label.
pub fn accuracy(model: &dyn Predictor, data: &MultiClassDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty dataset".into()));
    }
    let hits = par::map_indexed(data.len(), |i| {
        (argmax(&model.predict(&Input::Dense(data.row(i)))) == data.true_labels[i]) as usize
    });
    Ok(hits.iter().sum::<usize>() as f64 / data.len() as f64)
}

/// Accuracy of a single-output model thresholded at 0.5 against the true
/// labels (class 1 = positive).
pub fn binary_accuracy(model: &dyn Predictor, data: &MultiClassDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty dataset".into()));
    }
    let hits = par::map_indexed(data.len(), |i| {
        let pred = (model.prob(&Input::Dense(data.row(i))) >= 0.5) as usize;
        (pred == data.true_labels[i]) as usize
    });
    Ok(hits.iter().sum::<usize>() as f64 / data.len() as f64)
}

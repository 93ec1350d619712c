use serde::{Deserialize, Serialize};

use super::argmax;
use crate::data::MultiClassDataset;
use crate::error::{Error, Result};
use crate::model::{Input, Predictor};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub noisy: bool,
    pub agree: bool,
}

/// Mean prediction differences (and agreements, their complements) on clean
/// and noisy instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementReport {
    pub mean_diff_clean: f64,
    pub mean_diff_noisy: f64,
    pub agreement_clean: f64,
    pub agreement_noisy: f64,
    pub num_clean: usize,
    pub num_noisy: usize,
    pub records: Vec<InstanceRecord>,
}

impl DisagreementReport {
    fn from_records(records: Vec<InstanceRecord>) -> Self {
        let mean = |noisy: bool| {
            let group: Vec<_> = records.iter().filter(|r| r.noisy == noisy).collect();
            let diff = if group.is_empty() {
                0.0
            } else {
                group.iter().filter(|r| !r.agree).count() as f64 / group.len() as f64
            };
            (diff, group.len())
        };
        let ((dc, nc), (dn, nn)) = (mean(false), mean(true));
        Self {
            mean_diff_clean: dc,
            mean_diff_noisy: dn,
            agreement_clean: 1.0 - dc,
            agreement_noisy: 1.0 - dn,
            num_clean: nc,
            num_noisy: nn,
            records,
        }
    }
}

fn check_outputs(a: &dyn Predictor, b: &dyn Predictor) -> Result<()> {
    if a.num_outputs() != b.num_outputs() {
        return Err(Error::InvalidArgument(format!(
            "models disagree on output width: {} vs {}",
            a.num_outputs(),
            b.num_outputs()
        )));
    }
    Ok(())
}

/// `|I(a >= 0.5) - I(b >= 0.5)|` averaged separately over clean and noisy
/// inputs. Records index clean inputs first, then noisy ones.
pub fn disagreement_binary(
    a: &dyn Predictor,
    b: &dyn Predictor,
    clean: &[Input],
    noisy: &[Input],
) -> Result<DisagreementReport> {
    check_outputs(a, b)?;
    let all: Vec<(Input, bool)> = clean.iter().map(|x| (*x, false)).chain(noisy.iter().map(|x| (*x, true))).collect();
    let records = par::map_indexed(all.len(), |i| {
        let (x, noisy) = all[i];
        InstanceRecord { index: i, noisy, agree: (a.prob(&x) >= 0.5) == (b.prob(&x) >= 0.5) }
    });
    Ok(DisagreementReport::from_records(records))
}

/// Argmax agreement of two classifiers per row; a row is noisy when its
/// observed label differs from the true one.
pub fn disagreement_multiclass(a: &dyn Predictor, b: &dyn Predictor, data: &MultiClassDataset) -> Result<DisagreementReport> {
    check_outputs(a, b)?;
    let records = par::map_indexed(data.len(), |i| {
        let x = Input::Dense(data.row(i));
        InstanceRecord { index: i, noisy: data.is_noisy(i), agree: argmax(&a.predict(&x)) == argmax(&b.predict(&x)) }
    });
    Ok(DisagreementReport::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Const(Vec<f64>);

    impl Predictor for Const {
        fn num_outputs(&self) -> usize {
            self.0.len()
        }
        fn predict(&self, _: &Input) -> Vec<f64> {
            self.0.clone()
        }
    }

    fn pairs(n: u32) -> Vec<Input<'static>> {
        (0..n).map(|i| Input::Pair { user: 0, item: i }).collect()
    }

    #[test]
    fn identical_models_never_disagree() {
        let m = Const(vec![0.7]);
        let r = disagreement_binary(&m, &m, &pairs(3), &pairs(2)).unwrap();
        assert_eq!((r.mean_diff_clean, r.mean_diff_noisy), (0.0, 0.0));
    }

    #[test]
    fn threshold_straddle_always_disagrees() {
        let (a, b) = (Const(vec![0.6]), Const(vec![0.4]));
        let r = disagreement_binary(&a, &b, &pairs(3), &pairs(2)).unwrap();
        assert_eq!((r.mean_diff_clean, r.mean_diff_noisy), (1.0, 1.0));
        let s = disagreement_binary(&b, &a, &pairs(3), &pairs(2)).unwrap();
        assert_eq!(r.mean_diff_clean, s.mean_diff_clean);
    }

    #[test]
    fn multiclass_cases() {
        let ds = MultiClassDataset::new(3, 1, vec![0.0; 4], vec![0, 1, 2, 0], vec![0, 1, 1, 2], 0.5).unwrap();
        let a = Const(vec![0.2, 0.5, 0.3]);
        let same = disagreement_multiclass(&a, &a, &ds).unwrap();
        assert_eq!((same.agreement_clean, same.agreement_noisy), (1.0, 1.0));
        let b = Const(vec![0.6, 0.1, 0.3]);
        let diff = disagreement_multiclass(&a, &b, &ds).unwrap();
        assert_eq!((diff.agreement_clean, diff.agreement_noisy), (0.0, 0.0));
        assert_eq!((diff.num_clean, diff.num_noisy), (2, 2));
    }
}

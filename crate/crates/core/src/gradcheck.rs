//! Whole-model finite-difference gradient check.
//!
//! The oracle only ever calls the forward loss ([`sample_loss`]); it shares
//! no code with the reverse-mode path it audits.

use crate::rng::SplitMix64;
use crate::seq2seq::{loss_and_gradients, sample_loss, ModelError, ModelParams, Weights};
use crate::textcodec::Vocabulary;

/// Central-difference step.
pub const FD_EPS: f64 = 1e-5;
/// Relative error denominators are clamped to at least this value; below it
/// the central difference is dominated by rounding (about
/// `f64::EPSILON * loss / FD_EPS`), not truncation.
pub const REL_ERR_FLOOR: f64 = 1e-5;

/// `|a - b| / max(|a|, |b|, REL_ERR_FLOOR)`
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERR_FLOOR)
}

/// Bounds for the random model drawn per seed.
#[derive(Debug, Clone, Copy)]
pub struct CheckShape {
    pub max_vocab: usize,
    pub max_hidden: usize,
    pub max_embed: usize,
    pub max_comment: usize,
    pub max_code: usize,
    pub layers: usize,
    pub weight_scale: f64,
}

impl Default for CheckShape {
    fn default() -> Self {
        Self {
            max_vocab: 12,
            max_hidden: 8,
            max_embed: 6,
            max_comment: 6,
            max_code: 10,
            layers: 1,
            weight_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub seed: u64,
    pub vocab: usize,
    pub hidden: usize,
    pub embed: usize,
    pub comment_len: usize,
    pub code_len: usize,
    pub params_checked: usize,
    pub max_rel_err: f64,
    pub worst: String,
}

fn random_case(seed: u64, shape: &CheckShape) -> Result<(ModelParams, Vec<usize>, Vec<usize>), ModelError> {
    let mut rng = SplitMix64::new(seed);
    let alphabet: Vec<char> = "abcdefghij".chars().collect();
    let n_chars = 2 + rng.below(shape.max_vocab.saturating_sub(3).min(alphabet.len() - 1));
    let text: String = alphabet[..n_chars].iter().collect();
    let vocab = Vocabulary::build([text.as_str()])?;
    let hidden = 1 + rng.below(shape.max_hidden);
    let embed = 1 + rng.below(shape.max_embed);
    let mut p = ModelParams::init(vocab, hidden, embed, shape.layers, rng.below(2) == 1, &mut rng)?;
    for (_, m) in p.weights.tensors_mut() {
        for x in m.data_mut() {
            *x = rng.uniform(-shape.weight_scale, shape.weight_scale);
        }
    }
    let v = p.vocab.len();
    let comment: Vec<usize> = (0..rng.below(shape.max_comment + 1))
        .map(|_| 2 + rng.below(v - 2))
        .collect();
    let code: Vec<usize> = (0..rng.below(shape.max_code + 1))
        .map(|_| 2 + rng.below(v - 2))
        .collect();
    Ok((p, comment, code))
}

/// Compares every analytic gradient entry with a central difference.
pub fn check_seed(seed: u64, shape: &CheckShape) -> Result<GradCheckReport, ModelError> {
    let (p, comment, code) = random_case(seed, shape)?;
    let (_, analytic) = loss_and_gradients(&p, &comment, &code, None)?;
    let fd = finite_difference_gradients(&p, &comment, &code, FD_EPS)?;

    let mut max_rel_err: f64 = 0.0;
    let mut worst = String::new();
    let mut params_checked = 0;
    for ((name, a), (_, n)) in analytic.tensors().into_iter().zip(fd.tensors()) {
        for (k, (&x, &y)) in a.data().iter().zip(n.data()).enumerate() {
            params_checked += 1;
            let e = relative_error(x, y);
            if e > max_rel_err {
                max_rel_err = e;
                worst = format!("{name}[{k}] analytic={x:e} numeric={y:e}");
            }
        }
    }
    Ok(GradCheckReport {
        seed,
        vocab: p.vocab.len(),
        hidden: p.hidden(),
        embed: p.weights.embed(),
        comment_len: comment.len(),
        code_len: code.len(),
        params_checked,
        max_rel_err,
        worst,
    })
}

/// Central differences of the sample loss with respect to every weight.
pub fn finite_difference_gradients(
    p: &ModelParams,
    comment: &[usize],
    code: &[usize],
    eps: f64,
) -> Result<Weights, ModelError> {
    let mut out = p.weights.zeros_like();
    let mut probe = p.clone();
    let n_tensors = p.weights.tensors().len();
    for ti in 0..n_tensors {
        let len = p.weights.tensors()[ti].1.data().len();
        for k in 0..len {
            let orig = p.weights.tensors()[ti].1.data()[k];
            probe.weights.tensors_mut()[ti].1.data_mut()[k] = orig + eps;
            let plus = sample_loss(&probe, comment, code)?.total;
            probe.weights.tensors_mut()[ti].1.data_mut()[k] = orig - eps;
            let minus = sample_loss(&probe, comment, code)?.total;
            probe.weights.tensors_mut()[ti].1.data_mut()[k] = orig;
            out.tensors_mut()[ti].1.data_mut()[k] = (plus - minus) / (2.0 * eps);
        }
    }
    Ok(out)
}

/// Runs `count` seeds starting at `first_seed`.
pub fn check_many(first_seed: u64, count: u64, shape: &CheckShape) -> Result<Vec<GradCheckReport>, ModelError> {
    (first_seed..first_seed + count)
        .map(|s| check_seed(s, shape))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_model() {
        for r in check_many(0, 5, &CheckShape::default()).unwrap() {
            assert!(r.max_rel_err < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn stacked_layers() {
        let shape = CheckShape {
            layers: 2,
            ..CheckShape::default()
        };
        for r in check_many(100, 3, &shape).unwrap() {
            assert!(r.max_rel_err < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0) - 1e-4).abs() < 1e-12);
    }
}

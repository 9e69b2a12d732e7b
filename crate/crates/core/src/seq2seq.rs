//! Encoder–decoder wiring.
//!
//! The encoder reads the comment followed by `<eos>`; its final per-layer
//! states seed the decoder, which reads `<sos>` and then its own (or, during
//! training, the reference) previous character and predicts the next one
//! through a softmax over the vocabulary. Decoding stops at `<eos>`.

use thiserror::Error;

use crate::lstm::{lstm_forward, lstm_step, LstmError, LstmParams, LstmState, LstmTrace};
use crate::numkit::{cross_entropy_from_logits, log_softmax_at, softmax_into, Matrix, NumError};
use crate::rng::SplitMix64;
use crate::textcodec::{CodecError, Vocabulary, EOS, SOS};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("symbol id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, size: usize },
    #[error("target sequence contains the reserved id {0}")]
    ReservedTarget(usize),
    #[error("sample of {len} symbols exceeds the maximum training length {max}")]
    TooLong { len: usize, max: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("invalid decoding parameter: {0}")]
    Decoding(String),
}

/// Every learnable tensor of the model. Also used for gradients and optimizer
/// moments, which share the exact layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub encoder: Vec<LstmParams>,
    pub decoder: Vec<LstmParams>,
    /// V × embed
    pub enc_embedding: Matrix,
    /// V × embed
    pub dec_embedding: Matrix,
    /// V × hidden
    pub out_proj: Matrix,
    /// V × 1
    pub out_bias: Matrix,
}

impl Weights {
    pub fn zeros(vocab: usize, hidden: usize, embed: usize, layers: usize) -> Self {
        let stack = || {
            (0..layers)
                .map(|l| LstmParams::zeros(hidden, if l == 0 { embed } else { hidden }))
                .collect()
        };
        Self {
            encoder: stack(),
            decoder: stack(),
            enc_embedding: Matrix::zeros(vocab, embed),
            dec_embedding: Matrix::zeros(vocab, embed),
            out_proj: Matrix::zeros(vocab, hidden),
            out_bias: Matrix::zeros(vocab, 1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.vocab_size(), self.hidden(), self.embed(), self.layers())
    }

    pub fn vocab_size(&self) -> usize {
        self.out_proj.rows()
    }

    pub fn hidden(&self) -> usize {
        self.out_proj.cols()
    }

    pub fn embed(&self) -> usize {
        self.enc_embedding.cols()
    }

    pub fn layers(&self) -> usize {
        self.encoder.len()
    }

    /// Named tensors in canonical order (checkpoint and optimizer order).
    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        for (prefix, stack) in [("encoder", &self.encoder), ("decoder", &self.decoder)] {
            for (l, layer) in stack.iter().enumerate() {
                for (name, m) in layer.tensors() {
                    out.push((format!("{prefix}.{l}.{name}"), m));
                }
            }
        }
        out.push(("enc_embedding".into(), &self.enc_embedding));
        out.push(("dec_embedding".into(), &self.dec_embedding));
        out.push(("out_proj".into(), &self.out_proj));
        out.push(("out_bias".into(), &self.out_bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = Vec::new();
        for (prefix, stack) in [("encoder", &mut self.encoder), ("decoder", &mut self.decoder)] {
            for (l, layer) in stack.iter_mut().enumerate() {
                for (name, m) in layer.tensors_mut() {
                    out.push((format!("{prefix}.{l}.{name}"), m));
                }
            }
        }
        out.push(("enc_embedding".into(), &mut self.enc_embedding));
        out.push(("dec_embedding".into(), &mut self.dec_embedding));
        out.push(("out_proj".into(), &mut self.out_proj));
        out.push(("out_bias".into(), &mut self.out_bias));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.data().len()).sum()
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .map(|(_, m)| m.sum_squares())
            .sum::<f64>()
            .sqrt()
    }

    pub fn add_assign(&mut self, other: &Weights) -> Result<(), NumError> {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, k: f64) {
        for (_, m) in self.tensors_mut() {
            m.scale(k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub vocab: Vocabulary,
    pub weights: Weights,
    /// Feed the comment to the encoder back to front.
    pub reverse_input: bool,
}

/// Per-layer recurrent state handed from encoder to decoder.
pub type StackState = Vec<LstmState>;

/// Decoding policy for [`generate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decoding {
    Greedy,
    Temperature(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    /// Emitted ids, never containing `<eos>` or `<sos>`.
    pub ids: Vec<usize>,
    pub text: String,
    /// True iff `<eos>` was chosen before `max_len` symbols were emitted.
    pub terminated: bool,
    /// Log-probability of each chosen symbol (the terminating `<eos>`
    /// included) under the distribution it was chosen from.
    pub per_step_logprob: Vec<f64>,
}

/// Teacher-forced loss of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossStats {
    pub total: f64,
    /// `total / (len + 1)`
    pub per_char: f64,
    pub steps: usize,
}

impl ModelParams {
    /// Uniform ±0.08 weights for every tensor except biases; LSTM forget
    /// biases start at 1.0. Draw order: encoder layers, decoder layers,
    /// encoder embedding, decoder embedding, output projection.
    pub fn init(
        vocab: Vocabulary,
        hidden: usize,
        embed: usize,
        layers: usize,
        reverse_input: bool,
        rng: &mut SplitMix64,
    ) -> Result<Self, ModelError> {
        if layers == 0 {
            return Err(ModelError::Invalid("layer count must be >= 1".into()));
        }
        let v = vocab.len();
        let stack = |rng: &mut SplitMix64| -> Result<Vec<LstmParams>, LstmError> {
            (0..layers)
                .map(|l| LstmParams::init(hidden, if l == 0 { embed } else { hidden }, rng))
                .collect()
        };
        let encoder = stack(rng)?;
        let decoder = stack(rng)?;
        let mut uniform = |r, c| {
            Matrix::from_fn(r, c, |_, _| {
                rng.uniform(-crate::lstm::INIT_RANGE, crate::lstm::INIT_RANGE)
            })
        };
        let enc_embedding = uniform(v, embed);
        let dec_embedding = uniform(v, embed);
        let out_proj = uniform(v, hidden);
        Ok(Self {
            vocab,
            weights: Weights {
                encoder,
                decoder,
                enc_embedding,
                dec_embedding,
                out_proj,
                out_bias: Matrix::zeros(v, 1),
            },
            reverse_input,
        })
    }

    pub fn hidden(&self) -> usize {
        self.weights.hidden()
    }

    /// Checks every shape against the vocabulary and each other.
    pub fn validate(&self) -> Result<(), ModelError> {
        let w = &self.weights;
        let v = self.vocab.len();
        let (h, e) = (w.hidden(), w.embed());
        let bad = |what: String| Err(ModelError::Invalid(what));
        if w.encoder.is_empty() || w.encoder.len() != w.decoder.len() {
            return bad("encoder and decoder need the same nonzero layer count".into());
        }
        for (name, m, shape) in [
            ("enc_embedding", &w.enc_embedding, (v, e)),
            ("dec_embedding", &w.dec_embedding, (v, e)),
            ("out_proj", &w.out_proj, (v, h)),
            ("out_bias", &w.out_bias, (v, 1)),
        ] {
            if m.shape() != shape {
                return bad(format!("{name} has shape {:?}, expected {shape:?}", m.shape()));
            }
        }
        for stack in [&w.encoder, &w.decoder] {
            for (l, layer) in stack.iter().enumerate() {
                let input = if l == 0 { e } else { h };
                if layer.hidden() != h || layer.embed() != input {
                    return bad(format!(
                        "layer {l} is {}x{}, expected {h}x{input}",
                        layer.hidden(),
                        layer.embed()
                    ));
                }
                for (name, m) in layer.tensors() {
                    let expected = match name.as_bytes()[0] {
                        b'W' => (h, input),
                        b'U' => (h, h),
                        _ => (h, 1),
                    };
                    if m.shape() != expected {
                        return bad(format!("layer {l} {name} has shape {:?}", m.shape()));
                    }
                }
            }
        }
        if !w.is_finite() {
            return bad("non-finite weight".into());
        }
        Ok(())
    }

    fn check_ids(&self, ids: &[usize]) -> Result<(), ModelError> {
        let size = self.vocab.len();
        match ids.iter().find(|&&id| id >= size) {
            Some(&id) => Err(ModelError::IdOutOfRange { id, size }),
            None => Ok(()),
        }
    }

    fn encoder_inputs(&self, comment_ids: &[usize]) -> Vec<usize> {
        let mut ids: Vec<usize> = comment_ids.to_vec();
        if self.reverse_input {
            ids.reverse();
        }
        ids.push(EOS);
        ids
    }

    fn logits(&self, h: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.weights.out_bias.data());
        self.weights.out_proj.matvec_acc(h, out);
    }
}

fn zero_stack(p: &ModelParams) -> StackState {
    vec![LstmState::zeros(p.hidden()); p.weights.layers()]
}

/// Forward pass of a layer stack over embedded ids, keeping traces.
fn stack_forward(
    layers: &[LstmParams],
    embedding: &Matrix,
    ids: &[usize],
    initial: &[LstmState],
) -> Result<Vec<LstmTrace>, LstmError> {
    let mut traces: Vec<LstmTrace> = Vec::with_capacity(layers.len());
    for (l, layer) in layers.iter().enumerate() {
        let trace = if l == 0 {
            let xs: Vec<&[f64]> = ids.iter().map(|&id| embedding.row(id)).collect();
            lstm_forward(layer, &xs, &initial[l])?
        } else {
            let xs: Vec<&[f64]> = traces[l - 1].outputs().collect();
            lstm_forward(layer, &xs, &initial[l])?
        };
        traces.push(trace);
    }
    Ok(traces)
}

/// Backward pass of a layer stack over a nonempty sequence.
/// `top_upstream[t]` is dL/dh_t of the top layer; `final_grads[l]` is dL/d(final state of layer l). Returns
/// dL/d(initial state) per layer.
fn stack_backward(
    layers: &[LstmParams],
    traces: &[LstmTrace],
    ids: &[usize],
    top_upstream: Vec<Vec<f64>>,
    final_grads: Option<&[LstmState]>,
    grads: &mut [LstmParams],
    embedding_grad: &mut Matrix,
) -> Result<StackState, LstmError> {
    let n = layers.len();
    let mut initial_grads = vec![LstmState::zeros(0); n];
    let mut upstream = top_upstream;
    for l in (0..n).rev() {
        let dc_final = match final_grads {
            Some(fg) => {
                if let Some(last) = upstream.last_mut() {
                    for (u, d) in last.iter_mut().zip(&fg[l].h) {
                        *u += d;
                    }
                }
                Some(fg[l].c.as_slice())
            }
            None => None,
        };
        let (d_init, dxs) = traces[l].backward_into(&layers[l], &upstream, dc_final, &mut grads[l])?;
        initial_grads[l] = d_init;
        if l == 0 {
            for (&id, dx) in ids.iter().zip(&dxs) {
                for (g, d) in embedding_grad.row_mut(id).iter_mut().zip(dx) {
                    *g += d;
                }
            }
        } else {
            upstream = dxs;
        }
    }
    Ok(initial_grads)
}

/// Runs the encoder over `comment_ids` followed by `<eos>`; returns the final
/// state of every layer.
pub fn encode_comment(p: &ModelParams, comment_ids: &[usize]) -> Result<StackState, ModelError> {
    p.check_ids(comment_ids)?;
    let ids = p.encoder_inputs(comment_ids);
    let traces = stack_forward(&p.weights.encoder, &p.weights.enc_embedding, &ids, &zero_stack(p))?;
    Ok(traces.iter().map(|t| t.final_state().clone()).collect())
}

fn check_targets(p: &ModelParams, target_ids: &[usize]) -> Result<(), ModelError> {
    p.check_ids(target_ids)?;
    if let Some(&id) = target_ids.iter().find(|&&id| id == EOS || id == SOS) {
        return Err(ModelError::ReservedTarget(id));
    }
    Ok(())
}

/// Teacher-forced loss: the decoder reads `<sos>, y_1..y_L` and is scored on
/// `y_1..y_L, <eos>`.
pub fn decode_teacher_forced_loss(
    p: &ModelParams,
    state: &[LstmState],
    target_ids: &[usize],
) -> Result<LossStats, ModelError> {
    check_targets(p, target_ids)?;
    let inputs: Vec<usize> = std::iter::once(SOS).chain(target_ids.iter().copied()).collect();
    let targets: Vec<usize> = target_ids.iter().copied().chain(std::iter::once(EOS)).collect();
    let traces = stack_forward(&p.weights.decoder, &p.weights.dec_embedding, &inputs, state)?;
    let top = traces.last().expect("at least one layer");
    let mut logits = vec![0.0; p.vocab.len()];
    let mut total = 0.0;
    for (h, &y) in top.outputs().zip(&targets) {
        p.logits(h, &mut logits);
        total -= log_softmax_at(&logits, y)?;
    }
    Ok(LossStats {
        total,
        per_char: total / targets.len() as f64,
        steps: targets.len(),
    })
}

/// Loss of a whole (comment, code) pair: encode then teacher-forced decode.
pub fn sample_loss(
    p: &ModelParams,
    comment_ids: &[usize],
    code_ids: &[usize],
) -> Result<LossStats, ModelError> {
    let state = encode_comment(p, comment_ids)?;
    decode_teacher_forced_loss(p, &state, code_ids)
}

/// Number of recurrent steps a sample costs: comment + `<eos>` + code + `<eos>`.
pub fn sample_steps(comment_len: usize, code_len: usize) -> usize {
    comment_len + code_len + 2
}

/// Adds the exact gradient of [`sample_loss`] to `grads` and returns the loss.
pub fn accumulate_gradients(
    p: &ModelParams,
    comment_ids: &[usize],
    code_ids: &[usize],
    max_len: Option<usize>,
    grads: &mut Weights,
) -> Result<LossStats, ModelError> {
    if let Some(max) = max_len {
        let len = sample_steps(comment_ids.len(), code_ids.len());
        if len > max {
            return Err(ModelError::TooLong { len, max });
        }
    }
    p.check_ids(comment_ids)?;
    check_targets(p, code_ids)?;
    let w = &p.weights;

    let enc_ids = p.encoder_inputs(comment_ids);
    let enc = stack_forward(&w.encoder, &w.enc_embedding, &enc_ids, &zero_stack(p))?;
    let handoff: StackState = enc.iter().map(|t| t.final_state().clone()).collect();

    let dec_ids: Vec<usize> = std::iter::once(SOS).chain(code_ids.iter().copied()).collect();
    let targets: Vec<usize> = code_ids.iter().copied().chain(std::iter::once(EOS)).collect();
    let dec = stack_forward(&w.decoder, &w.dec_embedding, &dec_ids, &handoff)?;

    let top = dec.last().expect("at least one layer");
    let v = p.vocab.len();
    let mut logits = vec![0.0; v];
    let mut total = 0.0;
    let mut top_upstream = Vec::with_capacity(targets.len());
    for (h, &y) in top.outputs().zip(&targets) {
        p.logits(h, &mut logits);
        let (loss, dlogits) = cross_entropy_from_logits(&logits, y)?;
        total += loss;
        grads.out_proj.outer_acc(&dlogits, h);
        for (b, d) in grads.out_bias.data_mut().iter_mut().zip(&dlogits) {
            *b += d;
        }
        let mut dh = vec![0.0; p.hidden()];
        w.out_proj.matvec_t_acc(&dlogits, &mut dh);
        top_upstream.push(dh);
    }

    let d_handoff = stack_backward(
        &w.decoder,
        &dec,
        &dec_ids,
        top_upstream,
        None,
        &mut grads.decoder,
        &mut grads.dec_embedding,
    )?;
    let enc_upstream = vec![vec![0.0; p.hidden()]; enc_ids.len()];
    stack_backward(
        &w.encoder,
        &enc,
        &enc_ids,
        enc_upstream,
        Some(&d_handoff),
        &mut grads.encoder,
        &mut grads.enc_embedding,
    )?;

    Ok(LossStats {
        total,
        per_char: total / targets.len() as f64,
        steps: targets.len(),
    })
}

/// Loss and a fresh gradient for every tensor of the model.
pub fn loss_and_gradients(
    p: &ModelParams,
    comment_ids: &[usize],
    code_ids: &[usize],
    max_len: Option<usize>,
) -> Result<(LossStats, Weights), ModelError> {
    let mut grads = p.weights.zeros_like();
    let stats = accumulate_gradients(p, comment_ids, code_ids, max_len, &mut grads)?;
    Ok((stats, grads))
}

fn stack_step(p: &ModelParams, id: usize, state: &mut StackState) -> Result<(), ModelError> {
    let w = &p.weights;
    for l in 0..w.decoder.len() {
        let next = if l == 0 {
            lstm_step(&w.decoder[0], w.dec_embedding.row(id), &state[0])?
        } else {
            let below = state[l - 1].h.clone();
            lstm_step(&w.decoder[l], &below, &state[l])?
        };
        state[l] = next;
    }
    Ok(())
}

/// Autoregressive decoding from an encoder state.
///
/// `<sos>` is never emitted: its probability is masked to zero before the
/// choice. Greedy ties go to the lowest id. Sampling divides logits by the
/// temperature and draws by inverse CDF.
pub fn generate(
    p: &ModelParams,
    state: &[LstmState],
    mode: Decoding,
    max_len: usize,
    rng: &mut SplitMix64,
) -> Result<GenerationResult, ModelError> {
    if max_len == 0 {
        return Err(ModelError::Decoding("max_len must be >= 1".into()));
    }
    if let Decoding::Temperature(t) = mode {
        if !(t > 0.0 && t.is_finite()) {
            return Err(ModelError::Decoding(format!("temperature must be > 0, got {t}")));
        }
    }
    let v = p.vocab.len();
    let mut state: StackState = state.to_vec();
    let mut logits = vec![0.0; v];
    let mut probs = vec![0.0; v];
    let mut ids = Vec::new();
    let mut per_step_logprob = Vec::new();
    let mut prev = SOS;
    let mut terminated = false;
    while ids.len() < max_len {
        stack_step(p, prev, &mut state)?;
        p.logits(&state.last().expect("at least one layer").h, &mut logits);
        if let Decoding::Temperature(t) = mode {
            logits.iter_mut().for_each(|x| *x /= t);
        }
        logits[SOS] = f64::NEG_INFINITY;
        softmax_into(&logits, &mut probs)?;
        let choice = match mode {
            Decoding::Greedy => argmax(&probs),
            Decoding::Temperature(_) => rng.categorical(&probs),
        };
        per_step_logprob.push(probs[choice].ln());
        if choice == EOS {
            terminated = true;
            break;
        }
        ids.push(choice);
        prev = choice;
    }
    let text = p.vocab.decode(&ids)?;
    Ok(GenerationResult {
        ids,
        text,
        terminated,
        per_step_logprob,
    })
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Encodes a prompt and decodes a program in one call.
pub fn generate_from_prompt(
    p: &ModelParams,
    prompt: &str,
    mode: Decoding,
    max_len: usize,
    rng: &mut SplitMix64,
) -> Result<GenerationResult, ModelError> {
    let ids = p.vocab.encode(prompt)?;
    let state = encode_comment(p, &ids)?;
    generate(p, &state, mode, max_len, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::build(["abc xyz"]).unwrap()
    }

    fn zero_model() -> ModelParams {
        let v = vocab();
        let n = v.len();
        ModelParams {
            vocab: v,
            weights: Weights::zeros(n, 4, 3, 1),
            reverse_input: false,
        }
    }

    fn random_model(seed: u64, layers: usize) -> ModelParams {
        let mut rng = SplitMix64::new(seed);
        let mut p = ModelParams::init(vocab(), 5, 3, layers, false, &mut rng).unwrap();
        for (_, m) in p.weights.tensors_mut() {
            for x in m.data_mut() {
                *x = rng.uniform(-0.5, 0.5);
            }
        }
        p
    }

    #[test]
    fn zero_encoder_gives_zero_state() {
        let p = zero_model();
        let s = encode_comment(&p, &[2, 3, 4]).unwrap();
        assert_eq!(s, vec![LstmState::zeros(4)]);
    }

    #[test]
    fn empty_comment_is_one_eos_step() {
        let p = random_model(1, 1);
        let s = encode_comment(&p, &[]).unwrap();
        let x = p.weights.enc_embedding.row(EOS);
        let expected = lstm_step(&p.weights.encoder[0], x, &LstmState::zeros(5)).unwrap();
        assert_eq!(s[0], expected);
        assert_eq!(encode_comment(&p, &[2, 5]).unwrap(), encode_comment(&p, &[2, 5]).unwrap());
        assert!(matches!(
            encode_comment(&p, &[99]),
            Err(ModelError::IdOutOfRange { id: 99, .. })
        ));
    }

    #[test]
    fn uniform_logits_loss_closed_form() {
        let p = zero_model();
        let v = p.vocab.len() as f64;
        let s = encode_comment(&p, &[2]).unwrap();
        for len in [0usize, 1, 5] {
            let target: Vec<usize> = (0..len).map(|k| 2 + k % 5).collect();
            let stats = decode_teacher_forced_loss(&p, &s, &target).unwrap();
            assert!((stats.total - (len as f64 + 1.0) * v.ln()).abs() < 1e-12);
            assert!((stats.per_char - v.ln()).abs() < 1e-12);
        }
        assert!(matches!(
            decode_teacher_forced_loss(&p, &s, &[2, EOS]),
            Err(ModelError::ReservedTarget(0))
        ));
    }

    #[test]
    fn empty_target_scores_only_eos() {
        let p = random_model(2, 1);
        let s = encode_comment(&p, &[3]).unwrap();
        let stats = decode_teacher_forced_loss(&p, &s, &[]).unwrap();
        let mut st = s.clone();
        stack_step(&p, SOS, &mut st).unwrap();
        let mut logits = vec![0.0; p.vocab.len()];
        p.logits(&st[0].h, &mut logits);
        assert!((stats.total + log_softmax_at(&logits, EOS).unwrap()).abs() < 1e-12);
        assert_eq!(stats.steps, 1);
    }

    #[test]
    fn gradient_path_agrees_with_loss_path() {
        for layers in [1, 2] {
            let p = random_model(3, layers);
            let (stats, _) = loss_and_gradients(&p, &[2, 3], &[4, 5, 6], None).unwrap();
            let direct = sample_loss(&p, &[2, 3], &[4, 5, 6]).unwrap();
            assert!((stats.total - direct.total).abs() < 1e-12);
        }
    }

    #[test]
    fn unused_embedding_rows_get_zero_gradient() {
        let p = random_model(4, 1);
        let (_, g) = loss_and_gradients(&p, &[2, 3], &[4, 4, 5], None).unwrap();
        for id in 0..p.vocab.len() {
            let enc_used = [2, 3, EOS].contains(&id);
            let dec_used = [SOS, 4, 5].contains(&id);
            let enc_zero = g.enc_embedding.row(id).iter().all(|&x| x == 0.0);
            let dec_zero = g.dec_embedding.row(id).iter().all(|&x| x == 0.0);
            assert_eq!(enc_zero, !enc_used, "enc row {id}");
            assert_eq!(dec_zero, !dec_used, "dec row {id}");
        }
    }

    #[test]
    fn zero_model_bias_gradient_closed_form() {
        let p = zero_model();
        let targets = [2usize, 3, 3];
        let (_, g) = loss_and_gradients(&p, &[4], &targets, None).unwrap();
        let v = p.vocab.len();
        let uniform = 1.0 / v as f64;
        for id in 0..v {
            let hits = targets.iter().chain(&[EOS]).filter(|&&t| t == id).count() as f64;
            let expected = 4.0 * uniform - hits;
            assert!((g.out_bias.data()[id] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn over_length_is_rejected() {
        let p = random_model(5, 1);
        assert!(matches!(
            loss_and_gradients(&p, &[2, 3], &[4, 5], Some(5)),
            Err(ModelError::TooLong { len: 6, max: 5 })
        ));
        assert!(loss_and_gradients(&p, &[2, 3], &[4, 5], Some(6)).is_ok());
    }

    #[test]
    fn dominant_eos_terminates_immediately() {
        let mut p = random_model(6, 1);
        p.weights.out_bias.data_mut()[EOS] = 1000.0;
        let s = encode_comment(&p, &[2]).unwrap();
        let r = generate(&p, &s, Decoding::Greedy, 10, &mut SplitMix64::new(0)).unwrap();
        assert!(r.ids.is_empty() && r.terminated && r.text.is_empty());
    }

    #[test]
    fn dominant_symbol_fills_max_len() {
        let mut p = random_model(7, 1);
        let a = p.vocab.id_of('a').unwrap();
        p.weights.out_bias.data_mut()[a] = 1000.0;
        let s = encode_comment(&p, &[2]).unwrap();
        for mode in [Decoding::Greedy, Decoding::Temperature(1.0)] {
            let r = generate(&p, &s, mode, 7, &mut SplitMix64::new(1)).unwrap();
            assert_eq!(r.text, "aaaaaaa");
            assert!(!r.terminated);
            assert_eq!(r.per_step_logprob.len(), 7);
        }
    }

    #[test]
    fn greedy_ignores_rng_and_never_emits_specials() {
        let mut p = random_model(8, 2);
        // Make <sos> the most likely symbol; it must still never be emitted.
        p.weights.out_bias.data_mut()[SOS] = 50.0;
        let s = encode_comment(&p, &[2, 3]).unwrap();
        let a = generate(&p, &s, Decoding::Greedy, 30, &mut SplitMix64::new(1)).unwrap();
        let b = generate(&p, &s, Decoding::Greedy, 30, &mut SplitMix64::new(999)).unwrap();
        assert_eq!(a, b);
        for seed in 0..5 {
            let r = generate(&p, &s, Decoding::Temperature(1.5), 30, &mut SplitMix64::new(seed))
                .unwrap();
            assert!(r.ids.iter().all(|&id| id != EOS && id != SOS));
            assert!(r.terminated || r.ids.len() == 30);
        }
    }

    #[test]
    fn decoding_parameter_validation() {
        let p = random_model(9, 1);
        let s = encode_comment(&p, &[]).unwrap();
        let mut rng = SplitMix64::new(0);
        assert!(generate(&p, &s, Decoding::Greedy, 0, &mut rng).is_err());
        assert!(generate(&p, &s, Decoding::Temperature(0.0), 5, &mut rng).is_err());
    }

    #[test]
    fn argmax_ties_lowest() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5, 0.1]), 1);
    }

    #[test]
    fn validate_catches_vocab_mismatch() {
        let mut p = random_model(10, 1);
        assert!(p.validate().is_ok());
        p.weights.out_bias = Matrix::zeros(3, 1);
        assert!(p.validate().is_err());
    }
}

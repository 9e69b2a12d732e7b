//! Optimization loop and checkpoints.
//!
//! ```
//! use nl2code::corpus::tiny_corpus;
//! use nl2code::trainer::{train, TrainConfig};
//!
//! let corpus = tiny_corpus(2, 1)?;
//! let cfg = TrainConfig { hidden: 8, embed: 4, epochs: 1, ..TrainConfig::default() };
//! let run = train(&corpus.samples, &cfg, None)?;
//! assert_eq!(run.log.len(), 1);
//! assert_eq!(run.checkpoint.updates, 4);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::SeqSample;
use crate::rng::SplitMix64;
use crate::seq2seq::{accumulate_gradients, sample_steps, ModelError, ModelParams, Weights};
use crate::textcodec::{CodecError, Vocabulary};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden: usize,
    pub embed: usize,
    pub layers: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Samples per update.
    pub batch_accumulation: usize,
    /// Longest sample, in recurrent steps, that is trained on.
    pub max_train_len: Option<usize>,
    /// Write an extra checkpoint every this many epochs; 0 disables.
    pub checkpoint_every: usize,
    pub input_reversal: bool,
    /// Stop once this many updates have been made.
    pub max_updates: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            embed: 32,
            layers: 1,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: 5.0,
            epochs: 10,
            seed: 0,
            batch_accumulation: 1,
            max_train_len: None,
            checkpoint_every: 0,
            input_reversal: false,
            max_updates: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be > 0");
        }
        if !(self.clip_norm > 0.0 && self.clip_norm.is_finite()) {
            return bad("clip_norm must be > 0");
        }
        if self.batch_accumulation == 0 {
            return bad("batch_accumulation must be >= 1");
        }
        if self.hidden == 0 || self.embed == 0 || self.layers == 0 {
            return bad("hidden, embed and layers must be >= 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("every sample exceeds the maximum training length")]
    NothingToTrain,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("parameter shapes differ")]
    ShapeMismatch,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u64),
    #[error("checkpoint tensor {name}: {detail}")]
    Shape { name: String, detail: String },
    #[error("checkpoint holds non-finite values in {0}")]
    NonFinite(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Scales every entry by `max_norm / n` when the global norm `n` exceeds
/// `max_norm`. Returns `n`.
pub fn clip_global_norm(grads: &mut Weights, max_norm: f64) -> f64 {
    let n = grads.global_norm();
    if n > max_norm {
        grads.scale(max_norm / n);
    }
    n
}

/// First and second moment estimates, same layout as the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub m: Weights,
    pub v: Weights,
}

impl Moments {
    pub fn zeros_like(w: &Weights) -> Self {
        Self {
            m: w.zeros_like(),
            v: w.zeros_like(),
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step(
    params: &mut Weights,
    grads: &Weights,
    moments: &mut Moments,
    t: u64,
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    if t == 0 {
        return Err(TrainError::Config("adam step index starts at 1".into()));
    }
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powf(t as f64);
    let c2 = 1.0 - b2.powf(t as f64);
    let p = params.tensors_mut();
    let g = grads.tensors();
    let m = moments.m.tensors_mut();
    let v = moments.v.tensors_mut();
    if p.len() != g.len() || p.len() != m.len() || p.len() != v.len() {
        return Err(TrainError::ShapeMismatch);
    }
    for (((p, g), m), v) in p.into_iter().zip(g).zip(m).zip(v) {
        let shape = p.1.shape();
        if g.1.shape() != shape || m.1.shape() != shape || v.1.shape() != shape {
            return Err(TrainError::ShapeMismatch);
        }
        let pd = p.1.data_mut();
        let md = m.1.data_mut();
        let vd = v.1.data_mut();
        for (i, &gi) in g.1.data().iter().enumerate() {
            md[i] = b1 * md[i] + (1.0 - b1) * gi;
            vd[i] = b2 * vd[i] + (1.0 - b2) * gi * gi;
            let mh = md[i] / c1;
            let vh = vd[i] / c2;
            pd[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    /// Epochs completed.
    pub epoch: usize,
    pub updates: u64,
    /// Mean per-character loss of the last epoch, if any.
    pub mean_char_loss: Option<f64>,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String, CheckpointError> {
        let mut params = BTreeMap::new();
        for (name, m) in self.params.weights.tensors() {
            if !m.is_finite() {
                return Err(CheckpointError::NonFinite(name));
            }
            params.insert(name, json!({ "shape": [m.rows(), m.cols()], "data": m.data() }));
        }
        let value = json!({
            "format_version": FORMAT_VERSION,
            "vocab": self.params.vocab.symbols(),
            "config": self.config,
            "epoch": self.epoch,
            "updates": self.updates,
            "mean_char_loss": self.mean_char_loss,
            "params": params,
        });
        let mut s = serde_json::to_string(&value).expect("plain values serialize");
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let corrupt = |m: String| CheckpointError::Corrupt(m);
        let value: Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| corrupt("not an object".into()))?;
        let version = obj
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| corrupt("missing format_version".into()))?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let field = |k: &str| obj.get(k).ok_or_else(|| corrupt(format!("missing {k}")));
        let symbols: Vec<String> =
            serde_json::from_value(field("vocab")?.clone()).map_err(|e| corrupt(format!("vocab: {e}")))?;
        let vocab = Vocabulary::from_symbols(&symbols).map_err(|e| corrupt(format!("vocab: {e}")))?;
        let config: TrainConfig =
            serde_json::from_value(field("config")?.clone()).map_err(|e| corrupt(format!("config: {e}")))?;
        let epoch = field("epoch")?
            .as_u64()
            .ok_or_else(|| corrupt("epoch is not an integer".into()))? as usize;
        let updates = field("updates")?
            .as_u64()
            .ok_or_else(|| corrupt("updates is not an integer".into()))?;
        let mean_char_loss = match field("mean_char_loss")? {
            Value::Null => None,
            v => Some(v.as_f64().ok_or_else(|| corrupt("mean_char_loss is not a number".into()))?),
        };
        let stored = field("params")?
            .as_object()
            .ok_or_else(|| corrupt("params is not an object".into()))?;

        let mut weights = Weights::zeros(vocab.len(), config.hidden, config.embed, config.layers);
        let expected = weights.tensors().len();
        for (name, m) in weights.tensors_mut() {
            let shape_err = |detail: String| CheckpointError::Shape {
                name: name.clone(),
                detail,
            };
            let entry = stored.get(&name).ok_or_else(|| shape_err("missing".into()))?;
            let shape: Vec<usize> = entry
                .get("shape")
                .and_then(|s| serde_json::from_value(s.clone()).ok())
                .ok_or_else(|| corrupt(format!("{name}: bad shape")))?;
            let data: Vec<f64> = entry
                .get("data")
                .and_then(|s| serde_json::from_value(s.clone()).ok())
                .ok_or_else(|| corrupt(format!("{name}: bad data")))?;
            if shape != [m.rows(), m.cols()] {
                return Err(shape_err(format!(
                    "declared shape {shape:?}, model needs [{}, {}]",
                    m.rows(),
                    m.cols()
                )));
            }
            if data.len() != m.rows() * m.cols() {
                return Err(shape_err(format!(
                    "{} values for shape {shape:?}",
                    data.len()
                )));
            }
            m.data_mut().copy_from_slice(&data);
        }
        if stored.len() != expected {
            let known: Vec<String> = weights.tensors().into_iter().map(|(n, _)| n).collect();
            let extra = stored.keys().find(|k| !known.contains(k)).cloned().unwrap_or_default();
            return Err(CheckpointError::Shape {
                name: extra,
                detail: "not a parameter of this model".into(),
            });
        }
        let params = ModelParams {
            vocab,
            weights,
            reverse_input: config.input_reversal,
        };
        params.validate().map_err(|e| corrupt(e.to_string()))?;
        Ok(Self {
            config,
            epoch,
            updates,
            mean_char_loss,
            params,
        })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    let text = ckpt.to_json()?;
    std::fs::write(path, text).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Checkpoint::from_json(&text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Updates made so far.
    pub updates: u64,
    pub mean_char_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub skipped: usize,
}

pub const LOSS_CSV_HEADER: &str = "epoch,updates,mean_char_loss";

pub fn loss_csv(log: &[EpochLog]) -> String {
    let mut s = format!("{LOSS_CSV_HEADER}\n");
    for e in log {
        s.push_str(&format!("{},{},{}\n", e.epoch, e.updates, e.mean_char_loss));
    }
    s
}

/// Vocabulary over every comment and program of the corpus.
pub fn corpus_vocabulary(corpus: &[SeqSample]) -> Result<Vocabulary, CodecError> {
    Vocabulary::build(
        corpus
            .iter()
            .flat_map(|s| [s.comment.as_str(), s.code.as_str()]),
    )
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TrainError + '_ {
    move |source| TrainError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Trains from scratch. With `out_dir`, writes `loss.csv` (updated after
/// every epoch), `checkpoint.json` and any periodic checkpoints there.
pub fn train(
    corpus: &[SeqSample],
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainRun, TrainError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let vocab = corpus_vocabulary(corpus)?;
    let mut data = Vec::with_capacity(corpus.len());
    let mut skipped = 0;
    for (i, s) in corpus.iter().enumerate() {
        let comment = vocab.encode(&s.comment)?;
        let code = vocab.encode(&s.code)?;
        let steps = sample_steps(comment.len(), code.len());
        if cfg.max_train_len.is_some_and(|max| steps > max) {
            log::warn!("skipping sample {i}: {steps} steps exceeds max_train_len");
            skipped += 1;
            continue;
        }
        data.push((comment, code));
    }
    if data.is_empty() {
        return Err(TrainError::NothingToTrain);
    }

    let mut rng = SplitMix64::new(cfg.seed);
    let mut params = ModelParams::init(
        vocab,
        cfg.hidden,
        cfg.embed,
        cfg.layers,
        cfg.input_reversal,
        &mut rng,
    )?;
    let mut moments = Moments::zeros_like(&params.weights);
    let mut grads = params.weights.zeros_like();
    let mut updates: u64 = 0;
    let mut log_rows = Vec::new();
    let budget_left = |u: u64| cfg.max_updates.is_none_or(|m| u < m);

    let mut epoch = 0;
    while epoch < cfg.epochs && budget_left(updates) {
        let mut order: Vec<usize> = (0..data.len()).collect();
        SplitMix64::derived(cfg.seed, epoch as u64).shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for window in order.chunks(cfg.batch_accumulation) {
            if !budget_left(updates) {
                break;
            }
            let mut window = window.to_vec();
            window.sort_unstable();
            for (_, m) in grads.tensors_mut() {
                m.fill(0.0);
            }
            for &i in &window {
                let (comment, code) = &data[i];
                let stats = accumulate_gradients(&params, comment, code, None, &mut grads)?;
                loss_sum += stats.per_char;
                seen += 1;
            }
            if window.len() > 1 {
                grads.scale(1.0 / window.len() as f64);
            }
            clip_global_norm(&mut grads, cfg.clip_norm);
            updates += 1;
            adam_step(&mut params.weights, &grads, &mut moments, updates, cfg)?;
        }
        epoch += 1;
        let row = EpochLog {
            epoch,
            updates,
            mean_char_loss: loss_sum / seen.max(1) as f64,
        };
        log::info!(
            "epoch {} updates {} mean_char_loss {:.5}",
            row.epoch,
            row.updates,
            row.mean_char_loss
        );
        log_rows.push(row);
        if let Some(dir) = out_dir {
            let path = dir.join("loss.csv");
            let mut f = std::fs::File::create(&path).map_err(io_err(&path))?;
            f.write_all(loss_csv(&log_rows).as_bytes()).map_err(io_err(&path))?;
            if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 {
                let ckpt = Checkpoint {
                    config: cfg.clone(),
                    epoch,
                    updates,
                    mean_char_loss: Some(row.mean_char_loss),
                    params: params.clone(),
                };
                save_checkpoint(&ckpt, &dir.join(format!("checkpoint-epoch{epoch}.json")))?;
            }
        }
    }

    let checkpoint = Checkpoint {
        config: cfg.clone(),
        epoch,
        updates,
        mean_char_loss: log_rows.last().map(|r| r.mean_char_loss),
        params,
    };
    if let Some(dir) = out_dir {
        if log_rows.is_empty() {
            let path = dir.join("loss.csv");
            std::fs::write(&path, loss_csv(&[])).map_err(io_err(&path))?;
        }
        save_checkpoint(&checkpoint, &dir.join("checkpoint.json"))?;
    }
    Ok(TrainRun {
        checkpoint,
        log: log_rows,
        skipped,
    })
}

//! How close generated programs come to the training set: syntax and
//! functional checks, exact memorization, character-fix distance and
//! nearest neighbours by structure and by identifiers.

mod metrics;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{SeqSample, TestCase};
use crate::minic::{compile, run_program, RunStatus, DEFAULT_STEP_LIMIT};
use crate::rng::SplitMix64;
use crate::seq2seq::{generate_from_prompt, Decoding, ModelError, ModelParams};

pub use metrics::{
    edit_distance, edit_distance_chars, edit_distance_within, identifiers, jaccard, multiset, ngrams,
    structure_tokens, Metric, Multiset, Neighbor, NeighborIndex, NGRAM,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no functional tests for problem {0:?}")]
    NoTests(String),
    #[error("query does not lex: {0}")]
    Lex(#[from] crate::minic::MiniCError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Exhaustive nearest neighbour of `query` in `corpus`.
pub fn nearest_neighbor(
    query: &str,
    corpus: &[SeqSample],
    metric: Metric,
) -> Result<Neighbor, EvalError> {
    let codes: Vec<&str> = corpus.iter().map(|s| s.code.as_str()).collect();
    NeighborIndex::new(&codes)
        .nearest(query, metric)?
        .ok_or(EvalError::EmptyCorpus)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Prompt {
    pub problem_id: String,
    pub comment: String,
}

/// Distinct (problem, comment) pairs in order of first appearance.
pub fn corpus_prompts(corpus: &[SeqSample]) -> Vec<Prompt> {
    let mut out: Vec<Prompt> = Vec::new();
    for s in corpus {
        let p = Prompt {
            problem_id: s.problem_id.clone(),
            comment: s.comment.clone(),
        };
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Greedy,
    Sample,
}

/// One program to be judged.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub mode: Mode,
    pub text: String,
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptGenerations {
    pub prompt: Prompt,
    pub generations: Vec<Generated>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exhibits {
    pub chars: Option<Neighbor>,
    /// `None` when the generation does not lex.
    pub structure: Option<Neighbor>,
    pub identifiers: Option<Neighbor>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub mode: Mode,
    pub text: String,
    pub terminated: bool,
    pub parses: bool,
    pub passes: bool,
    pub tests_passed: usize,
    pub memorized: bool,
    pub char_fix_distance: usize,
    pub char_fix_normalized: f64,
    pub nearest: Exhibits,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub samples_drawn: usize,
    pub parse_rate: f64,
    pub functional_pass_rate: f64,
    pub exact_memorization_rate: f64,
    /// `None` when nothing was drawn.
    pub median_char_fix: Option<f64>,
}

impl Summary {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a GenerationRecord>) -> Self {
        let records: Vec<&GenerationRecord> = records.into_iter().collect();
        let n = records.len();
        let rate = |f: fn(&GenerationRecord) -> bool| {
            if n == 0 {
                0.0
            } else {
                records.iter().filter(|r| f(r)).count() as f64 / n as f64
            }
        };
        let fixes: Vec<f64> = records.iter().map(|r| r.char_fix_normalized).collect();
        Summary {
            samples_drawn: n,
            parse_rate: rate(|r| r.parses),
            functional_pass_rate: rate(|r| r.passes),
            exact_memorization_rate: rate(|r| r.memorized),
            median_char_fix: median(&fixes),
        }
    }
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptReport {
    pub problem_id: String,
    pub comment: String,
    pub summary: Summary,
    /// Only the temperature samples.
    pub sampled: Summary,
    pub generations: Vec<GenerationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSettings {
    pub n_samples: usize,
    pub temperature: f64,
    pub max_len: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub settings: Option<EvalSettings>,
    pub corpus_size: usize,
    pub prompts: Vec<PromptReport>,
    pub overall: Summary,
    pub overall_sampled: Summary,
}

impl EvalReport {
    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }
}

/// Judges one program against the training set and its problem's tests.
pub fn judge(
    g: &Generated,
    index: &NeighborIndex,
    tests: &[&TestCase],
) -> GenerationRecord {
    let (parses, tests_passed) = match compile(&g.text) {
        Ok(program) => {
            let passed = tests
                .iter()
                .filter(|t| {
                    let out = run_program(&program, &t.stdin, DEFAULT_STEP_LIMIT);
                    out.status == RunStatus::Ok && out.stdout == t.stdout
                })
                .count();
            (true, passed)
        }
        Err(_) => (false, 0),
    };
    let chars = index.nearest_chars(&g.text);
    let distance = chars.map_or(0, |n| n.score as usize);
    let len = g.text.chars().count();
    let normalized = match (distance, len) {
        (0, _) => 0.0,
        (_, 0) => 1.0,
        (d, l) => d as f64 / l as f64,
    };
    GenerationRecord {
        mode: g.mode,
        text: g.text.clone(),
        terminated: g.terminated,
        parses,
        passes: parses && !tests.is_empty() && tests_passed == tests.len(),
        tests_passed,
        memorized: index.exact_match(&g.text).is_some(),
        char_fix_distance: distance,
        char_fix_normalized: normalized,
        nearest: Exhibits {
            chars,
            structure: index.nearest_structure(&g.text).ok().flatten(),
            identifiers: index.nearest_identifiers(&g.text).ok().flatten(),
        },
    }
}

/// Report over already-produced programs; the model-free path.
pub fn evaluate_generations(
    corpus: &[SeqSample],
    tests: &[TestCase],
    items: &[PromptGenerations],
) -> Result<EvalReport, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let codes: Vec<&str> = corpus.iter().map(|s| s.code.as_str()).collect();
    let index = NeighborIndex::new(&codes);
    let mut prompts = Vec::with_capacity(items.len());
    for item in items {
        let own: Vec<&TestCase> = tests
            .iter()
            .filter(|t| t.problem_id == item.prompt.problem_id)
            .collect();
        if own.is_empty() {
            return Err(EvalError::NoTests(item.prompt.problem_id.clone()));
        }
        let generations: Vec<GenerationRecord> =
            item.generations.iter().map(|g| judge(g, &index, &own)).collect();
        prompts.push(PromptReport {
            problem_id: item.prompt.problem_id.clone(),
            comment: item.prompt.comment.clone(),
            summary: Summary::of(&generations),
            sampled: Summary::of(generations.iter().filter(|g| g.mode == Mode::Sample)),
            generations,
        });
    }
    let all = prompts.iter().flat_map(|p| p.generations.iter());
    let overall = Summary::of(all.clone());
    let overall_sampled = Summary::of(all.filter(|g| g.mode == Mode::Sample));
    Ok(EvalReport {
        settings: None,
        corpus_size: corpus.len(),
        prompts,
        overall,
        overall_sampled,
    })
}

/// Draws programs for each prompt: one greedy, then `n_samples - 1` at the
/// given temperature from a stream derived from `(seed, prompt index)`.
pub fn draw_generations(
    params: &ModelParams,
    prompts: &[Prompt],
    settings: &EvalSettings,
) -> Result<Vec<PromptGenerations>, EvalError> {
    let mut out = Vec::with_capacity(prompts.len());
    for (pi, prompt) in prompts.iter().enumerate() {
        let mut rng = SplitMix64::derived(settings.seed, pi as u64);
        let mut generations = Vec::with_capacity(settings.n_samples);
        for k in 0..settings.n_samples {
            let (mode, decoding) = if k == 0 {
                (Mode::Greedy, Decoding::Greedy)
            } else {
                (Mode::Sample, Decoding::Temperature(settings.temperature))
            };
            let g = generate_from_prompt(params, &prompt.comment, decoding, settings.max_len, &mut rng)?;
            log::debug!("prompt {pi} sample {k}: {} chars", g.text.chars().count());
            generations.push(Generated {
                mode,
                text: g.text,
                terminated: g.terminated,
            });
        }
        out.push(PromptGenerations {
            prompt: prompt.clone(),
            generations,
        });
    }
    Ok(out)
}

pub fn evaluate_model(
    params: &ModelParams,
    corpus: &[SeqSample],
    tests: &[TestCase],
    prompts: &[Prompt],
    settings: &EvalSettings,
) -> Result<EvalReport, EvalError> {
    let items = draw_generations(params, prompts, settings)?;
    let mut report = evaluate_generations(corpus, tests, &items)?;
    report.settings = Some(settings.clone());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, standard_problems};
    use crate::textcodec::Vocabulary;

    fn small() -> crate::corpus::Corpus {
        generate_corpus(&standard_problems(), 30, 5).unwrap()
    }

    fn copies(corpus: &crate::corpus::Corpus, mutate: bool) -> Vec<PromptGenerations> {
        corpus_prompts(&corpus.samples)
            .into_iter()
            .map(|prompt| {
                let generations = corpus
                    .samples
                    .iter()
                    .filter(|s| s.problem_id == prompt.problem_id)
                    .take(3)
                    .map(|s| {
                        let mut text = s.code.clone();
                        if mutate {
                            text.insert(text.len() - 2, ' ');
                        }
                        Generated {
                            mode: Mode::Sample,
                            text,
                            terminated: true,
                        }
                    })
                    .collect();
                PromptGenerations { prompt, generations }
            })
            .collect()
    }

    #[test]
    fn copied_programs_are_memorized_and_pass() {
        let c = small();
        let r = evaluate_generations(&c.samples, &c.tests, &copies(&c, false)).unwrap();
        assert_eq!(r.overall.exact_memorization_rate, 1.0);
        assert_eq!(r.overall.parse_rate, 1.0);
        assert_eq!(r.overall.functional_pass_rate, 1.0);
        assert_eq!(r.overall.median_char_fix, Some(0.0));
        for p in &r.prompts {
            assert_eq!(p.summary.samples_drawn, 3);
        }
    }

    #[test]
    fn one_character_mutation_is_not_memorized() {
        let c = small();
        let r = evaluate_generations(&c.samples, &c.tests, &copies(&c, true)).unwrap();
        assert_eq!(r.overall.exact_memorization_rate, 0.0);
        for g in r.prompts.iter().flat_map(|p| &p.generations) {
            assert_eq!(g.char_fix_distance, 1);
            assert!(g.parses);
            assert_eq!(g.char_fix_normalized, 1.0 / g.text.chars().count() as f64);
        }
    }

    #[test]
    fn rates_are_exact_fractions() {
        let c = small();
        let mut items = copies(&c, false);
        items[0].generations[1].text = "int main(){".into();
        items[0].generations[2].text = "int main(){return 0;}".into();
        let r = evaluate_generations(&c.samples, &c.tests, &items).unwrap();
        let p = &r.prompts[0];
        assert_eq!(p.summary.parse_rate, 2.0 / 3.0);
        assert_eq!(p.summary.functional_pass_rate, 1.0 / 3.0);
        assert_eq!(p.summary.exact_memorization_rate, 1.0 / 3.0);
        assert!(p.generations[1].nearest.structure.is_some());
    }

    #[test]
    fn missing_tests_and_empty_corpus_are_errors() {
        let c = small();
        assert!(matches!(
            evaluate_generations(&c.samples, &[], &copies(&c, false)),
            Err(EvalError::NoTests(_))
        ));
        assert!(matches!(evaluate_generations(&[], &c.tests, &[]), Err(EvalError::EmptyCorpus)));
        assert!(matches!(
            nearest_neighbor("x", &[], Metric::Chars),
            Err(EvalError::EmptyCorpus)
        ));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn model_report_is_reproducible() {
        let c = generate_corpus(&standard_problems(), 2, 1).unwrap();
        let texts = c.samples.iter().flat_map(|s| [s.comment.as_str(), s.code.as_str()]);
        let vocab = Vocabulary::build(texts).unwrap();
        let mut rng = SplitMix64::new(3);
        let params = ModelParams::init(vocab, 8, 4, 1, false, &mut rng).unwrap();
        let prompts = corpus_prompts(&c.samples);
        let settings = EvalSettings {
            n_samples: 3,
            temperature: 0.5,
            max_len: 40,
            seed: 11,
        };
        let a = evaluate_model(&params, &c.samples, &c.tests, &prompts, &settings).unwrap();
        let b = evaluate_model(&params, &c.samples, &c.tests, &prompts, &settings).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.prompts[0].generations.len(), 3);
        assert_eq!(a.prompts[0].generations[0].mode, Mode::Greedy);
        assert_eq!(a.prompts[0].sampled.samples_drawn, 2);

        let one = EvalSettings { n_samples: 1, ..settings };
        let r = evaluate_model(&params, &c.samples, &c.tests, &prompts, &one).unwrap();
        assert!(r.prompts.iter().all(|p| p.generations.len() == 1));
        assert_eq!(
            r.prompts[0].generations[0].text,
            a.prompts[0].generations[0].text
        );
    }

    #[test]
    fn report_json_has_sorted_keys() {
        let c = small();
        let r = evaluate_generations(&c.samples, &c.tests, &copies(&c, false)).unwrap();
        let json = r.to_json();
        let top: Vec<&str> = json
            .lines()
            .filter(|l| l.starts_with("  \"") )
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = top.clone();
        sorted.sort();
        assert_eq!(top, sorted);
    }
}

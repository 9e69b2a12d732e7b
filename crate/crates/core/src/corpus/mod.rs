//! Synthetic training corpus: four small problems, each with hundreds of
//! textually distinct but functionally identical mini-C programs.
//!
//! ```
//! use nl2code::corpus::{corpus_self_check, generate_corpus, standard_problems};
//!
//! let specs = standard_problems();
//! let corpus = generate_corpus(&specs, 5, 42)?;
//! assert_eq!(corpus.samples.len(), 20);
//! assert!(corpus_self_check(&corpus, &specs).ok);
//! # Ok::<(), nl2code::corpus::CorpusError>(())
//! ```

mod problems;
pub mod render;

use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minic::{compile, run_program, RunStatus, DEFAULT_STEP_LIMIT};
use crate::rng::SplitMix64;

pub use problems::{
    format_input, reference_output, standard_problems, Axes, DeclPlacement, LoopBound, MainKind,
    ProblemKind, ProblemSpec, Variant,
};

/// One training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqSample {
    pub problem_id: String,
    pub comment: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub problem_id: String,
    pub stdin: String,
    pub stdout: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub samples: Vec<SeqSample>,
    pub tests: Vec<TestCase>,
}

impl Corpus {
    pub fn tests_for<'a>(&'a self, problem_id: &'a str) -> impl Iterator<Item = &'a TestCase> + 'a {
        self.tests.iter().filter(move |t| t.problem_id == problem_id)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("per_problem must be at least 1")]
    ZeroPerProblem,
    #[error("problem {problem_id}: requested {requested} distinct samples but at most {max} are achievable")]
    Unsatisfiable {
        problem_id: String,
        requested: usize,
        max: usize,
    },
    #[error("problem {problem_id}: generated program failed verification: {detail}")]
    Unverified { problem_id: String, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Distinct programs of a problem in variant order, optionally capped in
/// length.
pub fn distinct_programs(spec: &ProblemSpec, max_code_chars: Option<usize>) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for v in spec.variants() {
        let code = spec.render(&v);
        if max_code_chars.is_some_and(|cap| code.chars().count() > cap) {
            continue;
        }
        if seen.insert(code.clone()) {
            out.push(code);
        }
    }
    out
}

pub fn generate_corpus(
    specs: &[ProblemSpec],
    per_problem: usize,
    seed: u64,
) -> Result<Corpus, CorpusError> {
    generate_corpus_capped(specs, per_problem, seed, None)
}

/// [`generate_corpus`] restricted to programs of at most `max_code_chars`
/// characters.
pub fn generate_corpus_capped(
    specs: &[ProblemSpec],
    per_problem: usize,
    seed: u64,
    max_code_chars: Option<usize>,
) -> Result<Corpus, CorpusError> {
    if per_problem == 0 {
        return Err(CorpusError::ZeroPerProblem);
    }
    let mut corpus = Corpus::default();
    for (pi, spec) in specs.iter().enumerate() {
        let pool = distinct_programs(spec, max_code_chars);
        if pool.len() < per_problem {
            return Err(CorpusError::Unsatisfiable {
                problem_id: spec.problem_id.clone(),
                requested: per_problem,
                max: pool.len(),
            });
        }
        let mut rng = SplitMix64::derived(seed, pi as u64);
        let mut order: Vec<usize> = (0..pool.len()).collect();
        rng.shuffle(&mut order);
        let mut chosen = order[..per_problem].to_vec();
        chosen.sort_unstable();
        for idx in chosen {
            let code = &pool[idx];
            if let Some(detail) = verify(spec, code) {
                return Err(CorpusError::Unverified {
                    problem_id: spec.problem_id.clone(),
                    detail,
                });
            }
            let comment = spec.comments[rng.below(spec.comments.len())].clone();
            corpus.samples.push(SeqSample {
                problem_id: spec.problem_id.clone(),
                comment,
                code: code.clone(),
            });
        }
        corpus.tests.extend(spec.tests.iter().cloned());
    }
    Ok(corpus)
}

/// `None` when `code` parses and passes every test of `spec`.
fn verify(spec: &ProblemSpec, code: &str) -> Option<String> {
    let program = match compile(code) {
        Ok(p) => p,
        Err(e) => return Some(e.to_string()),
    };
    for t in &spec.tests {
        let out = run_program(&program, &t.stdin, DEFAULT_STEP_LIMIT);
        if out.status != RunStatus::Ok {
            let why = out
                .error
                .map(|e| e.to_string())
                .unwrap_or_else(|| "step limit".to_string());
            return Some(format!("stdin {:?}: {why}", t.stdin));
        }
        if out.stdout != t.stdout {
            return Some(format!(
                "stdin {:?}: expected {:?}, got {:?}",
                t.stdin, t.stdout, out.stdout
            ));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProblemCheck {
    pub problem_id: String,
    pub samples: usize,
    pub parsed: usize,
    pub passed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleFailure {
    pub index: usize,
    pub problem_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelfCheckReport {
    pub ok: bool,
    pub problems: Vec<ProblemCheck>,
    pub duplicates: usize,
    pub failures: Vec<SampleFailure>,
}

/// Parses and runs every sample against its problem's tests.
pub fn corpus_self_check(corpus: &Corpus, specs: &[ProblemSpec]) -> SelfCheckReport {
    let mut problems: Vec<ProblemCheck> = specs
        .iter()
        .map(|s| ProblemCheck {
            problem_id: s.problem_id.clone(),
            samples: 0,
            parsed: 0,
            passed: 0,
        })
        .collect();
    let mut failures = Vec::new();
    let mut seen = HashSet::new();
    let mut duplicates = 0;
    for (index, sample) in corpus.samples.iter().enumerate() {
        if !seen.insert((&sample.problem_id, &sample.code)) {
            duplicates += 1;
        }
        let Some(pi) = specs.iter().position(|s| s.problem_id == sample.problem_id) else {
            failures.push(SampleFailure {
                index,
                problem_id: sample.problem_id.clone(),
                reason: "unknown problem".to_string(),
            });
            continue;
        };
        let row = &mut problems[pi];
        row.samples += 1;
        if compile(&sample.code).is_ok() {
            row.parsed += 1;
        }
        match verify(&specs[pi], &sample.code) {
            None => row.passed += 1,
            Some(reason) => failures.push(SampleFailure {
                index,
                problem_id: sample.problem_id.clone(),
                reason,
            }),
        }
    }
    SelfCheckReport {
        ok: failures.is_empty() && duplicates == 0,
        problems,
        duplicates,
        failures,
    }
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let text = serde_json::to_string(row).expect("plain records serialize");
        writeln!(w, "{text}").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, text) in BufReader::new(file).lines().enumerate() {
        let text = text.map_err(io)?;
        if text.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&text).map_err(|source| CorpusError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(row);
    }
    Ok(out)
}

pub fn write_samples(path: &Path, samples: &[SeqSample]) -> Result<(), CorpusError> {
    write_jsonl(path, samples)
}

pub fn read_samples(path: &Path) -> Result<Vec<SeqSample>, CorpusError> {
    read_jsonl(path)
}

pub fn write_tests(path: &Path, tests: &[TestCase]) -> Result<(), CorpusError> {
    write_jsonl(path, tests)
}

pub fn read_tests(path: &Path) -> Result<Vec<TestCase>, CorpusError> {
    read_jsonl(path)
}

/// The problems of [`tiny_corpus`]: sum of n numbers and sum of two.
pub fn tiny_problems() -> Vec<ProblemSpec> {
    [ProblemKind::Sum, ProblemKind::Add]
        .into_iter()
        .map(ProblemSpec::new)
        .collect()
}

/// The small two-problem corpus used for overfitting checks, programs of at
/// most 120 characters.
pub fn tiny_corpus(per_problem: usize, seed: u64) -> Result<Corpus, CorpusError> {
    generate_corpus_capped(&tiny_problems(), per_problem, seed, Some(120))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn full_corpus_is_distinct_and_verified() {
        let specs = standard_problems();
        let corpus = generate_corpus(&specs, 500, 42).unwrap();
        assert_eq!(corpus.samples.len(), 2000);
        let distinct: HashSet<_> = corpus.samples.iter().map(|s| (&s.problem_id, &s.code)).collect();
        assert_eq!(distinct.len(), 2000);
        let report = corpus_self_check(&corpus, &specs);
        assert!(report.ok, "{:?}", report.failures);
        for p in &report.problems {
            assert_eq!((p.samples, p.parsed, p.passed), (500, 500, 500));
        }
        assert!(corpus.samples[0].comment.contains("maximum and second maximum"));
    }

    #[test]
    fn generation_is_deterministic() {
        let specs = standard_problems();
        let a = generate_corpus(&specs, 50, 7).unwrap();
        let b = generate_corpus(&specs, 50, 7).unwrap();
        let c = generate_corpus(&specs, 50, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn too_many_requested_reports_maximum() {
        let mut specs = standard_problems();
        specs.truncate(1);
        let max = distinct_programs(&specs[0], None).len();
        match generate_corpus(&specs, max + 1, 1) {
            Err(CorpusError::Unsatisfiable { requested, max: m, .. }) => {
                assert_eq!(requested, max + 1);
                assert_eq!(m, max);
            }
            other => panic!("{other:?}"),
        }
        assert!(generate_corpus(&specs, max, 1).is_ok());
        assert!(matches!(generate_corpus(&specs, 0, 1), Err(CorpusError::ZeroPerProblem)));
    }

    #[test]
    fn flipped_comparison_fails_self_check() {
        let specs = standard_problems();
        let mut corpus = generate_corpus(&specs, 10, 3).unwrap();
        let k = corpus
            .samples
            .iter()
            .position(|s| s.code.contains("i < n"))
            .unwrap();
        corpus.samples[k].code = corpus.samples[k].code.replacen("i < n", "i == n", 1);
        let report = corpus_self_check(&corpus, &specs);
        assert!(!report.ok);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].index, k);
        let row = report
            .problems
            .iter()
            .find(|p| p.problem_id == corpus.samples[k].problem_id)
            .unwrap();
        assert_eq!(row.parsed, row.samples);
        assert_eq!(row.passed, row.samples - 1);
    }

    #[test]
    fn empty_corpus_passes_trivially() {
        let report = corpus_self_check(&Corpus::default(), &standard_problems());
        assert!(report.ok);
        assert!(report.problems.iter().all(|p| p.samples == 0));
    }

    #[test]
    fn bound_pairs_and_rename_pairs_exist() {
        let specs = standard_problems();
        let corpus = generate_corpus(&specs, 500, 42).unwrap();
        let codes: HashSet<&str> = corpus.samples.iter().map(|s| s.code.as_str()).collect();
        let pairs = corpus
            .samples
            .iter()
            .filter(|s| s.code.contains("i < n;") && codes.contains(s.code.replace("i < n;", "i <= n - 1;").as_str()))
            .count();
        assert!(pairs > 0);
        let renamed = corpus
            .samples
            .iter()
            .filter(|s| s.code.contains("max1") && codes.contains(s.code.replace("max1", "max").replace("a[", "arr[").as_str()))
            .count();
        assert!(renamed > 0);
    }

    #[test]
    fn tiny_corpus_fits_length_cap() {
        let c = tiny_corpus(20, 1).unwrap();
        assert_eq!(c.samples.len(), 40);
        assert!(c.samples.iter().all(|s| s.code.chars().count() <= 120));
        let mut per: HashMap<&str, usize> = HashMap::new();
        for s in &c.samples {
            *per.entry(&s.problem_id).or_default() += 1;
        }
        assert_eq!(per.len(), 2);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = generate_corpus(&standard_problems(), 3, 9).unwrap();
        let p = dir.path().join("c.jsonl");
        write_samples(&p, &corpus.samples).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(text.starts_with("{\"problem_id\":\"max2\",\"comment\":"));
        assert!(!text.lines().next().unwrap().contains('\n'));
        assert_eq!(read_samples(&p).unwrap(), corpus.samples);
        let t = dir.path().join("t.jsonl");
        write_tests(&t, &corpus.tests).unwrap();
        assert_eq!(read_tests(&t).unwrap(), corpus.tests);
        assert!(matches!(read_samples(&dir.path().join("missing")), Err(CorpusError::Io { .. })));
    }
}

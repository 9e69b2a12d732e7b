//! Edit distance and clone-style similarity between programs.

use std::collections::HashMap;

use crate::minic::{lex, MiniCError, TokenKind};

/// Levenshtein distance over characters with unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    edit_distance_chars(&a, &b)
}

pub fn edit_distance_chars(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `Some(d)` when the edit distance `d` is at most `k`, using a diagonal
/// band of width `2k + 1`.
pub fn edit_distance_within(a: &[char], b: &[char], k: usize) -> Option<usize> {
    let (n, m) = (a.len(), b.len());
    if n.abs_diff(m) > k {
        return None;
    }
    if n == 0 || m == 0 {
        return Some(n.max(m));
    }
    const INF: usize = usize::MAX / 2;
    let mut prev = vec![INF; m + 1];
    let mut cur = vec![INF; m + 1];
    for (j, x) in prev.iter_mut().enumerate().take(m.min(k) + 1) {
        *x = j;
    }
    for i in 1..=n {
        let lo = i.saturating_sub(k).max(1);
        let hi = m.min(i + k);
        cur[lo - 1] = if lo == 1 { i } else { INF };
        let mut row_min = cur[lo - 1];
        for j in lo..=hi {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let v = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if hi < m {
            cur[hi + 1] = INF;
        }
        if row_min > k {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (prev[m] <= k).then_some(prev[m])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Minimum edit distance; lower is closer.
    Chars,
    /// Jaccard similarity of token-kind 4-gram multisets.
    Structure,
    /// Jaccard similarity of identifier multisets.
    Identifiers,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chars" => Ok(Metric::Chars),
            "structure" => Ok(Metric::Structure),
            "identifiers" => Ok(Metric::Identifiers),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

pub const NGRAM: usize = 4;

/// Names that stay literal in the structure view.
const BUILTINS: [&str; 3] = ["main", "scanf", "printf"];

/// Token kinds with identifiers and literals abstracted away.
pub fn structure_tokens(code: &str) -> Result<Vec<String>, MiniCError> {
    Ok(lex(code)?
        .into_iter()
        .map(|t| match t.kind {
            TokenKind::Identifier if BUILTINS.contains(&t.lexeme.as_str()) => t.lexeme,
            TokenKind::Identifier => "ID".to_string(),
            TokenKind::IntLiteral => "NUM".to_string(),
            TokenKind::StringLiteral => "STR".to_string(),
            _ => t.lexeme,
        })
        .collect())
}

/// User identifiers in order of appearance, repeats included.
pub fn identifiers(code: &str) -> Result<Vec<String>, MiniCError> {
    Ok(lex(code)?
        .into_iter()
        .filter(|t| t.kind == TokenKind::Identifier && !BUILTINS.contains(&t.lexeme.as_str()))
        .map(|t| t.lexeme)
        .collect())
}

pub type Multiset<T> = HashMap<T, usize>;

/// 4-gram windows; a sequence shorter than that is one gram.
pub fn ngrams(tokens: &[String]) -> Multiset<Vec<String>> {
    let mut out = HashMap::new();
    if tokens.is_empty() {
        return out;
    }
    if tokens.len() < NGRAM {
        out.insert(tokens.to_vec(), 1);
        return out;
    }
    for w in tokens.windows(NGRAM) {
        *out.entry(w.to_vec()).or_insert(0) += 1;
    }
    out
}

pub fn multiset<T: std::hash::Hash + Eq>(items: impl IntoIterator<Item = T>) -> Multiset<T> {
    let mut out = HashMap::new();
    for x in items {
        *out.entry(x).or_insert(0) += 1;
    }
    out
}

/// Σ min / Σ max over the union; two empty multisets are identical.
pub fn jaccard<T: std::hash::Hash + Eq>(a: &Multiset<T>, b: &Multiset<T>) -> f64 {
    let mut inter = 0;
    let mut union = 0;
    for (k, &ca) in a {
        let cb = b.get(k).copied().unwrap_or(0);
        inter += ca.min(cb);
        union += ca.max(cb);
    }
    for (k, &cb) in b {
        if !a.contains_key(k) {
            union += cb;
        }
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Neighbor {
    pub index: usize,
    /// Edit distance for chars, similarity in [0, 1] otherwise.
    pub score: f64,
}

/// A corpus prepared for repeated nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    chars: Vec<Vec<char>>,
    by_len: Vec<usize>,
    structure: Vec<Multiset<Vec<String>>>,
    idents: Vec<Multiset<String>>,
    exact: HashMap<String, usize>,
}

impl NeighborIndex {
    pub fn new<S: AsRef<str>>(codes: &[S]) -> Self {
        let chars: Vec<Vec<char>> = codes.iter().map(|c| c.as_ref().chars().collect()).collect();
        let mut by_len: Vec<usize> = (0..codes.len()).collect();
        by_len.sort_by_key(|&i| (chars[i].len(), i));
        let structure = codes
            .iter()
            .map(|c| ngrams(&structure_tokens(c.as_ref()).unwrap_or_default()))
            .collect();
        let idents = codes
            .iter()
            .map(|c| multiset(identifiers(c.as_ref()).unwrap_or_default()))
            .collect();
        let mut exact = HashMap::new();
        for (i, c) in codes.iter().enumerate() {
            exact.entry(c.as_ref().to_string()).or_insert(i);
        }
        Self {
            chars,
            by_len,
            structure,
            idents,
            exact,
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Lowest index of a byte-identical corpus program.
    pub fn exact_match(&self, query: &str) -> Option<usize> {
        self.exact.get(query).copied()
    }

    /// `None` only for an empty corpus.
    pub fn nearest_chars(&self, query: &str) -> Option<Neighbor> {
        if let Some(index) = self.exact_match(query) {
            return Some(Neighbor { index, score: 0.0 });
        }
        let q: Vec<char> = query.chars().collect();
        // Visit candidates by increasing length gap; the gap bounds the
        // distance from below.
        let split = self.by_len.partition_point(|&i| self.chars[i].len() < q.len());
        let (mut left, mut right) = (split, split);
        let mut best: Option<(usize, usize)> = None;
        loop {
            let gap = |i: usize| self.chars[i].len().abs_diff(q.len());
            let next = match (left > 0, right < self.by_len.len()) {
                (false, false) => break,
                (true, false) => Side::Left,
                (false, true) => Side::Right,
                (true, true) => {
                    if gap(self.by_len[left - 1]) <= gap(self.by_len[right]) {
                        Side::Left
                    } else {
                        Side::Right
                    }
                }
            };
            let i = match next {
                Side::Left => {
                    left -= 1;
                    self.by_len[left]
                }
                Side::Right => {
                    right += 1;
                    self.by_len[right - 1]
                }
            };
            let k = match best {
                Some((d, _)) => {
                    if gap(i) > d {
                        // Every later candidate has at least this gap on
                        // this side; keep scanning the other side only.
                        match next {
                            Side::Left => left = 0,
                            Side::Right => right = self.by_len.len(),
                        }
                        continue;
                    }
                    d
                }
                None => q.len().max(self.chars[i].len()),
            };
            if let Some(d) = edit_distance_within(&q, &self.chars[i], k) {
                let better = match best {
                    None => true,
                    Some((bd, bi)) => d < bd || (d == bd && i < bi),
                };
                if better {
                    best = Some((d, i));
                }
            }
        }
        best.map(|(d, index)| Neighbor {
            index,
            score: d as f64,
        })
    }

    pub fn nearest_structure(&self, query: &str) -> Result<Option<Neighbor>, MiniCError> {
        let q = ngrams(&structure_tokens(query)?);
        Ok(best_similarity(self.structure.iter().map(|m| jaccard(&q, m))))
    }

    pub fn nearest_identifiers(&self, query: &str) -> Result<Option<Neighbor>, MiniCError> {
        let q = multiset(identifiers(query)?);
        Ok(best_similarity(self.idents.iter().map(|m| jaccard(&q, m))))
    }

    pub fn nearest(&self, query: &str, metric: Metric) -> Result<Option<Neighbor>, MiniCError> {
        match metric {
            Metric::Chars => Ok(self.nearest_chars(query)),
            Metric::Structure => self.nearest_structure(query),
            Metric::Identifiers => self.nearest_identifiers(query),
        }
    }
}

enum Side {
    Left,
    Right,
}

/// Highest score, lowest index on ties.
fn best_similarity(scores: impl Iterator<Item = f64>) -> Option<Neighbor> {
    let mut best: Option<Neighbor> = None;
    for (index, score) in scores.enumerate() {
        if best.is_none_or(|b| score > b.score) {
            best = Some(Neighbor { index, score });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("same", "same"), 0);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("flaw", "lawn"), 2);
        assert_eq!(edit_distance("héllo", "hello"), 1);
    }

    #[test]
    fn banded_distance_cutoffs() {
        let a: Vec<char> = "kitten".chars().collect();
        let b: Vec<char> = "sitting".chars().collect();
        assert_eq!(edit_distance_within(&a, &b, 3), Some(3));
        assert_eq!(edit_distance_within(&a, &b, 10), Some(3));
        assert_eq!(edit_distance_within(&a, &b, 2), None);
        assert_eq!(edit_distance_within(&a, &a, 0), Some(0));
        assert_eq!(edit_distance_within(&[], &b, 7), Some(7));
        assert_eq!(edit_distance_within(&[], &b, 6), None);
    }

    fn small_string() -> impl Strategy<Value = String> {
        proptest::collection::vec(prop::sample::select(vec!['a', 'b', 'c', 'd']), 0..30)
            .prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn banded_agrees_with_full(a in small_string(), b in small_string(), k in 0usize..35) {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            let d = edit_distance_chars(&ac, &bc);
            let expected = (d <= k).then_some(d);
            prop_assert_eq!(edit_distance_within(&ac, &bc, k), expected);
        }

        #[test]
        fn nearest_chars_is_brute_force(
            corpus in proptest::collection::vec(small_string(), 1..12),
            q in small_string(),
        ) {
            let index = NeighborIndex::new(&corpus);
            let got = index.nearest_chars(&q).unwrap();
            let mut best = (usize::MAX, 0);
            for (i, c) in corpus.iter().enumerate() {
                let d = edit_distance(&q, c);
                if d < best.0 {
                    best = (d, i);
                }
            }
            prop_assert_eq!((got.score as usize, got.index), best);
        }
    }

    #[test]
    fn query_in_corpus_is_found_at_distance_zero() {
        let corpus = ["int main(){}", "void main(){}", "int main(){}"];
        let index = NeighborIndex::new(&corpus);
        assert_eq!(
            index.nearest_chars("int main(){}"),
            Some(Neighbor { index: 0, score: 0.0 })
        );
        assert_eq!(index.nearest_chars("void main(){ }").unwrap().index, 1);
        assert!(NeighborIndex::new::<&str>(&[]).nearest_chars("x").is_none());
    }

    const PROG: &str = "int main(){int n,i,s=0;scanf(\"%d\",&n);for(i=0;i<n;i++)s+=i;printf(\"%d\\n\",s);return 0;}";

    /// Renames every user identifier by appending `_r`.
    fn rename_all(code: &str) -> String {
        let mut out = code.to_string();
        for t in lex(code).unwrap().iter().rev() {
            if t.kind == TokenKind::Identifier && !BUILTINS.contains(&t.lexeme.as_str()) {
                out.insert_str(t.offset + t.lexeme.len(), "_r");
            }
        }
        out
    }

    #[test]
    fn renaming_keeps_structure_but_not_identifiers() {
        let renamed = rename_all(PROG);
        assert!(renamed.contains("s_r+=i_r"));
        let corpus = [PROG.to_string()];
        let index = NeighborIndex::new(&corpus);
        let s = index.nearest_structure(&renamed).unwrap().unwrap();
        assert_eq!((s.index, s.score), (0, 1.0));
        let id = index.nearest_identifiers(&renamed).unwrap().unwrap();
        assert!(id.score < 1.0);
        assert_eq!(structure_tokens(PROG).unwrap(), structure_tokens(&renamed).unwrap());
    }

    #[test]
    fn metrics_separate_structure_from_identifiers() {
        let query = "int main(){int max1,max2,i;for(i=0;i<3;i++)max1=i;max2=max1;printf(\"%d\\n\",max2);}";
        // Same names, different shape.
        let a = "int main(){int max1,max2,i;i=0;max1=i;while(max1<3){max2=max1;max1=max1+1;}printf(\"%d %d\\n\",max1,i);}";
        // Same shape, different names.
        let b = "int main(){int p,q,k;for(k=0;k<3;k++)p=k;q=p;printf(\"%d\\n\",q);}";
        let index = NeighborIndex::new(&[a, b]);
        assert_eq!(index.nearest_identifiers(query).unwrap().unwrap().index, 0);
        let s = index.nearest_structure(query).unwrap().unwrap();
        assert_eq!((s.index, s.score), (1, 1.0));
    }

    #[test]
    fn unlexable_query_is_an_error_for_token_metrics() {
        let index = NeighborIndex::new(&["int main(){}"]);
        assert!(index.nearest_structure("int main(){ $ }").is_err());
        assert!(index.nearest_identifiers("int main(){ $ }").is_err());
        assert!(index.nearest_chars("int main(){ $ }").is_some());
    }

    #[test]
    fn short_sequences_form_one_gram() {
        let toks: Vec<String> = ["int", "ID"].iter().map(|s| s.to_string()).collect();
        assert_eq!(ngrams(&toks).len(), 1);
        assert!(ngrams(&[]).is_empty());
        let a = multiset(["x", "x", "y"]);
        let b = multiset(["x", "y", "y", "z"]);
        assert_eq!(jaccard(&a, &b), 2.0 / 5.0);
        assert_eq!(jaccard(&multiset(Vec::<&str>::new()), &multiset(Vec::<&str>::new())), 1.0);
    }

    #[test]
    fn similarity_ties_go_to_lowest_index() {
        let index = NeighborIndex::new(&["int main(){}", "int main(){}"]);
        assert_eq!(index.nearest_structure("int main(){}").unwrap().unwrap().index, 0);
    }
}

//! Character vocabulary with the two reserved symbols.
//!
//! Id 0 is `<eos>`, id 1 is `<sos>`, and ids from 2 upward are the distinct
//! corpus characters in ascending code-point order.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

pub const EOS: usize = 0;
pub const SOS: usize = 1;
pub const EOS_TOKEN: &str = "<eos>";
pub const SOS_TOKEN: &str = "<sos>";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("characters not in vocabulary: {}", format_unknown(.0))]
    UnknownChars(Vec<(char, usize)>),
    #[error("id {0} is a special symbol and has no text form")]
    SpecialId(usize),
    #[error("id {id} out of range for vocabulary of size {size}")]
    OutOfRange { id: usize, size: usize },
    #[error("invalid vocabulary entry {0:?}")]
    BadEntry(String),
}

fn format_unknown(items: &[(char, usize)]) -> String {
    items
        .iter()
        .map(|(c, off)| format!("{c:?} at byte {off}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl Vocabulary {
    /// Builds the table from every character of every text.
    pub fn build<'a, I>(texts: I) -> Result<Self, CodecError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut seen = false;
        let mut set = BTreeSet::new();
        for t in texts {
            seen = true;
            set.extend(t.chars());
        }
        if !seen {
            return Err(CodecError::EmptyCorpus);
        }
        Ok(Self::from_chars(set.into_iter().collect()))
    }

    fn from_chars(chars: Vec<char>) -> Self {
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i + 2)).collect();
        Self { chars, index }
    }

    /// Reconstructs a vocabulary from its serialized symbol listing.
    pub fn from_symbols<S: AsRef<str>>(symbols: &[S]) -> Result<Self, CodecError> {
        let mut it = symbols.iter().map(AsRef::as_ref);
        match (it.next(), it.next()) {
            (Some(EOS_TOKEN), Some(SOS_TOKEN)) => {}
            _ => return Err(CodecError::BadEntry("missing <eos>/<sos> header".into())),
        }
        let mut chars = Vec::new();
        for s in it {
            let mut cs = s.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(CodecError::BadEntry(s.to_string())),
            }
        }
        if chars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CodecError::BadEntry("characters not strictly ascending".into()));
        }
        Ok(Self::from_chars(chars))
    }

    /// Symbol listing in id order, as stored in checkpoints.
    pub fn symbols(&self) -> Vec<String> {
        let mut out = vec![EOS_TOKEN.to_string(), SOS_TOKEN.to_string()];
        out.extend(self.chars.iter().map(|c| c.to_string()));
        out
    }

    pub fn len(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn char_of(&self, id: usize) -> Result<char, CodecError> {
        match id {
            EOS | SOS => Err(CodecError::SpecialId(id)),
            _ => self.chars.get(id - 2).copied().ok_or(CodecError::OutOfRange {
                id,
                size: self.len(),
            }),
        }
    }

    /// Display form of any id, including the special symbols.
    pub fn symbol(&self, id: usize) -> String {
        match id {
            EOS => EOS_TOKEN.into(),
            SOS => SOS_TOKEN.into(),
            _ => self
                .char_of(id)
                .map(|c| c.to_string())
                .unwrap_or_else(|_| format!("<{id}?>")),
        }
    }

    pub fn encode(&self, text: &str) -> Result<Vec<usize>, CodecError> {
        let mut ids = Vec::with_capacity(text.len());
        let mut unknown = Vec::new();
        for (off, c) in text.char_indices() {
            match self.index.get(&c) {
                Some(&id) => ids.push(id),
                None => unknown.push((c, off)),
            }
        }
        if unknown.is_empty() {
            Ok(ids)
        } else {
            Err(CodecError::UnknownChars(unknown))
        }
    }

    pub fn decode(&self, ids: &[usize]) -> Result<String, CodecError> {
        ids.iter().map(|&id| self.char_of(id)).collect()
    }
}

use std::fmt;

use super::MiniCError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntLiteral,
    StringLiteral,
    Operator,
    Punctuation,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Keyword => "keyword",
            TokenKind::Identifier => "identifier",
            TokenKind::IntLiteral => "integer literal",
            TokenKind::StringLiteral => "string literal",
            TokenKind::Operator => "operator",
            TokenKind::Punctuation => "punctuation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Byte offset of the first character.
    pub offset: usize,
}

impl Token {
    pub fn is(&self, lexeme: &str) -> bool {
        self.lexeme == lexeme && !matches!(self.kind, TokenKind::StringLiteral)
    }

    pub fn end(&self) -> usize {
        self.offset + self.lexeme.len()
    }
}

pub const KEYWORDS: &[&str] = &["int", "void", "if", "else", "for", "while", "return"];

const TWO_CHAR_OPS: &[&str] = &["+=", "-=", "||", "&&", "==", "!=", "<=", ">=", "++", "--"];
const ONE_CHAR_OPS: &[u8] = b"=!<>+-*/%&";
const PUNCT: &[u8] = b"(){}[],;";

/// Tokenizes mini-C source.
///
/// Whitespace, `//` and `/* */` comments, and any line whose first non-blank
/// character is `#` are skipped.
pub fn lex(text: &str) -> Result<Vec<Token>, MiniCError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    let mut line_start = true;

    while pos < bytes.len() {
        let b = bytes[pos];
        if b == b'\n' {
            line_start = true;
            pos += 1;
            continue;
        }
        if b.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        if b == b'#' && line_start {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        line_start = false;

        if bytes[pos..].starts_with(b"//") {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        if bytes[pos..].starts_with(b"/*") {
            match text[pos + 2..].find("*/") {
                Some(end) => {
                    // A block comment spanning lines does not reset line_start.
                    pos += 2 + end + 2;
                    continue;
                }
                None => {
                    return Err(MiniCError::Lex {
                        offset: pos,
                        message: "unterminated comment".into(),
                    })
                }
            }
        }

        let start = pos;
        if b.is_ascii_alphabetic() || b == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            let word = &text[start..pos];
            let kind = if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            tokens.push(Token {
                kind,
                lexeme: word.to_string(),
                offset: start,
            });
            continue;
        }
        if b.is_ascii_digit() {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            let word = &text[start..pos];
            let bad = |message: String| MiniCError::Lex {
                offset: start,
                message,
            };
            if !word.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad(format!("malformed number {word:?}")));
            }
            if word.len() > 1 && word.starts_with('0') {
                return Err(bad(format!("octal literal {word:?} is not supported")));
            }
            if word.parse::<i64>().is_err() {
                return Err(bad(format!("integer literal {word} out of range")));
            }
            tokens.push(Token {
                kind: TokenKind::IntLiteral,
                lexeme: word.to_string(),
                offset: start,
            });
            continue;
        }
        if b == b'"' {
            pos += 1;
            loop {
                match bytes.get(pos) {
                    None | Some(b'\n') => {
                        return Err(MiniCError::Lex {
                            offset: start,
                            message: "unterminated string literal".into(),
                        })
                    }
                    Some(b'\\') => pos += 2,
                    Some(b'"') => {
                        pos += 1;
                        break;
                    }
                    Some(_) => pos += 1,
                }
            }
            // An escape right before the end of input can overshoot.
            if pos > bytes.len() {
                return Err(MiniCError::Lex {
                    offset: start,
                    message: "unterminated string literal".into(),
                });
            }
            tokens.push(Token {
                kind: TokenKind::StringLiteral,
                lexeme: text[start..pos].to_string(),
                offset: start,
            });
            continue;
        }
        if pos + 1 < bytes.len() {
            let pair = &bytes[pos..pos + 2];
            if let Some(op) = TWO_CHAR_OPS.iter().find(|op| op.as_bytes() == pair) {
                tokens.push(Token {
                    kind: TokenKind::Operator,
                    lexeme: op.to_string(),
                    offset: start,
                });
                pos += 2;
                continue;
            }
        }
        if ONE_CHAR_OPS.contains(&b) || PUNCT.contains(&b) {
            let kind = if PUNCT.contains(&b) {
                TokenKind::Punctuation
            } else {
                TokenKind::Operator
            };
            tokens.push(Token {
                kind,
                lexeme: (b as char).to_string(),
                offset: start,
            });
            pos += 1;
            continue;
        }
        let c = text[pos..].chars().next().expect("pos is on a char boundary");
        return Err(MiniCError::Lex {
            offset: pos,
            message: format!("illegal character {c:?}"),
        });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_lexemes(src: &str) -> Vec<(TokenKind, String)> {
        lex(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    #[test]
    fn simple_declaration() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_lexemes("int a=1;"),
            vec![
                (Keyword, "int".into()),
                (Identifier, "a".into()),
                (Operator, "=".into()),
                (IntLiteral, "1".into()),
                (Punctuation, ";".into()),
            ]
        );
    }

    #[test]
    fn hash_lines_are_skipped() {
        let toks = lex("#include <stdio.h>\nint main(){}").unwrap();
        assert_eq!(toks[0].lexeme, "int");
        assert_eq!(toks[0].offset, 19);
        let toks = lex("  # define X 1\nint").unwrap();
        assert_eq!(toks.len(), 1);
    }

    #[test]
    fn hash_mid_line_is_illegal() {
        let err = lex("int a; #x").unwrap_err();
        assert_eq!(err.offset(), Some(7));
    }

    #[test]
    fn illegal_character_offset() {
        match lex("int $;") {
            Err(MiniCError::Lex { offset, message }) => {
                assert_eq!(offset, 4);
                assert!(message.contains("illegal character"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn comments_and_longest_match() {
        let toks = kinds_and_lexemes("a<=b // x\n/* y\n */c++!=d&&e");
        let lexemes: Vec<&str> = toks.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(lexemes, ["a", "<=", "b", "c", "++", "!=", "d", "&&", "e"]);
    }

    #[test]
    fn unterminated_constructs() {
        assert!(lex("/* open").is_err());
        assert!(lex("\"abc").is_err());
        assert!(lex("\"abc\\").is_err());
        assert!(lex("\"a\nb\"").is_err());
    }

    #[test]
    fn numbers() {
        assert!(lex("0").is_ok());
        assert!(lex("007").is_err());
        assert!(lex("12ab").is_err());
        assert!(lex("99999999999999999999").is_err());
        assert!(lex("|").is_err());
    }

    #[test]
    fn string_escapes_stay_in_lexeme() {
        let toks = lex(r#"printf("%d\n", x);"#).unwrap();
        assert_eq!(toks[2].kind, TokenKind::StringLiteral);
        assert_eq!(toks[2].lexeme, r#""%d\n""#);
    }

    #[test]
    fn offsets_increase_and_reconstruct() {
        let src = "int main() {\n  int a[3];  /* c */ a[0] = 2 + 3;\n  return a[0];\n}\n";
        let toks = lex(src).unwrap();
        let mut last_end = 0;
        for t in &toks {
            assert!(t.offset >= last_end);
            assert_eq!(&src[t.offset..t.end()], t.lexeme);
            let trivia = &src[last_end..t.offset];
            assert!(
                trivia.trim().is_empty() || trivia.trim().starts_with("/*"),
                "{trivia:?}"
            );
            last_end = t.end();
        }
    }
}

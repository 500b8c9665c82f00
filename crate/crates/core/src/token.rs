//! Output tokens and their whitespace-separated text form.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Text form of [`Token::Eos`].
pub const EOS_TEXT: &str = "<eos>";
/// Text form of a closing bracket.
pub const CLOSE_TEXT: &str = "]";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Token {
    /// `[LABEL`
    Open(String),
    /// `]`
    Close,
    Word(String),
    Eos,
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.to_string()
    }
}

impl From<String> for Token {
    fn from(s: String) -> Token {
        Token::from_item(&s)
    }
}

impl Token {
    pub fn open(label: impl Into<String>) -> Self {
        Token::Open(label.into())
    }

    pub fn word(w: impl Into<String>) -> Self {
        Token::Word(w.into())
    }

    pub fn is_word(&self) -> bool {
        matches!(self, Token::Word(_))
    }

    /// Parses a single vocabulary item as produced by `Display`.
    pub fn from_item(item: &str) -> Self {
        if item == CLOSE_TEXT {
            Token::Close
        } else if item == EOS_TEXT {
            Token::Eos
        } else if let Some(label) = item.strip_prefix('[') {
            Token::Open(label.to_string())
        } else {
            Token::Word(item.to_string())
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Open(l) => write!(f, "[{l}"),
            Token::Close => f.write_str(CLOSE_TEXT),
            Token::Word(w) => f.write_str(w),
            Token::Eos => f.write_str(EOS_TEXT),
        }
    }
}

/// Splits bracketed text into tokens. Brackets need not be separated by
/// whitespace: `[A][B]]` and `today],` are both understood.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == ']' {
            chars.next();
            out.push(Token::Close);
        } else {
            let is_open = c == '[';
            if is_open {
                chars.next();
            }
            let body_start = if is_open { start + 1 } else { start };
            let mut end = body_start;
            while let Some(&(i, ch)) = chars.peek() {
                if ch.is_whitespace() || ch == '[' || ch == ']' {
                    break;
                }
                end = i + ch.len_utf8();
                chars.next();
            }
            let body = &text[body_start..end];
            if is_open {
                out.push(Token::Open(body.to_string()));
            } else if body == EOS_TEXT {
                out.push(Token::Eos);
            } else {
                out.push(Token::Word(body.to_string()));
            }
        }
    }
    out
}

/// Renders tokens space-separated.
pub fn render(tokens: &[Token]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&t.to_string());
    }
    s
}

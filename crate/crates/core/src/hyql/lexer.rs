use std::fmt;

use super::{ParseError, ParseErrorKind};

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Select,
    Get,
    Where,
    And,
    Let,
    Ident(String),
    /// Decimal literal, kept as written.
    Number(String),
    Str(String),
    Hash,
    Dot,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Select => f.write_str("SELECT"),
            TokenKind::Get => f.write_str("GET"),
            TokenKind::Where => f.write_str("WHERE"),
            TokenKind::And => f.write_str("AND"),
            TokenKind::Let => f.write_str("LET"),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Number(s) => write!(f, "number {s}"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Hash => f.write_str("`#`"),
            TokenKind::Dot => f.write_str("`.`"),
            TokenKind::Eq => f.write_str("`=`"),
            TokenKind::Ne => f.write_str("`!=`"),
            TokenKind::Lt => f.write_str("`<`"),
            TokenKind::Le => f.write_str("`<=`"),
            TokenKind::Gt => f.write_str("`>`"),
            TokenKind::Ge => f.write_str("`>=`"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
        }
    }
}

/// Token with its 1-based source position.
#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub col: usize,
}

pub fn keyword(word: &str) -> Option<TokenKind> {
    Some(match word.to_ascii_uppercase().as_str() {
        "SELECT" => TokenKind::Select,
        "GET" => TokenKind::Get,
        "WHERE" => TokenKind::Where,
        "AND" => TokenKind::And,
        "LET" => TokenKind::Let,
        _ => return None,
    })
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, out: &mut String, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
    }
}

/// Splits query text into tokens. Keywords are case-insensitive.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        let (line, col) = (cur.line, cur.col);
        let err = |kind| ParseError { kind, line, col };
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            cur.take_while(&mut word, |c| c.is_ascii_alphanumeric() || c == '_');
            keyword(&word).unwrap_or(TokenKind::Ident(word))
        } else if c.is_ascii_digit() || c == '-' {
            let mut num = String::new();
            if c == '-' {
                num.push(c);
                cur.bump();
                if !cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                    return Err(err(ParseErrorKind::IllegalChar('-')));
                }
            }
            cur.take_while(&mut num, |c| c.is_ascii_digit());
            if cur.peek() == Some('.') {
                // only a fraction if a digit follows the dot
                let mut look = cur.chars.clone();
                look.next();
                if look.peek().is_some_and(|d| d.is_ascii_digit()) {
                    num.push('.');
                    cur.bump();
                    cur.take_while(&mut num, |c| c.is_ascii_digit());
                }
            }
            TokenKind::Number(num)
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None => return Err(err(ParseErrorKind::UnterminatedString)),
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some(e @ ('"' | '\\')) => s.push(e),
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some(other) => return Err(err(ParseErrorKind::BadEscape(other))),
                        None => return Err(err(ParseErrorKind::UnterminatedString)),
                    },
                    Some(ch) => s.push(ch),
                }
            }
            TokenKind::Str(s)
        } else {
            cur.bump();
            match c {
                '#' => TokenKind::Hash,
                '.' => TokenKind::Dot,
                '=' => TokenKind::Eq,
                '{' => TokenKind::LBrace,
                '}' => TokenKind::RBrace,
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                ',' => TokenKind::Comma,
                '<' | '>' | '!' => {
                    let eq = cur.peek() == Some('=');
                    if eq {
                        cur.bump();
                    }
                    match (c, eq) {
                        ('<', false) => TokenKind::Lt,
                        ('<', true) => TokenKind::Le,
                        ('>', false) => TokenKind::Gt,
                        ('>', true) => TokenKind::Ge,
                        ('!', true) => TokenKind::Ne,
                        _ => return Err(err(ParseErrorKind::IllegalChar('!'))),
                    }
                }
                other => return Err(err(ParseErrorKind::IllegalChar(other))),
            }
        };
        tokens.push(Token { kind, line, col });
    }
    Ok(tokens)
}

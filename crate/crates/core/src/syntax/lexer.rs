//! Tokenizer for `.sleec` sources.
//!
//! Only the rule keywords are reserved. Words such as `VOCABULARY`, `MINUTE`
//! or `BOOLEAN` are plain identifiers and are matched contextually by the
//! parser.

use std::fmt;

use super::ast::RelOp;

/// A 1-based line/column pair plus the byte offset into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub line: u32,
    pub column: u32,
    pub offset: usize,
}

impl Position {
    pub const START: Position = Position {
        line: 1,
        column: 1,
        offset: 0,
    };
}

impl Default for Position {
    fn default() -> Self {
        Position::START
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Scope,
    Rule,
    If,
    Then,
    Unless,
    In,
    Which,
    Case,
    And,
    Or,
    Not,
    After,
    Within,
    Otherwise,
}

impl Keyword {
    pub const ALL: [Keyword; 14] = [
        Keyword::Scope,
        Keyword::Rule,
        Keyword::If,
        Keyword::Then,
        Keyword::Unless,
        Keyword::In,
        Keyword::Which,
        Keyword::Case,
        Keyword::And,
        Keyword::Or,
        Keyword::Not,
        Keyword::After,
        Keyword::Within,
        Keyword::Otherwise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Scope => "SCOPE",
            Keyword::Rule => "RULE",
            Keyword::If => "IF",
            Keyword::Then => "THEN",
            Keyword::Unless => "UNLESS",
            Keyword::In => "IN",
            Keyword::Which => "WHICH",
            Keyword::Case => "CASE",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Not => "NOT",
            Keyword::After => "AFTER",
            Keyword::Within => "WITHIN",
            Keyword::Otherwise => "OTHERWISE",
        }
    }

    pub fn from_word(word: &str) -> Option<Keyword> {
        Keyword::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(word))
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    /// `:=`
    Define,
    /// `..`
    DotDot,
    RelOp(RelOp),
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(k) => k.to_string(),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(i) => format!("integer `{i}`"),
            TokenKind::Real(r) => format!("number `{r:?}`"),
            TokenKind::Str(s) => format!("string {s:?}"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Define => "`:=`".into(),
            TokenKind::DotDot => "`..`".into(),
            TokenKind::RelOp(op) => format!("`{op}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: Position,
    pub end: Position,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{position}: {message}")]
pub struct LexError {
    pub position: Position,
    pub message: String,
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn pos(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
            offset: self.offset,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.src[self.offset..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, mut pred: impl FnMut(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.bump();
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens. Line comments start with `//`.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src: source,
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek_nth(1) == Some('/') {
            cur.eat_while(|c| c != '\n');
            continue;
        }

        let start = cur.pos();
        let kind = if is_ident_start(c) {
            cur.eat_while(is_ident_continue);
            let word = &source[start.offset..cur.offset];
            match Keyword::from_word(word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word.to_string()),
            }
        } else if c.is_ascii_digit()
            || (c == '-' && cur.peek_nth(1).is_some_and(|d| d.is_ascii_digit()))
        {
            lex_number(&mut cur, start)?
        } else if c == '"' {
            lex_string(&mut cur, start)?
        } else {
            cur.bump();
            match c {
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '{' => TokenKind::LBrace,
                '}' => TokenKind::RBrace,
                ',' => TokenKind::Comma,
                ':' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::Define
                }
                ':' => TokenKind::Colon,
                '.' if cur.peek() == Some('.') => {
                    cur.bump();
                    TokenKind::DotDot
                }
                '=' => TokenKind::RelOp(RelOp::Eq),
                '!' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::RelOp(RelOp::Ne)
                }
                '<' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::RelOp(RelOp::Le)
                }
                '<' => TokenKind::RelOp(RelOp::Lt),
                '>' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::RelOp(RelOp::Ge)
                }
                '>' => TokenKind::RelOp(RelOp::Gt),
                other => {
                    return Err(LexError {
                        position: start,
                        message: format!("illegal character {other:?}"),
                    })
                }
            }
        };
        tokens.push(Token {
            kind,
            start,
            end: cur.pos(),
        });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>, start: Position) -> Result<TokenKind, LexError> {
    let malformed = |message: &str| LexError {
        position: start,
        message: message.to_string(),
    };
    if cur.peek() == Some('-') {
        cur.bump();
    }
    cur.eat_while(|c| c.is_ascii_digit());
    let mut is_real = false;
    if cur.peek() == Some('.') {
        match cur.peek_nth(1) {
            Some(d) if d.is_ascii_digit() => {
                is_real = true;
                cur.bump();
                cur.eat_while(|c| c.is_ascii_digit());
            }
            // `10..40` is a range, not a real.
            Some('.') => {}
            _ => return Err(malformed("malformed number: expected digits after `.`")),
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let has_exp_digits = match cur.peek_nth(1) {
            Some(d) if d.is_ascii_digit() => true,
            Some('+' | '-') => cur.peek_nth(2).is_some_and(|d| d.is_ascii_digit()),
            _ => false,
        };
        if !has_exp_digits {
            return Err(malformed("malformed number: incomplete exponent"));
        }
        is_real = true;
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        cur.eat_while(|c| c.is_ascii_digit());
    }
    if cur.peek().is_some_and(is_ident_continue) {
        return Err(malformed(
            "malformed number: unexpected trailing characters",
        ));
    }
    let text = &cur.src[start.offset..cur.offset];
    if is_real {
        match text.parse::<f64>() {
            Ok(r) if r.is_finite() => Ok(TokenKind::Real(r)),
            _ => Err(malformed("malformed number: real literal out of range")),
        }
    } else {
        text.parse::<i64>()
            .map(TokenKind::Int)
            .map_err(|_| malformed("malformed number: integer literal out of range"))
    }
}

fn lex_string(cur: &mut Cursor<'_>, start: Position) -> Result<TokenKind, LexError> {
    cur.bump();
    let mut out = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => {
                return Err(LexError {
                    position: start,
                    message: "unterminated string literal".into(),
                })
            }
            Some('"') => return Ok(TokenKind::Str(out)),
            Some('\\') => match cur.bump() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                _ => {
                    return Err(LexError {
                        position: start,
                        message: "invalid escape in string literal".into(),
                    })
                }
            },
            Some(c) => out.push(c),
        }
    }
}

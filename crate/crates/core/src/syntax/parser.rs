//! Recursive-descent parser for `.sleec` sources.
//!
//! ```text
//! File        ::= ( Vocabulary | Invariant | Rule )*
//! Vocabulary  ::= VOCABULARY VocabItem* END
//! VocabItem   ::= MONITORED Ident ':' Type
//!               | CAPABILITY Ident ( ',' Ident )*
//!               | DERIVED Ident ':=' Condition
//!               | SCOPE Ident ':=' Condition
//! Type        ::= BOOLEAN | INTEGER RANGE Int '..' Int
//!               | REAL RANGE Num '..' Num | ENUM '{' Ident ( ',' Ident )* '}'
//! Invariant   ::= INVARIANT Ident ':' InvExpr       -- atoms: enforced '(' Ident ')'
//! Rule        ::= ( SCOPE Ident )? RULE Ident IF Condition THEN Obligation
//!                 ( UNLESS Condition IN WHICH CASE Obligation )*
//! Condition   ::= Conj ( OR Conj )*
//! Conj        ::= Item ( AND Item )*
//! Item        ::= NOT Item | '(' Condition ')' | TRUE | FALSE | Predicate
//! Predicate   ::= Ident ( RelOp Literal )?
//! Obligation  ::= OblItem ( AND OblItem )*
//! OblItem     ::= Ident ( AFTER Duration | WITHIN Duration OTHERWISE Ident )?
//! Duration    ::= Int Unit
//! ```

use std::fmt;

use serde::Serialize;

use super::ast::*;
use super::lexer::{tokenize, Keyword, Position, Token, TokenKind};
use super::resolve;
use crate::diagnostics::{Diagnostic, Location, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    Semantic,
}

/// One positioned problem found while parsing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceDiagnostic {
    pub kind: ParseErrorKind,
    pub severity: Severity,
    pub code: String,
    pub line: u32,
    pub column: u32,
    #[serde(skip)]
    pub offset: usize,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<String>,
}

impl SourceDiagnostic {
    pub fn position(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
            offset: self.offset,
        }
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}: {}",
            self.line, self.column, self.severity, self.message
        )
    }
}

impl fmt::Display for SourceDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.column, self.severity, self.message
        )
    }
}

/// Parse failure: a single lexical/syntax error, or every semantic error
/// found by name resolution.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ParseError {
    pub diagnostics: Vec<SourceDiagnostic>,
}

impl ParseError {
    fn single(d: SourceDiagnostic) -> Self {
        ParseError {
            diagnostics: vec![d],
        }
    }

    pub fn first(&self) -> &SourceDiagnostic {
        &self.diagnostics[0]
    }

    pub fn render(&self, file: &str) -> String {
        self.diagnostics
            .iter()
            .map(|d| d.render(file))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.diagnostics.iter().map(|d| d.to_string()).collect();
        f.write_str(&lines.join("\n"))
    }
}

/// Positions of named items, used to place semantic diagnostics.
#[derive(Debug, Default, Clone)]
pub struct SourceMap {
    /// Per rule (by index): position of the rule header, then of each clause.
    pub rules: Vec<(Position, Vec<Position>)>,
    pub vocabulary: Vec<(String, Position)>,
    pub invariants: Vec<(String, Position)>,
}

impl SourceMap {
    fn locate(&self, diag: &Diagnostic) -> Position {
        match &diag.location {
            Location::Rule { index, clause, .. } => self
                .rules
                .get(*index)
                .map(|(start, clauses)| {
                    clause
                        .and_then(|c| clauses.get(c).copied())
                        .unwrap_or(*start)
                })
                .unwrap_or_default(),
            Location::Vocabulary { name } => {
                let hits: Vec<Position> = self
                    .vocabulary
                    .iter()
                    .filter(|(n, _)| n == name)
                    .map(|(_, p)| *p)
                    .collect();
                // duplicates point at the redefinition
                let pick = if diag.code == crate::diagnostics::codes::DUPLICATE_NAME {
                    hits.get(1).or(hits.first())
                } else {
                    hits.first()
                };
                pick.copied().unwrap_or_default()
            }
            Location::Invariant { name } => self
                .invariants
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, p)| *p)
                .unwrap_or_default(),
            Location::Ruleset => Position::START,
        }
    }
}

/// Parses and name-checks a ruleset.
pub fn parse_ruleset(source: &str) -> Result<Ruleset, ParseError> {
    let (rs, map) = parse_unchecked(source)?;
    let errors: Vec<SourceDiagnostic> = resolve::validate(&rs)
        .into_iter()
        .filter(Diagnostic::is_error)
        .map(|d| {
            let pos = map.locate(&d);
            SourceDiagnostic {
                kind: ParseErrorKind::Semantic,
                severity: Severity::Error,
                code: d.code.clone(),
                line: pos.line,
                column: pos.column,
                offset: pos.offset,
                message: format!("{} ({})", d.message, d.location),
                expected: Vec::new(),
            }
        })
        .collect();
    if errors.is_empty() {
        Ok(rs)
    } else {
        Err(ParseError {
            diagnostics: errors,
        })
    }
}

/// Parses without name resolution, returning positions of named items.
pub fn parse_unchecked(source: &str) -> Result<(Ruleset, SourceMap), ParseError> {
    let tokens = tokenize(source).map_err(|e| {
        ParseError::single(SourceDiagnostic {
            kind: ParseErrorKind::Lexical,
            severity: Severity::Error,
            code: "LEXICAL_ERROR".into(),
            line: e.position.line,
            column: e.position.column,
            offset: e.position.offset,
            message: e.message,
            expected: Vec::new(),
        })
    })?;
    let eof = end_position(source);
    let mut p = Parser {
        tokens,
        pos: 0,
        eof,
        map: SourceMap::default(),
    };
    let rs = p.file()?;
    Ok((rs, p.map))
}

fn end_position(source: &str) -> Position {
    let mut pos = Position::START;
    for c in source.chars() {
        pos.offset += c.len_utf8();
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    }
    pos
}

type PResult<T> = Result<T, ParseError>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: Position,
    map: SourceMap,
}

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn here(&self) -> Position {
        self.tokens
            .get(self.pos)
            .map(|t| t.start)
            .unwrap_or(self.eof)
    }

    fn error_at(&self, pos: Position, message: impl Into<String>) -> ParseError {
        ParseError::single(SourceDiagnostic {
            kind: ParseErrorKind::Syntax,
            severity: Severity::Error,
            code: "SYNTAX_ERROR".into(),
            line: pos.line,
            column: pos.column,
            offset: pos.offset,
            message: message.into(),
            expected: Vec::new(),
        })
    }

    fn expected(&self, expected: &[&str]) -> ParseError {
        let found = self
            .peek()
            .map(TokenKind::describe)
            .unwrap_or_else(|| "end of input".to_string());
        let list = expected.join(" or ");
        let mut err = self.error_at(self.here(), format!("expected {list}, found {found}"));
        err.diagnostics[0].expected = expected.iter().map(|s| s.to_string()).collect();
        err
    }

    fn at_keyword(&self, k: Keyword) -> bool {
        self.peek() == Some(&TokenKind::Keyword(k))
    }

    fn eat_keyword(&mut self, k: Keyword) -> bool {
        if self.at_keyword(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, k: Keyword) -> PResult<()> {
        if self.eat_keyword(k) {
            Ok(())
        } else {
            Err(self.expected(&[k.as_str()]))
        }
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Ident(s)) if s.eq_ignore_ascii_case(word))
    }

    fn expect_word(&mut self, word: &str) -> PResult<()> {
        if self.at_word(word) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.expected(&[word]))
        }
    }

    fn expect_token(&mut self, kind: TokenKind, what: &str) -> PResult<()> {
        if self.peek() == Some(&kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.expected(&[what]))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.expected(&[what])),
        }
    }

    fn file(&mut self) -> PResult<Ruleset> {
        let mut rs = Ruleset::default();
        while let Some(tok) = self.peek() {
            match tok {
                TokenKind::Keyword(Keyword::Scope) | TokenKind::Keyword(Keyword::Rule) => {
                    let rule = self.rule()?;
                    rs.rules.push(rule);
                }
                _ if self.at_word("VOCABULARY") => self.vocabulary(&mut rs.vocabulary)?,
                _ if self.at_word("INVARIANT") => {
                    let inv = self.invariant()?;
                    rs.invariants.push(inv);
                }
                _ => return Err(self.expected(&["SCOPE", "RULE", "VOCABULARY", "INVARIANT"])),
            }
        }
        Ok(rs)
    }

    fn vocabulary(&mut self, vocab: &mut Vocabulary) -> PResult<()> {
        self.expect_word("VOCABULARY")?;
        loop {
            if self.at_word("END") {
                self.pos += 1;
                return Ok(());
            } else if self.at_word("MONITORED") {
                self.pos += 1;
                let at = self.here();
                let name = self.ident("variable name")?;
                self.expect_token(TokenKind::Colon, "`:`")?;
                let kind = self.value_kind()?;
                self.map.vocabulary.push((name.clone(), at));
                vocab.monitored.push(MonitoredDecl { name, kind });
            } else if self.at_word("CAPABILITY") {
                self.pos += 1;
                loop {
                    let at = self.here();
                    let name = self.ident("capability name")?;
                    self.map.vocabulary.push((name.clone(), at));
                    vocab.capabilities.push(name);
                    if self.peek() == Some(&TokenKind::Comma) {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
            } else if self.at_word("DERIVED") || self.at_keyword(Keyword::Scope) {
                let derived = self.at_word("DERIVED");
                self.pos += 1;
                let at = self.here();
                let name = self.ident(if derived {
                    "predicate name"
                } else {
                    "scope name"
                })?;
                self.expect_token(TokenKind::Define, "`:=`")?;
                let condition = self.condition()?;
                self.map.vocabulary.push((name.clone(), at));
                let item = NamedCondition { name, condition };
                if derived {
                    vocab.derived.push(item);
                } else {
                    vocab.scopes.push(item);
                }
            } else {
                return Err(self.expected(&["MONITORED", "CAPABILITY", "DERIVED", "SCOPE", "END"]));
            }
        }
    }

    fn value_kind(&mut self) -> PResult<ValueKind> {
        if self.at_word("BOOLEAN") {
            self.pos += 1;
            Ok(ValueKind::Boolean)
        } else if self.at_word("INTEGER") {
            self.pos += 1;
            self.expect_word("RANGE")?;
            let min = self.int_literal()?;
            self.expect_token(TokenKind::DotDot, "`..`")?;
            let max = self.int_literal()?;
            Ok(ValueKind::Integer { min, max })
        } else if self.at_word("REAL") {
            self.pos += 1;
            self.expect_word("RANGE")?;
            let min = self.number_literal()?;
            self.expect_token(TokenKind::DotDot, "`..`")?;
            let max = self.number_literal()?;
            Ok(ValueKind::Real { min, max })
        } else if self.at_word("ENUM") {
            self.pos += 1;
            self.expect_token(TokenKind::LBrace, "`{`")?;
            let mut members = vec![self.ident("enumerant")?];
            while self.peek() == Some(&TokenKind::Comma) {
                self.pos += 1;
                members.push(self.ident("enumerant")?);
            }
            self.expect_token(TokenKind::RBrace, "`}`")?;
            Ok(ValueKind::Enumerant { members })
        } else {
            Err(self.expected(&["BOOLEAN", "INTEGER", "REAL", "ENUM"]))
        }
    }

    fn int_literal(&mut self) -> PResult<i64> {
        match self.peek() {
            Some(TokenKind::Int(i)) => {
                let i = *i;
                self.pos += 1;
                Ok(i)
            }
            _ => Err(self.expected(&["integer"])),
        }
    }

    fn number_literal(&mut self) -> PResult<f64> {
        match self.peek() {
            Some(TokenKind::Int(i)) => {
                let r = *i as f64;
                self.pos += 1;
                Ok(r)
            }
            Some(TokenKind::Real(r)) => {
                let r = *r;
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.expected(&["number"])),
        }
    }

    fn invariant(&mut self) -> PResult<ObligationInvariant> {
        self.expect_word("INVARIANT")?;
        let at = self.here();
        let name = self.ident("invariant name")?;
        self.expect_token(TokenKind::Colon, "`:`")?;
        let expr = self.bool_expr(&mut Self::enforced_atom)?;
        self.map.invariants.push((name.clone(), at));
        Ok(ObligationInvariant { name, expr })
    }

    fn enforced_atom(&mut self) -> PResult<BoolExpr<String>> {
        self.expect_word("enforced")?;
        self.expect_token(TokenKind::LParen, "`(`")?;
        let cap = self.ident("capability name")?;
        self.expect_token(TokenKind::RParen, "`)`")?;
        Ok(BoolExpr::Atom(cap))
    }

    fn rule(&mut self) -> PResult<Rule> {
        let start = self.here();
        let scope = if self.eat_keyword(Keyword::Scope) {
            Some(self.ident("scope name")?)
        } else {
            None
        };
        self.expect_keyword(Keyword::Rule)?;
        let id = self.ident("rule identifier")?;
        self.expect_keyword(Keyword::If)?;
        let mut clause_pos = vec![self.here()];
        let condition = self.condition()?;
        self.expect_keyword(Keyword::Then)?;
        let obligation = self.obligation()?;
        let base = Clause {
            condition,
            obligation,
        };
        let mut hedges = Vec::new();
        while self.eat_keyword(Keyword::Unless) {
            clause_pos.push(self.here());
            let condition = self.condition()?;
            self.expect_keyword(Keyword::In)?;
            self.expect_keyword(Keyword::Which)?;
            self.expect_keyword(Keyword::Case)?;
            let obligation = self.obligation()?;
            hedges.push(Clause {
                condition,
                obligation,
            });
        }
        self.map.rules.push((start, clause_pos));
        Ok(Rule {
            id,
            scope,
            base,
            hedges,
        })
    }

    fn condition(&mut self) -> PResult<Condition> {
        self.bool_expr(&mut Self::predicate_item)
    }

    /// OR-of-ANDs over items; `atom` parses a leaf that is not NOT/(…)/TRUE/FALSE.
    fn bool_expr<A>(
        &mut self,
        atom: &mut impl FnMut(&mut Self) -> PResult<BoolExpr<A>>,
    ) -> PResult<BoolExpr<A>> {
        let mut alts = vec![self.conjunction(atom)?];
        while self.eat_keyword(Keyword::Or) {
            alts.push(self.conjunction(atom)?);
        }
        Ok(BoolExpr::or(alts))
    }

    fn conjunction<A>(
        &mut self,
        atom: &mut impl FnMut(&mut Self) -> PResult<BoolExpr<A>>,
    ) -> PResult<BoolExpr<A>> {
        let mut items = vec![self.bool_item(atom)?];
        while self.eat_keyword(Keyword::And) {
            items.push(self.bool_item(atom)?);
        }
        Ok(BoolExpr::and(items))
    }

    fn bool_item<A>(
        &mut self,
        atom: &mut impl FnMut(&mut Self) -> PResult<BoolExpr<A>>,
    ) -> PResult<BoolExpr<A>> {
        if self.eat_keyword(Keyword::Not) {
            return Ok(BoolExpr::not(self.bool_item(atom)?));
        }
        if self.peek() == Some(&TokenKind::LParen) {
            self.pos += 1;
            let inner = self.bool_expr(atom)?;
            self.expect_token(TokenKind::RParen, "`)`")?;
            return Ok(inner);
        }
        let is_const_word =
            |w: &str| w.eq_ignore_ascii_case("TRUE") || w.eq_ignore_ascii_case("FALSE");
        if let Some(TokenKind::Ident(w)) = self.peek() {
            if is_const_word(w) && !matches!(self.peek_at(1), Some(TokenKind::RelOp(_))) {
                let value = w.eq_ignore_ascii_case("TRUE");
                self.pos += 1;
                return Ok(BoolExpr::Const(value));
            }
        }
        atom(self)
    }

    fn predicate_item(&mut self) -> PResult<Condition> {
        let name = match self.peek() {
            Some(TokenKind::Ident(s)) => s.clone(),
            _ => return Err(self.expected(&["condition"])),
        };
        self.pos += 1;
        if let Some(TokenKind::RelOp(op)) = self.peek() {
            let op = *op;
            self.pos += 1;
            let value = self.literal()?;
            Ok(BoolExpr::Atom(Predicate::Compare {
                var: name,
                op,
                value,
            }))
        } else {
            Ok(BoolExpr::Atom(Predicate::Name(name)))
        }
    }

    fn literal(&mut self) -> PResult<Literal> {
        let lit = match self.peek() {
            Some(TokenKind::Int(i)) => Literal::Int(*i),
            Some(TokenKind::Real(r)) => Literal::Real(*r),
            Some(TokenKind::Str(s)) => Literal::Symbol(s.clone()),
            Some(TokenKind::Ident(s)) if s.eq_ignore_ascii_case("TRUE") => Literal::Bool(true),
            Some(TokenKind::Ident(s)) if s.eq_ignore_ascii_case("FALSE") => Literal::Bool(false),
            Some(TokenKind::Ident(s)) => Literal::Symbol(s.clone()),
            _ => return Err(self.expected(&["literal"])),
        };
        self.pos += 1;
        Ok(lit)
    }

    fn obligation(&mut self) -> PResult<Obligation> {
        let mut atoms = vec![self.obligation_atom()?];
        while self.eat_keyword(Keyword::And) {
            atoms.push(self.obligation_atom()?);
        }
        Ok(Obligation { atoms })
    }

    fn obligation_atom(&mut self) -> PResult<ObligationAtom> {
        let capability = self.ident("capability")?;
        let modifier = if self.eat_keyword(Keyword::After) {
            Modifier::After(self.duration()?)
        } else if self.eat_keyword(Keyword::Within) {
            let deadline = self.duration()?;
            self.expect_keyword(Keyword::Otherwise)?;
            let fallback = self.ident("fallback capability")?;
            Modifier::Within { deadline, fallback }
        } else {
            Modifier::Immediate
        };
        if modifier != Modifier::Immediate
            && (self.at_keyword(Keyword::After) || self.at_keyword(Keyword::Within))
        {
            return Err(self.error_at(
                self.here(),
                "an obligation atom takes at most one temporal modifier (AFTER or WITHIN)",
            ));
        }
        Ok(ObligationAtom {
            capability,
            modifier,
        })
    }

    fn duration(&mut self) -> PResult<TimeDuration> {
        let at = self.here();
        let amount = match self.peek() {
            Some(TokenKind::Int(i)) if *i > 0 => *i as u64,
            Some(TokenKind::Int(_)) | Some(TokenKind::Real(_)) => {
                return Err(self.error_at(at, "duration must be a positive integer"))
            }
            _ => return Err(self.expected(&["duration"])),
        };
        self.pos += 1;
        let unit = match self.peek() {
            Some(TokenKind::Ident(w)) => TimeUnit::from_word(w),
            _ => None,
        }
        .ok_or_else(|| self.expected(&["NANOSEC", "MILLISEC", "SEC", "MINUTE", "HOUR"]))?;
        self.pos += 1;
        Ok(TimeDuration { amount, unit })
    }
}

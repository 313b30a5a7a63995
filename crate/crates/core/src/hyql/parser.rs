use std::collections::BTreeSet;

use super::ast::{Condition, LetBinding, Operand, Query};
use super::lexer::{tokenize, Token, TokenKind};
use super::{ParseError, ParseErrorKind};
use crate::model::{CmpOp, Literal};

/// Parses and checks a query. Deterministic: equal text gives equal ASTs.
pub fn parse(text: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(text)?;
    let end = end_position(text);
    let mut p = Parser { tokens, pos: 0, end };
    p.query()
}

fn end_position(text: &str) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for c in text.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn syntax(line: usize, col: usize, expected: &str, found: &str) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax {
            expected: expected.to_owned(),
            found: found.to_owned(),
        },
        line,
        col,
    }
}

fn semantic(pos: (usize, usize), msg: String) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Semantic(msg),
        line: pos.0,
        col: pos.1,
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

/// A condition plus where it started, for semantic error positions.
type Located<T> = (T, (usize, usize));

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens.get(self.pos).map_or(self.end, |t| (t.line, t.col))
    }

    fn error(&self, expected: &str) -> ParseError {
        let (line, col) = self.here();
        let found = self.peek().map_or_else(|| "end of input".to_owned(), |k| k.to_string());
        syntax(line, col, expected, &found)
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        if self.peek() == Some(&kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&kind.to_string()))
        }
    }

    fn ident(&mut self) -> Result<Located<String>, ParseError> {
        let at = self.here();
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, at))
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        let mut lets: Vec<LetBinding> = Vec::new();
        while self.peek() == Some(&TokenKind::Let) {
            let (binding, at) = self.let_clause()?;
            if lets.iter().any(|l| l.name == binding.name) {
                return Err(semantic(at, format!("LET name `{}` bound twice", binding.name)));
            }
            lets.push(binding);
        }
        self.expect(TokenKind::Select)?;
        let mut select = vec![self.ident()?];
        while self.peek() == Some(&TokenKind::Comma) {
            self.pos += 1;
            select.push(self.ident()?);
        }
        self.expect(TokenKind::Where)?;
        let conditions = self.cond_list()?;
        if self.peek().is_some() {
            return Err(self.error("AND or end of input"));
        }
        check_scope(&conditions)?;
        let conditions: Vec<Condition> = conditions.into_iter().map(|(c, _)| c).collect();

        let used: BTreeSet<&str> = conditions.iter().flat_map(Condition::terms).collect();
        for (name, at) in &select {
            if !used.contains(name.as_str()) {
                return Err(semantic(
                    *at,
                    format!("SELECT variable `{name}` does not occur in WHERE"),
                ));
            }
        }
        let mut seen = BTreeSet::new();
        let select = select
            .into_iter()
            .map(|(name, _)| name)
            .filter(|n| seen.insert(n.clone()))
            .collect();
        Ok(Query {
            lets,
            select,
            conditions,
        })
    }

    fn let_clause(&mut self) -> Result<Located<LetBinding>, ParseError> {
        self.expect(TokenKind::Let)?;
        let (name, at) = self.ident()?;
        self.expect(TokenKind::Eq)?;
        self.expect(TokenKind::LBrace)?;
        self.expect(TokenKind::Get)?;
        let (get, get_at) = self.ident()?;
        self.expect(TokenKind::Where)?;
        let conditions = self.cond_list()?;
        self.expect(TokenKind::RBrace)?;
        check_scope(&conditions)?;
        let conditions: Vec<Condition> = conditions.into_iter().map(|(c, _)| c).collect();
        if !conditions.iter().flat_map(Condition::terms).any(|t| t == get) {
            return Err(semantic(
                get_at,
                format!("GET variable `{get}` does not occur in WHERE"),
            ));
        }
        if name == get {
            return Err(semantic(at, format!("LET name `{name}` shadows its own GET variable")));
        }
        Ok((LetBinding { name, get, conditions }, at))
    }

    fn cond_list(&mut self) -> Result<Vec<Located<Condition>>, ParseError> {
        let mut out = vec![self.cond()?];
        while self.peek() == Some(&TokenKind::And) {
            self.pos += 1;
            out.push(self.cond()?);
        }
        Ok(out)
    }

    fn cond(&mut self) -> Result<Located<Condition>, ParseError> {
        let (first, at) = self.ident()?;
        let cond = match self.peek() {
            Some(TokenKind::Hash) => {
                self.pos += 1;
                let (anchor, _) = self.ident()?;
                Condition::Anchor { entity: first, anchor }
            }
            Some(TokenKind::Dot) => {
                self.pos += 1;
                let (property, _) = self.ident()?;
                let lhs = Operand::Property {
                    entity: first,
                    property,
                };
                self.comparison(lhs)?
            }
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let mut args = vec![self.ident()?.0];
                while self.peek() == Some(&TokenKind::Comma) {
                    self.pos += 1;
                    args.push(self.ident()?.0);
                }
                self.expect(TokenKind::RParen)?;
                let lhs = Operand::Call { function: first, args };
                self.comparison(lhs)?
            }
            Some(TokenKind::Ident(_)) => {
                let (connector, _) = self.ident()?;
                let (object, _) = self.ident()?;
                Condition::Link {
                    subject: first,
                    connector,
                    object,
                }
            }
            _ => return Err(self.error("connector, `#`, `.` or `(`")),
        };
        Ok((cond, at))
    }

    fn comparison(&mut self, lhs: Operand) -> Result<Condition, ParseError> {
        let op = match self.peek() {
            Some(TokenKind::Eq) => CmpOp::Eq,
            Some(TokenKind::Ne) => CmpOp::Ne,
            Some(TokenKind::Lt) => CmpOp::Lt,
            Some(TokenKind::Le) => CmpOp::Le,
            Some(TokenKind::Gt) => CmpOp::Gt,
            Some(TokenKind::Ge) => CmpOp::Ge,
            _ => return Err(self.error("comparison operator")),
        };
        self.pos += 1;
        let rhs = match self.peek() {
            Some(TokenKind::Number(n)) => number_literal(n),
            Some(TokenKind::Ident(s)) | Some(TokenKind::Str(s)) => Literal::Text(s.clone()),
            _ => return Err(self.error("literal")),
        };
        self.pos += 1;
        Ok(Condition::Compare { lhs, op, rhs })
    }
}

fn number_literal(text: &str) -> Literal {
    if !text.contains('.') {
        if let Ok(i) = text.parse::<i64>() {
            return Literal::Integer(i);
        }
    }
    // the lexer only produces decimal syntax, which always parses as f64
    Literal::Number(text.parse().unwrap_or(f64::NAN))
}

/// Anchor filters and property comparisons must name an entity that some
/// link pattern of the same scope binds.
fn check_scope(conditions: &[Located<Condition>]) -> Result<(), ParseError> {
    let linked: BTreeSet<&str> = conditions
        .iter()
        .filter(|(c, _)| c.is_link())
        .flat_map(|(c, _)| c.terms())
        .collect();
    for (cond, at) in conditions {
        let entity = match cond {
            Condition::Anchor { entity, .. } => entity,
            Condition::Compare {
                lhs: Operand::Property { entity, .. },
                ..
            } => entity,
            _ => continue,
        };
        if !linked.contains(entity.as_str()) {
            return Err(semantic(
                *at,
                format!("`{entity}` is not bound by any link pattern in this scope"),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(s: &str, c: &str, o: &str) -> Condition {
        Condition::Link {
            subject: s.into(),
            connector: c.into(),
            object: o.into(),
        }
    }

    #[test]
    fn first_workflow_query() {
        let q = parse("SELECT Model WHERE\n    Run achieves Classification AND Run hasOutput Model").unwrap();
        assert_eq!(
            q,
            Query {
                lets: vec![],
                select: vec!["Model".into()],
                conditions: vec![
                    link("Run", "achieves", "Classification"),
                    link("Run", "hasOutput", "Model")
                ],
            }
        );
    }

    #[test]
    fn comparison_literals() {
        let q = parse("SELECT Run WHERE Run hasInput Data and Data.id=pascal_voc_2012").unwrap();
        assert_eq!(
            q.conditions[1],
            Condition::Compare {
                lhs: Operand::Property {
                    entity: "Data".into(),
                    property: "id".into()
                },
                op: CmpOp::Eq,
                rhs: Literal::Text("pascal_voc_2012".into()),
            }
        );
        let q = parse("SELECT M WHERE R o M AND M.a >= 3 AND M.b != \"x y\" AND M.c < -0.5").unwrap();
        let rhs: Vec<_> = q.conditions[1..]
            .iter()
            .map(|c| match c {
                Condition::Compare { rhs, .. } => rhs.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(
            rhs,
            [Literal::Integer(3), Literal::Text("x y".into()), Literal::Number(-0.5)]
        );
    }

    #[test]
    fn let_binding() {
        let q = parse(
            "LET x = { GET Seismic WHERE Run hasInput Seismic AND sim(SeismicA, Seismic) > 0.9 }
             SELECT Model WHERE Run hasOutput Model AND Run hasInput x AND x hasBasin Basin",
        )
        .unwrap();
        assert_eq!(q.lets.len(), 1);
        assert_eq!(q.lets[0].name, "x");
        assert_eq!(q.lets[0].get, "Seismic");
        assert!(q.conditions.contains(&link("x", "hasBasin", "Basin")));
        assert_eq!(q.link_pattern_count(), 4);
    }

    #[test]
    fn empty_condition_list_fails_at_end() {
        let err = parse("SELECT Model WHERE").unwrap_err();
        assert_eq!((err.line, err.col), (1, 19));
        assert!(matches!(err.kind, ParseErrorKind::Syntax { ref found, .. } if found == "end of input"));
    }

    #[test]
    fn syntax_errors_report_expected_and_found() {
        let err = parse("SELECT Model WHERE Run achieves").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax { ref expected, .. } if expected == "identifier"));
        let err = parse("SELECT Model WHERE Run achieves X Y").unwrap_err();
        assert_eq!((err.line, err.col), (1, 35));
        assert!(parse("WHERE Run a b").is_err());
        assert!(parse("SELECT M WHERE M.a > SELECT").is_err());
        assert!(parse("SELECT M WHERE R o M AND").is_err());
    }

    #[test]
    fn semantic_errors() {
        let err = parse("SELECT Model WHERE Run achieves Task").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Semantic(_)));
        assert_eq!((err.line, err.col), (1, 8));
        let err = parse("SELECT Run WHERE Run a b AND Algorithm#Conv").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Semantic(_)));
        assert_eq!(err.col, 30);
        assert!(parse("SELECT Run WHERE Run a b AND M.acc > 1").is_err());
        assert!(parse("LET x = { GET S WHERE R a b } SELECT R WHERE R a x").is_err());
        assert!(parse("LET x = { GET S WHERE R a S } LET x = { GET S WHERE R a S } SELECT R WHERE R a x").is_err());
        // function arguments need not be linked
        assert!(parse("SELECT R WHERE R a b AND f(C, R) > 0").is_ok());
    }

    #[test]
    fn keywords_are_case_insensitive() {
        assert_eq!(
            parse("select M where R o M and M.x = y").unwrap(),
            parse("SELECT M WHERE R o M AND M.x = y").unwrap()
        );
    }
}

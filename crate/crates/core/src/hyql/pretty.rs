//! Canonical text form. `parse(&q.to_string())` gives back `q`.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::{Condition, LetBinding, Operand, Query};
use super::lexer::keyword;
use crate::model::Literal;

fn is_bare(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && keyword(s).is_none()
}

struct QueryLiteral<'a>(&'a Literal);

impl Display for QueryLiteral<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.0 {
            Literal::Text(s) if is_bare(s) => f.write_str(s),
            Literal::Text(s) => {
                f.write_char('"')?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => f.write_char(c)?,
                    }
                }
                f.write_char('"')
            }
            Literal::Number(x) => {
                let s = x.to_string();
                if s.contains('.') {
                    f.write_str(&s)
                } else {
                    write!(f, "{s}.0")
                }
            }
            // no query syntax for these; printed for diagnostics only
            other => write!(f, "{other}"),
        }
    }
}

impl Display for Operand {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Property { entity, property } => write!(f, "{entity}.{property}"),
            Operand::Call { function, args } => write!(f, "{function}({})", args.join(", ")),
        }
    }
}

impl Display for Condition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Link {
                subject,
                connector,
                object,
            } => write!(f, "{subject} {connector} {object}"),
            Condition::Anchor { entity, anchor } => write!(f, "{entity}#{anchor}"),
            Condition::Compare { lhs, op, rhs } => write!(f, "{lhs} {op} {}", QueryLiteral(rhs)),
        }
    }
}

fn write_conditions(f: &mut Formatter<'_>, conds: &[Condition], indent: &str) -> fmt::Result {
    for (i, c) in conds.iter().enumerate() {
        if i > 0 {
            f.write_str(" AND\n")?;
        }
        write!(f, "{indent}{c}")?;
    }
    Ok(())
}

impl Display for LetBinding {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "LET {} = {{", self.name)?;
        writeln!(f, "  GET {}", self.get)?;
        writeln!(f, "  WHERE")?;
        write_conditions(f, &self.conditions, "    ")?;
        f.write_str("\n}")
    }
}

impl Display for Query {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for l in &self.lets {
            writeln!(f, "{l}")?;
        }
        writeln!(f, "SELECT {}", self.select.join(", "))?;
        writeln!(f, "WHERE")?;
        write_conditions(f, &self.conditions, "  ")
    }
}

//! Recursive-descent parser for formulas and knowledge-base files.
//!
//! Precedence, loosest first: `<->`, `->`, `|`, `&`, `~`. Implication and
//! equivalence associate to the right; conjunction and disjunction to the left.

use std::collections::HashSet;

use super::error::{LogicError, SyntaxError};
use super::formula::Formula;
use super::kb::{Axiom, KnowledgeBase, Section};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Not => "`~`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_reserved(s: &str) -> bool {
    s == "true" || s == "false"
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(text: &str, line: usize, col_base: usize) -> Result<Lexer, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |i: usize, msg: String| SyntaxError::new(line, col_base + i, msg);
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '~' => {
                i += 1;
                Tok::Not
            }
            '&' => {
                i += 1;
                Tok::And
            }
            '|' => {
                i += 1;
                Tok::Or
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    i += 2;
                    Tok::Implies
                } else {
                    return Err(err(i, "expected `->`".into()));
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    i += 3;
                    Tok::Iff
                } else {
                    return Err(err(i, "expected `<->`".into()));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                match word.as_str() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word),
                }
            }
            other => return Err(err(i, format!("unexpected character `{other}`"))),
        };
        toks.push((tok, col_base + start));
    }
    toks.push((Tok::Eof, col_base + chars.len()));
    Ok(Lexer { toks })
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> SyntaxError {
        let (tok, col) = &self.toks[self.pos];
        SyntaxError::new(
            self.line,
            *col,
            format!("expected {expected}, found {}", tok.describe()),
        )
    }

    fn iff(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.implies()?;
        if *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.iff()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.iff()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::Atom(name))
            }
            _ => Err(self.unexpected("a formula")),
        }
    }
}

/// Parses `text` as a formula whose first character sits at `line`/`col`.
pub(crate) fn parse_formula_at(
    text: &str,
    line: usize,
    col: usize,
) -> Result<Formula, SyntaxError> {
    let lexer = lex(text, line, col)?;
    let mut parser = Parser {
        toks: lexer.toks,
        pos: 0,
        line,
    };
    let f = parser.iff()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Ok(f)
}

pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    parse_formula_at(text, 1, 1)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses one `id: formula` line. `lineno` is 1-based.
fn parse_axiom_line(raw: &str, lineno: usize) -> Result<Axiom, SyntaxError> {
    let Some(colon) = raw.find(':') else {
        let col = raw.len() - raw.trim_start().len() + 1;
        return Err(SyntaxError::new(lineno, col, "expected `id: formula`"));
    };
    let id_part = &raw[..colon];
    let id = id_part.trim();
    let id_col = id_part.len() - id_part.trim_start().len() + 1;
    if !is_identifier(id) {
        return Err(SyntaxError::new(
            lineno,
            id_col,
            format!("invalid axiom id `{id}`"),
        ));
    }
    if is_reserved(id) {
        return Err(SyntaxError::new(
            lineno,
            id_col,
            format!("`{id}` is a reserved word"),
        ));
    }
    let body = &raw[colon + 1..];
    let body_col = raw[..colon + 1].chars().count() + 1;
    let formula = parse_formula_at(body, lineno, body_col)?;
    Ok(Axiom::new(id, formula))
}

pub fn parse_kb(text: &str) -> Result<KnowledgeBase, LogicError> {
    let mut kb = KnowledgeBase::default();
    let mut seen = HashSet::new();
    let mut section: Option<Section> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw_line);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            section =
                Some(
                    Section::from_header(name).ok_or_else(|| LogicError::UnknownSection {
                        line: lineno,
                        name: name.to_string(),
                    })?,
                );
            continue;
        }
        let Some(current) = section else {
            let col = line.len() - line.trim_start().len() + 1;
            return Err(SyntaxError::new(lineno, col, "axiom outside of a section").into());
        };
        let axiom = parse_axiom_line(line, lineno)?;
        if !seen.insert(axiom.id.clone()) {
            return Err(LogicError::DuplicateId(axiom.id));
        }
        kb.section_mut(current).push(axiom);
    }
    Ok(kb)
}

/// Parses a bare list of `id: formula` lines (no section headers), as used
/// for extension axioms.
pub fn parse_axioms(text: &str) -> Result<Vec<Axiom>, LogicError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = strip_comment(raw_line);
        if line.trim().is_empty() {
            continue;
        }
        let axiom = parse_axiom_line(line, idx + 1)?;
        if !seen.insert(axiom.id.clone()) {
            return Err(LogicError::DuplicateId(axiom.id));
        }
        out.push(axiom);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Formula {
        Formula::atom(n)
    }

    #[test]
    fn implication_binds_looser_than_disjunction() {
        let f = parse_formula("A -> B | C").unwrap();
        assert_eq!(f, Formula::implies(a("A"), Formula::or(a("B"), a("C"))));
    }

    #[test]
    fn double_negation_is_kept() {
        assert_eq!(
            parse_formula("~~A").unwrap(),
            Formula::not(Formula::not(a("A")))
        );
    }

    #[test]
    fn truncated_input_reports_end_column() {
        let err = parse_formula("A ->").unwrap_err();
        assert_eq!((err.line, err.column), (1, 5));
    }

    #[test]
    fn associativity() {
        assert_eq!(
            parse_formula("A -> B -> C").unwrap(),
            Formula::implies(a("A"), Formula::implies(a("B"), a("C")))
        );
        assert_eq!(
            parse_formula("A <-> B <-> C").unwrap(),
            Formula::iff(a("A"), Formula::iff(a("B"), a("C")))
        );
        assert_eq!(
            parse_formula("A & B & C").unwrap(),
            Formula::and(Formula::and(a("A"), a("B")), a("C"))
        );
        assert_eq!(
            parse_formula("A | B | C").unwrap(),
            Formula::or(Formula::or(a("A"), a("B")), a("C"))
        );
        assert_eq!(
            parse_formula("(A -> B) -> C").unwrap(),
            Formula::implies(Formula::implies(a("A"), a("B")), a("C"))
        );
    }

    #[test]
    fn full_precedence_ladder() {
        let f = parse_formula("~A & B | C -> D <-> E").unwrap();
        let expected = Formula::iff(
            Formula::implies(
                Formula::or(Formula::and(Formula::not(a("A")), a("B")), a("C")),
                a("D"),
            ),
            a("E"),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn constants_and_errors() {
        assert_eq!(
            parse_formula("true | false").unwrap(),
            Formula::or(Formula::True, Formula::False)
        );
        assert!(parse_formula("").is_err());
        assert!(parse_formula("A B").is_err());
        assert!(parse_formula("(A").is_err());
        let e = parse_formula("A $ B").unwrap_err();
        assert_eq!(e.column, 3);
        assert!(parse_formula("A - B").is_err());
    }

    #[test]
    fn kb_sections_and_comments() {
        let text = "# demo\n[ontology]\na1: A -> B  # trailing\n\n[background]\nb1: A\n[positive]\np1: B\n[negative]\nn1: C\n";
        let kb = parse_kb(text).unwrap();
        assert_eq!(kb.ontology.len(), 1);
        assert_eq!(kb.background[0].id, "b1");
        assert_eq!(kb.positive[0].formula, a("B"));
        assert_eq!(kb.negative[0].formula, a("C"));
    }

    #[test]
    fn kb_fixture_a() {
        let kb = parse_kb("[ontology]\na1: A -> B\na2: B -> C\na3: A\na4: ~C\n").unwrap();
        assert_eq!(kb.ontology.len(), 4);
        assert!(kb.background.is_empty() && kb.positive.is_empty() && kb.negative.is_empty());
    }

    #[test]
    fn kb_errors() {
        let dup = parse_kb("[ontology]\na1: A\n[background]\na1: B\n").unwrap_err();
        assert_eq!(dup, LogicError::DuplicateId("a1".into()));
        let unknown = parse_kb("[tbox]\n").unwrap_err();
        assert!(matches!(
            unknown,
            LogicError::UnknownSection { line: 1, .. }
        ));
        let syntax = parse_kb("[ontology]\na1: A ->\n").unwrap_err();
        match syntax {
            LogicError::Syntax(e) => assert_eq!((e.line, e.column), (2, 9)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_kb("a1: A\n").is_err());
        assert!(parse_kb("[ontology]\ntrue: A\n").is_err());
        assert!(parse_kb("[ontology]\n1x: A\n").is_err());
    }

    #[test]
    fn empty_kb() {
        assert_eq!(parse_kb("").unwrap(), KnowledgeBase::default());
    }

    #[test]
    fn bare_axiom_list() {
        let axs = parse_axioms("x1: A\n# c\nx2: B -> C\n").unwrap();
        assert_eq!(axs.len(), 2);
        assert!(parse_axioms("x1: A\nx1: B\n").is_err());
    }
}

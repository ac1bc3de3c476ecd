use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A propositional formula.
///
/// Formulas are kept exactly as parsed; no simplification happens until
/// clause conversion.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

/// Binding strength used by the printer; higher binds tighter.
fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(..) => 3,
        Formula::And(..) => 4,
        Formula::Not(..) => 5,
        Formula::True | Formula::False | Formula::Atom(_) => 6,
    }
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Self {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    /// Left-nested conjunction of `parts`; `true` when empty.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Self {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    /// Evaluates under `value`, which must answer for every atom in the formula.
    pub fn eval<F: Fn(&str) -> bool + Copy>(&self, value: F) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => value(a),
            Formula::Not(f) => !f.eval(value),
            Formula::And(l, r) => l.eval(value) && r.eval(value),
            Formula::Or(l, r) => l.eval(value) || r.eval(value),
            Formula::Implies(l, r) => !l.eval(value) || r.eval(value),
            Formula::Iff(l, r) => l.eval(value) == r.eval(value),
        }
    }

    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    pub(crate) fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.insert(a.as_str());
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Number of connective occurrences, by kind.
    pub fn connective_counts(&self) -> ConnectiveCounts {
        let mut counts = ConnectiveCounts::default();
        self.count_into(&mut counts);
        counts
    }

    fn count_into(&self, c: &mut ConnectiveCounts) {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => {}
            Formula::Not(f) => {
                c.not += 1;
                f.count_into(c);
            }
            Formula::And(l, r) => {
                c.and += 1;
                l.count_into(c);
                r.count_into(c);
            }
            Formula::Or(l, r) => {
                c.or += 1;
                l.count_into(c);
                r.count_into(c);
            }
            Formula::Implies(l, r) => {
                c.implies += 1;
                l.count_into(c);
                r.count_into(c);
            }
            Formula::Iff(l, r) => {
                c.iff += 1;
                l.count_into(c);
                r.count_into(c);
            }
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => 1 + l.size() + r.size(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConnectiveCounts {
    pub not: u32,
    pub and: u32,
    pub or: u32,
    pub implies: u32,
    pub iff: u32,
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => f.write_str(a),
            Formula::Not(inner) => {
                f.write_str("~")?;
                write_operand(f, inner, precedence(inner) < 5)
            }
            Formula::And(l, r) => write_binary(f, self, l, r, "&", false),
            Formula::Or(l, r) => write_binary(f, self, l, r, "|", false),
            Formula::Implies(l, r) => write_binary(f, self, l, r, "->", true),
            Formula::Iff(l, r) => write_binary(f, self, l, r, "<->", true),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, operand: &Formula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({operand})")
    } else {
        write!(f, "{operand}")
    }
}

fn write_binary(
    f: &mut fmt::Formatter<'_>,
    node: &Formula,
    l: &Formula,
    r: &Formula,
    op: &str,
    right_assoc: bool,
) -> fmt::Result {
    let p = precedence(node);
    let (pl, pr) = (precedence(l), precedence(r));
    write_operand(f, l, pl < p || (pl == p && right_assoc))?;
    write!(f, " {op} ")?;
    write_operand(f, r, pr < p || (pr == p && !right_assoc))
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse_formula(&text).map_err(serde::de::Error::custom)
    }
}

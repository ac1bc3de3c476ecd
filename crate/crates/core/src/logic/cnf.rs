//! Structural (Tseitin) clause conversion.

use std::collections::HashMap;
use std::fmt;

use super::formula::Formula;

/// A literal: atom index plus polarity, packed as `2 * var + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Self {
        Lit(var * 2 + u32::from(!positive))
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn negate(self) -> Self {
        Lit(self.0 ^ 1)
    }

    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        self.negate()
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_positive() {
            write!(f, "x{}", self.var())
        } else {
            write!(f, "~x{}", self.var())
        }
    }
}

/// Maps source atom names and fresh definition atoms to variable indices.
#[derive(Clone, Debug, Default)]
pub struct AtomTable {
    names: Vec<Option<String>>,
    index: HashMap<String, u32>,
}

impl AtomTable {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    /// Source name of `var`, or `None` for definition atoms.
    pub fn name(&self, var: u32) -> Option<&str> {
        self.names.get(var as usize).and_then(|n| n.as_deref())
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = self.names.len() as u32;
        self.names.push(Some(name.to_string()));
        self.index.insert(name.to_string(), v);
        v
    }

    pub fn fresh(&mut self) -> u32 {
        let v = self.names.len() as u32;
        self.names.push(None);
        v
    }

    /// Source atoms in index order.
    pub fn source_atoms(&self) -> impl Iterator<Item = (u32, &str)> {
        self.names
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_deref().map(|n| (i as u32, n)))
    }
}

/// A clause set equisatisfiable with the formulas added to it.
#[derive(Clone, Debug, Default)]
pub struct ClauseSet {
    clauses: Vec<Vec<Lit>>,
    atoms: AtomTable,
    true_var: Option<u32>,
}

impl ClauseSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_formulas<'a, I: IntoIterator<Item = &'a Formula>>(formulas: I) -> Self {
        let mut cs = Self::new();
        for f in formulas {
            cs.add_formula(f);
        }
        cs
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn atoms(&self) -> &AtomTable {
        &self.atoms
    }

    pub fn num_vars(&self) -> usize {
        self.atoms.len()
    }

    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        self.clauses.push(clause);
    }

    /// Allocates an unnamed variable.
    pub fn fresh_var(&mut self) -> u32 {
        self.atoms.fresh()
    }

    /// Literal for a source atom, interning it if needed.
    pub fn atom_lit(&mut self, name: &str, positive: bool) -> Lit {
        Lit::new(self.atoms.intern(name), positive)
    }

    /// Asserts `f`. Top-level conjunctions are split and top-level
    /// disjunctions and implications become a single clause.
    pub fn add_formula(&mut self, f: &Formula) {
        match f {
            Formula::True => {}
            Formula::False => self.clauses.push(Vec::new()),
            Formula::And(l, r) => {
                self.add_formula(l);
                self.add_formula(r);
            }
            Formula::Or(..) => {
                let mut disjuncts = Vec::new();
                collect_disjuncts(f, &mut disjuncts);
                let clause = disjuncts.into_iter().map(|d| self.define(d)).collect();
                self.clauses.push(clause);
            }
            Formula::Implies(l, r) => {
                let a = self.define(l);
                let b = self.define(r);
                self.clauses.push(vec![!a, b]);
            }
            _ => {
                let lit = self.define(f);
                self.clauses.push(vec![lit]);
            }
        }
    }

    fn true_lit(&mut self) -> Lit {
        let v = match self.true_var {
            Some(v) => v,
            None => {
                let v = self.atoms.fresh();
                self.clauses.push(vec![Lit::new(v, true)]);
                self.true_var = Some(v);
                v
            }
        };
        Lit::new(v, true)
    }

    /// Returns a literal equivalent to `f`, adding definition clauses.
    pub fn define(&mut self, f: &Formula) -> Lit {
        match f {
            Formula::True => self.true_lit(),
            Formula::False => !self.true_lit(),
            Formula::Atom(name) => self.atom_lit(name, true),
            Formula::Not(inner) => !self.define(inner),
            Formula::And(l, r) => {
                let (a, b) = (self.define(l), self.define(r));
                let x = Lit::new(self.atoms.fresh(), true);
                self.clauses.push(vec![!x, a]);
                self.clauses.push(vec![!x, b]);
                self.clauses.push(vec![x, !a, !b]);
                x
            }
            Formula::Or(l, r) => {
                let (a, b) = (self.define(l), self.define(r));
                let x = Lit::new(self.atoms.fresh(), true);
                self.clauses.push(vec![!x, a, b]);
                self.clauses.push(vec![x, !a]);
                self.clauses.push(vec![x, !b]);
                x
            }
            Formula::Implies(l, r) => {
                let (a, b) = (self.define(l), self.define(r));
                let x = Lit::new(self.atoms.fresh(), true);
                self.clauses.push(vec![!x, !a, b]);
                self.clauses.push(vec![x, a]);
                self.clauses.push(vec![x, !b]);
                x
            }
            Formula::Iff(l, r) => {
                let (a, b) = (self.define(l), self.define(r));
                let x = Lit::new(self.atoms.fresh(), true);
                self.clauses.push(vec![!x, !a, b]);
                self.clauses.push(vec![!x, a, !b]);
                self.clauses.push(vec![x, a, b]);
                self.clauses.push(vec![x, !a, !b]);
                x
            }
        }
    }
}

fn collect_disjuncts<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::Or(l, r) => {
            collect_disjuncts(l, out);
            collect_disjuncts(r, out);
        }
        other => out.push(other),
    }
}

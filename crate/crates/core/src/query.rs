//! Discriminating queries.
//!
//! Two diagnoses that remove different axioms leave knowledge bases with
//! different consequences. A query is a set of such consequences; asking
//! whether the intended knowledge base should entail them splits the
//! leading diagnoses into those that predict "yes" (`dp`), those that
//! predict "no" (`dn`) and those that predict neither (`d0`).
//!
//! Query sentences are restricted to literals `X`, `~X` and atom
//! implications `X -> Y` over the ontology and background vocabulary.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::diagnosis::{quick_xplain, Diagnosis};
use crate::logic::{
    entails, is_satisfiable, parse_formula, ClauseSet, Formula, KnowledgeBase, Lit, Solver,
};

/// Largest leading set for which every subset is enumerated.
pub const MAX_ENUMERATED_DIAGNOSES: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("at least two leading diagnoses are needed to discriminate (got {0})")]
    TooFewDiagnoses(usize),
    #[error(
        "{0} leading diagnoses exceed the subset enumeration limit of {MAX_ENUMERATED_DIAGNOSES}"
    )]
    TooManyDiagnoses(usize),
    #[error("`{0}` is not a literal or an atom implication")]
    NotASentence(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sentence {
    Literal { atom: String, positive: bool },
    Implication { from: String, to: String },
}

impl Sentence {
    pub fn literal(atom: impl Into<String>, positive: bool) -> Self {
        Sentence::Literal {
            atom: atom.into(),
            positive,
        }
    }

    pub fn implication(from: impl Into<String>, to: impl Into<String>) -> Self {
        Sentence::Implication {
            from: from.into(),
            to: to.into(),
        }
    }

    pub fn to_formula(&self) -> Formula {
        match self {
            Sentence::Literal {
                atom,
                positive: true,
            } => Formula::atom(atom.as_str()),
            Sentence::Literal {
                atom,
                positive: false,
            } => Formula::not(Formula::atom(atom.as_str())),
            Sentence::Implication { from, to } => {
                Formula::implies(Formula::atom(from.as_str()), Formula::atom(to.as_str()))
            }
        }
    }

    pub fn from_formula(f: &Formula) -> Option<Self> {
        match f {
            Formula::Atom(a) => Some(Sentence::literal(a.as_str(), true)),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(a) => Some(Sentence::literal(a.as_str(), false)),
                _ => None,
            },
            Formula::Implies(l, r) => match (l.as_ref(), r.as_ref()) {
                (Formula::Atom(x), Formula::Atom(y)) if x != y => {
                    Some(Sentence::implication(x.as_str(), y.as_str()))
                }
                _ => None,
            },
            _ => None,
        }
    }

    /// Adds the sentence to `cs` as a single clause guarded by `guard`.
    fn add_guarded(&self, cs: &mut ClauseSet, guard: Lit) {
        match self {
            Sentence::Literal { atom, positive } => {
                let l = cs.atom_lit(atom, *positive);
                cs.add_clause(vec![!guard, l]);
            }
            Sentence::Implication { from, to } => {
                let x = cs.atom_lit(from, false);
                let y = cs.atom_lit(to, true);
                cs.add_clause(vec![!guard, x, y]);
            }
        }
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sentence::Literal {
                atom,
                positive: true,
            } => f.write_str(atom),
            Sentence::Literal {
                atom,
                positive: false,
            } => write!(f, "~{atom}"),
            Sentence::Implication { from, to } => write!(f, "{from} -> {to}"),
        }
    }
}

impl std::str::FromStr for Sentence {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
            .ok()
            .and_then(|f| Sentence::from_formula(&f))
            .ok_or_else(|| QueryError::NotASentence(s.to_string()))
    }
}

impl Serialize for Sentence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Split of the leading diagnoses induced by a set of sentences.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub dp: Vec<Diagnosis>,
    pub dn: Vec<Diagnosis>,
    pub d0: Vec<Diagnosis>,
}

impl Partition {
    pub fn is_discriminating(&self) -> bool {
        !self.dp.is_empty() && !self.dn.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    /// Canonically ordered, nonempty.
    pub sentences: Vec<Sentence>,
    #[serde(flatten)]
    pub partition: Partition,
}

impl Query {
    pub fn new(sentences: impl IntoIterator<Item = Sentence>, partition: Partition) -> Self {
        let set: BTreeSet<Sentence> = sentences.into_iter().collect();
        Self {
            sentences: set.into_iter().collect(),
            partition,
        }
    }

    pub fn dp(&self) -> &[Diagnosis] {
        &self.partition.dp
    }

    pub fn dn(&self) -> &[Diagnosis] {
        &self.partition.dn
    }

    pub fn d0(&self) -> &[Diagnosis] {
        &self.partition.d0
    }

    pub fn conjunction(&self) -> Formula {
        Formula::conjunction(self.sentences.iter().map(Sentence::to_formula))
    }

    /// Sentences joined by `, `; used for tie-breaking and display.
    pub fn text(&self) -> String {
        self.sentences
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Every candidate sentence over the ontology and background vocabulary,
/// in canonical order. Trivial implications `X -> X` are left out.
pub fn vocabulary_sentences(kb: &KnowledgeBase) -> Vec<Sentence> {
    let atoms: Vec<String> = kb.vocabulary().into_iter().collect();
    let mut out: Vec<Sentence> = Vec::new();
    for a in &atoms {
        out.push(Sentence::literal(a.as_str(), true));
        out.push(Sentence::literal(a.as_str(), false));
    }
    for x in &atoms {
        for y in &atoms {
            if x != y {
                out.push(Sentence::implication(x.as_str(), y.as_str()));
            }
        }
    }
    out.sort();
    out
}

/// Ontology left after applying `d`, plus background and positive tests.
pub fn applied_premises<'a>(kb: &'a KnowledgeBase, d: &Diagnosis) -> Vec<&'a Formula> {
    kb.ontology
        .iter()
        .filter(|a| !d.contains(&a.id))
        .chain(&kb.background)
        .chain(&kb.positive)
        .map(|a| &a.formula)
        .collect()
}

/// Vocabulary sentences entailed by `premises`, via one shared clause set.
fn entailed_sentences<'a>(
    premises: impl IntoIterator<Item = &'a Formula>,
    vocabulary: &[Sentence],
) -> BTreeSet<Sentence> {
    let mut cs = ClauseSet::from_formulas(premises);
    let lits: Vec<Vec<Lit>> = vocabulary
        .iter()
        .map(|s| match s {
            // assumptions that refute the sentence
            Sentence::Literal { atom, positive } => vec![cs.atom_lit(atom, !positive)],
            Sentence::Implication { from, to } => {
                vec![cs.atom_lit(from, true), cs.atom_lit(to, false)]
            }
        })
        .collect();
    let mut solver = Solver::new(&cs);
    vocabulary
        .iter()
        .zip(&lits)
        .filter(|(_, refute)| !solver.solve(refute))
        .map(|(s, _)| s.clone())
        .collect()
}

/// Vocabulary sentences entailed once `d` is removed, minus those already
/// entailed by background and positive tests alone.
pub fn diagnosis_entailments(kb: &KnowledgeBase, d: &Diagnosis) -> BTreeSet<Sentence> {
    let vocab = vocabulary_sentences(kb);
    let common = common_knowledge(kb, &vocab);
    diagnosis_entailments_with(kb, d, &vocab, &common)
}

fn common_knowledge(kb: &KnowledgeBase, vocab: &[Sentence]) -> BTreeSet<Sentence> {
    entailed_sentences(
        kb.background.iter().chain(&kb.positive).map(|a| &a.formula),
        vocab,
    )
}

fn diagnosis_entailments_with(
    kb: &KnowledgeBase,
    d: &Diagnosis,
    vocab: &[Sentence],
    common: &BTreeSet<Sentence>,
) -> BTreeSet<Sentence> {
    let mut ent = entailed_sentences(applied_premises(kb, d), vocab);
    ent.retain(|s| !common.contains(s));
    ent
}

/// Classifies each leading diagnosis against `sentences`.
///
/// `D` goes to `dp` when its application entails every sentence, to `dn`
/// when the sentences are inconsistent with it or make it entail a
/// negative test, and to `d0` otherwise.
pub fn partition(kb: &KnowledgeBase, sentences: &[Sentence], leading: &[Diagnosis]) -> Partition {
    let formulas: Vec<Formula> = sentences.iter().map(Sentence::to_formula).collect();
    let conjunction = Formula::conjunction(formulas.iter().cloned());
    let mut out = Partition::default();
    for d in leading {
        let premises = applied_premises(kb, d);
        if entails(premises.iter().copied(), &conjunction) {
            out.dp.push(d.clone());
            continue;
        }
        let extended: Vec<&Formula> = premises.iter().copied().chain(&formulas).collect();
        let contradicts = !is_satisfiable(extended.iter().copied())
            || kb
                .negative
                .iter()
                .any(|n| entails(extended.iter().copied(), &n.formula));
        if contradicts {
            out.dn.push(d.clone());
        } else {
            out.d0.push(d.clone());
        }
    }
    out
}

/// Per-diagnosis clause set with every vocabulary sentence and every
/// negated negative test behind a selector.
struct ContradictionChecker {
    solver: RefCell<Solver>,
    sentence_guards: HashMap<Sentence, Lit>,
    negative_guards: Vec<Lit>,
}

impl ContradictionChecker {
    fn new(kb: &KnowledgeBase, d: &Diagnosis, vocab: &[Sentence]) -> Self {
        let mut cs = ClauseSet::from_formulas(applied_premises(kb, d));
        let mut sentence_guards = HashMap::new();
        for s in vocab {
            let g = Lit::new(cs.fresh_var(), true);
            s.add_guarded(&mut cs, g);
            sentence_guards.insert(s.clone(), g);
        }
        let negative_guards = kb
            .negative
            .iter()
            .map(|n| {
                let lit = cs.define(&Formula::not(n.formula.clone()));
                let g = Lit::new(cs.fresh_var(), true);
                cs.add_clause(vec![!g, lit]);
                g
            })
            .collect();
        Self {
            solver: RefCell::new(Solver::new(&cs)),
            sentence_guards,
            negative_guards,
        }
    }

    fn contradicts(&self, sentences: &BTreeSet<Sentence>) -> bool {
        let mut assumptions: Vec<Lit> = sentences.iter().map(|s| self.sentence_guards[s]).collect();
        let mut solver = self.solver.borrow_mut();
        if !solver.solve(&assumptions) {
            return true;
        }
        self.negative_guards.iter().any(|&g| {
            assumptions.push(g);
            let refuted = !solver.solve(&assumptions);
            assumptions.pop();
            refuted
        })
    }
}

/// Nonempty proper subsets of `0..n` by size, then lexicographically.
fn canonical_subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..n).flat_map(move |k| Combinations::new(n, k))
}

struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// All discriminating queries for `leading`, one per distinct partition.
///
/// For each nonempty proper subset `S` of the leading diagnoses the
/// candidate sentences are those entailed under every member of `S` but not
/// under every leading diagnosis. Queries whose partition leaves `dp` or
/// `dn` empty are dropped; duplicate partitions keep the earliest subset.
pub fn generate_queries(
    kb: &KnowledgeBase,
    leading: &[Diagnosis],
) -> Result<Vec<Query>, QueryError> {
    if leading.len() < 2 {
        return Err(QueryError::TooFewDiagnoses(leading.len()));
    }
    if leading.len() > MAX_ENUMERATED_DIAGNOSES {
        return Err(QueryError::TooManyDiagnoses(leading.len()));
    }
    let vocab = vocabulary_sentences(kb);
    let ctx = QueryContext::new(kb, leading, &vocab);
    // entailment sets as bit vectors over the vocabulary
    let words = vocab.len().div_ceil(64);
    let bits: Vec<Vec<u64>> = ctx
        .ents
        .iter()
        .map(|ent| {
            let mut b = vec![0u64; words];
            for (i, s) in vocab.iter().enumerate() {
                if ent.contains(s) {
                    b[i / 64] |= 1 << (i % 64);
                }
            }
            b
        })
        .collect();
    let shared: Vec<u64> = (0..words)
        .map(|w| bits.iter().fold(!0, |acc, b| acc & b[w]))
        .collect();

    let mut seen = HashSet::new();
    let mut seen_sentences = HashSet::new();
    let mut queries = Vec::new();
    for subset in canonical_subsets(leading.len()) {
        let e: Vec<u64> = (0..words)
            .map(|w| subset.iter().fold(!shared[w], |acc, &i| acc & bits[i][w]))
            .collect();
        // equal sentence sets give equal partitions
        if e.iter().all(|&w| w == 0) || !seen_sentences.insert(e.clone()) {
            continue;
        }
        let e: BTreeSet<Sentence> = vocab
            .iter()
            .enumerate()
            .filter(|(i, _)| e[i / 64] >> (i % 64) & 1 == 1)
            .map(|(_, s)| s.clone())
            .collect();
        let classes = ctx.classes(&e);
        if !classes.contains(&Class::Positive)
            || !classes.contains(&Class::Negative)
            || !seen.insert(classes.clone())
        {
            continue;
        }
        queries.push(Query::new(e, ctx.partition(&classes)));
    }
    Ok(queries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Class {
    Positive,
    Negative,
    Neutral,
}

/// Per-diagnosis entailments and contradiction checkers for one leading set.
struct QueryContext<'a> {
    leading: &'a [Diagnosis],
    /// Every vocabulary sentence entailed by each diagnosis application.
    ents: Vec<BTreeSet<Sentence>>,
    checkers: Vec<ContradictionChecker>,
}

impl<'a> QueryContext<'a> {
    fn new(kb: &KnowledgeBase, leading: &'a [Diagnosis], vocab: &[Sentence]) -> Self {
        Self {
            leading,
            ents: leading
                .iter()
                .map(|d| entailed_sentences(applied_premises(kb, d), vocab))
                .collect(),
            checkers: leading
                .iter()
                .map(|d| ContradictionChecker::new(kb, d, vocab))
                .collect(),
        }
    }

    fn classes(&self, e: &BTreeSet<Sentence>) -> Vec<Class> {
        self.ents
            .iter()
            .zip(&self.checkers)
            .map(|(ent, checker)| {
                if e.is_subset(ent) {
                    Class::Positive
                } else if e.iter().any(|s| refuted_by(ent, s)) || checker.contradicts(e) {
                    Class::Negative
                } else {
                    Class::Neutral
                }
            })
            .collect()
    }

    fn partition(&self, classes: &[Class]) -> Partition {
        let mut part = Partition::default();
        for (d, class) in self.leading.iter().zip(classes) {
            match class {
                Class::Positive => part.dp.push(d.clone()),
                Class::Negative => part.dn.push(d.clone()),
                Class::Neutral => part.d0.push(d.clone()),
            }
        }
        part
    }
}

/// True when `ent` already contains the negation of `s`.
fn refuted_by(ent: &BTreeSet<Sentence>, s: &Sentence) -> bool {
    match s {
        Sentence::Literal { atom, positive } => {
            ent.contains(&Sentence::literal(atom.clone(), !positive))
        }
        Sentence::Implication { from, to } => {
            ent.contains(&Sentence::literal(from.clone(), true))
                && ent.contains(&Sentence::literal(to.clone(), false))
        }
    }
}

/// Smallest subset of the query's sentences (preferring canonically earlier
/// ones) that induces the same partition of the same diagnoses.
pub fn minimize_query(kb: &KnowledgeBase, q: &Query) -> Query {
    let leading = leading_of(q);
    let vocab = vocabulary_sentences(kb);
    if q.sentences.len() <= 1
        || leading.is_empty()
        || !q.sentences.iter().all(|s| vocab.contains(s))
    {
        return Query {
            sentences: q.sentences.clone(),
            partition: partition(kb, &q.sentences, &leading),
        };
    }
    let ctx = QueryContext::new(kb, &leading, &vocab);
    let as_set = |s: &[Sentence]| s.iter().cloned().collect::<BTreeSet<_>>();
    let target = ctx.classes(&as_set(&q.sentences));
    let kept = quick_xplain(&q.sentences, |s| ctx.classes(&as_set(s)) == target)
        .unwrap_or_else(|| q.sentences.clone());
    Query {
        sentences: kept,
        partition: ctx.partition(&target),
    }
}

/// The query's diagnoses in canonical order.
pub fn leading_of(q: &Query) -> Vec<Diagnosis> {
    let mut all: Vec<Diagnosis> = q.dp().iter().chain(q.dn()).chain(q.d0()).cloned().collect();
    all.sort();
    all
}

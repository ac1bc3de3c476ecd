//! Minimal conflicts and minimal diagnoses.
//!
//! A diagnosis is a set of ontology axioms whose removal lets the remaining
//! ontology, together with the background knowledge and positive tests, be
//! consistent without entailing any negative test. Conflicts are found with
//! a divide-and-conquer reduction and combined into diagnoses by a
//! breadth-first hitting-set tree.

mod checker;
mod quickxplain;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::KnowledgeBase;

pub use checker::Checker;
pub use quickxplain::quick_xplain;

/// Upper bound on |O| for exhaustive enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 14;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DiagnosisError {
    #[error("unknown ontology axiom id `{0}`")]
    UnknownAxiomId(String),
    #[error("requirements cannot be met by any removal: {0}")]
    InfeasibleProblem(String),
    #[error("ontology has {size} axioms; exhaustive enumeration is limited to {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("max_leading must be at least 2 (got {0})")]
    InvalidCap(usize),
}

fn axiom_set_cmp(a: &BTreeSet<String>, b: &BTreeSet<String>) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn fmt_axiom_set(set: &BTreeSet<String>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_str("{")?;
    for (i, id) in set.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        f.write_str(id)?;
    }
    f.write_str("}")
}

/// A set of ontology axiom ids whose removal restores every requirement.
///
/// Ordered by cardinality, then lexicographically by sorted ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Diagnosis(BTreeSet<String>);

impl Diagnosis {
    pub fn new<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Diagnosis(ids.into_iter().map(Into::into).collect())
    }

    pub fn ids(&self) -> &BTreeSet<String> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn is_subset(&self, other: &Diagnosis) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl Ord for Diagnosis {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        axiom_set_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for Diagnosis {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_axiom_set(&self.0, f)
    }
}

/// A minimal set of ontology axioms that cannot be kept together.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Conflict(BTreeSet<String>);

impl Conflict {
    pub fn new<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Conflict(ids.into_iter().map(Into::into).collect())
    }

    pub fn ids(&self) -> &BTreeSet<String> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_hit_by(&self, d: &Diagnosis) -> bool {
        !self.0.is_disjoint(&d.0)
    }
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_axiom_set(&self.0, f)
    }
}

/// A knowledge base together with the cap on tracked leading diagnoses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisProblem {
    pub kb: KnowledgeBase,
    pub max_leading: usize,
}

impl DiagnosisProblem {
    pub const DEFAULT_MAX_LEADING: usize = 9;

    pub fn new(kb: KnowledgeBase, max_leading: usize) -> Result<Self, DiagnosisError> {
        if max_leading < 2 {
            return Err(DiagnosisError::InvalidCap(max_leading));
        }
        Ok(Self { kb, max_leading })
    }

    /// A problem that tracks every minimal diagnosis.
    pub fn unbounded(kb: KnowledgeBase) -> Self {
        Self {
            kb,
            max_leading: usize::MAX,
        }
    }
}

fn positions(checker: &Checker, ids: &BTreeSet<String>) -> Result<Vec<usize>, DiagnosisError> {
    ids.iter()
        .map(|id| {
            checker
                .position(id)
                .ok_or_else(|| DiagnosisError::UnknownAxiomId(id.clone()))
        })
        .collect()
}

fn infeasible() -> DiagnosisError {
    DiagnosisError::InfeasibleProblem(
        "background and positive tests are inconsistent or entail a negative test".into(),
    )
}

/// True iff `(O \ removal) ∪ B ∪ P` is consistent and entails no negative test.
pub fn is_valid_candidate(
    kb: &KnowledgeBase,
    removal: &BTreeSet<String>,
) -> Result<bool, DiagnosisError> {
    let checker = Checker::new(kb);
    let removed = positions(&checker, removal)?;
    let mut kept = vec![true; checker.len()];
    for p in removed {
        kept[p] = false;
    }
    Ok(checker.is_valid(&kept))
}

fn conflict_among(
    checker: &Checker,
    candidates: &[usize],
) -> Result<Option<Conflict>, DiagnosisError> {
    if !checker.is_valid_keeping(&[]) {
        return Err(infeasible());
    }
    let found = quick_xplain(candidates, |kept| !checker.is_valid_keeping(kept));
    Ok(found.map(|c| Conflict::new(c.into_iter().map(|p| checker.ids()[p].clone()))))
}

/// A minimal subset of `candidates` that cannot be kept on its own, with all
/// other ontology axioms removed; `None` when keeping every candidate is valid.
pub fn minimal_conflict(
    kb: &KnowledgeBase,
    candidates: &[&str],
) -> Result<Option<Conflict>, DiagnosisError> {
    let checker = Checker::new(kb);
    let cand = candidates
        .iter()
        .map(|id| {
            checker
                .position(id)
                .ok_or_else(|| DiagnosisError::UnknownAxiomId(id.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    conflict_among(&checker, &cand)
}

/// Breadth-first hitting-set tree with conflict reuse.
pub struct HsTree<'kb> {
    kb: &'kb KnowledgeBase,
    checker: Checker,
    conflicts: Vec<Conflict>,
    labels: HashMap<BTreeSet<String>, Option<usize>>,
    conflict_calls: usize,
}

impl<'kb> HsTree<'kb> {
    pub fn new(kb: &'kb KnowledgeBase) -> Self {
        Self {
            kb,
            checker: Checker::new(kb),
            conflicts: Vec::new(),
            labels: HashMap::new(),
            conflict_calls: 0,
        }
    }

    pub fn kb(&self) -> &KnowledgeBase {
        self.kb
    }

    /// Every conflict computed so far, in discovery order.
    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }

    /// Number of conflict computations actually run (cache misses).
    pub fn conflict_calls(&self) -> usize {
        self.conflict_calls
    }

    /// Node label for `path`: a conflict disjoint from it, or `None` when
    /// `path` is itself a valid removal.
    fn label(&mut self, path: &BTreeSet<String>) -> Result<Option<usize>, DiagnosisError> {
        if let Some(&cached) = self.labels.get(path) {
            return Ok(cached);
        }
        let label = if let Some(i) = self.conflicts.iter().position(|c| c.0.is_disjoint(path)) {
            Some(i)
        } else {
            self.conflict_calls += 1;
            let candidates: Vec<usize> = (0..self.checker.len())
                .filter(|&p| !path.contains(&self.checker.ids()[p]))
                .collect();
            match conflict_among(&self.checker, &candidates)? {
                None => None,
                Some(c) => {
                    self.conflicts.push(c);
                    Some(self.conflicts.len() - 1)
                }
            }
        };
        self.labels.insert(path.clone(), label);
        Ok(label)
    }

    /// Up to `max` minimal diagnoses in canonical order. Each level of the
    /// tree is completed before truncating, so the result is the canonical
    /// prefix of the full list.
    pub fn diagnoses(&mut self, max: usize) -> Result<Vec<Diagnosis>, DiagnosisError> {
        let mut found: Vec<Diagnosis> = Vec::new();
        let mut level: BTreeSet<BTreeSet<String>> = BTreeSet::from([BTreeSet::new()]);
        while !level.is_empty() && found.len() < max {
            let mut next = BTreeSet::new();
            let mut at_level = Vec::new();
            for path in &level {
                if found.iter().any(|d| d.0.is_subset(path)) {
                    continue;
                }
                match self.label(path)? {
                    None => at_level.push(Diagnosis(path.clone())),
                    Some(ci) => {
                        for id in &self.conflicts[ci].0 {
                            let mut child = path.clone();
                            child.insert(id.clone());
                            next.insert(child);
                        }
                    }
                }
            }
            if at_level.iter().any(Diagnosis::is_empty) {
                // fault-free knowledge base
                return Ok(Vec::new());
            }
            at_level.sort();
            found.extend(at_level);
            level = next;
        }
        found.truncate(max);
        Ok(found)
    }
}

/// Up to `problem.max_leading` minimal diagnoses in nondecreasing cardinality,
/// lexicographic within equal cardinality. Empty when no fault exists.
pub fn leading_diagnoses(problem: &DiagnosisProblem) -> Result<Vec<Diagnosis>, DiagnosisError> {
    HsTree::new(&problem.kb).diagnoses(problem.max_leading)
}

/// Every minimal diagnosis, by exhaustive enumeration of removal sets.
/// Independent of the conflict search; used as a reference.
pub fn brute_force_diagnoses(kb: &KnowledgeBase) -> Result<Vec<Diagnosis>, DiagnosisError> {
    let n = kb.ontology.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(DiagnosisError::TooLarge {
            size: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let checker = Checker::new(kb);
    if !checker.is_valid_keeping(&[]) {
        return Err(infeasible());
    }
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| m.count_ones());
    let mut minimal: Vec<u32> = Vec::new();
    for removal in masks {
        if minimal.iter().any(|&d| d & !removal == 0) {
            continue;
        }
        let kept: Vec<bool> = (0..n).map(|i| removal >> i & 1 == 0).collect();
        if checker.is_valid(&kept) {
            if removal == 0 {
                return Ok(Vec::new());
            }
            minimal.push(removal);
        }
    }
    let mut out: Vec<Diagnosis> = minimal
        .into_iter()
        .map(|m| {
            Diagnosis::new(
                (0..n)
                    .filter(|i| m >> i & 1 == 1)
                    .map(|i| kb.ontology[i].id.clone()),
            )
        })
        .collect();
    out.sort();
    Ok(out)
}

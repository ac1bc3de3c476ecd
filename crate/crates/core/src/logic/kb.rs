use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::Formula;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Axiom {
    pub id: String,
    pub formula: Formula,
}

impl Axiom {
    pub fn new(id: impl Into<String>, formula: Formula) -> Self {
        Self {
            id: id.into(),
            formula,
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.formula)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Ontology,
    Background,
    Positive,
    Negative,
}

impl Section {
    pub const ALL: [Section; 4] = [
        Section::Ontology,
        Section::Background,
        Section::Positive,
        Section::Negative,
    ];

    pub fn header(self) -> &'static str {
        match self {
            Section::Ontology => "ontology",
            Section::Background => "background",
            Section::Positive => "positive",
            Section::Negative => "negative",
        }
    }

    pub fn from_header(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.header() == name)
    }
}

/// A knowledge base split into the fixable ontology, trusted background
/// knowledge, and the positive and negative test cases.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub ontology: Vec<Axiom>,
    pub background: Vec<Axiom>,
    pub positive: Vec<Axiom>,
    pub negative: Vec<Axiom>,
}

impl KnowledgeBase {
    pub fn section(&self, s: Section) -> &[Axiom] {
        match s {
            Section::Ontology => &self.ontology,
            Section::Background => &self.background,
            Section::Positive => &self.positive,
            Section::Negative => &self.negative,
        }
    }

    pub fn section_mut(&mut self, s: Section) -> &mut Vec<Axiom> {
        match s {
            Section::Ontology => &mut self.ontology,
            Section::Background => &mut self.background,
            Section::Positive => &mut self.positive,
            Section::Negative => &mut self.negative,
        }
    }

    pub fn axioms(&self) -> impl Iterator<Item = &Axiom> {
        Section::ALL
            .into_iter()
            .flat_map(move |s| self.section(s).iter())
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.axioms().any(|a| a.id == id)
    }

    pub fn ontology_ids(&self) -> impl Iterator<Item = &str> {
        self.ontology.iter().map(|a| a.id.as_str())
    }

    pub fn ontology_axiom(&self, id: &str) -> Option<&Axiom> {
        self.ontology.iter().find(|a| a.id == id)
    }

    /// Atoms of the ontology and background, sorted.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for ax in self.ontology.iter().chain(&self.background) {
            for a in ax.formula.atoms() {
                out.insert(a.to_string());
            }
        }
        out
    }

    /// Returns an id of the form `{prefix}{n}` not yet used in this KB.
    pub fn fresh_id(&self, prefix: &str) -> String {
        (1..)
            .map(|n| format!("{prefix}{n}"))
            .find(|id| !self.contains_id(id))
            .expect("unbounded id space")
    }
}

impl fmt::Display for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in Section::ALL {
            let axioms = self.section(s);
            if axioms.is_empty() {
                continue;
            }
            if !first {
                writeln!(f)?;
            }
            first = false;
            writeln!(f, "[{}]", s.header())?;
            for ax in axioms {
                writeln!(f, "{ax}")?;
            }
        }
        Ok(())
    }
}

//! The sequential debugging loop.
//!
//! A [`DebugSession`] asks one query at a time, turns each answer into a
//! test case, reweights the leading diagnoses and stops once one of them is
//! probable enough or no query can tell the survivors apart.

mod bench;
mod generator;
mod simulate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnosis::{Diagnosis, DiagnosisError, DiagnosisProblem, HsTree};
use crate::logic::{Axiom, KnowledgeBase, Section};
use crate::query::{
    generate_queries, minimize_query, partition, Query, QueryError, Sentence,
    MAX_ENUMERATED_DIAGNOSES,
};
use crate::selection::{
    answer_likelihood, bayes_update, prior_masses, Answer, Beliefs, FaultModel, SelectionError,
    Selector, Strategy,
};
use crate::BeliefState;

pub use bench::{
    benchmark, AggregateRow, BenchConfig, BenchReport, BenchRow, Regime,
    ELEVATED_FAULT_PROBABILITY, UNIFORM_FAULT_PROBABILITY,
};
pub use generator::{generate_faulty_kb, GeneratorParams};
pub use simulate::{
    run_simulated, run_simulated_session, Oracle, SessionResult, SimulatedOracle, TargetSpec,
};

pub const DEFAULT_SIGMA: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("session is {0}, not awaiting an answer")]
    InvalidState(Status),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    AwaitingAnswer,
    Finished,
    NoDiscriminatingQuery,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::AwaitingAnswer => "AWAITING_ANSWER",
            Status::Finished => "FINISHED",
            Status::NoDiscriminatingQuery => "NO_DISCRIMINATING_QUERY",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub strategy: Strategy,
    pub fault_model: FaultModel,
    pub sigma: f64,
    pub max_leading: usize,
    /// Per-axiom fault probabilities that replace the connective-derived ones.
    pub prior_overrides: BTreeMap<String, f64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Entropy,
            fault_model: FaultModel::default(),
            sigma: DEFAULT_SIGMA,
            max_leading: DiagnosisProblem::DEFAULT_MAX_LEADING,
            prior_overrides: BTreeMap::new(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self, kb: &KnowledgeBase) -> Result<(), SessionError> {
        self.fault_model.validate()?;
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(SessionError::InvalidParameter(format!(
                "sigma must lie in [0, 1], got {}",
                self.sigma
            )));
        }
        if self.max_leading < 2 || self.max_leading > MAX_ENUMERATED_DIAGNOSES {
            return Err(SessionError::InvalidParameter(format!(
                "max_leading must lie in [2, {MAX_ENUMERATED_DIAGNOSES}], got {}",
                self.max_leading
            )));
        }
        for (id, p) in &self.prior_overrides {
            if kb.ontology_axiom(id).is_none() {
                return Err(DiagnosisError::UnknownAxiomId(id.clone()).into());
            }
            if !(0.0..=1.0).contains(p) {
                return Err(SessionError::InvalidParameter(format!(
                    "fault probability for `{id}` must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// One answered query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub query: Query,
    pub answer: Answer,
    /// Id of the test case the answer produced.
    pub test_id: String,
    /// Leading diagnoses ruled out by the answer.
    pub eliminated: Vec<Diagnosis>,
}

/// A test case collected from an answer: positive for yes, negative for no.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub section: Section,
    pub axiom: Axiom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DebugSession {
    initial_kb: KnowledgeBase,
    problem: DiagnosisProblem,
    strategy: Strategy,
    fault_model: FaultModel,
    sigma: f64,
    #[serde(default)]
    prior_overrides: BTreeMap<String, f64>,
    selector: Selector,
    leading: Vec<Diagnosis>,
    beliefs: BeliefState,
    history: Vec<HistoryEntry>,
    accumulated_tests: Vec<TestCase>,
    pending: Option<Query>,
    status: Status,
}

/// Creates a session, computing the leading diagnoses and the first query.
pub fn start_session(
    kb: KnowledgeBase,
    config: SessionConfig,
) -> Result<DebugSession, SessionError> {
    config.validate(&kb)?;
    let problem = DiagnosisProblem::new(kb.clone(), config.max_leading)?;
    let leading = HsTree::new(&problem.kb).diagnoses(problem.max_leading)?;
    let mut session = DebugSession {
        initial_kb: kb,
        problem,
        selector: Selector::new(config.strategy),
        strategy: config.strategy,
        fault_model: config.fault_model,
        sigma: config.sigma,
        prior_overrides: config.prior_overrides,
        beliefs: fault_free_beliefs(),
        leading: Vec::new(),
        history: Vec::new(),
        accumulated_tests: Vec::new(),
        pending: None,
        status: Status::Finished,
    };
    if leading.is_empty() {
        return Ok(session);
    }
    session.beliefs = session.replayed_beliefs(&leading)?;
    session.leading = leading;
    session.advance()?;
    Ok(session)
}

/// Applies `answer` to the pending query and moves to the next state.
pub fn submit_answer(session: &DebugSession, answer: Answer) -> Result<DebugSession, SessionError> {
    let mut next = session.clone();
    next.apply_answer(answer)?;
    Ok(next)
}

fn fault_free_beliefs() -> BeliefState {
    Beliefs::from_masses([(Diagnosis::default(), 1.0)]).expect("unit mass")
}

impl DebugSession {
    pub fn status(&self) -> Status {
        self.status
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn fault_model(&self) -> &FaultModel {
        &self.fault_model
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn prior_overrides(&self) -> &BTreeMap<String, f64> {
        &self.prior_overrides
    }

    pub fn problem(&self) -> &DiagnosisProblem {
        &self.problem
    }

    /// The knowledge base the session was started with.
    pub fn initial_kb(&self) -> &KnowledgeBase {
        &self.initial_kb
    }

    /// The knowledge base with every collected test case applied.
    pub fn kb(&self) -> &KnowledgeBase {
        &self.problem.kb
    }

    pub fn leading(&self) -> &[Diagnosis] {
        &self.leading
    }

    pub fn beliefs(&self) -> &BeliefState {
        &self.beliefs
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn accumulated_tests(&self) -> &[TestCase] {
        &self.accumulated_tests
    }

    pub fn pending_query(&self) -> Option<&Query> {
        self.pending.as_ref()
    }

    pub fn queries_asked(&self) -> usize {
        self.history.len()
    }

    pub fn is_terminal(&self) -> bool {
        self.status != Status::AwaitingAnswer
    }

    /// Diagnoses by descending posterior.
    pub fn ranked(&self) -> Vec<(&Diagnosis, f64)> {
        self.beliefs
            .ranked()
            .into_iter()
            .map(|(d, p)| (d, *p))
            .collect()
    }

    /// The identified diagnosis once the session is `FINISHED`.
    pub fn final_diagnosis(&self) -> Option<&Diagnosis> {
        match self.status {
            Status::Finished => self.beliefs.top().map(|(d, _)| d),
            _ => None,
        }
    }

    /// In-place [`submit_answer`]; the session is unchanged on error.
    pub fn answer(&mut self, answer: Answer) -> Result<(), SessionError> {
        *self = submit_answer(self, answer)?;
        Ok(())
    }

    fn apply_answer(&mut self, answer: Answer) -> Result<(), SessionError> {
        let query = match (&self.status, self.pending.take()) {
            (Status::AwaitingAnswer, Some(q)) => q,
            (status, pending) => {
                self.pending = pending;
                return Err(SessionError::InvalidState(*status));
            }
        };
        let beliefs = bayes_update(&self.beliefs, &query, answer)?;
        let eliminated: Vec<Diagnosis> = self
            .leading
            .iter()
            .filter(|d| beliefs.probability(d).is_none())
            .cloned()
            .collect();

        let section = match answer {
            Answer::Yes => Section::Positive,
            Answer::No => Section::Negative,
        };
        let test_id = self.problem.kb.fresh_id("q");
        let axiom = Axiom::new(test_id.clone(), query.conjunction());
        self.problem.kb.section_mut(section).push(axiom.clone());
        self.accumulated_tests.push(TestCase { section, axiom });
        self.history.push(HistoryEntry {
            query,
            answer,
            test_id,
            eliminated,
        });

        let survivors: Vec<Diagnosis> = beliefs.diagnoses().cloned().collect();
        let leading = self.refill_leading(&survivors)?;
        self.beliefs = if leading == survivors {
            beliefs
        } else {
            self.replayed_beliefs(&leading)?
        };
        self.leading = leading;
        self.advance()
    }

    /// Keeps every surviving diagnosis and tops up with the next canonical
    /// minimal diagnoses of the updated knowledge base.
    fn refill_leading(&self, survivors: &[Diagnosis]) -> Result<Vec<Diagnosis>, SessionError> {
        let mut leading = survivors.to_vec();
        if leading.len() < self.problem.max_leading {
            let fresh = HsTree::new(&self.problem.kb).diagnoses(self.problem.max_leading)?;
            for d in fresh {
                if leading.len() >= self.problem.max_leading {
                    break;
                }
                if !leading.contains(&d) {
                    leading.push(d);
                }
            }
        }
        leading.sort();
        Ok(leading)
    }

    /// Prior mass times the likelihood of every recorded answer, renormalized.
    /// Diagnoses not covered by a historical query are re-partitioned against
    /// the knowledge base as it stood when that query was asked.
    fn replayed_beliefs(&self, leading: &[Diagnosis]) -> Result<BeliefState, SessionError> {
        let mut masses: Vec<f64> = prior_masses(
            leading,
            &self.initial_kb,
            &self.fault_model,
            &self.prior_overrides,
        );
        let mut kb = self.initial_kb.clone();
        for (entry, test) in self.history.iter().zip(&self.accumulated_tests) {
            let asked_of = entry
                .query
                .dp()
                .iter()
                .chain(entry.query.dn())
                .chain(entry.query.d0());
            let asked_of: Vec<&Diagnosis> = asked_of.collect();
            for (d, m) in leading.iter().zip(masses.iter_mut()) {
                let l: f64 = if asked_of.contains(&d) {
                    answer_likelihood(&entry.query, d, entry.answer)
                } else {
                    let part = partition(&kb, &entry.query.sentences, std::slice::from_ref(d));
                    let single = Query::new(entry.query.sentences.clone(), part);
                    answer_likelihood(&single, d, entry.answer)
                };
                *m *= l;
            }
            kb.section_mut(test.section).push(test.axiom.clone());
        }
        Beliefs::from_masses(leading.iter().cloned().zip(masses))
            .ok_or(SelectionError::ZeroEvidence.into())
    }

    /// Applies the stop rule, otherwise selects the next query.
    fn advance(&mut self) -> Result<(), SessionError> {
        self.pending = None;
        let top = self.beliefs.top().map(|(_, p)| *p).unwrap_or(0.0);
        // at sigma = 1 only elimination counts; a rounded-up posterior does not
        let confident = top >= self.sigma && (self.sigma < 1.0 || self.beliefs.len() == 1);
        if self.beliefs.len() <= 1 || confident {
            self.status = Status::Finished;
            return Ok(());
        }
        let asked: Vec<&[Sentence]> = self
            .history
            .iter()
            .map(|h| h.query.sentences.as_slice())
            .collect();
        let pool: Vec<Query> = generate_queries(&self.problem.kb, &self.leading)?
            .into_iter()
            .filter(|q| !asked.contains(&q.sentences.as_slice()))
            .collect();
        if pool.is_empty() {
            self.status = Status::NoDiscriminatingQuery;
            return Ok(());
        }
        let chosen = self.selector.select(&pool, &self.beliefs)?;
        self.pending = Some(minimize_query(&self.problem.kb, chosen));
        self.status = Status::AwaitingAnswer;
        Ok(())
    }

    /// Replays the recorded answers from scratch.
    pub fn replay(&self) -> Result<DebugSession, SessionError> {
        let config = SessionConfig {
            strategy: self.strategy,
            fault_model: self.fault_model,
            sigma: self.sigma,
            max_leading: self.problem.max_leading,
            prior_overrides: self.prior_overrides.clone(),
        };
        let mut s = start_session(self.initial_kb.clone(), config)?;
        for h in &self.history {
            s.answer(h.answer)?;
        }
        Ok(s)
    }
}

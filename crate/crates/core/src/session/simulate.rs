use serde::{Deserialize, Serialize};

use super::{start_session, DebugSession, SessionConfig, SessionError, Status};
use crate::diagnosis::{is_valid_candidate, Diagnosis};
use crate::logic::{entails, Axiom, KnowledgeBase};
use crate::query::Query;
use crate::selection::{Answer, Strategy};

/// The intended knowledge base: `(O \ target_diagnosis) ∪ extension`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub target_diagnosis: Diagnosis,
    #[serde(default)]
    pub extension: Vec<Axiom>,
}

impl TargetSpec {
    pub fn new(target_diagnosis: Diagnosis) -> Self {
        Self {
            target_diagnosis,
            extension: Vec::new(),
        }
    }

    pub fn validate(&self, kb: &KnowledgeBase) -> Result<(), SessionError> {
        match is_valid_candidate(kb, self.target_diagnosis.ids()) {
            Ok(true) => Ok(()),
            Ok(false) => Err(SessionError::InvalidTarget(format!(
                "{} is not a valid diagnosis",
                self.target_diagnosis
            ))),
            Err(e) => Err(SessionError::InvalidTarget(e.to_string())),
        }
    }
}

/// Something that answers queries.
pub trait Oracle {
    fn answer(&mut self, session: &DebugSession, query: &Query) -> Answer;
}

/// Answers yes iff the target knowledge base, together with the background
/// and the positive tests collected so far, entails the query.
#[derive(Clone, Debug)]
pub struct SimulatedOracle {
    target: TargetSpec,
}

impl SimulatedOracle {
    pub fn new(target: TargetSpec) -> Self {
        Self { target }
    }
}

impl Oracle for SimulatedOracle {
    fn answer(&mut self, session: &DebugSession, query: &Query) -> Answer {
        let kb = session.kb();
        let kept = kb
            .ontology
            .iter()
            .filter(|ax| !self.target.target_diagnosis.contains(&ax.id));
        let premises = kept
            .chain(&kb.background)
            .chain(&kb.positive)
            .chain(&self.target.extension)
            .map(|ax| &ax.formula);
        if entails(premises, &query.conjunction()) {
            Answer::Yes
        } else {
            Answer::No
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub status: Status,
    pub final_diagnosis: Option<Diagnosis>,
    pub ranked: Vec<(Diagnosis, f64)>,
    pub queries_asked: usize,
    /// Only known for simulated sessions.
    pub correct: Option<bool>,
    pub strategy: Strategy,
}

impl SessionResult {
    pub fn of(session: &DebugSession, target: Option<&TargetSpec>) -> Self {
        let final_diagnosis = session.final_diagnosis().cloned();
        Self {
            status: session.status(),
            correct: target.map(|t| final_diagnosis.as_ref() == Some(&t.target_diagnosis)),
            final_diagnosis,
            ranked: session
                .ranked()
                .into_iter()
                .map(|(d, p)| (d.clone(), p))
                .collect(),
            queries_asked: session.queries_asked(),
            strategy: session.strategy(),
        }
    }
}

/// Runs a session to completion against a [`SimulatedOracle`] for `target`.
pub fn run_simulated_session(
    kb: KnowledgeBase,
    target: &TargetSpec,
    config: SessionConfig,
) -> Result<DebugSession, SessionError> {
    target.validate(&kb)?;
    let mut oracle = SimulatedOracle::new(target.clone());
    let mut session = start_session(kb, config)?;
    while let Some(q) = session.pending_query() {
        let a = oracle.answer(&session, q);
        session.answer(a)?;
    }
    Ok(session)
}

pub fn run_simulated(
    kb: KnowledgeBase,
    target: &TargetSpec,
    config: SessionConfig,
) -> Result<SessionResult, SessionError> {
    let session = run_simulated_session(kb, target, config)?;
    Ok(SessionResult::of(&session, Some(target)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_kb;

    const KB_B: &str = "[ontology]\na1: A\na2: A -> B\na3: ~B\na4: C\na5: C -> D\na6: ~D\n";
    const KB_C: &str = "[ontology]\na1: A -> B\na2: A -> ~B\n[background]\nb1: A\n";

    fn target(ids: &[&str]) -> TargetSpec {
        TargetSpec::new(Diagnosis::new(ids.iter().copied()))
    }

    #[test]
    fn kb_c_needs_one_query() {
        for strategy in [
            Strategy::Entropy,
            Strategy::Split,
            Strategy::Random { seed: 3 },
        ] {
            for t in ["a1", "a2"] {
                let config = SessionConfig {
                    strategy,
                    ..Default::default()
                };
                let r = run_simulated(parse_kb(KB_C).unwrap(), &target(&[t]), config).unwrap();
                assert_eq!(r.queries_asked, 1);
                assert_eq!(r.correct, Some(true));
            }
        }
    }

    #[test]
    fn kb_b_converges_on_every_target() {
        let kb = parse_kb(KB_B).unwrap();
        for x in ["a1", "a2", "a3"] {
            for y in ["a4", "a5", "a6"] {
                let config = SessionConfig {
                    sigma: 1.0,
                    ..Default::default()
                };
                let s = run_simulated_session(kb.clone(), &target(&[x, y]), config).unwrap();
                assert_eq!(s.status(), Status::Finished);
                assert_eq!(s.final_diagnosis(), Some(&Diagnosis::new([x, y])));
                assert!(s.history().iter().all(|h| !h.eliminated.is_empty()));
            }
        }
    }

    #[test]
    fn invalid_target_is_rejected() {
        let kb = parse_kb(KB_B).unwrap();
        assert!(matches!(
            run_simulated(kb.clone(), &target(&["a1"]), SessionConfig::default()),
            Err(SessionError::InvalidTarget(_))
        ));
        assert!(matches!(
            run_simulated(kb, &target(&["zz"]), SessionConfig::default()),
            Err(SessionError::InvalidTarget(_))
        ));
    }
}

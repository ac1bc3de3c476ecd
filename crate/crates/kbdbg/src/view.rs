//! JSON projections of stored sessions.

use chrono::{DateTime, Utc};
use kbdbg_core::selection::Answer;
use kbdbg_core::session::{DebugSession, Status};
use serde::{Deserialize, Serialize};

use crate::store::SessionRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisView {
    pub axiom_ids: Vec<String>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryView {
    pub sentences: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryView {
    pub sentences: Vec<String>,
    pub answer: Answer,
    pub eliminated: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub status: Status,
    pub strategy: String,
    pub sigma: f64,
    /// Leading diagnoses, most probable first.
    pub diagnoses: Vec<DiagnosisView>,
    pub query: Option<QueryView>,
    pub final_diagnosis: Option<Vec<String>>,
    pub history: Vec<HistoryView>,
    pub queries_asked: usize,
    pub kb_source: String,
}

fn ids(d: &kbdbg_core::diagnosis::Diagnosis) -> Vec<String> {
    d.ids().iter().cloned().collect()
}

pub fn diagnoses_of(session: &DebugSession) -> Vec<DiagnosisView> {
    session
        .ranked()
        .into_iter()
        .map(|(d, p)| DiagnosisView {
            axiom_ids: ids(d),
            probability: p,
        })
        .collect()
}

impl StateView {
    pub fn of(record: &SessionRecord) -> Self {
        let s = &record.session;
        Self {
            id: record.id.clone(),
            created_at: record.created_at,
            status: s.status(),
            strategy: s.strategy().to_string(),
            sigma: s.sigma(),
            diagnoses: diagnoses_of(s),
            query: s.pending_query().map(|q| QueryView {
                sentences: q.sentences.iter().map(ToString::to_string).collect(),
            }),
            final_diagnosis: s.final_diagnosis().map(ids),
            history: s
                .history()
                .iter()
                .map(|h| HistoryView {
                    sentences: h.query.sentences.iter().map(ToString::to_string).collect(),
                    answer: h.answer,
                    eliminated: h.eliminated.iter().map(ids).collect(),
                })
                .collect(),
            queries_asked: s.queries_asked(),
            kb_source: record.kb_source.clone(),
        }
    }
}

//! Fault probabilities, beliefs over diagnoses and query selection.
//!
//! All probability arithmetic is generic over [`Probability`], so the same
//! code runs on `f64` in sessions and on exact rationals in tests. Entropy
//! needs logarithms and is only available for [`FloatProbability`].

mod strategy;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnosis::Diagnosis;
use crate::logic::{Axiom, KnowledgeBase};
use crate::query::Query;
use crate::scalar::{FloatProbability, Probability};

pub use strategy::{select_query, Selector, Strategy, ENTROPY_TIE_TOLERANCE};

/// Probabilities at exactly zero are raised to this before forming priors.
pub const PROBABILITY_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SelectionError {
    #[error("fault probability `{field}` = {value} is outside [0, 1]")]
    InvalidFaultModel { field: &'static str, value: f64 },
    #[error("every diagnosis has zero prior mass")]
    DegenerateModel,
    #[error("the answer history rules out every diagnosis")]
    ZeroEvidence,
    #[error("no queries to choose from")]
    EmptyQueryPool,
    #[error("no diagnoses to assign beliefs to")]
    NoDiagnoses,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

impl std::str::FromStr for Answer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "y" => Ok(Answer::Yes),
            "no" | "n" => Ok(Answer::No),
            other => Err(format!("expected `yes` or `no`, got `{other}`")),
        }
    }
}

impl std::fmt::Display for Answer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        })
    }
}

/// Per-occurrence fault beliefs for each connective plus a per-axiom baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultModel {
    pub p_not: f64,
    pub p_and: f64,
    pub p_or: f64,
    pub p_implies: f64,
    pub p_iff: f64,
    pub p_base: f64,
}

impl Default for FaultModel {
    /// Negation and implication are assumed the most error-prone.
    fn default() -> Self {
        Self {
            p_not: 0.025,
            p_and: 0.005,
            p_or: 0.005,
            p_implies: 0.015,
            p_iff: 0.015,
            p_base: 0.001,
        }
    }
}

impl FaultModel {
    pub fn zero() -> Self {
        Self {
            p_not: 0.0,
            p_and: 0.0,
            p_or: 0.0,
            p_implies: 0.0,
            p_iff: 0.0,
            p_base: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SelectionError> {
        let fields = [
            ("p_not", self.p_not),
            ("p_and", self.p_and),
            ("p_or", self.p_or),
            ("p_implies", self.p_implies),
            ("p_iff", self.p_iff),
            ("p_base", self.p_base),
        ];
        for (field, value) in fields {
            if !(0.0..=1.0).contains(&value) {
                return Err(SelectionError::InvalidFaultModel { field, value });
            }
        }
        Ok(())
    }
}

/// `1 − (1 − p_base) · Π_c (1 − p_c)^{count_c}` over the axiom's connectives.
pub fn axiom_fault_prob<P: Probability>(ax: &Axiom, fm: &FaultModel) -> P {
    let counts = ax.formula.connective_counts();
    let mut survive = P::one() - P::lit(fm.p_base);
    for (p, n) in [
        (fm.p_not, counts.not),
        (fm.p_and, counts.and),
        (fm.p_or, counts.or),
        (fm.p_implies, counts.implies),
        (fm.p_iff, counts.iff),
    ] {
        let keep = P::one() - P::lit(p);
        for _ in 0..n {
            survive = survive * keep.clone();
        }
    }
    P::one() - survive
}

/// Unnormalized prior mass of each diagnosis, in `leading` order.
///
/// `overrides` replaces the connective-derived probability of individual
/// axioms.
pub fn prior_masses<P: Probability>(
    leading: &[Diagnosis],
    kb: &KnowledgeBase,
    fm: &FaultModel,
    overrides: &BTreeMap<String, f64>,
) -> Vec<P> {
    let floor = P::lit(PROBABILITY_FLOOR);
    let probs: Vec<(&str, P)> = kb
        .ontology
        .iter()
        .map(|ax| {
            let p = match overrides.get(&ax.id) {
                Some(&v) => P::lit(v),
                None => axiom_fault_prob(ax, fm),
            };
            let p = if p.is_zero() { floor.clone() } else { p };
            (ax.id.as_str(), p)
        })
        .collect();
    leading
        .iter()
        .map(|d| {
            probs.iter().fold(P::one(), |acc, (id, p)| {
                if d.contains(id) {
                    acc * p.clone()
                } else {
                    acc * (P::one() - p.clone())
                }
            })
        })
        .collect()
}

/// Normalized priors: `p(D) ∝ Π_{ax∈D} p(ax) · Π_{ax∈O\D} (1 − p(ax))`.
pub fn diagnosis_priors<P: Probability>(
    leading: &[Diagnosis],
    kb: &KnowledgeBase,
    fm: &FaultModel,
) -> Result<Beliefs<P>, SelectionError> {
    diagnosis_priors_with(leading, kb, fm, &BTreeMap::new())
}

pub fn diagnosis_priors_with<P: Probability>(
    leading: &[Diagnosis],
    kb: &KnowledgeBase,
    fm: &FaultModel,
    overrides: &BTreeMap<String, f64>,
) -> Result<Beliefs<P>, SelectionError> {
    if leading.is_empty() {
        return Err(SelectionError::NoDiagnoses);
    }
    let masses = prior_masses(leading, kb, fm, overrides);
    Beliefs::from_masses(leading.iter().cloned().zip(masses)).ok_or(SelectionError::DegenerateModel)
}

/// A probability distribution over the leading diagnoses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Beliefs<P> {
    entries: Vec<BeliefEntry<P>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefEntry<P> {
    pub diagnosis: Diagnosis,
    pub probability: P,
}

impl<P: Probability> Beliefs<P> {
    /// Normalizes nonnegative masses, dropping zero entries. `None` when the
    /// total mass is zero.
    pub fn from_masses<I: IntoIterator<Item = (Diagnosis, P)>>(masses: I) -> Option<Self> {
        let kept: Vec<(Diagnosis, P)> = masses.into_iter().filter(|(_, m)| !m.is_zero()).collect();
        let total = kept.iter().fold(P::zero(), |acc, (_, m)| acc + m.clone());
        if total.is_zero() {
            return None;
        }
        Some(Self {
            entries: kept
                .into_iter()
                .map(|(diagnosis, m)| BeliefEntry {
                    diagnosis,
                    probability: m / total.clone(),
                })
                .collect(),
        })
    }

    pub fn uniform(diagnoses: &[Diagnosis]) -> Option<Self> {
        Self::from_masses(diagnoses.iter().cloned().map(|d| (d, P::one())))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Diagnosis, &P)> {
        self.entries.iter().map(|e| (&e.diagnosis, &e.probability))
    }

    pub fn diagnoses(&self) -> impl Iterator<Item = &Diagnosis> {
        self.entries.iter().map(|e| &e.diagnosis)
    }

    pub fn probability(&self, d: &Diagnosis) -> Option<&P> {
        self.entries
            .iter()
            .find(|e| &e.diagnosis == d)
            .map(|e| &e.probability)
    }

    pub fn total(&self) -> P {
        self.entries
            .iter()
            .fold(P::zero(), |acc, e| acc + e.probability.clone())
    }

    /// Entries by descending probability; ties keep canonical diagnosis order.
    pub fn ranked(&self) -> Vec<(&Diagnosis, &P)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| {
            b.1.partial_cmp(a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(b.0))
        });
        v
    }

    pub fn top(&self) -> Option<(&Diagnosis, &P)> {
        self.ranked().into_iter().next()
    }
}

/// Likelihood of `answer` for a diagnosis in the given partition cell.
fn likelihood<P: Probability>(cell: Cell, answer: Answer) -> P {
    match (cell, answer) {
        (Cell::Positive, Answer::Yes) | (Cell::Negative, Answer::No) => P::one(),
        (Cell::Positive, Answer::No) | (Cell::Negative, Answer::Yes) => P::zero(),
        (Cell::Neutral, _) => P::half(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Positive,
    Negative,
    Neutral,
}

/// Cell of `d` in `q`'s partition. Diagnoses outside the partition count as neutral.
pub fn cell_of(q: &Query, d: &Diagnosis) -> Cell {
    if q.dp().contains(d) {
        Cell::Positive
    } else if q.dn().contains(d) {
        Cell::Negative
    } else {
        Cell::Neutral
    }
}

/// Likelihood of `answer` to `q` under diagnosis `d`.
pub fn answer_likelihood<P: Probability>(q: &Query, d: &Diagnosis, answer: Answer) -> P {
    likelihood(cell_of(q, d), answer)
}

/// `(p_yes, p_no)` with `p_yes = Σ_dp p + ½ Σ_d0 p` and `p_no = 1 − p_yes`.
pub fn answer_probability<P: Probability>(q: &Query, b: &Beliefs<P>) -> (P, P) {
    let dp: HashSet<&Diagnosis> = q.dp().iter().collect();
    let dn: HashSet<&Diagnosis> = q.dn().iter().collect();
    let mut yes = P::zero();
    let mut neutral = P::zero();
    for (d, p) in b.iter() {
        if dp.contains(d) {
            yes = yes + p.clone();
        } else if !dn.contains(d) {
            neutral = neutral + p.clone();
        }
    }
    let p_yes = yes + neutral * P::half();
    let p_no = P::one() - p_yes.clone();
    (p_yes, p_no)
}

/// Posterior after `answer`; diagnoses with zero posterior leave the support.
pub fn bayes_update<P: Probability>(
    b: &Beliefs<P>,
    q: &Query,
    answer: Answer,
) -> Result<Beliefs<P>, SelectionError> {
    Beliefs::from_masses(b.iter().map(|(d, p)| {
        let l: P = answer_likelihood(q, d, answer);
        (d.clone(), p.clone() * l)
    }))
    .ok_or(SelectionError::ZeroEvidence)
}

/// Shannon entropy in bits; `0 · log 0 = 0`.
pub fn entropy<P: FloatProbability>(b: &Beliefs<P>) -> P {
    b.iter()
        .filter(|(_, p)| **p > P::zero())
        .fold(P::zero(), |acc, (_, &p)| acc - p * p.log2())
}

/// Expected posterior entropy over both answers.
pub fn expected_entropy<P: FloatProbability>(q: &Query, b: &Beliefs<P>) -> P {
    let (p_yes, p_no) = answer_probability(q, b);
    [(p_yes, Answer::Yes), (p_no, Answer::No)]
        .into_iter()
        .filter(|(p, _)| *p > P::zero())
        .fold(P::zero(), |acc, (p, a)| match bayes_update(b, q, a) {
            Ok(post) => acc + p * entropy(&post),
            Err(_) => acc,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_kb};
    use crate::query::{Partition, Sentence};
    use num_rational::BigRational;

    fn d(id: &str) -> Diagnosis {
        Diagnosis::new([id])
    }

    fn ds(n: usize) -> Vec<Diagnosis> {
        (1..=n).map(|i| d(&format!("D{i}"))).collect()
    }

    fn query(dp: &[usize], dn: &[usize], d0: &[usize]) -> Query {
        let pick = |ix: &[usize]| ix.iter().map(|&i| d(&format!("D{i}"))).collect();
        Query::new(
            vec![Sentence::literal("X", true)],
            Partition {
                dp: pick(dp),
                dn: pick(dn),
                d0: pick(d0),
            },
        )
    }

    fn beliefs(ps: &[f64]) -> Beliefs<f64> {
        Beliefs::from_masses(ds(ps.len()).into_iter().zip(ps.iter().copied())).unwrap()
    }

    fn rat(n: i64, m: i64) -> BigRational {
        BigRational::new(n.into(), m.into())
    }

    #[test]
    fn axiom_probabilities() {
        let ax = |t: &str| Axiom::new("x", parse_formula(t).unwrap());
        assert_eq!(
            axiom_fault_prob::<f64>(&ax("~A & (B -> C)"), &FaultModel::zero()),
            0.0
        );
        let fm = FaultModel {
            p_not: 0.5,
            p_and: 0.5,
            ..FaultModel::zero()
        };
        assert_eq!(
            axiom_fault_prob::<BigRational>(&ax("~A & B"), &fm),
            rat(3, 4)
        );
        let base = FaultModel {
            p_base: 0.1,
            ..FaultModel::zero()
        };
        assert!((axiom_fault_prob::<f64>(&ax("A"), &base) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn priors_three_singletons() {
        let kb = parse_kb("[ontology]\nax1: A\nax2: B\nax3: C\n").unwrap();
        let fm = FaultModel {
            p_base: 0.1,
            ..FaultModel::zero()
        };
        let leading = vec![d("ax1"), d("ax2"), d("ax3")];
        let masses: Vec<f64> = prior_masses(&leading, &kb, &fm, &BTreeMap::new());
        for m in &masses {
            assert!((m - 0.081).abs() < 1e-12);
        }
        let b: Beliefs<f64> = diagnosis_priors(&leading, &kb, &fm).unwrap();
        for (_, p) in b.iter() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn priors_with_unequal_axioms_are_exact() {
        let kb = parse_kb("[ontology]\nax1: A\nax2: B\n").unwrap();
        let overrides = BTreeMap::from([("ax1".to_string(), 0.5), ("ax2".to_string(), 0.25)]);
        let leading = vec![d("ax1"), d("ax2")];
        let b: Beliefs<BigRational> =
            diagnosis_priors_with(&leading, &kb, &FaultModel::zero(), &overrides).unwrap();
        assert_eq!(b.probability(&d("ax1")), Some(&rat(3, 4)));
        assert_eq!(b.probability(&d("ax2")), Some(&rat(1, 4)));
    }

    #[test]
    fn zero_probabilities_are_floored() {
        let kb = parse_kb("[ontology]\nax1: A\nax2: B\n").unwrap();
        let b: Beliefs<f64> =
            diagnosis_priors(&[d("ax1"), d("ax2")], &kb, &FaultModel::zero()).unwrap();
        assert_eq!(b.len(), 2);
        assert!((b.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certain_faults_can_degenerate() {
        let kb = parse_kb("[ontology]\nax1: A\nax2: B\n").unwrap();
        let fm = FaultModel {
            p_base: 1.0,
            ..FaultModel::zero()
        };
        let r: Result<Beliefs<f64>, _> = diagnosis_priors(&[d("ax1"), d("ax2")], &kb, &fm);
        assert_eq!(r, Err(SelectionError::DegenerateModel));
    }

    #[test]
    fn fault_model_validation_and_json() {
        assert!(FaultModel::default().validate().is_ok());
        let bad = FaultModel {
            p_or: 1.5,
            ..FaultModel::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(SelectionError::InvalidFaultModel { field: "p_or", .. })
        ));
        let json = serde_json::to_value(FaultModel::default()).unwrap();
        assert_eq!(json.as_object().unwrap().len(), 6);
        assert_eq!(json["p_not"], 0.025);
        assert!(serde_json::from_str::<FaultModel>(r#"{"p_not":0.1}"#).is_err());
    }

    #[test]
    fn answer_probabilities() {
        let u = Beliefs::<f64>::uniform(&ds(4)).unwrap();
        assert_eq!(
            answer_probability(&query(&[1, 2], &[3, 4], &[]), &u),
            (0.5, 0.5)
        );
        assert_eq!(
            answer_probability(&query(&[1], &[2, 3, 4], &[]), &u),
            (0.25, 0.75)
        );
        let b = beliefs(&[0.4, 0.3, 0.2, 0.1]);
        let (yes, no) = answer_probability(&query(&[1], &[3, 4], &[2]), &b);
        assert!((yes - 0.55).abs() < 1e-12);
        assert_eq!(yes + no, 1.0);
    }

    #[test]
    fn bayes_update_exact() {
        let priors = Beliefs::from_masses(ds(4).into_iter().zip([
            rat(4, 10),
            rat(3, 10),
            rat(2, 10),
            rat(1, 10),
        ]))
        .unwrap();
        let post = bayes_update(&priors, &query(&[1, 2], &[3, 4], &[]), Answer::Yes).unwrap();
        assert_eq!(post.len(), 2);
        assert_eq!(post.probability(&d("D1")), Some(&rat(4, 7)));
        assert_eq!(post.probability(&d("D2")), Some(&rat(3, 7)));
        assert_eq!(post.probability(&d("D3")), None);
    }

    #[test]
    fn bayes_update_cases() {
        let u = Beliefs::<f64>::uniform(&ds(2)).unwrap();
        let post = bayes_update(&u, &query(&[1], &[2], &[]), Answer::No).unwrap();
        assert_eq!(
            post.iter()
                .map(|(d, p)| (d.clone(), *p))
                .collect::<Vec<_>>(),
            vec![(d("D2"), 1.0)]
        );

        let half = Beliefs::<BigRational>::uniform(&ds(2)).unwrap();
        let post = bayes_update(&half, &query(&[1], &[], &[2]), Answer::Yes).unwrap();
        assert_eq!(post.probability(&d("D1")), Some(&rat(2, 3)));
        assert_eq!(post.probability(&d("D2")), Some(&rat(1, 3)));

        let only_dn = Beliefs::<f64>::uniform(&ds(1)).unwrap();
        assert_eq!(
            bayes_update(&only_dn, &query(&[], &[1], &[]), Answer::Yes),
            Err(SelectionError::ZeroEvidence)
        );
    }

    #[test]
    fn expected_entropy_values() {
        let u = Beliefs::<f64>::uniform(&ds(4)).unwrap();
        assert!((entropy(&u) - 2.0).abs() < 1e-12);
        let even = expected_entropy(&query(&[1, 2], &[3, 4], &[]), &u);
        assert!((even - 1.0).abs() < 1e-12);
        let skewed = expected_entropy(&query(&[1], &[2, 3, 4], &[]), &u);
        assert!((skewed - 0.75 * 3f64.log2()).abs() < 1e-12);
        assert!((skewed - 1.1887).abs() < 1e-4);

        let sure = Beliefs::<f64>::uniform(&ds(1)).unwrap();
        assert_eq!(expected_entropy(&query(&[1], &[2], &[]), &sure), 0.0);

        let u32 = Beliefs::<f32>::uniform(&ds(4)).unwrap();
        assert!((expected_entropy(&query(&[1, 2], &[3, 4], &[]), &u32) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ranking_breaks_ties_canonically() {
        let b = beliefs(&[0.2, 0.4, 0.4]);
        let ranked: Vec<_> = b.ranked().into_iter().map(|(d, _)| d.clone()).collect();
        assert_eq!(ranked, vec![d("D2"), d("D3"), d("D1")]);
        assert_eq!(b.top().unwrap().0, &d("D2"));
    }

    #[test]
    fn answers_parse() {
        assert_eq!("YES".parse::<Answer>(), Ok(Answer::Yes));
        assert_eq!("n".parse::<Answer>(), Ok(Answer::No));
        assert!("maybe".parse::<Answer>().is_err());
        assert_eq!(serde_json::to_string(&Answer::No).unwrap(), "\"no\"");
    }
}

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SessionError, TargetSpec};
use crate::diagnosis::Diagnosis;
use crate::logic::{Axiom, Formula, KnowledgeBase};

/// Shape of a generated faulty knowledge base.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Independent conflicts; every diagnosis takes one axiom from each.
    pub groups: usize,
    /// Axioms per conflict, at least 2.
    pub group_size: usize,
    /// Atoms of the consistent base ontology.
    pub base_atoms: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            groups: 2,
            group_size: 3,
            base_atoms: 3,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), SessionError> {
        if self.groups == 0 {
            return Err(SessionError::InvalidParameter(
                "groups must be at least 1".into(),
            ));
        }
        if self.group_size < 2 {
            return Err(SessionError::InvalidParameter(
                "group_size must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

fn lit(atom: &str, positive: bool) -> Formula {
    if positive {
        Formula::atom(atom)
    } else {
        Formula::not(Formula::atom(atom))
    }
}

/// A satisfiable base ontology plus `groups` disjoint conflict chains
/// `G0, G0 -> G1, ..., ~G{k-2}`, with one target axiom drawn per chain.
///
/// Axioms are named `o{j}` (base) and `g{i}_{j}` (chain `i`, 1-based `j`).
pub fn generate_faulty_kb(
    params: GeneratorParams,
    seed: u64,
) -> Result<(KnowledgeBase, TargetSpec), SessionError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kb = KnowledgeBase::default();

    let atoms: Vec<String> = (1..=params.base_atoms).map(|j| format!("S{j}")).collect();
    let truth: Vec<bool> = atoms.iter().map(|_| rng.random()).collect();
    for j in 0..atoms.len() {
        let own = lit(&atoms[j], truth[j]);
        let formula = if atoms.len() < 2 {
            own
        } else {
            let k = (j + rng.random_range(1..atoms.len())) % atoms.len();
            let other = lit(&atoms[k], truth[k]);
            let premise = lit(&atoms[j], rng.random());
            match rng.random_range(0..3) {
                0 => own,
                1 => Formula::implies(premise, other),
                _ => Formula::or(premise, other),
            }
        };
        kb.ontology.push(Axiom::new(format!("o{}", j + 1), formula));
    }

    let mut target = Vec::new();
    for i in 1..=params.groups {
        let atom = |j: usize| Formula::atom(format!("G{i}_{j}"));
        let k = params.group_size;
        let mut chain = vec![atom(0)];
        chain.extend((1..k - 1).map(|j| Formula::implies(atom(j - 1), atom(j))));
        chain.push(Formula::not(atom(k - 2)));
        let ids: Vec<String> = (1..=k).map(|j| format!("g{i}_{j}")).collect();
        for (id, f) in ids.iter().zip(chain) {
            kb.ontology.push(Axiom::new(id.clone(), f));
        }
        target.push(ids.choose(&mut rng).expect("nonempty group").clone());
    }
    Ok((kb, TargetSpec::new(Diagnosis::new(target))))
}

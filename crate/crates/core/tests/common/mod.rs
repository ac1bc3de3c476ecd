#![allow(dead_code)]

use kbdbg_core::diagnosis::is_valid_candidate;
use kbdbg_core::logic::{parse_kb, Axiom, Formula, KnowledgeBase};
use rand::Rng;
use std::collections::BTreeSet;

pub const KB_A: &str = "[ontology]\na1: A -> B\na2: B -> C\na3: A\na4: ~C\n";
pub const KB_B: &str = "[ontology]\na1: A\na2: A -> B\na3: ~B\na4: C\na5: C -> D\na6: ~D\n";
pub const KB_C: &str = "[ontology]\na1: A -> B\na2: A -> ~B\n[background]\nb1: A\n";

pub fn fixtures() -> Vec<(&'static str, KnowledgeBase)> {
    vec![
        ("KB-A", parse_kb(KB_A).unwrap()),
        ("KB-B", parse_kb(KB_B).unwrap()),
        ("KB-C", parse_kb(KB_C).unwrap()),
    ]
}

pub fn atom_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("P{i}")).collect()
}

pub fn random_formula<R: Rng>(rng: &mut R, atoms: &[String], depth: u32) -> Formula {
    if depth == 0 || rng.random_bool(0.3) {
        let a = Formula::atom(atoms[rng.random_range(0..atoms.len())].clone());
        return if rng.random_bool(0.4) {
            Formula::not(a)
        } else {
            a
        };
    }
    let kind = rng.random_range(0..5);
    let mut sub = || random_formula(rng, atoms, depth - 1);
    match kind {
        0 => Formula::not(sub()),
        1 => Formula::and(sub(), sub()),
        2 => Formula::or(sub(), sub()),
        3 => Formula::implies(sub(), sub()),
        _ => Formula::iff(sub(), sub()),
    }
}

/// A random knowledge base with up to `max_axioms` ontology axioms over up to
/// `max_atoms` atoms whose background and positive tests are feasible.
pub fn random_kb<R: Rng>(rng: &mut R, max_axioms: usize, max_atoms: usize) -> KnowledgeBase {
    loop {
        let atoms = atom_names(rng.random_range(2..=max_atoms));
        let mut kb = KnowledgeBase::default();
        for i in 1..=rng.random_range(2..=max_axioms) {
            let f = random_formula(rng, &atoms, 2);
            kb.ontology.push(Axiom::new(format!("o{i}"), f));
        }
        if rng.random_bool(0.3) {
            kb.background
                .push(Axiom::new("b1", random_formula(rng, &atoms, 1)));
        }
        if rng.random_bool(0.3) {
            kb.positive
                .push(Axiom::new("p1", random_formula(rng, &atoms, 1)));
        }
        if rng.random_bool(0.3) {
            kb.negative
                .push(Axiom::new("n1", random_formula(rng, &atoms, 1)));
        }
        let everything: BTreeSet<String> = kb.ontology_ids().map(str::to_string).collect();
        if is_valid_candidate(&kb, &everything).unwrap() {
            return kb;
        }
    }
}

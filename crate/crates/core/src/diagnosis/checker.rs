use std::cell::RefCell;
use std::collections::HashMap;

use crate::logic::{ClauseSet, Formula, KnowledgeBase, Lit, Solver};

/// Incremental requirement checker for one knowledge base.
///
/// Every ontology axiom and every negated negative test is asserted behind
/// a selector atom, so each check is a single solver call under
/// assumptions over one shared clause set.
#[derive(Clone, Debug)]
pub struct Checker {
    solver: RefCell<Solver>,
    axiom_selectors: Vec<Lit>,
    negative_selectors: Vec<Lit>,
    index: HashMap<String, usize>,
    ids: Vec<String>,
}

impl Checker {
    pub fn new(kb: &KnowledgeBase) -> Self {
        let mut cs = ClauseSet::new();
        for ax in kb.background.iter().chain(&kb.positive) {
            cs.add_formula(&ax.formula);
        }
        let axiom_selectors = kb
            .ontology
            .iter()
            .map(|ax| guard(&mut cs, &ax.formula))
            .collect();
        let negative_selectors = kb
            .negative
            .iter()
            .map(|ax| guard(&mut cs, &Formula::not(ax.formula.clone())))
            .collect();
        let ids: Vec<String> = kb.ontology.iter().map(|a| a.id.clone()).collect();
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Self {
            solver: RefCell::new(Solver::new(&cs)),
            axiom_selectors,
            negative_selectors,
            index,
            ids,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ontology ids in declaration order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// True iff keeping exactly the ontology axioms flagged in `kept`
    /// (plus background and positive tests) is satisfiable and entails no
    /// negative test.
    pub fn is_valid(&self, kept: &[bool]) -> bool {
        let mut assumptions: Vec<Lit> = self
            .axiom_selectors
            .iter()
            .zip(kept)
            .map(|(&s, &k)| if k { s } else { !s })
            .collect();
        assumptions.extend(self.negative_selectors.iter().map(|&s| !s));
        let mut solver = self.solver.borrow_mut();
        if !solver.solve(&assumptions) {
            return false;
        }
        let base = assumptions.len() - self.negative_selectors.len();
        for j in 0..self.negative_selectors.len() {
            assumptions[base + j] = self.negative_selectors[j];
            let refuted = !solver.solve(&assumptions);
            assumptions[base + j] = !self.negative_selectors[j];
            if refuted {
                return false;
            }
        }
        true
    }

    /// Validity when keeping exactly the axioms at `positions`.
    pub fn is_valid_keeping(&self, positions: &[usize]) -> bool {
        let mut kept = vec![false; self.len()];
        for &p in positions {
            kept[p] = true;
        }
        self.is_valid(&kept)
    }
}

fn guard(cs: &mut ClauseSet, f: &Formula) -> Lit {
    let lit = cs.define(f);
    let selector = Lit::new(cs.fresh_var(), true);
    cs.add_clause(vec![!selector, lit]);
    selector
}

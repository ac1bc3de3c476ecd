//! Propositional formulas, knowledge-base files, clause conversion and the
//! satisfiability/entailment oracle used by every other module.

mod cnf;
mod error;
mod formula;
mod kb;
mod parser;
mod sat;

pub use cnf::{AtomTable, ClauseSet, Lit};
pub use error::{LogicError, SyntaxError};
pub use formula::{ConnectiveCounts, Formula};
pub use kb::{Axiom, KnowledgeBase, Section};
pub use parser::{parse_axioms, parse_formula, parse_kb};
pub use sat::{model_of, solve_with, Model, Solver};

pub fn to_cnf<'a, I: IntoIterator<Item = &'a Formula>>(formulas: I) -> ClauseSet {
    ClauseSet::from_formulas(formulas)
}

/// Returns a model over the source atoms when the formulas are jointly satisfiable.
pub fn find_model<'a, I: IntoIterator<Item = &'a Formula>>(formulas: I) -> Option<Model> {
    let cs = to_cnf(formulas);
    solve_with(&cs, &[]).map(|a| model_of(&cs, &a))
}

pub fn is_satisfiable<'a, I: IntoIterator<Item = &'a Formula>>(formulas: I) -> bool {
    solve_with(&to_cnf(formulas), &[]).is_some()
}

/// `premises ⊨ goal`, decided as unsatisfiability of `premises ∪ {¬goal}`.
pub fn entails<'a, I: IntoIterator<Item = &'a Formula>>(premises: I, goal: &Formula) -> bool {
    let mut cs = to_cnf(premises);
    cs.add_formula(&Formula::not(goal.clone()));
    solve_with(&cs, &[]).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(texts: &[&str]) -> Vec<Formula> {
        texts.iter().map(|t| parse_formula(t).unwrap()).collect()
    }

    #[test]
    fn modus_ponens_clash() {
        assert!(!is_satisfiable(&fs(&["A", "A -> B", "~B"])));
    }

    #[test]
    fn empty_set_is_satisfiable() {
        assert!(is_satisfiable(&[]));
        assert!(find_model(&[]).unwrap().is_empty());
    }

    #[test]
    fn entailment_examples() {
        let b = parse_formula("B").unwrap();
        assert!(entails(&fs(&["A", "A -> B"]), &b));
        assert!(entails(&[], &parse_formula("A | ~A").unwrap()));
        assert!(!entails(&fs(&["A"]), &b));
    }

    #[test]
    fn iff_cnf_is_equisatisfiable() {
        let mut cs = to_cnf(&fs(&["A <-> B"]));
        assert!(solve_with(&cs, &[]).is_some());
        let a = cs.atom_lit("A", true);
        let nb = cs.atom_lit("B", false);
        cs.add_clause(vec![a]);
        cs.add_clause(vec![nb]);
        assert!(solve_with(&cs, &[]).is_none());
    }

    #[test]
    fn constants() {
        assert!(!is_satisfiable(&fs(&["false"])));
        assert!(is_satisfiable(&fs(&["true"])));
        assert!(!is_satisfiable(&fs(&["A & ~true"])));
        assert!(entails(&[], &Formula::True));
        assert!(entails(&fs(&["false"]), &parse_formula("Z").unwrap()));
    }

    #[test]
    fn witness_evaluates_true() {
        let set = fs(&["A <-> ~B", "B | C", "C -> (A & ~D)", "~(D <-> A)"]);
        let m = find_model(&set).unwrap();
        assert!(set.iter().all(|f| f.eval(|a| m.get(a))));
    }
}

//! DPLL search with two-watched-literal unit propagation and static
//! occurrence-count branching. No clause learning.

use std::collections::BTreeMap;

use super::cnf::{ClauseSet, Lit};

const UNASSIGNED: i8 = 0;

/// A satisfying assignment restricted to source atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model(BTreeMap<String, bool>);

impl Model {
    pub fn value(&self, atom: &str) -> Option<bool> {
        self.0.get(atom).copied()
    }

    /// Value of `atom`, defaulting to false for atoms the solver never saw.
    pub fn get(&self, atom: &str) -> bool {
        self.value(atom).unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn lit_value(assign: &[i8], lit: Lit) -> i8 {
    let v = assign[lit.var() as usize];
    if lit.is_positive() {
        v
    } else {
        -v
    }
}

#[derive(Clone, Debug)]
struct Level {
    trail_len: usize,
    decision: Lit,
    flipped: bool,
}

#[derive(Clone, Debug)]
struct Dpll {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    assign: Vec<i8>,
    trail: Vec<Lit>,
    qhead: usize,
    levels: Vec<Level>,
    order: Vec<Lit>,
}

impl Dpll {
    fn value(&self, lit: Lit) -> i8 {
        lit_value(&self.assign, lit)
    }

    fn enqueue(&mut self, lit: Lit) {
        self.assign[lit.var() as usize] = if lit.is_positive() { 1 } else { -1 };
        self.trail.push(lit);
    }

    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut watchers = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut conflict = false;
            while i < watchers.len() {
                let ci = watchers[i];
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if lit_value(&self.assign, first) == 1 {
                    i += 1;
                    continue;
                }
                let replacement =
                    (2..clause.len()).find(|&k| lit_value(&self.assign, clause[k]) != -1);
                if let Some(k) = replacement {
                    clause.swap(1, k);
                    let new_watch = clause[1];
                    self.watches[new_watch.code()].push(ci);
                    watchers.swap_remove(i);
                    continue;
                }
                if lit_value(&self.assign, first) == -1 {
                    conflict = true;
                    break;
                }
                self.enqueue(first);
                i += 1;
            }
            let slot = &mut self.watches[false_lit.code()];
            watchers.append(slot);
            *slot = watchers;
            if conflict {
                return false;
            }
        }
        true
    }

    fn undo_to(&mut self, trail_len: usize) {
        for lit in self.trail.drain(trail_len..) {
            self.assign[lit.var() as usize] = UNASSIGNED;
        }
        self.qhead = trail_len;
    }

    /// Chronological backtrack. Returns false when the search space is exhausted.
    fn backtrack(&mut self) -> bool {
        while let Some(level) = self.levels.pop() {
            self.undo_to(level.trail_len);
            if !level.flipped {
                let flipped = !level.decision;
                self.levels.push(Level {
                    trail_len: level.trail_len,
                    decision: flipped,
                    flipped: true,
                });
                self.enqueue(flipped);
                return true;
            }
        }
        false
    }

    fn pick_branch(&self) -> Option<Lit> {
        self.order
            .iter()
            .copied()
            .find(|l| self.assign[l.var() as usize] == UNASSIGNED)
    }

    fn search(&mut self) -> bool {
        loop {
            if !self.propagate() {
                if !self.backtrack() {
                    return false;
                }
                continue;
            }
            match self.pick_branch() {
                None => return true,
                Some(lit) => {
                    self.levels.push(Level {
                        trail_len: self.trail.len(),
                        decision: lit,
                        flipped: false,
                    });
                    self.enqueue(lit);
                }
            }
        }
    }
}

/// A solver over a fixed clause set that can be queried repeatedly under
/// different assumptions. Clauses are prepared and watched once.
#[derive(Clone, Debug)]
pub struct Solver {
    dpll: Dpll,
    root: usize,
    inconsistent: bool,
    model: Vec<bool>,
}

impl Solver {
    pub fn new(cs: &ClauseSet) -> Self {
        Self::with_vars(cs, cs.num_vars())
    }

    /// As [`Solver::new`], reserving at least `nvars` variables.
    pub fn with_vars(cs: &ClauseSet, nvars: usize) -> Self {
        let nvars = nvars.max(cs.num_vars());
        let mut dpll = Dpll {
            clauses: Vec::with_capacity(cs.clauses().len()),
            watches: vec![Vec::new(); 2 * nvars],
            assign: vec![UNASSIGNED; nvars],
            trail: Vec::with_capacity(nvars),
            qhead: 0,
            levels: Vec::new(),
            order: Vec::new(),
        };

        let mut pos_count = vec![0u32; nvars];
        let mut neg_count = vec![0u32; nvars];
        let mut units = Vec::new();
        let mut inconsistent = false;
        for clause in cs.clauses() {
            let mut c = clause.clone();
            c.sort_unstable();
            c.dedup();
            if c.windows(2).any(|w| w[0].var() == w[1].var()) {
                continue; // tautology
            }
            for l in &c {
                if l.is_positive() {
                    pos_count[l.var() as usize] += 1;
                } else {
                    neg_count[l.var() as usize] += 1;
                }
            }
            match c.len() {
                0 => inconsistent = true,
                1 => units.push(c[0]),
                _ => {
                    let ci = dpll.clauses.len();
                    dpll.watches[c[0].code()].push(ci);
                    dpll.watches[c[1].code()].push(ci);
                    dpll.clauses.push(c);
                }
            }
        }

        let mut vars: Vec<usize> = (0..nvars).collect();
        vars.sort_by_key(|&v| std::cmp::Reverse(pos_count[v] + neg_count[v]));
        dpll.order = vars
            .into_iter()
            .map(|v| Lit::new(v as u32, pos_count[v] >= neg_count[v]))
            .collect();

        for lit in units {
            match dpll.value(lit) {
                1 => {}
                -1 => inconsistent = true,
                _ => dpll.enqueue(lit),
            }
        }
        if !inconsistent && !dpll.propagate() {
            inconsistent = true;
        }
        let root = dpll.trail.len();
        Self {
            dpll,
            root,
            inconsistent,
            model: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.dpll.assign.len()
    }

    /// Satisfiability with `assumptions` fixed true.
    pub fn solve(&mut self, assumptions: &[Lit]) -> bool {
        if self.inconsistent {
            return false;
        }
        let mut ok = true;
        for &lit in assumptions {
            assert!(
                (lit.var() as usize) < self.num_vars(),
                "assumption on unknown variable"
            );
            match self.dpll.value(lit) {
                1 => {}
                -1 => {
                    ok = false;
                    break;
                }
                _ => self.dpll.enqueue(lit),
            }
        }
        let sat = ok && self.dpll.search();
        if sat {
            self.model.clear();
            self.model.extend(self.dpll.assign.iter().map(|&v| v == 1));
        }
        self.dpll.levels.clear();
        self.dpll.undo_to(self.root);
        sat
    }

    /// Assignment found by the last successful [`Solver::solve`], indexed by variable.
    pub fn model(&self) -> &[bool] {
        &self.model
    }
}

/// Solves `cs` with `assumptions` fixed true. Returns a full assignment
/// indexed by variable on success.
pub fn solve_with(cs: &ClauseSet, assumptions: &[Lit]) -> Option<Vec<bool>> {
    let nvars = assumptions
        .iter()
        .map(|l| l.var() as usize + 1)
        .max()
        .unwrap_or(0);
    let mut solver = Solver::with_vars(cs, nvars);
    solver
        .solve(assumptions)
        .then(|| std::mem::take(&mut solver.model))
}

/// Restricts a raw assignment to the source atoms of `cs`.
pub fn model_of(cs: &ClauseSet, assignment: &[bool]) -> Model {
    Model(
        cs.atoms()
            .source_atoms()
            .map(|(v, name)| (name.to_string(), assignment[v as usize]))
            .collect(),
    )
}

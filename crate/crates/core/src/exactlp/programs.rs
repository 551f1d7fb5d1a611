//! Builders for the three programs over the type lattice.
//!
//! * LP1: the full revenue program over `u(S)` and `q_i(S)`, one incentive
//!   row per ordered pair of types.
//! * LP2: the relaxation over `u(S)` alone with adjacent-type rows.
//! * LP3: the dual of LP2, a flow on the lattice edges `S ∪ {i} -> S`.

use num_traits::{One, Zero};

use super::{LpProblem, Relation, Sense, VarId};
use crate::error::{Error, Result};
use crate::instance::{Lp2Params, OmdInstance};
use crate::rational::Rational;
use crate::subset::Subset;

/// Enumeration limits for the exponential programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guards {
    pub lp1_max_items: usize,
    pub lattice_max_items: usize,
    /// Ignore both limits.
    pub force: bool,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            lp1_max_items: 8,
            lattice_max_items: 14,
            force: false,
        }
    }
}

impl Guards {
    fn check(&self, what: &'static str, n: usize, limit: usize) -> Result<()> {
        if !self.force && n > limit {
            return Err(Error::GuardExceeded { what, n, limit });
        }
        if n >= 32 {
            return Err(Error::GuardExceeded { what, n, limit: 31 });
        }
        Ok(())
    }
}

/// Variable layout of LP1: all `u(S)` first, then `q_i(S)` row-major by `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lp1Vars {
    n: usize,
}

impl Lp1Vars {
    pub fn u(&self, set: Subset) -> VarId {
        set.index()
    }

    pub fn q(&self, set: Subset, item: usize) -> VarId {
        (1 << self.n) + set.index() * self.n + item
    }
}

/// Variable layout of LP2: `u(S)` at index `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lp2Vars;

impl Lp2Vars {
    pub fn u(&self, set: Subset) -> VarId {
        set.index()
    }
}

/// Variable layout of LP3: one flow per lattice edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lp3Vars {
    n: usize,
    ids: Vec<Option<VarId>>,
}

impl Lp3Vars {
    /// Flow on the edge `lower ∪ {item} -> lower`; `item` must be outside `lower`.
    pub fn edge(&self, lower: Subset, item: usize) -> VarId {
        self.ids[lower.index() * self.n + item].expect("item outside the lower endpoint")
    }
}

fn subset_label(set: Subset) -> String {
    set.to_string()
}

pub fn build_lp1(inst: &OmdInstance, guards: &Guards) -> Result<(LpProblem, Lp1Vars)> {
    let n = inst.n();
    guards.check("LP1", n, guards.lp1_max_items)?;
    let vars = Lp1Vars { n };
    let mut lp = LpProblem::new(Sense::Maximize);
    for set in Subset::all(n) {
        lp.add_free(format!("u{}", subset_label(set)));
    }
    for set in Subset::all(n) {
        for i in 0..n {
            lp.add_var(
                format!("q{}{}", i + 1, subset_label(set)),
                Some(Rational::zero()),
                Some(Rational::one()),
            );
        }
    }
    let values: Vec<Vec<Rational>> = Subset::all(n).map(|s| inst.value_vector(s)).collect();
    for set in Subset::all(n) {
        let prob = inst.type_prob(set)?;
        lp.add_objective_term(vars.u(set), -prob.clone());
        for (i, v) in values[set.index()].iter().enumerate() {
            lp.add_objective_term(vars.q(set, i), &prob * v);
        }
    }
    for s in Subset::all(n) {
        for t in Subset::all(n) {
            if s == t {
                continue;
            }
            let mut terms = vec![(vars.u(s), Rational::one()), (vars.u(t), -Rational::one())];
            for i in s.symmetric_difference(t).items() {
                let diff = &values[s.index()][i] - &values[t.index()][i];
                terms.push((vars.q(t, i), -diff));
            }
            lp.add_constraint(
                format!("bic{}{}", subset_label(s), subset_label(t)),
                terms,
                Relation::Ge,
                Rational::zero(),
            );
        }
    }
    for set in Subset::all(n) {
        lp.add_constraint(
            format!("ir{}", subset_label(set)),
            vec![(vars.u(set), Rational::one())],
            Relation::Ge,
            Rational::zero(),
        );
    }
    Ok((lp, vars))
}

pub fn build_lp2(params: &Lp2Params, guards: &Guards) -> Result<(LpProblem, Lp2Vars)> {
    let n = params.n();
    guards.check("LP2", n, guards.lattice_max_items)?;
    let vars = Lp2Vars;
    let mut lp = LpProblem::new(Sense::Maximize);
    for set in Subset::all(n) {
        let id = lp.add_nonneg(format!("u{}", subset_label(set)));
        let weight = params.set_prob(set) * (params.x_sum(set) - params.budget());
        lp.add_objective_term(id, weight);
    }
    for set in Subset::all(n) {
        for i in (0..n).filter(|&i| !set.contains(i)) {
            let upper = set.insert(i);
            lp.add_constraint(
                format!("bic2{}+{}", subset_label(set), i + 1),
                vec![(vars.u(upper), Rational::one()), (vars.u(set), -Rational::one())],
                Relation::Le,
                params.d()[i].clone(),
            );
        }
    }
    Ok((lp, vars))
}

pub fn build_lp3(params: &Lp2Params, guards: &Guards) -> Result<(LpProblem, Lp3Vars)> {
    let n = params.n();
    guards.check("LP3", n, guards.lattice_max_items)?;
    let mut lp = LpProblem::new(Sense::Minimize);
    let mut ids = vec![None; (1 << n) * n];
    for set in Subset::all(n) {
        for i in (0..n).filter(|&i| !set.contains(i)) {
            let id = lp.add_nonneg(format!("f{}->{}", subset_label(set.insert(i)), subset_label(set)));
            lp.add_objective_term(id, params.d()[i].clone());
            ids[set.index() * n + i] = Some(id);
        }
    }
    let vars = Lp3Vars { n, ids };
    for set in Subset::all(n) {
        let mut terms = Vec::new();
        for i in 0..n {
            if set.contains(i) {
                terms.push((vars.edge(set.remove(i), i), Rational::one()));
            } else {
                terms.push((vars.edge(set, i), -Rational::one()));
            }
        }
        let balance = params.set_prob(set) * (params.x_sum(set) - params.budget());
        lp.add_constraint(format!("balance{}", subset_label(set)), terms, Relation::Ge, balance);
    }
    Ok((lp, vars))
}

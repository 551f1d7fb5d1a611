//! Exact rational linear programming.
//!
//! [`LpProblem`] is a plain data description of a linear program. [`solve_lp`]
//! runs a two-phase tableau simplex over [`Rational`]s. Pricing is by largest
//! reduced cost with a fall back to Bland's smallest-index rule on long
//! degenerate runs, so it terminates on degenerate programs and returns
//! identical assignments for identical inputs. It is slow and exact; it is
//! used as the oracle the closed-form constructions are checked against.

mod programs;
mod simplex;

use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub use programs::{build_lp1, build_lp2, build_lp3, Guards, Lp1Vars, Lp2Vars, Lp3Vars};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }

    fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub label: String,
    pub terms: Vec<(VarId, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs(&self, assignment: &[Rational]) -> Rational {
        self.terms.iter().map(|(v, c)| c * &assignment[*v]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    variables: Vec<Variable>,
    sense: Sense,
    objective: Vec<(VarId, Rational)>,
    constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        LpProblem {
            variables: Vec::new(),
            sense,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<Rational>, upper: Option<Rational>) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, Some(Rational::zero()), None)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, None, None)
    }

    /// Adds `coef` to the objective coefficient of `var`.
    pub fn add_objective_term(&mut self, var: VarId, coef: Rational) {
        assert!(var < self.variables.len(), "undeclared variable {var}");
        if coef.is_zero() {
            return;
        }
        match self.objective.iter_mut().find(|(v, _)| *v == var) {
            Some((_, c)) => *c += coef,
            None => self.objective.push((var, coef)),
        }
    }

    pub fn set_sense(&mut self, sense: Sense) {
        self.sense = sense;
    }

    pub fn set_objective(&mut self, sense: Sense, terms: Vec<(VarId, Rational)>) {
        self.sense = sense;
        self.objective.clear();
        for (v, c) in terms {
            self.add_objective_term(v, c);
        }
    }

    /// Adds a row; repeated variables are merged and zero terms dropped.
    pub fn add_constraint(
        &mut self,
        label: impl Into<String>,
        terms: Vec<(VarId, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) {
        let mut merged: Vec<(VarId, Rational)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            assert!(v < self.variables.len(), "undeclared variable {v}");
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some((_, acc)) => *acc += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        self.constraints.push(Constraint {
            label: label.into(),
            terms: merged,
            relation,
            rhs,
        });
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn objective(&self) -> &[(VarId, Rational)] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn objective_value(&self, assignment: &[Rational]) -> Rational {
        self.objective.iter().map(|(v, c)| c * &assignment[*v]).sum()
    }

    /// Labels of every row or bound the assignment violates.
    pub fn violations(&self, assignment: &[Rational]) -> Vec<String> {
        let mut out = Vec::new();
        for (var, value) in self.variables.iter().zip(assignment) {
            if let Some(l) = &var.lower {
                if value < l {
                    out.push(format!("{} >= {}", var.name, rational::format(l)));
                }
            }
            if let Some(u) = &var.upper {
                if value > u {
                    out.push(format!("{} <= {}", var.name, rational::format(u)));
                }
            }
        }
        for c in &self.constraints {
            if !c.relation.holds(&c.lhs(assignment), &c.rhs) {
                out.push(c.label.clone());
            }
        }
        out
    }

    pub fn is_feasible(&self, assignment: &[Rational]) -> bool {
        assignment.len() == self.variables.len() && self.violations(assignment).is_empty()
    }

    /// Text dump: objective, one constraint per line, then bounds.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "maximize",
            Sense::Minimize => "minimize",
        };
        let _ = writeln!(out, "{sense}: {}", self.linear_text(&self.objective));
        let _ = writeln!(out, "subject to");
        for c in &self.constraints {
            let _ = writeln!(
                out,
                "  {}: {} {} {}",
                c.label,
                self.linear_text(&c.terms),
                c.relation.symbol(),
                rational::format(&c.rhs)
            );
        }
        let _ = writeln!(out, "bounds");
        for v in &self.variables {
            let lower = v.lower.as_ref().map_or("-inf".to_string(), rational::format);
            let upper = v.upper.as_ref().map_or("+inf".to_string(), rational::format);
            let _ = writeln!(out, "  {lower} <= {} <= {upper}", v.name);
        }
        out
    }

    fn linear_text(&self, terms: &[(VarId, Rational)]) -> String {
        if terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (v, c)) in terms.iter().enumerate() {
            let name = &self.variables[*v].name;
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = rational::format(&c.abs());
            if k == 0 {
                if c.is_negative() {
                    out.push('-');
                }
            } else {
                let _ = write!(out, " {sign} ");
            }
            let _ = write!(out, "{mag} {name}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal objective value; zero unless `status` is `Optimal`.
    pub value: Rational,
    /// One value per declared variable; empty unless `status` is `Optimal`.
    pub assignment: Vec<Rational>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_assignment(status: LpStatus) -> Self {
        LpSolution {
            status,
            value: Rational::zero(),
            assignment: Vec::new(),
        }
    }
}

/// Solves `prob` exactly.
pub fn solve_lp(prob: &LpProblem) -> LpSolution {
    let sol = simplex::solve(prob);
    if sol.is_optimal() {
        debug_assert!(
            prob.is_feasible(&sol.assignment),
            "simplex returned an infeasible point: {:?}",
            prob.violations(&sol.assignment)
        );
        debug_assert_eq!(prob.objective_value(&sol.assignment), sol.value);
    }
    sol
}

/// Whether `sol` is the only optimal point of `prob`: every variable has the
/// same minimum and maximum over the optimal face.
pub fn unique_optimum(prob: &LpProblem, sol: &LpSolution) -> Result<bool> {
    if !sol.is_optimal() || !prob.is_feasible(&sol.assignment) || prob.objective_value(&sol.assignment) != sol.value {
        return Err(Error::NotOptimal);
    }
    let mut face = prob.clone();
    face.add_constraint("optimal_face", prob.objective.clone(), Relation::Eq, sol.value.clone());
    for var in 0..prob.num_vars() {
        for sense in [Sense::Minimize, Sense::Maximize] {
            face.set_objective(sense, vec![(var, Rational::from_integer(1.into()))]);
            let probe = solve_lp(&face);
            match probe.status {
                LpStatus::Optimal if probe.value == sol.assignment[var] => {}
                LpStatus::Infeasible => return Err(Error::NotOptimal),
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests;

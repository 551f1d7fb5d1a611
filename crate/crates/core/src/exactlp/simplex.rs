//! Two-phase tableau simplex over sparse exact rows.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use super::{LpProblem, LpSolution, LpStatus, Relation, Sense};
use crate::rational::Rational;

type SparseRow = Vec<(usize, Rational)>;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN_LIMIT: usize = 200;

/// How an original variable is expressed through nonnegative columns:
/// `x = offset + sum sign * column`.
struct VarMap {
    offset: Rational,
    columns: Vec<(usize, bool)>,
}

struct RawRow {
    terms: SparseRow,
    relation: Relation,
    rhs: Rational,
}

pub(super) fn solve(prob: &LpProblem) -> LpSolution {
    let n = prob.variables.len();
    let mut lower: Vec<Option<Rational>> = prob.variables.iter().map(|v| v.lower.clone()).collect();
    let mut upper: Vec<Option<Rational>> = prob.variables.iter().map(|v| v.upper.clone()).collect();

    // Rows with a single variable are folded into its bounds.
    let mut general = Vec::new();
    for c in &prob.constraints {
        match c.terms.as_slice() {
            [] => {
                if !c.relation.holds(&Rational::zero(), &c.rhs) {
                    return LpSolution::without_assignment(LpStatus::Infeasible);
                }
            }
            [(var, coef)] => {
                let bound = &c.rhs / coef;
                let relation = if coef.is_negative() { flip(c.relation) } else { c.relation };
                if relation != Relation::Ge {
                    tighten(&mut upper[*var], bound.clone(), Ordering::Less);
                }
                if relation != Relation::Le {
                    tighten(&mut lower[*var], bound, Ordering::Greater);
                }
            }
            _ => general.push(c),
        }
    }
    for v in 0..n {
        if let (Some(l), Some(u)) = (&lower[v], &upper[v]) {
            if l > u {
                return LpSolution::without_assignment(LpStatus::Infeasible);
            }
        }
    }

    let mut maps = Vec::with_capacity(n);
    let mut rows = Vec::new();
    let mut ncols = 0;
    for v in 0..n {
        let map = match (&lower[v], &upper[v]) {
            (Some(l), u) => {
                if let Some(u) = u {
                    rows.push(RawRow {
                        terms: vec![(ncols, Rational::one())],
                        relation: Relation::Le,
                        rhs: u - l,
                    });
                }
                VarMap { offset: l.clone(), columns: vec![(ncols, true)] }
            }
            (None, Some(u)) => VarMap { offset: u.clone(), columns: vec![(ncols, false)] },
            (None, None) => VarMap {
                offset: Rational::zero(),
                columns: vec![(ncols, true), (ncols + 1, false)],
            },
        };
        ncols += map.columns.len();
        maps.push(map);
    }

    let expand = |terms: &[(usize, Rational)]| -> (SparseRow, Rational) {
        let mut out: SparseRow = Vec::new();
        let mut constant = Rational::zero();
        for (v, c) in terms {
            let map = &maps[*v];
            constant += c * &map.offset;
            for &(col, positive) in &map.columns {
                out.push((col, if positive { c.clone() } else { -c }));
            }
        }
        out.sort_by_key(|(col, _)| *col);
        (out, constant)
    };

    for c in general {
        let (terms, constant) = expand(&c.terms);
        rows.push(RawRow { terms, relation: c.relation, rhs: &c.rhs - constant });
    }

    let (mut cost, _) = expand(&prob.objective);
    if prob.sense == Sense::Minimize {
        for (_, c) in cost.iter_mut() {
            *c = -c.clone();
        }
    }

    // Normalize to rhs >= 0 and add slack, surplus and artificial columns.
    let structural = ncols;
    let mut artificial = Vec::new();
    let mut basis = Vec::with_capacity(rows.len());
    let mut tab_rows = Vec::with_capacity(rows.len());
    let mut rhs = Vec::with_capacity(rows.len());
    for mut row in rows {
        if row.rhs.is_negative() || (row.rhs.is_zero() && row.relation == Relation::Ge) {
            for (_, c) in row.terms.iter_mut() {
                *c = -c.clone();
            }
            row.rhs = -row.rhs;
            row.relation = flip(row.relation);
        }
        let mut terms = row.terms;
        match row.relation {
            Relation::Le => {
                terms.push((ncols, Rational::one()));
                basis.push(ncols);
                ncols += 1;
            }
            Relation::Ge => {
                terms.push((ncols, -Rational::one()));
                terms.push((ncols + 1, Rational::one()));
                basis.push(ncols + 1);
                artificial.push(ncols + 1);
                ncols += 2;
            }
            Relation::Eq => {
                terms.push((ncols, Rational::one()));
                basis.push(ncols);
                artificial.push(ncols);
                ncols += 1;
            }
        }
        tab_rows.push(terms);
        rhs.push(row.rhs);
    }

    let mut tab = Tableau {
        rows: tab_rows,
        rhs,
        basis,
        banned: vec![false; ncols],
    };

    if !artificial.is_empty() {
        let mut is_art = vec![false; ncols];
        for &a in &artificial {
            is_art[a] = true;
        }
        let mut phase1 = Objective::new(ncols, artificial.iter().map(|&a| (a, -Rational::one())));
        phase1.price_out(&tab);
        if tab.run(&mut phase1).is_err() {
            unreachable!("phase one objective is bounded by zero");
        }
        if phase1.value.is_negative() {
            return LpSolution::without_assignment(LpStatus::Infeasible);
        }
        tab.drive_out(&is_art);
        for a in artificial {
            tab.banned[a] = true;
        }
    }

    let mut phase2 = Objective::new(ncols, cost.into_iter());
    phase2.price_out(&tab);
    if tab.run(&mut phase2).is_err() {
        return LpSolution::without_assignment(LpStatus::Unbounded);
    }

    let mut col_value = vec![Rational::zero(); structural];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < structural {
            col_value[b] = tab.rhs[r].clone();
        }
    }
    let assignment: Vec<Rational> = maps
        .iter()
        .map(|m| {
            m.columns.iter().fold(m.offset.clone(), |acc, &(col, positive)| {
                if positive {
                    acc + &col_value[col]
                } else {
                    acc - &col_value[col]
                }
            })
        })
        .collect();
    let value = prob.objective_value(&assignment);
    LpSolution { status: LpStatus::Optimal, value, assignment }
}

fn flip(relation: Relation) -> Relation {
    match relation {
        Relation::Le => Relation::Ge,
        Relation::Ge => Relation::Le,
        Relation::Eq => Relation::Eq,
    }
}

/// Replaces `slot` by `bound` when the slot is empty or `bound` compares as
/// `keep_if` against it.
fn tighten(slot: &mut Option<Rational>, bound: Rational, keep_if: Ordering) {
    match slot {
        Some(cur) if bound.cmp(cur) != keep_if => {}
        _ => *slot = Some(bound),
    }
}

/// Reduced-cost row for a maximization: `z = value + sum reduced_j x_j`.
struct Objective {
    reduced: Vec<Rational>,
    value: Rational,
}

impl Objective {
    fn new(ncols: usize, cost: impl Iterator<Item = (usize, Rational)>) -> Self {
        let mut reduced = vec![Rational::zero(); ncols];
        for (col, c) in cost {
            reduced[col] += c;
        }
        Objective { reduced, value: Rational::zero() }
    }

    fn price_out(&mut self, tab: &Tableau) {
        for (r, &b) in tab.basis.iter().enumerate() {
            let factor = self.reduced[b].clone();
            if !factor.is_zero() {
                self.eliminate(&tab.rows[r], &tab.rhs[r], &factor);
            }
        }
    }

    fn eliminate(&mut self, row: &SparseRow, rhs: &Rational, factor: &Rational) {
        for (col, v) in row {
            self.reduced[*col] -= factor * v;
        }
        self.value += factor * rhs;
    }
}

struct Tableau {
    rows: Vec<SparseRow>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    banned: Vec<bool>,
}

struct Unbounded;

fn entry(row: &SparseRow, col: usize) -> Option<&Rational> {
    row.binary_search_by_key(&col, |(c, _)| *c).ok().map(|k| &row[k].1)
}

/// `row - factor * pivot_row`, dropping exact zeros.
fn axpy(row: &SparseRow, pivot_row: &SparseRow, factor: &Rational) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot_row.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot_row.len() {
        let take_row = j == pivot_row.len() || (i < row.len() && row[i].0 < pivot_row[j].0);
        let take_pivot = i == row.len() || (j < pivot_row.len() && pivot_row[j].0 < row[i].0);
        if take_row {
            out.push(row[i].clone());
            i += 1;
        } else if take_pivot {
            out.push((pivot_row[j].0, -(factor * &pivot_row[j].1)));
            j += 1;
        } else {
            let v = &row[i].1 - factor * &pivot_row[j].1;
            if !v.is_zero() {
                out.push((row[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

impl Tableau {
    /// Runs simplex iterations until optimal.
    ///
    /// Entering columns follow the largest reduced cost; after a run of
    /// degenerate pivots the rule falls back to Bland's smallest-index choice
    /// until the objective moves again, which rules out cycling.
    fn run(&mut self, obj: &mut Objective) -> Result<(), Unbounded> {
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run >= DEGENERATE_RUN_LIMIT;
            let Some(s) = self.entering(obj, bland) else {
                return Ok(());
            };
            let mut best: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let Some(a) = entry(&self.rows[r], s) else { continue };
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &best {
                    None => true,
                    Some((br, bv)) => match ratio.cmp(bv) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[r] < self.basis[*br],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            let Some((r, ratio)) = best else {
                return Err(Unbounded);
            };
            if ratio.is_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, s, Some(obj));
        }
    }

    fn entering(&self, obj: &Objective, bland: bool) -> Option<usize> {
        let mut candidates = (0..obj.reduced.len()).filter(|&j| !self.banned[j] && obj.reduced[j].is_positive());
        if bland {
            return candidates.next();
        }
        candidates.fold(None, |best: Option<usize>, j| match best {
            Some(b) if obj.reduced[b] >= obj.reduced[j] => Some(b),
            _ => Some(j),
        })
    }

    fn pivot(&mut self, r: usize, s: usize, obj: Option<&mut Objective>) {
        let piv = entry(&self.rows[r], s).expect("pivot entry present").clone();
        if !piv.is_one() {
            for (_, v) in self.rows[r].iter_mut() {
                *v /= &piv;
            }
            self.rhs[r] /= &piv;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            if let Some(f) = entry(&self.rows[i], s).cloned() {
                self.rows[i] = axpy(&self.rows[i], &prow, &f);
                if !prhs.is_zero() {
                    self.rhs[i] -= &f * &prhs;
                }
            }
        }
        if let Some(obj) = obj {
            let f = obj.reduced[s].clone();
            if !f.is_zero() {
                obj.eliminate(&prow, &prhs, &f);
            }
        }
        self.rows[r] = prow;
        self.basis[r] = s;
    }

    /// Pivots zero-level artificial basics out; rows where that is impossible
    /// are redundant and dropped.
    fn drive_out(&mut self, is_art: &[bool]) {
        let mut r = 0;
        while r < self.rows.len() {
            if !is_art[self.basis[r]] {
                r += 1;
                continue;
            }
            let col = self.rows[r].iter().map(|(c, _)| *c).find(|&c| !is_art[c]);
            match col {
                Some(c) => {
                    self.pivot(r, c, None);
                    r += 1;
                }
                None => {
                    self.rows.remove(r);
                    self.rhs.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }
}

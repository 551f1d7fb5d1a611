//! A single bidder with known item values who, with small probability, has a
//! budget capping her value for any set at `min(sum x_i, budget)`.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactlp::{solve_lp, LpProblem, Relation, Sense};
use crate::instance::json_error_field;
use crate::rational::{self, int, Rational};
use crate::subset::Subset;

/// Largest item count for [`budgeted_oracle_lp`].
pub const MAX_ORACLE_ITEMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetedInstance {
    x: Vec<u64>,
    budget: u64,
    eps: Rational,
}

impl BudgetedInstance {
    /// Requires positive `x` and `budget` and `0 < eps < 1/(1 + sum x)`.
    pub fn new(x: Vec<u64>, budget: u64, eps: Rational) -> Result<Self> {
        if x.is_empty() || x.len() > 64 {
            return Err(Error::InvalidInstance(format!("need 1..=64 items, got {}", x.len())));
        }
        if let Some(i) = x.iter().position(|&v| v == 0) {
            return Err(Error::InvalidInstance(format!("x[{}] must be positive", i + 1)));
        }
        if budget == 0 {
            return Err(Error::InvalidInstance("budget must be positive".into()));
        }
        let total: u128 = x.iter().map(|&v| v as u128).sum();
        let total = u64::try_from(total).map_err(|_| Error::InvalidInstance("sum of x overflows".into()))?;
        let bound = Rational::new(1.into(), (total as u128 + 1).into());
        if !eps.is_positive() || eps >= bound {
            return Err(Error::EpsOutOfRange { eps: rational::format(&eps), bound: rational::format(&bound) });
        }
        Ok(BudgetedInstance { x, budget, eps })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[u64] {
        &self.x
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn total(&self) -> u64 {
        self.x.iter().sum()
    }

    /// Value of the unbudgeted type for `set`.
    pub fn value_unbudgeted(&self, set: Subset) -> u64 {
        set.items().map(|i| self.x[i]).sum()
    }

    /// Value of the budgeted type for `set`.
    pub fn value_budgeted(&self, set: Subset) -> u64 {
        self.value_unbudgeted(set).min(self.budget)
    }
}

/// The largest `sum_{i in T} x_i` not exceeding `budget`, with the
/// lex-smallest `T` attaining it.
pub fn best_affordable_bundle(x: &[u64], budget: u64) -> (u64, Subset) {
    let cap = budget.min(x.iter().sum()) as usize;
    // best[s]: lex-smallest set over the items seen so far with sum exactly s
    let mut best: Vec<Option<Subset>> = vec![None; cap + 1];
    best[0] = Some(Subset::EMPTY);
    for (i, &xi) in x.iter().enumerate() {
        let xi = xi as usize;
        if xi > cap {
            continue;
        }
        for s in (xi..=cap).rev() {
            if best[s].is_none() {
                best[s] = best[s - xi].map(|t| t.insert(i));
            }
        }
    }
    let value = (0..=cap).rev().find(|&s| best[s].is_some()).unwrap_or(0);
    (value as u64, best[value].unwrap_or(Subset::EMPTY))
}

/// One deterministic menu entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Offer {
    pub bundle: Subset,
    pub price: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetedMechanism {
    pub unbudgeted: Offer,
    pub budgeted: Offer,
    pub revenue: Rational,
}

/// The unbudgeted type buys everything at `sum x`; the budgeted type buys
/// the best affordable bundle at its value.
pub fn optimal_budgeted_mechanism(inst: &BudgetedInstance) -> BudgetedMechanism {
    let total = inst.total();
    let (value, witness) = best_affordable_bundle(&inst.x, inst.budget);
    let revenue = (Rational::one() - &inst.eps) * int(total as i64) + &inst.eps * int(value as i64);
    BudgetedMechanism {
        unbudgeted: Offer { bundle: Subset::full(inst.n()), price: total },
        budgeted: Offer { bundle: witness, price: value },
        revenue,
    }
}

/// Outcome of checking the two IR and two incentive constraints of a menu.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MenuCheck {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl MenuCheck {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_menu(inst: &BudgetedInstance, mech: &BudgetedMechanism) -> MenuCheck {
    let utility = |value: fn(&BudgetedInstance, Subset) -> u64, offer: &Offer| value(inst, offer.bundle) as i128 - offer.price as i128;
    let (ua, ub) = (BudgetedInstance::value_unbudgeted, BudgetedInstance::value_budgeted);
    let rows = [
        ("ir unbudgeted", utility(ua, &mech.unbudgeted), 0),
        ("ir budgeted", utility(ub, &mech.budgeted), 0),
        ("unbudgeted prefers own offer", utility(ua, &mech.unbudgeted), utility(ua, &mech.budgeted)),
        ("budgeted prefers own offer", utility(ub, &mech.budgeted), utility(ub, &mech.unbudgeted)),
    ];
    let violations = rows
        .iter()
        .filter(|(_, own, other)| own < other)
        .map(|(label, own, other)| format!("{label}: {own} < {other}"))
        .collect();
    MenuCheck { checked: rows.len(), violations }
}

/// Optimal revenue over all randomized two-type mechanisms, each type
/// receiving a distribution over bundles.
pub fn budgeted_oracle_lp(inst: &BudgetedInstance) -> Result<Rational> {
    let n = inst.n();
    if n > MAX_ORACLE_ITEMS {
        return Err(Error::GuardExceeded { what: "budgeted oracle", n, limit: MAX_ORACLE_ITEMS });
    }
    let mut lp = LpProblem::new(Sense::Maximize);
    let sets: Vec<Subset> = Subset::all(n).collect();
    let pa: Vec<_> = sets.iter().map(|t| lp.add_nonneg(format!("pa{t}"))).collect();
    let pb: Vec<_> = sets.iter().map(|t| lp.add_nonneg(format!("pb{t}"))).collect();
    let ta = lp.add_free("tau_a");
    let tb = lp.add_free("tau_b");
    lp.set_objective(Sense::Maximize, vec![(ta, Rational::one() - &inst.eps), (tb, inst.eps.clone())]);

    let va: Vec<Rational> = sets.iter().map(|&t| int(inst.value_unbudgeted(t) as i64)).collect();
    let vb: Vec<Rational> = sets.iter().map(|&t| int(inst.value_budgeted(t) as i64)).collect();
    let weigh = |vars: &[usize], vals: &[Rational], sign: i64| -> Vec<(usize, Rational)> {
        vars.iter().zip(vals).map(|(&v, c)| (v, c * int(sign))).collect()
    };

    lp.add_constraint("dist_a", pa.iter().map(|&v| (v, Rational::one())).collect(), Relation::Eq, Rational::one());
    lp.add_constraint("dist_b", pb.iter().map(|&v| (v, Rational::one())).collect(), Relation::Eq, Rational::one());

    let mut ir_a = weigh(&pa, &va, 1);
    ir_a.push((ta, int(-1)));
    lp.add_constraint("ir_a", ir_a, Relation::Ge, Rational::zero());
    let mut ir_b = weigh(&pb, &vb, 1);
    ir_b.push((tb, int(-1)));
    lp.add_constraint("ir_b", ir_b, Relation::Ge, Rational::zero());

    let mut ic_a = weigh(&pa, &va, 1);
    ic_a.extend(weigh(&pb, &va, -1));
    ic_a.extend([(ta, int(-1)), (tb, int(1))]);
    lp.add_constraint("ic_a", ic_a, Relation::Ge, Rational::zero());
    let mut ic_b = weigh(&pb, &vb, 1);
    ic_b.extend(weigh(&pa, &vb, -1));
    ic_b.extend([(tb, int(-1)), (ta, int(1))]);
    lp.add_constraint("ic_b", ic_b, Relation::Ge, Rational::zero());

    let sol = solve_lp(&lp);
    if !sol.is_optimal() {
        return Err(Error::Invariant(format!("budgeted oracle LP ended {:?}", sol.status)));
    }
    Ok(sol.value)
}

/// JSON form: `{"x": [..], "budget": .., "eps": "1/5"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetedDoc {
    pub x: Vec<u64>,
    pub budget: u64,
    pub eps: String,
}

impl BudgetedInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: BudgetedDoc = serde_json::from_str(text)
            .map_err(|e| Error::Parse { field: json_error_field(&e), message: e.to_string() })?;
        let eps = rational::parse_field("eps", &doc.eps)?;
        BudgetedInstance::new(doc.x, doc.budget, eps)
    }

    pub fn to_doc(&self) -> BudgetedDoc {
        BudgetedDoc { x: self.x.clone(), budget: self.budget, eps: rational::format(&self.eps) }
    }
}

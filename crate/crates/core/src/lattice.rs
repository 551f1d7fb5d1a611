//! The relaxed dual as a min-cost flow on the subset lattice.
//!
//! Node `S` has balance `p(S) (sum_{i in S} x_i - B)`. Flow moves down the
//! lattice along `S -> S \ {i}` at unit cost `d_i`, so every path from `N`
//! to `S` costs `cost(S) = sum_{i not in S} d_i`. With `N` the only positive
//! node, the optimal flow fills the negative nodes greedily in order of
//! cost, ties broken by [`Subset::lex_cmp`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::instance::Lp2Params;
use crate::rational::{self, Rational};
use crate::subset::Subset;

/// Largest item count for which the lattice is enumerated.
pub const MAX_LATTICE_ITEMS: usize = 20;

/// `sum_{i < m, i not in S} d_i`.
pub fn node_cost(d: &[Rational], set: Subset, m: usize) -> Rational {
    (0..m).filter(|&i| !set.contains(i)).map(|i| &d[i]).sum()
}

/// [`node_cost`] for every subset of `{0..m}`, indexed by [`Subset::index`].
pub fn cost_table(d: &[Rational], m: usize) -> Vec<Rational> {
    let mut costs = Vec::with_capacity(1 << m);
    costs.push(d[..m].iter().sum::<Rational>());
    for k in 1..1usize << m {
        let low = k.trailing_zeros() as usize;
        let prev = &costs[k & (k - 1)];
        costs.push(prev - &d[low]);
    }
    costs
}

/// `p(S) (sum_{i in S} x_i - B)`.
pub fn node_balance(params: &Lp2Params, set: Subset) -> Rational {
    params.set_prob(set) * (params.x_sum(set) - params.budget())
}

/// A proper subset whose balance is nonnegative, if any.
///
/// Since every `x_i > 0`, it suffices to look at the sets `N \ {i}`.
pub fn extra_positive_node(params: &Lp2Params) -> Option<Subset> {
    let n = params.n();
    let full = Subset::full(n);
    (0..n)
        .map(|i| full.remove(i))
        .find(|&s| params.x_sum(s) >= *params.budget())
}

/// Whether `N` is positive and every proper subset is negative.
pub fn check_single_positive(params: &Lp2Params) -> bool {
    params.x_sum(Subset::full(params.n())) >= *params.budget() && extra_positive_node(params).is_none()
}

/// One negative node in fill order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fill {
    pub node: Subset,
    pub cost: Rational,
    pub capacity: Rational,
    pub absorbed: Rational,
}

impl Fill {
    pub fn is_saturated(&self) -> bool {
        self.absorbed == self.capacity
    }
}

/// The canonical greedy solution of the lattice flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSolution {
    n: usize,
    supply: Rational,
    /// Flow on `from -> from \ {item}`, keyed by `(from, item)`.
    flows: BTreeMap<(Subset, usize), Rational>,
    fills: Vec<Fill>,
    partially_filled: Option<Subset>,
    exactly_saturated_boundary: bool,
}

impl FlowSolution {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Net supply emitted by `N`.
    pub fn supply(&self) -> &Rational {
        &self.supply
    }

    /// Negative nodes that received flow, in fill order.
    pub fn fill_order(&self) -> &[Fill] {
        &self.fills
    }

    /// The last node to receive flow when it is strictly below capacity.
    pub fn partially_filled(&self) -> Option<Subset> {
        self.partially_filled
    }

    /// Set when the last node to receive flow is filled exactly to capacity.
    pub fn exactly_saturated_boundary(&self) -> bool {
        self.exactly_saturated_boundary
    }

    /// The highest-cost node that receives flow, whether or not saturated.
    pub fn last_filled(&self) -> Option<Subset> {
        self.fills.last().map(|f| f.node)
    }

    pub fn flow(&self, from: Subset, item: usize) -> Rational {
        self.flows.get(&(from, item)).cloned().unwrap_or_else(Rational::zero)
    }

    /// Edges with positive flow as `(from, item, amount)`.
    pub fn edges(&self) -> impl Iterator<Item = (Subset, usize, &Rational)> {
        self.flows.iter().map(|(&(from, item), f)| (from, item, f))
    }

    /// Inflow minus outflow at `set`.
    pub fn net_inflow(&self, set: Subset) -> Rational {
        let mut net = Rational::zero();
        for i in 0..self.n {
            if set.contains(i) {
                net -= self.flow(set, i);
            } else {
                net += self.flow(set.insert(i), i);
            }
        }
        net
    }

    /// Amount deposited at `set` by the greedy fill.
    pub fn absorbed(&self, set: Subset) -> Rational {
        self.fills
            .iter()
            .find(|f| f.node == set)
            .map(|f| f.absorbed.clone())
            .unwrap_or_else(Rational::zero)
    }

    /// `sum_fills absorbed * cost`.
    pub fn total_cost(&self) -> Rational {
        self.fills.iter().map(|f| &f.absorbed * &f.cost).sum()
    }

    /// `sum_edges flow * d_item`; equals [`FlowSolution::total_cost`].
    pub fn edge_cost(&self, d: &[Rational]) -> Rational {
        self.flows.iter().map(|((_, i), f)| f * &d[*i]).sum()
    }
}

/// Greedy fill of the negative nodes in (cost, lex) order.
///
/// Each node's share is routed from `N` by removing its missing items in
/// increasing index order.
pub fn canonical_solution(params: &Lp2Params) -> Result<FlowSolution> {
    let n = params.n();
    if n > MAX_LATTICE_ITEMS {
        return Err(Error::GuardExceeded { what: "lattice", n, limit: MAX_LATTICE_ITEMS });
    }
    let full = Subset::full(n);
    if params.x_sum(full) < *params.budget() {
        return Err(Error::NoPositiveNode);
    }
    if let Some(node) = extra_positive_node(params) {
        return Err(Error::ExtraPositiveNode(node));
    }
    if params.kappa().is_negative() {
        return Err(Error::InfeasibleParameters {
            budget: rational::format(params.budget()),
            weighted: rational::format(&params.weighted_sum()),
        });
    }

    let supply = node_balance(params, full);
    let mut order: Vec<(Rational, Subset)> = cost_table(params.d(), n)
        .into_iter()
        .zip(Subset::all(n))
        .filter(|&(_, s)| s != full)
        .collect();
    order.sort();

    let mut remaining = supply.clone();
    let mut fills = Vec::new();
    let mut flows: BTreeMap<(Subset, usize), Rational> = BTreeMap::new();
    for (cost, node) in order {
        if remaining.is_zero() {
            break;
        }
        let capacity = -node_balance(params, node);
        let absorbed = if capacity < remaining { capacity.clone() } else { remaining.clone() };
        remaining -= &absorbed;
        let mut at = full;
        for i in full.difference(node).items() {
            *flows.entry((at, i)).or_insert_with(Rational::zero) += &absorbed;
            at = at.remove(i);
        }
        fills.push(Fill { node, cost, capacity, absorbed });
    }
    if !remaining.is_zero() {
        // total capacity is at least the supply whenever B >= sum p_i x_i
        return Err(Error::Invariant("greedy fill ran out of capacity".into()));
    }

    let (partially_filled, exactly_saturated_boundary) = match fills.last() {
        Some(last) if last.is_saturated() => (None, true),
        Some(last) => (Some(last.node), false),
        None => (None, false),
    };
    let solution = FlowSolution {
        n,
        supply,
        flows,
        fills,
        partially_filled,
        exactly_saturated_boundary,
    };
    debug_assert_eq!(solution.total_cost(), solution.edge_cost(params.d()));
    Ok(solution)
}

/// One line per lattice node: subset, cost, balance, absorbed flow.
pub fn lattice_dump(params: &Lp2Params, flow: &FlowSolution) -> String {
    let n = params.n();
    let mut out = String::from("# subset cost balance absorbed\n");
    for set in Subset::all(n) {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            set,
            rational::format(&node_cost(params.d(), set, n)),
            rational::format(&node_balance(params, set)),
            rational::format(&flow.absorbed(set)),
        );
    }
    out
}

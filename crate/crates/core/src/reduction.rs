//! Counting reductions: subset-sum counting to lexicographic rank, and
//! lexicographic rank to the optimal mechanism of a constructed instance.
//!
//! Item indices in `C` and `W` are 0-based here; the item appended by the
//! mechanism construction is index `n`.

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{json_error_field, Lp2Params, OmdInstance};
use crate::lattice::{canonical_solution, cost_table, node_cost, MAX_LATTICE_ITEMS};
use crate::mechanism::closed_form_allocation;
use crate::rational::{self, int, ratio, Rational};
use crate::subset::Subset;

/// Largest ground set for [`lexrank_oracle`].
pub const MAX_LEXRANK_ITEMS: usize = 22;
/// Largest weight vector for the gadget inversion in [`count_subsetsum`].
pub const MAX_SUBSETSUM_ITEMS: usize = 10;

/// `S1 <=_lex S2`: the largest element of `S1 ^ S2` lies in `S2`.
pub fn lex_leq(s1: Subset, s2: Subset) -> bool {
    s1.lex_le(s2)
}

fn weight(c: &[u64], set: Subset) -> u128 {
    set.items().map(|i| c[i] as u128).sum()
}

fn check_positive(field: &str, values: &[u64]) -> Result<()> {
    match values.iter().position(|&v| v == 0) {
        Some(i) => Err(Error::InvalidReduction(format!("{field}[{}] must be positive", i + 1))),
        None => Ok(()),
    }
}

/// Rank of `set` among the sets of the same size, ordered by weight and then
/// by [`lex_leq`]. The set itself counts, so the rank is at least 1.
pub fn lexrank_oracle(c: &[u64], set: Subset) -> Result<u64> {
    let n = c.len();
    if n > MAX_LEXRANK_ITEMS {
        return Err(Error::GuardExceeded { what: "lexrank oracle", n, limit: MAX_LEXRANK_ITEMS });
    }
    if !set.within(n) {
        return Err(Error::InvalidReduction(format!("set {set} is not a subset of 1..{n}")));
    }
    let target = weight(c, set);
    let rank = Subset::of_size(n, set.len())
        .filter(|&t| {
            let w = weight(c, t);
            w < target || (w == target && lex_leq(t, set))
        })
        .count();
    Ok(rank as u64)
}

/// Weights `C_l` and set `S_l` whose lexicographic rank encodes the subset-sum
/// counts of `w` at `target` for sizes up to `ell`.
pub fn subsetsum_gadget(w: &[u64], target: u64, ell: usize) -> Result<(Vec<u64>, Subset)> {
    let n = w.len();
    if ell == 0 || ell > n {
        return Err(Error::InvalidReduction(format!("gadget level {ell} outside 1..={n}")));
    }
    check_positive("W", w)?;
    let overflow = || Error::InvalidReduction("gadget weights overflow 64 bits".into());
    let scale = 4 * n as u64;
    let mut c = Vec::with_capacity(n + ell);
    for &wi in w {
        c.push(wi.checked_mul(scale).ok_or_else(overflow)?);
    }
    let pivot = target
        .checked_mul(scale)
        .and_then(|v| v.checked_add(2 * n as u64))
        .ok_or_else(overflow)?;
    c.push(pivot);
    c.extend(std::iter::repeat_n(1, ell - 1));
    Ok((c, Subset::from_items(n..n + ell)))
}

/// `count[m]` = number of size-`m` subsets of `w` with sum at most `target`.
pub fn count_by_size(w: &[u64], target: u64) -> Result<Vec<u64>> {
    let n = w.len();
    if n > MAX_LEXRANK_ITEMS {
        return Err(Error::GuardExceeded { what: "subset-sum enumeration", n, limit: MAX_LEXRANK_ITEMS });
    }
    let mut count = vec![0u64; n + 1];
    for t in Subset::all(n) {
        if weight(w, t) <= target as u128 {
            count[t.len()] += 1;
        }
    }
    Ok(count)
}

/// Number of subsets of `w`, the empty set included, with sum at most `target`.
pub fn count_subsetsum_direct(w: &[u64], target: u64) -> Result<u64> {
    Ok(count_by_size(w, target)?.iter().sum())
}

/// Per-size counts recovered from the gadget ranks, one level at a time.
///
/// Level `l` gives `rank - 1 = sum_{m <= l} count[m] * binom(l-1, l-m)`, with
/// unit coefficient on `count[l]`, so each level solves for one new count.
pub fn staged_counts(w: &[u64], target: u64) -> Result<Vec<u64>> {
    let n = w.len();
    if n > MAX_SUBSETSUM_ITEMS {
        return Err(Error::GuardExceeded { what: "gadget inversion", n, limit: MAX_SUBSETSUM_ITEMS });
    }
    let mut count = vec![1u64];
    for ell in 1..=n {
        let (c, set) = subsetsum_gadget(w, target, ell)?;
        let rank = lexrank_oracle(&c, set)? as i128;
        let known: i128 = (1..ell)
            .map(|m| count[m] as i128 * binomial(ell as i128 - 1, (ell - m) as i128))
            .sum();
        let next = rank - 1 - known;
        if next < 0 {
            return Err(Error::Invariant(format!("negative count at level {ell}")));
        }
        count.push(next as u64);
    }
    Ok(count)
}

/// [`count_subsetsum_direct`] computed through the gadget inversion.
pub fn count_subsetsum_staged(w: &[u64], target: u64) -> Result<u64> {
    Ok(staged_counts(w, target)?.iter().sum())
}

/// Subset-sum count, computed both ways; disagreement is an error.
pub fn count_subsetsum(w: &[u64], target: u64) -> Result<u64> {
    check_positive("W", w)?;
    let staged = count_subsetsum_staged(w, target)?;
    let direct = count_subsetsum_direct(w, target)?;
    if staged != direct {
        return Err(Error::Invariant(format!("gadget count {staged} != enumeration count {direct}")));
    }
    Ok(direct)
}

fn check_size(n: usize, s: usize) -> Result<()> {
    if s == 0 || s >= n {
        return Err(Error::InvalidReduction(format!("|S| = {s} must lie in 1..={}", n.saturating_sub(1))));
    }
    Ok(())
}

fn pow(base: &Rational, exp: usize) -> Rational {
    num_traits::pow(base.clone(), exp)
}

/// The rational function whose level sets pick the probability of the
/// constructed instance:
///
/// `f(p) = sum_{i=n-s+1}^{n} binom(n,i) p^i (1-p)^(n-i) (2(i+p-n)-1)
///        / (p^(n-s) (1-p)^s (2s-2p+1))`.
pub fn eval_f(n: usize, s: usize, p: &Rational) -> Result<Rational> {
    check_size(n, s)?;
    if !p.is_positive() || *p >= Rational::one() {
        return Err(Error::ProbabilityOutOfRange(rational::format(p)));
    }
    let q = Rational::one() - p;
    let num: Rational = (n - s + 1..=n)
        .map(|i| {
            let slope = int(2) * (int(i as i64) + p - int(n as i64)) - int(1);
            Rational::from_integer(BigInt::from(binomial(n as u64, i as u64))) * pow(p, i) * pow(&q, n - i) * slope
        })
        .sum();
    let den = pow(p, n - s) * pow(&q, s) * (int(2 * s as i64) - int(2) * p + int(1));
    Ok(num / den)
}

/// Bit length of the denominator of `p`.
pub fn denominator_bits(p: &Rational) -> u64 {
    p.denom().bits()
}

/// Bisection iterations allowed past the analytic stopping width.
const EXTRA_BISECTIONS: usize = 4096;

/// A dyadic `p` in `[1/2, 1 - 1/(2n+2))` with `k - 1/(2n+2) < f(p) < k`.
///
/// Bisects `f(p) - (k - 1/(4n+4))` from the bracket `[1/2, 1 - 1/(2n+2)]`.
/// Midpoints are rounded down to a dyadic grid finer than a quarter of the
/// bracket, so every iterate has a power-of-two denominator.
pub fn find_parameter(n: usize, s: usize, k: u64) -> Result<Rational> {
    check_size(n, s)?;
    let ranks = binomial(n as u64, s as u64);
    if k == 0 || k > ranks {
        return Err(Error::InvalidReduction(format!("k = {k} must lie in 1..={ranks}")));
    }
    let m = n as i64;
    let level = int(k as i64) - ratio(1, 4 * m + 4);
    let window_low = int(k as i64) - ratio(1, 2 * m + 2);
    let window_high = int(k as i64);
    let g = |p: &Rational| -> Result<Rational> { Ok(eval_f(n, s, p)? - &level) };

    let mut lo = ratio(1, 2);
    let mut hi = int(1) - ratio(1, 2 * m + 2);
    if !g(&lo)?.is_negative() || !g(&hi)?.is_positive() {
        return Err(Error::Invariant(format!("no sign change for n={n}, s={s}, k={k}")));
    }
    let bound = BigInt::from(2 * m + 2).pow(2 * n as u32 + 1)
        * BigInt::from(2 * m + 1)
        * (BigInt::one() << (4 * n + 2))
        * BigInt::from(4 * m + 4);
    let stop = Rational::new(BigInt::one(), bound);

    let mut budget = None;
    loop {
        let width = &hi - &lo;
        let mid = dyadic_midpoint(&lo, &width);
        if width <= stop {
            let value = eval_f(n, s, &mid)?;
            if value > window_low && value < window_high {
                return Ok(mid);
            }
            let left: &mut usize = budget.get_or_insert(EXTRA_BISECTIONS);
            if *left == 0 {
                return Err(Error::Invariant(format!("bisection did not reach the window for n={n}, s={s}, k={k}")));
            }
            *left -= 1;
        }
        let gm = g(&mid)?;
        if gm.is_zero() {
            return Ok(mid);
        }
        if gm.is_negative() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `lo + floor(width/2 * 2^t) / 2^t` for the least `t` with `2^-t <= width/4`.
fn dyadic_midpoint(lo: &Rational, width: &Rational) -> Rational {
    let quarter = width / int(4);
    let mut t = 0usize;
    while Rational::new(BigInt::one(), BigInt::one() << t) > quarter {
        t += 1;
    }
    let scale = Rational::from_integer(BigInt::one() << t);
    let steps = (width / int(2) * &scale).floor();
    lo + steps / scale
}

/// The constructed instance together with the quantities used to read off
/// the decision.
#[derive(Debug, Clone)]
pub struct ReductionOutput {
    pub instance: OmdInstance,
    pub params: Lp2Params,
    pub kappa: Rational,
    /// `{1..n} \ S`.
    pub probe_type: Subset,
    /// The appended item, 0-based (`n`).
    pub distinguished_item: usize,
    pub p_tilde: Rational,
    /// The `k`-th cheapest `(n - |S|)`-subset of `{1..n}`.
    pub target_t_star: Subset,
}

fn validate_lexrank(c: &[u64], set: Subset, k: u64) -> Result<()> {
    let n = c.len();
    if n + 1 > MAX_LATTICE_ITEMS {
        return Err(Error::GuardExceeded { what: "reduction lattice", n: n + 1, limit: MAX_LATTICE_ITEMS });
    }
    check_positive("C", c)?;
    if !set.within(n) {
        return Err(Error::InvalidReduction(format!("set {set} is not a subset of 1..{n}")));
    }
    check_size(n, set.len())?;
    let ranks = binomial(n as u64, set.len() as u64);
    if k == 0 || k > ranks {
        return Err(Error::InvalidReduction(format!("k = {k} must lie in 1..={ranks}")));
    }
    Ok(())
}

/// Builds the mechanism instance for the question `lexr_C(S) <= k`.
pub fn lexrank_to_omd(c: &[u64], set: Subset, k: u64) -> Result<ReductionOutput> {
    validate_lexrank(c, set, k)?;
    let p = find_parameter(c.len(), set.len(), k)?;
    lexrank_to_omd_with_parameter(c, set, k, p)
}

/// [`lexrank_to_omd`] with a precomputed [`find_parameter`] value.
///
/// `find_parameter` depends only on `(n, |S|, k)`, so sweeps can share it.
pub fn lexrank_to_omd_with_parameter(c: &[u64], set: Subset, k: u64, p_tilde: Rational) -> Result<ReductionOutput> {
    validate_lexrank(c, set, k)?;
    let n = c.len();
    let total: BigInt = c.iter().map(|&v| BigInt::from(v)).sum();
    let mut d: Vec<Rational> = c
        .iter()
        .enumerate()
        .map(|(i, &ci)| Rational::from_integer(((BigInt::from(ci) + &total) << (n + 1)) + (BigInt::one() << (i + 1))))
        .collect();
    d.push(int(1));
    let x = vec![int(2); n + 1];
    let p = vec![p_tilde.clone(); n + 1];
    let params = Lp2Params::new(x, int(2 * n as i64 + 1), d, p)?;
    let (instance, kappa) = params.to_instance()?;

    let mut candidates: Vec<(Rational, Subset)> = Subset::of_size(n, n - set.len())
        .map(|t| (node_cost(params.d(), t, n + 1), t))
        .collect();
    candidates.sort();
    let target_t_star = candidates[k as usize - 1].1;

    Ok(ReductionOutput {
        instance,
        params,
        kappa,
        probe_type: set.complement(n),
        distinguished_item: n,
        p_tilde,
        target_t_star,
    })
}

/// Checks the cost structure the decision relies on:
/// distinct costs over negative nodes, `{1..n}` the cheapest negative node,
/// no cost strictly between `cost(T + {n+1})` and `cost(T)` for `T` a proper
/// subset of `{1..n}`, and larger such `T` strictly cheaper.
pub fn check_cost_structure(params: &Lp2Params) -> Result<()> {
    let m = params.n();
    if m < 2 {
        return Err(Error::InvalidReduction("cost structure needs at least two items".into()));
    }
    let n = m - 1;
    let costs = cost_table(params.d(), m);
    let fail = |what: String| Err(Error::InvalidReduction(what));

    // p(S) > 0, so a node is negative exactly when its x-sum is below B
    let mut negative: Vec<(&Rational, Subset)> = Subset::all(m)
        .filter(|&t| params.x_sum(t) < *params.budget())
        .map(|t| (&costs[t.index()], t))
        .collect();
    negative.sort();
    if let Some(w) = negative.windows(2).find(|w| w[0].0 == w[1].0) {
        return fail(format!("negative nodes {} and {} share cost {}", w[0].1, w[1].1, rational::format(w[0].0)));
    }
    let base = Subset::full(n);
    if negative.first().map(|e| e.1) != Some(base) {
        return fail(format!("{base} is not the cheapest negative node"));
    }

    let mut sorted: Vec<&Rational> = costs.iter().collect();
    sorted.sort();
    let mut by_size: Vec<Option<(&Rational, &Rational)>> = vec![None; n];
    for t in Subset::all(n).filter(|&t| t != base) {
        let (upper, lower) = (&costs[t.index()], &costs[t.insert(n).index()]);
        let above = sorted.partition_point(|v| *v <= lower);
        if above < sorted.len() && sorted[above] < upper {
            return fail(format!(
                "cost {} lies strictly between the costs of {} and {t}",
                rational::format(sorted[above]),
                t.insert(n)
            ));
        }
        let slot = &mut by_size[t.len()];
        *slot = Some(match slot.take() {
            None => (upper, upper),
            Some((lo, hi)) => (lo.min(upper), hi.max(upper)),
        });
    }
    for size in 1..n {
        if let (Some((_, hi)), Some((lo, _))) = (by_size[size], by_size[size - 1]) {
            if hi >= lo {
                return fail(format!("some {size}-subset costs at least as much as some {}-subset", size - 1));
            }
        }
    }
    Ok(())
}

/// Everything the decision procedure observed.
#[derive(Debug, Clone)]
pub struct ReductionDecision {
    pub output: ReductionOutput,
    pub partially_filled: Option<Subset>,
    /// `q_{n+1}` on the probe type.
    pub probe_value: Rational,
    pub decision: bool,
}

/// Builds the instance, solves it in closed form and reads the allocation of
/// the appended item to the probe type.
pub fn run_reduction(c: &[u64], set: Subset, k: u64) -> Result<ReductionDecision> {
    let out = lexrank_to_omd(c, set, k)?;
    decide_output(out)
}

/// [`run_reduction`] with a precomputed parameter.
pub fn run_reduction_with_parameter(c: &[u64], set: Subset, k: u64, p_tilde: Rational) -> Result<ReductionDecision> {
    decide_output(lexrank_to_omd_with_parameter(c, set, k, p_tilde)?)
}

fn decide_output(output: ReductionOutput) -> Result<ReductionDecision> {
    let flow = canonical_solution(&output.params)?;
    let (_, q) = closed_form_allocation(&output.params, &flow)?;
    let probe_value = q[output.probe_type.index()][output.distinguished_item].clone();
    let decision = if probe_value.is_zero() {
        false
    } else if probe_value.is_one() {
        true
    } else {
        return Err(Error::Invariant(format!(
            "probe allocation {} is not 0 or 1",
            rational::format(&probe_value)
        )));
    };
    Ok(ReductionDecision { partially_filled: flow.partially_filled(), output, probe_value, decision })
}

/// Whether `lexr_C(S) <= k`, answered through the optimal mechanism.
pub fn decide_lexrank(c: &[u64], set: Subset, k: u64) -> Result<bool> {
    Ok(run_reduction(c, set, k)?.decision)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexRankDoc {
    #[serde(rename = "C")]
    pub c: Vec<u64>,
    #[serde(rename = "S")]
    pub s: Vec<usize>,
    pub k: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetSumDoc {
    #[serde(rename = "W")]
    pub w: Vec<u64>,
    #[serde(rename = "T")]
    pub t: u64,
}

/// A parsed `{"C": [..], "S": [..], "k": ..}` document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexRankInstance {
    pub c: Vec<u64>,
    pub set: Subset,
    pub k: u64,
}

/// A parsed `{"W": [..], "T": ..}` document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    pub w: Vec<u64>,
    pub target: u64,
}

fn parse_doc<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse { field: json_error_field(&e), message: e.to_string() })
}

fn positive_entries(field: &str, values: &[u64]) -> Result<()> {
    match values.iter().position(|&v| v == 0) {
        Some(i) => Err(Error::Parse { field: format!("{field}[{}]", i + 1), message: "must be positive".into() }),
        None => Ok(()),
    }
}

impl LexRankInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LexRankDoc = parse_doc(text)?;
        positive_entries("C", &doc.c)?;
        let set = Subset::from_one_based(&doc.s, doc.c.len())
            .map_err(|e| Error::Parse { field: "S".into(), message: e.to_string() })?;
        if doc.k == 0 {
            return Err(Error::Parse { field: "k".into(), message: "must be positive".into() });
        }
        Ok(LexRankInstance { c: doc.c, set, k: doc.k })
    }

    pub fn to_doc(&self) -> LexRankDoc {
        LexRankDoc { c: self.c.clone(), s: self.set.one_based(), k: self.k }
    }
}

impl SubsetSumInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SubsetSumDoc = parse_doc(text)?;
        positive_entries("W", &doc.w)?;
        Ok(SubsetSumInstance { w: doc.w, target: doc.t })
    }

    pub fn to_doc(&self) -> SubsetSumDoc {
        SubsetSumDoc { w: self.w.clone(), t: self.target }
    }
}

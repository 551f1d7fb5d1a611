//! Direct mechanisms over the `2^n` types: construction from the canonical
//! flow, constraint verification, revenue and sampling.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Lp2Params, OmdInstance};
use crate::lattice::{cost_table, FlowSolution};
use crate::rational::{self, Rational};
use crate::subset::Subset;

/// Largest item count accepted by [`verify_bic_ir`] (it checks `4^n` pairs).
pub const MAX_VERIFY_ITEMS: usize = 14;

/// Interim utility, allocation marginals and expected price per type,
/// indexed by [`Subset::index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mechanism {
    n: usize,
    u: Vec<Rational>,
    q: Vec<Vec<Rational>>,
    tau: Vec<Rational>,
    unique: bool,
}

impl Mechanism {
    /// Builds a mechanism from utilities and allocations, pricing each type
    /// at `tau(S) = v(S).q(S) - u(S)`.
    pub fn from_allocation(inst: &OmdInstance, u: Vec<Rational>, q: Vec<Vec<Rational>>) -> Result<Self> {
        let n = inst.n();
        if u.len() != 1 << n || q.len() != 1 << n || q.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInstance(format!("mechanism tables must cover all 2^{n} types")));
        }
        let tau = Subset::all(n)
            .map(|s| {
                let v = inst.value_vector(s);
                let mut paid = -&u[s.index()];
                for (vi, qi) in v.iter().zip(&q[s.index()]) {
                    if qi.is_one() {
                        paid += vi;
                    } else if !qi.is_zero() {
                        paid += vi * qi;
                    }
                }
                paid
            })
            .collect();
        Ok(Mechanism { n, u, q, tau, unique: false })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn u(&self, set: Subset) -> &Rational {
        &self.u[set.index()]
    }

    pub fn q(&self, set: Subset) -> &[Rational] {
        &self.q[set.index()]
    }

    pub fn price(&self, set: Subset) -> &Rational {
        &self.tau[set.index()]
    }

    pub fn utilities(&self) -> &[Rational] {
        &self.u
    }

    /// True when the construction is known to be the unique optimum.
    pub fn is_unique(&self) -> bool {
        self.unique
    }
}

/// Utilities and allocations of the optimal mechanism, read off the
/// canonical flow.
///
/// With `S*` the partially filled node (or, failing that, the last node
/// filled exactly to capacity), `u(S) = max(cost(S*) - cost(S), 0)`,
/// `q_i(S) = 1` for `i in S` and `(u(S + i) - u(S)) / d_i` otherwise.
pub fn closed_form_allocation(params: &Lp2Params, flow: &FlowSolution) -> Result<(Vec<Rational>, Vec<Vec<Rational>>)> {
    let n = params.n();
    let d = params.d();
    let u: Vec<Rational> = if flow.supply().is_zero() {
        vec![Rational::zero(); 1 << n]
    } else {
        let star = flow
            .partially_filled()
            .or_else(|| flow.last_filled())
            .ok_or(Error::DegenerateFlow)?;
        let costs = cost_table(d, n);
        let top = &costs[star.index()];
        costs
            .iter()
            .map(|c| {
                let gap = top - c;
                if gap.is_positive() {
                    gap
                } else {
                    Rational::zero()
                }
            })
            .collect()
    };
    let q = Subset::all(n)
        .map(|s| {
            (0..n)
                .map(|i| {
                    if s.contains(i) {
                        Rational::one()
                    } else {
                        let step = &u[s.insert(i).index()] - &u[s.index()];
                        if step.is_zero() {
                            step
                        } else {
                            step / &d[i]
                        }
                    }
                })
                .collect()
        })
        .collect();
    Ok((u, q))
}

/// [`closed_form_allocation`] priced on the instance recovered from
/// `params`. The result is flagged unique only when `S*` is strictly below
/// capacity.
pub fn closed_form_mechanism(params: &Lp2Params, flow: &FlowSolution) -> Result<Mechanism> {
    let (inst, _) = params.to_instance()?;
    let (u, q) = closed_form_allocation(params, flow)?;
    let mut mech = Mechanism::from_allocation(&inst, u, q)?;
    mech.unique = flow.partially_filled().is_some();
    Ok(mech)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Bic,
    Ir,
    Prob,
    Price,
}

/// A violated constraint and its (negative) slack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// The truthful type.
    pub truth: Subset,
    /// The misreport for incentive rows; the item for allocation rows.
    pub other: Option<Subset>,
    pub item: Option<usize>,
    pub slack: Rational,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    pub bic_checked: usize,
    pub ir_checked: usize,
    pub prob_checked: usize,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn checked(&self) -> usize {
        self.bic_checked + self.ir_checked + self.prob_checked
    }
}

/// Checks every incentive, participation and probability constraint of the
/// full revenue program, plus price consistency. Weak inequalities count
/// as satisfied.
pub fn verify_bic_ir(inst: &OmdInstance, mech: &Mechanism) -> Result<VerificationReport> {
    let n = inst.n();
    if n > MAX_VERIFY_ITEMS {
        return Err(Error::GuardExceeded { what: "verification", n, limit: MAX_VERIFY_ITEMS });
    }
    if mech.n != n {
        return Err(Error::InvalidInstance(format!("mechanism has {} items, instance {n}", mech.n)));
    }
    let mut report = VerificationReport::default();
    let values: Vec<Vec<Rational>> = Subset::all(n).map(|s| inst.value_vector(s)).collect();
    for s in Subset::all(n) {
        let us = mech.u(s);
        report.ir_checked += 1;
        if us.is_negative() {
            report.violations.push(Violation {
                kind: ViolationKind::Ir,
                truth: s,
                other: None,
                item: None,
                slack: us.clone(),
            });
        }
        for (i, qi) in mech.q(s).iter().enumerate() {
            report.prob_checked += 1;
            let slack = if qi.is_negative() {
                qi.clone()
            } else {
                Rational::one() - qi
            };
            if slack.is_negative() {
                report.violations.push(Violation {
                    kind: ViolationKind::Prob,
                    truth: s,
                    other: None,
                    item: Some(i),
                    slack,
                });
            }
        }
        let paid: Rational = values[s.index()].iter().zip(mech.q(s)).map(|(v, q)| v * q).sum();
        let price_gap = mech.price(s) - (paid - us);
        if !price_gap.is_zero() {
            report.violations.push(Violation {
                kind: ViolationKind::Price,
                truth: s,
                other: None,
                item: None,
                slack: -price_gap.abs(),
            });
        }
        for t in Subset::all(n) {
            if s == t {
                continue;
            }
            report.bic_checked += 1;
            let gain: Rational = s
                .symmetric_difference(t)
                .items()
                .map(|i| (&values[s.index()][i] - &values[t.index()][i]) * &mech.q(t)[i])
                .sum();
            let slack = us - mech.u(t) - gain;
            if slack.is_negative() {
                report.violations.push(Violation {
                    kind: ViolationKind::Bic,
                    truth: s,
                    other: Some(t),
                    item: None,
                    slack,
                });
            }
        }
    }
    Ok(report)
}

/// Whether `u(S) <= u(S + i)` for all `S, i` and
/// `u(S + i + j) - u(S + j) >= u(S + i) - u(S)` for all `S` and distinct
/// `i, j` outside `S`. `u` is indexed by [`Subset::index`].
pub fn is_monotone_supermodular(u: &[Rational], n: usize) -> bool {
    assert_eq!(u.len(), 1 << n, "u must cover all 2^{n} subsets");
    for s in Subset::all(n) {
        for i in (0..n).filter(|&i| !s.contains(i)) {
            let si = s.insert(i);
            if u[si.index()] < u[s.index()] {
                return false;
            }
            let step = &u[si.index()] - &u[s.index()];
            for j in (0..n).filter(|&j| j != i && !s.contains(j)) {
                let sj = s.insert(j);
                if &u[si.insert(j).index()] - &u[sj.index()] < step {
                    return false;
                }
            }
        }
    }
    true
}

/// `sum_S p(S) tau(S)`.
pub fn expected_revenue(inst: &OmdInstance, mech: &Mechanism) -> Result<Rational> {
    if mech.n != inst.n() {
        return Err(Error::InvalidInstance("mechanism and instance sizes differ".into()));
    }
    Subset::all(inst.n())
        .map(|s| Ok(inst.type_prob(s)? * mech.price(s)))
        .sum()
}

/// Draws `true` with probability exactly `prob`, comparing `prob` against a
/// uniform dyadic rational refined 64 bits at a time.
pub fn bernoulli<R: RngCore + ?Sized>(prob: &Rational, rng: &mut R) -> bool {
    if !prob.is_positive() {
        return false;
    }
    if *prob >= Rational::one() {
        return true;
    }
    let (num, den) = (prob.numer(), prob.denom());
    // the draw lies in [low / 2^bits, (low + 1) / 2^bits)
    let mut low = BigInt::zero();
    let mut bits = 0u64;
    loop {
        low = (low << 64u32) + BigInt::from(rng.next_u64());
        bits += 64;
        let scaled = num << bits;
        if (&low + 1u32) * den <= scaled {
            return true;
        }
        if &low * den >= scaled {
            return false;
        }
    }
}

/// Realizes the lottery for reported type `set`: each item independently
/// with probability `q_i(set)`, at the deterministic price `tau(set)`.
pub fn sample_allocation<R: RngCore + ?Sized>(mech: &Mechanism, set: Subset, rng: &mut R) -> (Subset, Rational) {
    let allocated = mech
        .q(set)
        .iter()
        .enumerate()
        .filter(|(_, q)| bernoulli(q, rng))
        .fold(Subset::EMPTY, |acc, (i, _)| acc.insert(i));
    (allocated, mech.price(set).clone())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MenuEntry {
    #[serde(rename = "type")]
    pub type_: Subset,
    #[serde(with = "rational::serde_str")]
    pub u: Rational,
    #[serde(with = "rational::serde_vec")]
    pub q: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub price: Rational,
}

/// JSON form: `{"n": .., "menu": [{"type": [..], "u": .., "q": [..], "price": ..}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismDoc {
    pub n: usize,
    pub menu: Vec<MenuEntry>,
}

impl Mechanism {
    pub fn to_doc(&self) -> MechanismDoc {
        MechanismDoc {
            n: self.n,
            menu: Subset::all(self.n)
                .map(|s| MenuEntry {
                    type_: s,
                    u: self.u(s).clone(),
                    q: self.q(s).to_vec(),
                    price: self.price(s).clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("mechanism serializes")
    }

    pub fn from_doc(doc: MechanismDoc) -> Result<Self> {
        let n = doc.n;
        if n > MAX_VERIFY_ITEMS {
            return Err(Error::GuardExceeded { what: "mechanism", n, limit: MAX_VERIFY_ITEMS });
        }
        let mut u = vec![None; 1 << n];
        let mut q = vec![Vec::new(); 1 << n];
        let mut tau = vec![Rational::zero(); 1 << n];
        for entry in doc.menu {
            let k = entry.type_.index();
            let field = format!("menu[{}]", entry.type_);
            if !entry.type_.within(n) || u[k].is_some() {
                return Err(Error::Parse { field, message: "type out of range or repeated".into() });
            }
            if entry.q.len() != n {
                return Err(Error::Parse { field, message: format!("q needs {n} entries") });
            }
            u[k] = Some(entry.u);
            q[k] = entry.q;
            tau[k] = entry.price;
        }
        let u = u
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                v.ok_or_else(|| Error::Parse {
                    field: "menu".into(),
                    message: format!("type {} missing", Subset::from_mask(k as u64)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mechanism { n, u, q, tau, unique: false })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MechanismDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            field: crate::instance::json_error_field(&e),
            message: e.to_string(),
        })?;
        Mechanism::from_doc(doc)
    }
}

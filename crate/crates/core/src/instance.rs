//! Instances of the single-bidder problem and the relaxed-program parameters.
//!
//! An [`OmdInstance`] gives, per item, a low value `a_i`, an increment `d_i`
//! and the probability `p_i` that the value is high (`a_i + d_i`). Types are
//! subsets `S` of items valued high.
//!
//! [`Lp2Params`] are the `(x, B, d, p)` of the relaxed program. The two are
//! related through a positive scale `kappa`:
//! `B = kappa (1 + sum a_i/d_i)` and `x_i = kappa a_i / (p_i d_i)`, which
//! forces `kappa = B - sum p_i x_i`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::subset::{Subset, MAX_ITEMS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmdInstance {
    a: Vec<Rational>,
    d: Vec<Rational>,
    p: Vec<Rational>,
}

fn check_probability(field: &str, i: usize, p: &Rational) -> Result<()> {
    if !p.is_positive() || *p >= Rational::one() {
        return Err(Error::InvalidInstance(format!(
            "{field}[{}] = {} must lie in (0, 1)",
            i + 1,
            rational::format(p)
        )));
    }
    Ok(())
}

fn check_positive(field: &str, i: usize, v: &Rational) -> Result<()> {
    if !v.is_positive() {
        return Err(Error::InvalidInstance(format!(
            "{field}[{}] = {} must be positive",
            i + 1,
            rational::format(v)
        )));
    }
    Ok(())
}

fn check_len(field: &str, len: usize, n: usize) -> Result<()> {
    if len != n {
        return Err(Error::InvalidInstance(format!(
            "field `{field}` has {len} entries, expected {n}"
        )));
    }
    Ok(())
}

/// `prod_{i in S} p_i * prod_{j not in S} (1 - p_j)`.
fn product_prob(p: &[Rational], set: Subset) -> Rational {
    // multiply numerators and denominators separately and reduce once
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for (i, pi) in p.iter().enumerate() {
        if set.contains(i) {
            num *= pi.numer();
        } else {
            num *= pi.denom() - pi.numer();
        }
        den *= pi.denom();
    }
    Rational::new(num, den)
}

fn check_subset(set: Subset, n: usize) -> Result<()> {
    match set.items().find(|&i| i >= n) {
        Some(i) => Err(Error::IndexOutOfRange { index: i + 1, n }),
        None => Ok(()),
    }
}

impl OmdInstance {
    /// Validates `d_i > 0`, `0 < p_i < 1` and `a_i >= 0`.
    pub fn new(a: Vec<Rational>, d: Vec<Rational>, p: Vec<Rational>) -> Result<Self> {
        let n = a.len();
        check_len("d", d.len(), n)?;
        check_len("p", p.len(), n)?;
        if n > MAX_ITEMS {
            return Err(Error::InvalidInstance(format!("at most {MAX_ITEMS} items")));
        }
        for (i, ai) in a.iter().enumerate() {
            if ai.is_negative() {
                return Err(Error::InvalidInstance(format!(
                    "a[{}] = {} must be nonnegative",
                    i + 1,
                    rational::format(ai)
                )));
            }
        }
        for (i, di) in d.iter().enumerate() {
            check_positive("d", i, di)?;
        }
        for (i, pi) in p.iter().enumerate() {
            check_probability("p", i, pi)?;
        }
        Ok(OmdInstance { a, d, p })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[Rational] {
        &self.a
    }

    pub fn d(&self) -> &[Rational] {
        &self.d
    }

    pub fn p(&self) -> &[Rational] {
        &self.p
    }

    /// Probability of type `S`.
    pub fn type_prob(&self, set: Subset) -> Result<Rational> {
        check_subset(set, self.n())?;
        Ok(product_prob(&self.p, set))
    }

    /// Value vector of type `S`: `a_i + d_i` on `S`, `a_i` elsewhere.
    pub fn type_vector(&self, set: Subset) -> Result<Vec<Rational>> {
        check_subset(set, self.n())?;
        Ok(self.value_vector(set))
    }

    pub(crate) fn value_vector(&self, set: Subset) -> Vec<Rational> {
        (0..self.n())
            .map(|i| {
                if set.contains(i) {
                    &self.a[i] + &self.d[i]
                } else {
                    self.a[i].clone()
                }
            })
            .collect()
    }

    /// Inverse of [`OmdInstance::to_lp2_params`]; see [`Lp2Params::to_instance`].
    pub fn from_lp2_params(params: &Lp2Params) -> Result<(OmdInstance, Rational)> {
        params.to_instance()
    }

    /// Maps the instance to relaxed-program parameters at scale `kappa`.
    pub fn to_lp2_params(&self, kappa: &Rational) -> Result<Lp2Params> {
        if !kappa.is_positive() {
            return Err(Error::NonPositiveKappa(rational::format(kappa)));
        }
        if let Some(item) = self.a.iter().position(|ai| ai.is_zero()) {
            return Err(Error::ZeroLowValue { item: item + 1 });
        }
        let ratio_sum: Rational = self
            .a
            .iter()
            .zip(&self.d)
            .map(|(a, d)| a / d)
            .sum();
        let budget = kappa * (Rational::one() + ratio_sum);
        let x = (0..self.n())
            .map(|i| kappa * &self.a[i] / (&self.p[i] * &self.d[i]))
            .collect();
        Lp2Params::new(x, budget, self.d.clone(), self.p.clone())
    }
}

/// Parameters `(x, B, d, p)` of the relaxed program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lp2Params {
    x: Vec<Rational>,
    budget: Rational,
    d: Vec<Rational>,
    p: Vec<Rational>,
}

impl Lp2Params {
    /// Validates `x_i > 0`, `B > 0`, `d_i > 0` and `0 < p_i < 1`.
    pub fn new(x: Vec<Rational>, budget: Rational, d: Vec<Rational>, p: Vec<Rational>) -> Result<Self> {
        let n = x.len();
        check_len("d", d.len(), n)?;
        check_len("p", p.len(), n)?;
        if n > MAX_ITEMS {
            return Err(Error::InvalidInstance(format!("at most {MAX_ITEMS} items")));
        }
        for (i, xi) in x.iter().enumerate() {
            check_positive("x", i, xi)?;
        }
        if !budget.is_positive() {
            return Err(Error::InvalidInstance(format!(
                "B = {} must be positive",
                rational::format(&budget)
            )));
        }
        for (i, di) in d.iter().enumerate() {
            check_positive("d", i, di)?;
        }
        for (i, pi) in p.iter().enumerate() {
            check_probability("p", i, pi)?;
        }
        Ok(Lp2Params { x, budget, d, p })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[Rational] {
        &self.x
    }

    pub fn budget(&self) -> &Rational {
        &self.budget
    }

    pub fn d(&self) -> &[Rational] {
        &self.d
    }

    pub fn p(&self) -> &[Rational] {
        &self.p
    }

    /// `sum_i p_i x_i`.
    pub fn weighted_sum(&self) -> Rational {
        self.x.iter().zip(&self.p).map(|(x, p)| x * p).sum()
    }

    /// `B - sum_i p_i x_i`: the scale of the instance these parameters come
    /// from. Positive exactly when the parameters are feasible with slack.
    pub fn kappa(&self) -> Rational {
        &self.budget - self.weighted_sum()
    }

    pub fn set_prob(&self, set: Subset) -> Rational {
        product_prob(&self.p, set)
    }

    pub fn x_sum(&self, set: Subset) -> Rational {
        set.items().map(|i| &self.x[i]).sum()
    }

    /// Recovers the instance and scale: `kappa = B - sum p_i x_i`,
    /// `a_i = p_i d_i x_i / kappa`. Requires `B > sum p_i x_i`.
    pub fn to_instance(&self) -> Result<(OmdInstance, Rational)> {
        let kappa = self.kappa();
        if !kappa.is_positive() {
            return Err(Error::InfeasibleParameters {
                budget: rational::format(&self.budget),
                weighted: rational::format(&self.weighted_sum()),
            });
        }
        let a = (0..self.n())
            .map(|i| &self.p[i] * &self.d[i] * &self.x[i] / &kappa)
            .collect();
        let inst = OmdInstance::new(a, self.d.clone(), self.p.clone())?;
        Ok((inst, kappa))
    }
}

/// JSON form of an instance: `{"n": 2, "a": ["1"], "d": [..], "p": [..]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub n: usize,
    pub a: Vec<String>,
    pub d: Vec<String>,
    pub p: Vec<String>,
}

fn parse_seq(field: &str, texts: &[String], n: usize) -> Result<Vec<Rational>> {
    if texts.len() != n {
        return Err(Error::Parse {
            field: field.to_string(),
            message: format!("expected {n} entries, found {}", texts.len()),
        });
    }
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| rational::parse_field(&format!("{field}[{}]", i + 1), t))
        .collect()
}

impl OmdInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            field: json_error_field(&e),
            message: e.to_string(),
        })?;
        let a = parse_seq("a", &doc.a, doc.n)?;
        let d = parse_seq("d", &doc.d, doc.n)?;
        let p = parse_seq("p", &doc.p, doc.n)?;
        OmdInstance::new(a, d, p)
    }

    pub fn to_doc(&self) -> InstanceDoc {
        let fmt = |v: &[Rational]| v.iter().map(rational::format).collect();
        InstanceDoc {
            n: self.n(),
            a: fmt(&self.a),
            d: fmt(&self.d),
            p: fmt(&self.p),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("instance serializes")
    }
}

/// Best-effort name of the field a serde_json error refers to.
pub(crate) fn json_error_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        return rest.split('`').next().unwrap_or("document").to_string();
    }
    "document".to_string()
}

use std::fmt;
use std::fs;
use std::path::Path;

use omd_core::budgeted::{budgeted_oracle_lp, check_menu, optimal_budgeted_mechanism, BudgetedInstance};
use omd_core::exactlp::{build_lp1, solve_lp, Guards};
use omd_core::lattice::{canonical_solution, lattice_dump};
use omd_core::mechanism::{closed_form_mechanism, expected_revenue, sample_allocation, verify_bic_ir, Mechanism};
use omd_core::rational::{format, int, ratio};
use omd_core::reduction::{
    count_subsetsum_direct, count_subsetsum_staged, lexrank_oracle, run_reduction, staged_counts, LexRankInstance,
    SubsetSumInstance,
};
use omd_core::{Error, Lp2Params, OmdInstance, Rational, Subset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::args::{BudgetedArgs, ReduceArgs, ReduceKind, SampleArgs, SolveArgs, VerifyArgs};
use crate::report::{verification_json, InputDigest};

/// Violations listed in a report before truncation.
const VIOLATION_LIMIT: usize = 20;

/// Why a command stopped; each kind has a fixed exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Usage(String),
    Precondition(String),
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Precondition(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Precondition(m) => write!(f, "precondition failed: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parse { .. }
            | Error::InvalidInstance(_)
            | Error::InvalidReduction(_)
            | Error::EpsOutOfRange { .. }
            | Error::ProbabilityOutOfRange(_)
            | Error::IndexOutOfRange { .. }
            | Error::NonPositiveKappa(_) => Failure::Usage(msg),
            Error::ZeroLowValue { .. }
            | Error::InfeasibleParameters { .. }
            | Error::ExtraPositiveNode(_)
            | Error::NoPositiveNode
            | Error::GuardExceeded { .. } => Failure::Precondition(msg),
            Error::NotOptimal | Error::DegenerateFlow | Error::Invariant(_) => Failure::Verification(msg),
        }
    }
}

/// Result of a command that ran to the end; `failure` is set when a check
/// failed after the report was assembled.
#[derive(Debug)]
pub struct Outcome {
    pub inputs: Vec<InputDigest>,
    pub outputs: Value,
    pub verification: Option<Value>,
    pub failure: Option<Failure>,
}

fn read_input(path: &Path) -> Result<(String, InputDigest), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let digest = InputDigest::new(path, &bytes);
    let text = String::from_utf8(bytes).map_err(|_| Failure::Usage(format!("{} is not UTF-8", path.display())))?;
    Ok((text, digest))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn rationals(values: &[Rational]) -> Vec<String> {
    values.iter().map(format).collect()
}

fn params_json(params: &Lp2Params) -> Value {
    json!({
        "x": rationals(params.x()),
        "B": format(params.budget()),
        "d": rationals(params.d()),
        "p": rationals(params.p()),
    })
}

fn mechanism_json(mech: &Mechanism) -> Value {
    serde_json::to_value(mech.to_doc()).expect("mechanism serializes")
}

fn lp1_mechanism(inst: &OmdInstance, guards: &Guards) -> Result<(Mechanism, Rational), Failure> {
    let (lp, vars) = build_lp1(inst, guards)?;
    let sol = solve_lp(&lp);
    if !sol.is_optimal() {
        return Err(Failure::Verification(format!("full LP ended {:?}", sol.status)));
    }
    let n = inst.n();
    let u = Subset::all(n).map(|s| sol.assignment[vars.u(s)].clone()).collect();
    let q = Subset::all(n)
        .map(|s| (0..n).map(|i| sol.assignment[vars.q(s, i)].clone()).collect())
        .collect();
    Ok((Mechanism::from_allocation(inst, u, q)?, sol.value))
}

fn solve_structured(inst: &OmdInstance, kappa: Option<&Rational>) -> Result<(Lp2Params, Mechanism), Failure> {
    let params = inst.to_lp2_params(kappa.unwrap_or(&int(1)))?;
    let flow = canonical_solution(&params)?;
    let mech = closed_form_mechanism(&params, &flow)?;
    Ok((params, mech))
}

pub fn solve(args: &SolveArgs) -> Result<Outcome, Failure> {
    let (text, digest) = read_input(&args.instance)?;
    let inst = OmdInstance::from_json(&text)?;
    let guards = Guards { force: args.force, ..Guards::default() };
    let mut failure = None;

    let (mech, mut outputs) = if args.oracle_only {
        let (mech, value) = lp1_mechanism(&inst, &guards)?;
        (mech, json!({ "path": "full_lp", "revenue": format(&value) }))
    } else {
        let kappa = args.kappa.clone().unwrap_or_else(|| int(1));
        let params = inst.to_lp2_params(&kappa)?;
        let flow = canonical_solution(&params)?;
        let mech = closed_form_mechanism(&params, &flow)?;
        if let Some(path) = &args.dump_lattice {
            write_file(path, &lattice_dump(&params, &flow))?;
        }
        let revenue = expected_revenue(&inst, &mech)?;
        let mut outputs = json!({
            "path": "lattice",
            "kappa": format(&kappa),
            "lp2": params_json(&params),
            "supply": format(flow.supply()),
            "partially_filled": flow.partially_filled().map(|s| s.one_based()),
            "exactly_saturated_boundary": flow.exactly_saturated_boundary(),
            "unique": mech.is_unique(),
            "revenue": format(&revenue),
        });
        if args.oracle {
            let (_, value) = lp1_mechanism(&inst, &guards)?;
            let agrees = value == revenue;
            outputs["oracle"] = json!({ "revenue": format(&value), "agrees": agrees });
            if !agrees {
                failure = Some(Failure::Verification(format!(
                    "closed-form revenue {} differs from the full LP optimum {}",
                    format(&revenue),
                    format(&value)
                )));
            }
        }
        (mech, outputs)
    };

    if let Some(path) = &args.dump_lp {
        let (lp, _) = build_lp1(&inst, &guards)?;
        write_file(path, &lp.to_text())?;
    }
    let report = verify_bic_ir(&inst, &mech)?;
    if !report.is_clean() && failure.is_none() {
        failure = Some(Failure::Verification(format!("{} violated constraints", report.violations.len())));
    }
    if let Some(path) = &args.mechanism_out {
        write_file(path, &mech.to_json())?;
    }
    outputs["mechanism"] = mechanism_json(&mech);
    Ok(Outcome {
        inputs: vec![digest],
        outputs,
        verification: Some(verification_json(&report, VIOLATION_LIMIT)),
        failure,
    })
}

pub fn reduce(args: &ReduceArgs) -> Result<Outcome, Failure> {
    let (text, digest) = read_input(&args.input)?;
    match args.kind {
        ReduceKind::Lexrank => reduce_lexrank(&text, digest),
        ReduceKind::Subsetsum => reduce_subsetsum(&text, digest),
    }
}

fn reduce_lexrank(text: &str, digest: InputDigest) -> Result<Outcome, Failure> {
    let input = LexRankInstance::from_json(text)?;
    let n = input.c.len();
    let run = run_reduction(&input.c, input.set, input.k)?;
    let rank = lexrank_oracle(&input.c, input.set)?;
    let expected = rank <= input.k;
    let out = &run.output;
    let outputs = json!({
        "instance": serde_json::to_value(out.instance.to_doc()).expect("instance serializes"),
        "lp2": params_json(&out.params),
        "kappa": format(&out.kappa),
        "p_tilde": format(&out.p_tilde),
        "probe_type": out.probe_type.one_based(),
        "distinguished_item": out.distinguished_item + 1,
        "target_t_star": out.target_t_star.one_based(),
        "partially_filled": run.partially_filled.map(|s| s.one_based()),
        "probe_value": format(&run.probe_value),
        "decision": run.decision,
    });
    let failure = (run.decision != expected).then(|| {
        Failure::Verification(format!(
            "mechanism says {} but the rank of S is {rank} against k = {}",
            run.decision, input.k
        ))
    });
    Ok(Outcome {
        inputs: vec![digest],
        outputs,
        verification: Some(json!({ "oracle_rank": rank, "oracle_decision": expected, "agrees": failure.is_none(), "n": n })),
        failure,
    })
}

fn reduce_subsetsum(text: &str, digest: InputDigest) -> Result<Outcome, Failure> {
    let input = SubsetSumInstance::from_json(text)?;
    let staged = count_subsetsum_staged(&input.w, input.target)?;
    let direct = count_subsetsum_direct(&input.w, input.target)?;
    let by_size = staged_counts(&input.w, input.target)?;
    let failure = (staged != direct)
        .then(|| Failure::Verification(format!("gadget count {staged} differs from enumeration {direct}")));
    Ok(Outcome {
        inputs: vec![digest],
        outputs: json!({ "count": staged, "count_by_size": by_size }),
        verification: Some(json!({ "enumeration_count": direct, "agrees": staged == direct })),
        failure,
    })
}

struct ExampleRow {
    name: &'static str,
    expected: String,
    observed: String,
}

fn two_items(a: [i64; 2], d: [i64; 2]) -> Result<OmdInstance, Failure> {
    let half = ratio(1, 2);
    Ok(OmdInstance::new(
        a.iter().map(|&v| int(v)).collect(),
        d.iter().map(|&v| int(v)).collect(),
        vec![half.clone(), half],
    )?)
}

pub fn examples() -> Result<Outcome, Failure> {
    let guards = Guards::default();
    let mut rows = Vec::new();

    let bundling = two_items([1, 1], [1, 1])?;
    let (_, value) = lp1_mechanism(&bundling, &guards)?;
    rows.push(ExampleRow { name: "{1,2}x{1,2} full LP optimum", expected: "9/4".into(), observed: format(&value) });
    let (_, mech) = solve_structured(&bundling, None)?;
    let revenue = expected_revenue(&bundling, &mech)?;
    rows.push(ExampleRow { name: "{1,2}x{1,2} lattice revenue", expected: "9/4".into(), observed: format(&revenue) });

    let zero_low = two_items([0, 0], [1, 1])?;
    let (_, value) = lp1_mechanism(&zero_low, &guards)?;
    rows.push(ExampleRow { name: "{0,1}x{0,1} full LP optimum", expected: "1".into(), observed: format(&value) });

    let lottery = two_items([1, 1], [1, 2])?;
    let (_, mech) = solve_structured(&lottery, None)?;
    let full = Subset::full(2);
    let low_second = Subset::from_items([0]);
    rows.push(ExampleRow {
        name: "{1,2}x{1,3} bundle price",
        expected: "4".into(),
        observed: format(mech.price(full)),
    });
    rows.push(ExampleRow {
        name: "{1,2}x{1,3} lottery",
        expected: "q=(1,1/2) at 5/2".into(),
        observed: format!("q=({}) at {}", rationals(mech.q(low_second)).join(","), format(mech.price(low_second))),
    });
    let revenue = expected_revenue(&lottery, &mech)?;
    let (_, value) = lp1_mechanism(&lottery, &guards)?;
    rows.push(ExampleRow {
        name: "{1,2}x{1,3} revenue vs full LP",
        expected: "21/8 = 21/8".into(),
        observed: format!("{} = {}", format(&revenue), format(&value)),
    });

    let failed: Vec<&str> = rows.iter().filter(|r| r.expected != r.observed).map(|r| r.name).collect();
    for r in &rows {
        let mark = if r.expected == r.observed { "PASS" } else { "FAIL" };
        eprintln!("{mark}  {:<32} expected {:<18} observed {}", r.name, r.expected, r.observed);
    }
    let table: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "name": r.name, "expected": r.expected, "observed": r.observed, "pass": r.expected == r.observed }))
        .collect();
    let failure = (!failed.is_empty()).then(|| Failure::Verification(format!("mismatched rows: {}", failed.join("; "))));
    Ok(Outcome { inputs: Vec::new(), outputs: json!({ "rows": table }), verification: None, failure })
}

pub fn sample(args: &SampleArgs) -> Result<Outcome, Failure> {
    let (text, digest) = read_input(&args.instance)?;
    let inst = OmdInstance::from_json(&text)?;
    let mut inputs = vec![digest];
    let mech = match &args.mechanism {
        Some(path) => {
            let (text, digest) = read_input(path)?;
            inputs.push(digest);
            Mechanism::from_json(&text)?
        }
        None => solve_structured(&inst, args.kappa.as_ref())?.1,
    };
    let report = verify_bic_ir(&inst, &mech)?;
    let set = Subset::from_one_based(&args.type_.0, inst.n())?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut hits = vec![0usize; inst.n()];
    let mut draws = Vec::with_capacity(args.count);
    for _ in 0..args.count {
        let (got, _) = sample_allocation(&mech, set, &mut rng);
        for i in got.items() {
            hits[i] += 1;
        }
        draws.push(got.one_based());
    }
    let failure = (!report.is_clean())
        .then(|| Failure::Verification(format!("{} violated constraints", report.violations.len())));
    Ok(Outcome {
        inputs,
        outputs: json!({
            "type": set.one_based(),
            "seed": args.seed,
            "count": args.count,
            "q": rationals(mech.q(set)),
            "price": format(mech.price(set)),
            "hits": hits,
            "draws": draws,
        }),
        verification: Some(verification_json(&report, VIOLATION_LIMIT)),
        failure,
    })
}

pub fn budgeted(args: &BudgetedArgs) -> Result<Outcome, Failure> {
    let (text, digest) = read_input(&args.input)?;
    let inst = BudgetedInstance::from_json(&text)?;
    let mech = optimal_budgeted_mechanism(&inst);
    let check = check_menu(&inst, &mech);
    let mut failure = (!check.is_clean()).then(|| Failure::Verification(check.violations.join("; ")));
    let mut verification = json!({ "checked": check.checked, "violations": check.violations });
    if args.oracle {
        let value = budgeted_oracle_lp(&inst)?;
        let agrees = value == mech.revenue;
        verification["oracle"] = json!({ "revenue": format(&value), "agrees": agrees });
        if !agrees && failure.is_none() {
            failure = Some(Failure::Verification(format!(
                "menu revenue {} differs from the LP optimum {}",
                format(&mech.revenue),
                format(&value)
            )));
        }
    }
    let offer = |o: &omd_core::budgeted::Offer| json!({ "bundle": o.bundle.one_based(), "price": o.price });
    Ok(Outcome {
        inputs: vec![digest],
        outputs: json!({
            "menu": { "unbudgeted": offer(&mech.unbudgeted), "budgeted": offer(&mech.budgeted) },
            "revenue": format(&mech.revenue),
        }),
        verification: Some(verification),
        failure,
    })
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome, Failure> {
    let (inst_text, inst_digest) = read_input(&args.instance)?;
    let (mech_text, mech_digest) = read_input(&args.mechanism)?;
    let inst = OmdInstance::from_json(&inst_text)?;
    let mech = Mechanism::from_json(&mech_text)?;
    let report = verify_bic_ir(&inst, &mech)?;
    let revenue = expected_revenue(&inst, &mech)?;
    let failure = (!report.is_clean())
        .then(|| Failure::Verification(format!("{} violated constraints", report.violations.len())));
    Ok(Outcome {
        inputs: vec![inst_digest, mech_digest],
        outputs: json!({ "revenue": format(&revenue) }),
        verification: Some(verification_json(&report, VIOLATION_LIMIT)),
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        assert_eq!(Failure::from(Error::NoPositiveNode).exit_code(), 2);
        assert_eq!(Failure::from(Error::ExtraPositiveNode(Subset::from_items([0]))).exit_code(), 2);
        assert_eq!(Failure::from(Error::ZeroLowValue { item: 1 }).exit_code(), 2);
        assert_eq!(Failure::from(Error::InvalidReduction("s".into())).exit_code(), 1);
        assert_eq!(Failure::from(Error::Parse { field: "a".into(), message: "m".into() }).exit_code(), 1);
        assert_eq!(Failure::from(Error::Invariant("x".into())).exit_code(), 3);
    }

    #[test]
    fn precondition_message_names_the_subset() {
        let f = Failure::from(Error::ExtraPositiveNode(Subset::from_items([0, 2])));
        assert!(f.to_string().contains("{1,3}"), "{f}");
    }

    #[test]
    fn examples_all_pass() {
        let out = examples().unwrap();
        assert!(out.failure.is_none(), "{:?}", out.failure);
        assert_eq!(out.outputs["rows"].as_array().unwrap().len(), 6);
    }
}

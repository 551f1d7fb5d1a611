//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so the summary is always printed:
//! `cargo test -p omd-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_integer::binomial;
use num_traits::{One, Signed, Zero};
use omd_core::budgeted::{budgeted_oracle_lp, check_menu, optimal_budgeted_mechanism, BudgetedInstance};
use omd_core::exactlp::{build_lp1, build_lp2, build_lp3, solve_lp, unique_optimum, Guards};
use omd_core::lattice::{canonical_solution, node_balance, node_cost};
use omd_core::mechanism::{closed_form_mechanism, expected_revenue, is_monotone_supermodular, sample_allocation, verify_bic_ir};
use omd_core::rational::{format, int, ratio};
use omd_core::reduction::{
    check_cost_structure, count_by_size, count_subsetsum_direct, count_subsetsum_staged, denominator_bits, eval_f,
    find_parameter, lexrank_oracle, run_reduction_with_parameter, subsetsum_gadget,
};
use omd_core::{Lp2Params, OmdInstance, Rational, Subset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

const EXAMPLE_LIMIT: Duration = Duration::from_secs(1);
const DUALITY_LIMIT: Duration = Duration::from_secs(60);
const REDUCTION_LIMIT: Duration = Duration::from_secs(300);
const DUALITY_CASES: usize = 200;
const SWEEP_SEED: u64 = 0x00c0_ffee;
const SAMPLE_SEED: u64 = 20_240_601;
const SAMPLES: usize = 10_000;

fn half() -> Rational {
    ratio(1, 2)
}

fn instance(a: [i64; 2], d: [i64; 2]) -> OmdInstance {
    OmdInstance::new(a.iter().map(|&v| int(v)).collect(), d.iter().map(|&v| int(v)).collect(), vec![half(), half()])
        .unwrap()
}

fn lp1_optimum(inst: &OmdInstance) -> Result<Rational, String> {
    let (lp, _) = build_lp1(inst, &Guards::default()).map_err(|e| e.to_string())?;
    let sol = solve_lp(&lp);
    ensure!(sol.is_optimal(), "LP1 ended {:?}", sol.status);
    Ok(sol.value)
}

fn timed<T>(limit: Duration, what: &str, f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    ensure!(took < limit, "{what} took {took:?}, limit {limit:?}");
    Ok(out)
}

fn worked_examples() -> Outcome {
    let bundling = timed(EXAMPLE_LIMIT, "two-point {1,2} example", || lp1_optimum(&instance([1, 1], [1, 1])))?;
    ensure!(bundling == ratio(9, 4), "{{1,2}}x{{1,2}} optimum {}, expected 9/4", format(&bundling));

    let zero_low = timed(EXAMPLE_LIMIT, "{0,1} example", || lp1_optimum(&instance([0, 0], [1, 1])))?;
    ensure!(zero_low == int(1), "{{0,1}}x{{0,1}} optimum {}, expected 1", format(&zero_low));

    let inst = instance([1, 1], [1, 2]);
    let (mech, revenue, oracle) = timed(EXAMPLE_LIMIT, "lottery example", || {
        let params = inst.to_lp2_params(&int(1)).map_err(|e| e.to_string())?;
        let flow = canonical_solution(&params).map_err(|e| e.to_string())?;
        let mech = closed_form_mechanism(&params, &flow).map_err(|e| e.to_string())?;
        let revenue = expected_revenue(&inst, &mech).map_err(|e| e.to_string())?;
        Ok((mech, revenue, lp1_optimum(&inst)?))
    })?;
    let full = Subset::full(2);
    let low_second = Subset::from_items([0]);
    ensure!(*mech.price(full) == int(4), "bundle price {}", format(mech.price(full)));
    ensure!(mech.q(full) == [int(1), int(1)], "bundle allocation {:?}", mech.q(full));
    ensure!(mech.q(low_second) == [int(1), half()], "lottery allocation {:?}", mech.q(low_second));
    ensure!(*mech.price(low_second) == ratio(5, 2), "lottery price {}", format(mech.price(low_second)));
    ensure!(revenue == ratio(21, 8) && oracle == revenue, "revenue {} vs oracle {}", format(&revenue), format(&oracle));
    Ok("optima 9/4, 1, 21/8; bundle at 4, (1, 1/2)-lottery at 5/2".into())
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.random_range(1..=20), rng.random_range(1..=20))
}

fn random_probability(rng: &mut ChaCha8Rng) -> Rational {
    let den = rng.random_range(2..=20);
    ratio(rng.random_range(1..den), den)
}

/// A feasible single-positive-node parameter set, or `None` when no budget
/// with numerator and denominator at most 20 qualifies.
fn random_params(rng: &mut ChaCha8Rng, n: usize) -> Option<Lp2Params> {
    let x: Vec<Rational> = (0..n).map(|_| random_rational(rng)).collect();
    let d: Vec<Rational> = (0..n).map(|_| random_rational(rng)).collect();
    let p: Vec<Rational> = (0..n).map(|_| random_probability(rng)).collect();
    let total: Rational = x.iter().sum();
    let heaviest_drop = &total - x.iter().min().unwrap();
    let weighted: Rational = x.iter().zip(&p).map(|(a, b)| a * b).sum();
    let mut budgets: Vec<Rational> = (1..=20)
        .flat_map(|num| (1..=20).map(move |den| ratio(num, den)))
        .filter(|b| *b <= total && *b > heaviest_drop && *b > weighted)
        .collect();
    budgets.sort();
    budgets.dedup();
    if budgets.is_empty() {
        return None;
    }
    let budget = budgets[rng.random_range(0..budgets.len())].clone();
    Some(Lp2Params::new(x, budget, d, p).unwrap())
}

fn duality_sweep() -> Vec<Lp2Params> {
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);
    let per_size = DUALITY_CASES.div_ceil(5) + 5;
    let mut out = Vec::new();
    for n in 1..=5 {
        let mut found = 0;
        while found < per_size {
            if let Some(params) = random_params(&mut rng, n) {
                out.push(params);
                found += 1;
            }
        }
    }
    out
}

fn duality(sweep: &[Lp2Params]) -> Outcome {
    let start = Instant::now();
    let guards = Guards::default();
    let mut edges = 0usize;
    for (case, params) in sweep.iter().enumerate() {
        let tag = |what: &str| format!("case {case} (n={}): {what}", params.n());
        let flow = canonical_solution(params).map_err(|e| tag(&e.to_string()))?;
        let cost = flow.total_cost();
        let (lp3, vars3) = build_lp3(params, &guards).map_err(|e| tag(&e.to_string()))?;
        let (lp2, _) = build_lp2(params, &guards).map_err(|e| tag(&e.to_string()))?;
        let dual = solve_lp(&lp3);
        let primal = solve_lp(&lp2);
        ensure!(dual.is_optimal() && primal.is_optimal(), "{}", tag("a program is not optimal"));
        ensure!(
            cost == dual.value && cost == primal.value,
            "{}",
            tag(&format!("flow {} LP3 {} LP2 {}", format(&cost), format(&dual.value), format(&primal.value)))
        );

        let mut flow_vector = vec![Rational::zero(); lp3.num_vars()];
        for (from, item, amount) in flow.edges() {
            flow_vector[vars3.edge(from.remove(item), item)] = amount.clone();
        }
        ensure!(lp3.is_feasible(&flow_vector), "{}", tag("canonical flow violates LP3"));

        let u = &primal.assignment;
        for (from, item, amount) in flow.edges() {
            edges += 1;
            let gap = &u[from.index()] - &u[from.remove(item).index()];
            ensure!(
                !amount.is_positive() || gap == params.d()[item],
                "{}",
                tag(&format!("edge {from}->{} carries flow but is slack", from.remove(item)))
            );
        }
        for set in Subset::all(params.n()) {
            let outflow = -flow.net_inflow(set);
            ensure!(
                !u[set.index()].is_positive() || outflow == node_balance(params, set),
                "{}",
                tag(&format!("node {set} has positive utility but slack balance"))
            );
        }
    }
    let took = start.elapsed();
    ensure!(took < DUALITY_LIMIT, "sweep took {took:?}, limit {DUALITY_LIMIT:?}");
    Ok(format!("{} cases, {edges} flow edges checked, {took:.1?}", sweep.len()))
}

fn closed_form_vs_full_lp(sweep: &[Lp2Params]) -> Outcome {
    let guards = Guards::default();
    let (mut partial, mut unique) = (0usize, 0usize);
    for (case, params) in sweep.iter().enumerate() {
        let n = params.n();
        let tag = |what: &str| format!("case {case} (n={n}): {what}");
        let flow = canonical_solution(params).map_err(|e| tag(&e.to_string()))?;
        let Some(star) = flow.partially_filled() else { continue };
        partial += 1;
        let (inst, _) = params.to_instance().map_err(|e| tag(&e.to_string()))?;
        let mech = closed_form_mechanism(params, &flow).map_err(|e| tag(&e.to_string()))?;

        ensure!(is_monotone_supermodular(mech.utilities(), n), "{}", tag("u not monotone supermodular"));
        let full = Subset::full(n);
        ensure!(*mech.u(full) == node_cost(params.d(), star, n), "{}", tag("u(N) != cost(S*)"));

        let report = verify_bic_ir(&inst, &mech).map_err(|e| tag(&e.to_string()))?;
        ensure!(report.is_clean(), "{}", tag(&format!("{} violations", report.violations.len())));
        ensure!(report.bic_checked + report.ir_checked == 1 << (2 * n), "{}", tag("constraint count"));

        let (lp1, vars1) = build_lp1(&inst, &guards).map_err(|e| tag(&e.to_string()))?;
        let full_lp = solve_lp(&lp1);
        let revenue = expected_revenue(&inst, &mech).map_err(|e| tag(&e.to_string()))?;
        ensure!(
            full_lp.is_optimal() && full_lp.value == revenue,
            "{}",
            tag(&format!("revenue {} vs LP1 {}", format(&revenue), format(&full_lp.value)))
        );

        let (lp2, _) = build_lp2(params, &guards).map_err(|e| tag(&e.to_string()))?;
        let relaxed = solve_lp(&lp2);
        if unique_optimum(&lp2, &relaxed).map_err(|e| tag(&e.to_string()))? {
            unique += 1;
            for set in Subset::all(n) {
                ensure!(full_lp.assignment[vars1.u(set)] == *mech.u(set), "{}", tag(&format!("u{set} differs")));
                for i in 0..n {
                    ensure!(
                        full_lp.assignment[vars1.q(set, i)] == mech.q(set)[i],
                        "{}",
                        tag(&format!("q{}{set} differs", i + 1))
                    );
                }
            }
        }
    }
    ensure!(partial > 0, "no strictly partial cases in the sweep");
    Ok(format!("{partial} strictly partial cases, {unique} with a unique relaxed optimum"))
}

fn reduction() -> Outcome {
    let start = Instant::now();
    let mut runs = 0usize;
    for n in 2..=4usize {
        let cap = 64 * n as u64 * u64::from(usize::BITS - (n + 1).leading_zeros());
        let mut parameters = vec![Vec::new(); n];
        for (s, slot) in parameters.iter_mut().enumerate().skip(1) {
            for k in 1..=binomial(n as u64, s as u64) {
                let p = find_parameter(n, s, k).map_err(|e| e.to_string())?;
                let f = eval_f(n, s, &p).map_err(|e| e.to_string())?;
                let window_low = int(k as i64) - ratio(1, 2 * n as i64 + 2);
                ensure!(f > window_low && f < int(k as i64), "f(p~) = {} outside window for n={n} s={s} k={k}", format(&f));
                ensure!(denominator_bits(&p) <= cap, "p~ for n={n} s={s} k={k} has {} bits", denominator_bits(&p));
                slot.push(p);
            }
        }
        for code in 0..6usize.pow(n as u32) {
            let c: Vec<u64> = (0..n).map(|i| (code / 6usize.pow(i as u32) % 6 + 1) as u64).collect();
            for set in Subset::all(n).filter(|t| !t.is_empty() && t.len() < n) {
                let rank = lexrank_oracle(&c, set).map_err(|e| e.to_string())?;
                for (k0, p) in parameters[set.len()].iter().enumerate() {
                    let k = k0 as u64 + 1;
                    let tag = format!("C={c:?} S={set} k={k}");
                    let run = run_reduction_with_parameter(&c, set, k, p.clone()).map_err(|e| format!("{tag}: {e}"))?;
                    runs += 1;
                    ensure!(run.probe_value.is_zero() || run.probe_value.is_one(), "{tag}: probe not 0/1");
                    ensure!(run.decision == (rank <= k), "{tag}: decision {} but rank {rank}", run.decision);
                    check_cost_structure(&run.output.params).map_err(|e| format!("{tag}: {e}"))?;
                    let star = run.partially_filled.ok_or_else(|| format!("{tag}: no partially filled node"))?;
                    ensure!(star.len() == n - set.len(), "{tag}: partially filled node {star}");
                    let star_rank = lexrank_oracle(&c, star.complement(n)).map_err(|e| e.to_string())?;
                    ensure!(star_rank == k, "{tag}: complement of S* has rank {star_rank}");
                }
            }
        }
    }
    let took = start.elapsed();
    ensure!(took < REDUCTION_LIMIT, "sweep took {took:?}, limit {REDUCTION_LIMIT:?}");
    Ok(format!("{runs} instances, {took:.1?}"))
}

fn gadget() -> Outcome {
    let mut checks = 0usize;
    for n in 1..=4usize {
        for code in 0..5usize.pow(n as u32) {
            let w: Vec<u64> = (0..n).map(|i| (code / 5usize.pow(i as u32) % 5 + 1) as u64).collect();
            let total: u64 = w.iter().sum();
            for t in 0..=total + 1 {
                let count = count_by_size(&w, t).map_err(|e| e.to_string())?;
                for ell in 1..=n {
                    let (c, s) = subsetsum_gadget(&w, t, ell).map_err(|e| e.to_string())?;
                    let brute = lexrank_oracle(&c, s).map_err(|e| e.to_string())?;
                    let formula: u64 =
                        1 + (1..=ell).map(|m| count[m] * binomial(ell as u64 - 1, (ell - m) as u64)).sum::<u64>();
                    ensure!(brute == formula, "W={w:?} T={t} l={ell}: rank {brute} vs formula {formula}");
                    checks += 1;
                }
                let staged = count_subsetsum_staged(&w, t).map_err(|e| e.to_string())?;
                let direct = count_subsetsum_direct(&w, t).map_err(|e| e.to_string())?;
                ensure!(staged == direct, "W={w:?} T={t}: staged {staged} vs direct {direct}");
            }
        }
    }
    Ok(format!("{checks} rank identities, staged inversion matches enumeration"))
}

fn budgeted() -> Outcome {
    let mut cases = 0usize;
    for n in 1..=4usize {
        for code in 0..6usize.pow(n as u32) {
            let x: Vec<u64> = (0..n).map(|i| (code / 6usize.pow(i as u32) % 6 + 1) as u64).collect();
            let total: u64 = x.iter().sum();
            for budget in 1..=total {
                for pad in [2, 10] {
                    let eps = ratio(1, total as i64 + pad);
                    let inst = BudgetedInstance::new(x.clone(), budget, eps).map_err(|e| e.to_string())?;
                    let mech = optimal_budgeted_mechanism(&inst);
                    let oracle = budgeted_oracle_lp(&inst).map_err(|e| e.to_string())?;
                    let tag = format!("x={x:?} budget={budget} eps=1/{}", total as i64 + pad);
                    ensure!(oracle == mech.revenue, "{tag}: closed form {} vs LP {}", format(&mech.revenue), format(&oracle));
                    let check = check_menu(&inst, &mech);
                    ensure!(check.is_clean(), "{tag}: {:?}", check.violations);
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} instances"))
}

fn draw_lottery(seed: u64) -> Result<Vec<Subset>, String> {
    let inst = instance([1, 1], [1, 2]);
    let params = inst.to_lp2_params(&int(1)).map_err(|e| e.to_string())?;
    let flow = canonical_solution(&params).map_err(|e| e.to_string())?;
    let mech = closed_form_mechanism(&params, &flow).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..SAMPLES).map(|_| sample_allocation(&mech, Subset::from_items([0]), &mut rng).0).collect())
}

fn sampling() -> Outcome {
    let draws = draw_lottery(SAMPLE_SEED)?;
    ensure!(draws.iter().all(|d| d.contains(0)), "item 1 not always allocated");
    let hits = draws.iter().filter(|d| d.contains(1)).count() as f64;
    let mean = SAMPLES as f64 / 2.0;
    let sigma = (SAMPLES as f64 * 0.25).sqrt();
    ensure!((hits - mean).abs() <= 5.0 * sigma, "item 2 drawn {hits} times, mean {mean}, sigma {sigma}");
    ensure!(draw_lottery(SAMPLE_SEED)? == draws, "same seed gave a different sequence");
    Ok(format!("item 2 frequency {:.4} ({:+.2} sigma), reproducible", hits / SAMPLES as f64, (hits - mean) / sigma))
}

fn main() -> ExitCode {
    let sweep = duality_sweep();
    let criteria: Vec<Criterion> = vec![
        ("worked examples", Box::new(worked_examples)),
        ("duality", Box::new(|| duality(&sweep))),
        ("closed form vs full program", Box::new(|| closed_form_vs_full_lp(&sweep))),
        ("reduction", Box::new(reduction)),
        ("gadget", Box::new(gadget)),
        ("budgeted", Box::new(budgeted)),
        ("sampling", Box::new(sampling)),
    ];
    let mut failed = 0;
    for (id, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{took:.1?}]", id + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}) [{took:.1?}]", id + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

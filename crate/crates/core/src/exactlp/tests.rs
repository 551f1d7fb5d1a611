use super::*;
use crate::instance::{Lp2Params, OmdInstance};
use crate::rational::{int, ratio};
use proptest::prelude::*;

fn half() -> Rational {
    ratio(1, 2)
}

fn params(x: &[Rational], b: Rational, d: &[Rational], p: &[Rational]) -> Lp2Params {
    Lp2Params::new(x.to_vec(), b, d.to_vec(), p.to_vec()).unwrap()
}

#[test]
fn one_variable_programs() {
    let mut lp = LpProblem::new(Sense::Maximize);
    let x = lp.add_nonneg("x");
    lp.add_objective_term(x, int(1));
    lp.add_constraint("c", vec![(x, int(1))], Relation::Le, int(3));
    let sol = solve_lp(&lp);
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_eq!(sol.value, int(3));

    let mut lp = LpProblem::new(Sense::Maximize);
    let x = lp.add_free("x");
    lp.add_objective_term(x, int(1));
    lp.add_constraint("lo", vec![(x, int(1))], Relation::Ge, int(1));
    lp.add_constraint("hi", vec![(x, int(1))], Relation::Le, int(0));
    assert_eq!(solve_lp(&lp).status, LpStatus::Infeasible);
}

#[test]
fn two_variable_program() {
    let mut lp = LpProblem::new(Sense::Maximize);
    let x = lp.add_nonneg("x");
    let y = lp.add_nonneg("y");
    lp.set_objective(Sense::Maximize, vec![(x, int(1)), (y, int(1))]);
    lp.add_constraint("a", vec![(x, int(1)), (y, int(2))], Relation::Le, int(4));
    lp.add_constraint("b", vec![(x, int(1))], Relation::Le, int(2));
    let sol = solve_lp(&lp);
    assert_eq!(sol.value, int(3));
    assert_eq!(sol.assignment, vec![int(2), int(1)]);
}

#[test]
fn unbounded_and_equality_rows() {
    let mut lp = LpProblem::new(Sense::Maximize);
    let x = lp.add_nonneg("x");
    let y = lp.add_nonneg("y");
    lp.set_objective(Sense::Maximize, vec![(x, int(1))]);
    lp.add_constraint("a", vec![(x, int(1)), (y, int(-1))], Relation::Le, int(1));
    assert_eq!(solve_lp(&lp).status, LpStatus::Unbounded);

    let mut lp = LpProblem::new(Sense::Minimize);
    let x = lp.add_free("x");
    let y = lp.add_var("y", None, Some(int(5)));
    lp.set_objective(Sense::Minimize, vec![(x, int(2)), (y, int(-1))]);
    lp.add_constraint("e", vec![(x, int(1)), (y, int(1))], Relation::Eq, ratio(7, 2));
    lp.add_constraint("g", vec![(x, int(1)), (y, int(-1))], Relation::Ge, int(-4));
    let sol = solve_lp(&lp);
    // x = 7/2 - y leaves 7 - 3y; the second row caps y at 15/4
    assert_eq!(sol.value, ratio(-17, 4));
    assert_eq!(sol.assignment, vec![ratio(-1, 4), ratio(15, 4)]);
}

#[test]
fn lp1_shapes() {
    let i1 = OmdInstance::new(vec![int(1)], vec![int(1)], vec![half()]).unwrap();
    let (lp, _) = build_lp1(&i1, &Guards::default()).unwrap();
    let u_vars = lp.variables().iter().filter(|v| v.name.starts_with('u')).count();
    assert_eq!(u_vars, 2);
    assert_eq!(lp.num_vars() - u_vars, 2);
    let bic = lp.constraints().iter().filter(|c| c.label.starts_with("bic")).count();
    let ir = lp.constraints().iter().filter(|c| c.label.starts_with("ir")).count();
    assert_eq!((bic, ir), (2, 2));

    let i2 = OmdInstance::new(vec![int(1), int(1)], vec![int(1), int(1)], vec![half(), half()]).unwrap();
    let (lp, _) = build_lp1(&i2, &Guards::default()).unwrap();
    let u_vars = lp.variables().iter().filter(|v| v.name.starts_with('u')).count();
    assert_eq!((u_vars, lp.num_vars() - u_vars), (4, 8));
    let bic = lp.constraints().iter().filter(|c| c.label.starts_with("bic")).count();
    let ir = lp.constraints().iter().filter(|c| c.label.starts_with("ir")).count();
    assert_eq!((bic, ir), (12, 4));
}

#[test]
fn lp1_hart_nisan_optimum() {
    let inst = OmdInstance::new(vec![int(1), int(1)], vec![int(1), int(1)], vec![half(), half()]).unwrap();
    let (lp, _) = build_lp1(&inst, &Guards::default()).unwrap();
    let sol = solve_lp(&lp);
    assert_eq!(sol.value, ratio(9, 4));
}

#[test]
fn lp1_guard() {
    let n = 9;
    let inst = OmdInstance::new(vec![int(1); n], vec![int(1); n], vec![half(); n]).unwrap();
    assert!(matches!(
        build_lp1(&inst, &Guards::default()),
        Err(Error::GuardExceeded { n: 9, limit: 8, .. })
    ));
}

#[test]
fn lp2_and_lp3_examples() {
    let pa = params(&[int(2), int(3)], ratio(9, 2), &[int(1), int(2)], &[half(), half()]);
    let (lp2, _) = build_lp2(&pa, &Guards::default()).unwrap();
    assert_eq!((lp2.num_vars(), lp2.constraints().len()), (4, 4));
    assert_eq!(solve_lp(&lp2).value, ratio(1, 8));
    let (lp3, _) = build_lp3(&pa, &Guards::default()).unwrap();
    assert_eq!((lp3.num_vars(), lp3.constraints().len()), (4, 4));
    assert_eq!(solve_lp(&lp3).value, ratio(1, 8));

    let pb = params(&[int(4), int(2)], int(5), &[int(1), int(2)], &[half(), half()]);
    let (lp2, _) = build_lp2(&pb, &Guards::default()).unwrap();
    assert_eq!(solve_lp(&lp2).value, ratio(1, 4));

    let pc = params(&[int(2), int(2)], int(1), &[int(1), int(1)], &[half(), half()]);
    let (lp3, _) = build_lp3(&pc, &Guards::default()).unwrap();
    assert_eq!(solve_lp(&lp3).status, LpStatus::Infeasible);
}

#[test]
fn uniqueness_probe_examples() {
    let mut lp = LpProblem::new(Sense::Maximize);
    let x = lp.add_free("x");
    lp.add_objective_term(x, int(1));
    lp.add_constraint("c", vec![(x, int(1))], Relation::Le, int(1));
    let sol = solve_lp(&lp);
    assert!(unique_optimum(&lp, &sol).unwrap());

    let mut lp = LpProblem::new(Sense::Maximize);
    let x = lp.add_nonneg("x");
    let y = lp.add_nonneg("y");
    lp.set_objective(Sense::Maximize, vec![(x, int(1)), (y, int(1))]);
    lp.add_constraint("c", vec![(x, int(1)), (y, int(1))], Relation::Le, int(1));
    let sol = solve_lp(&lp);
    assert!(!unique_optimum(&lp, &sol).unwrap());

    let pa = params(&[int(2), int(3)], ratio(9, 2), &[int(1), int(2)], &[half(), half()]);
    let (lp2, _) = build_lp2(&pa, &Guards::default()).unwrap();
    let sol = solve_lp(&lp2);
    assert!(unique_optimum(&lp2, &sol).unwrap());

    let bogus = LpSolution { status: LpStatus::Infeasible, value: int(0), assignment: vec![] };
    assert_eq!(unique_optimum(&lp2, &bogus), Err(Error::NotOptimal));
}

#[test]
fn text_dump_lists_one_row_per_line() {
    let pa = params(&[int(2), int(3)], ratio(9, 2), &[int(1), int(2)], &[half(), half()]);
    let (lp2, _) = build_lp2(&pa, &Guards::default()).unwrap();
    let text = lp2.to_text();
    assert!(text.starts_with("maximize: -9/8 u{} - 5/8 u{1} - 3/8 u{2} + 1/8 u{1,2}\n"));
    assert_eq!(text.lines().filter(|l| l.contains("bic2")).count(), 4);
    assert!(text.contains("bic2{}+1: 1 u{1} - 1 u{} <= 1"));
}

/// Optimum of `max c.z` over `{z >= 0, A z <= b}` in two dimensions by
/// enumerating every intersection of two boundary lines.
fn vertex_enumeration(c: [i64; 2], rows: &[([i64; 2], i64)]) -> Option<Rational> {
    let mut lines: Vec<([Rational; 2], Rational)> = rows
        .iter()
        .map(|(a, b)| ([int(a[0]), int(a[1])], int(*b)))
        .collect();
    lines.push(([int(1), int(0)], int(0)));
    lines.push(([int(0), int(1)], int(0)));
    let feasible = |z: &[Rational; 2]| {
        z[0] >= int(0)
            && z[1] >= int(0)
            && rows
                .iter()
                .all(|(a, b)| int(a[0]) * &z[0] + int(a[1]) * &z[1] <= int(*b))
    };
    let mut best: Option<Rational> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (a, b) = (&lines[i], &lines[j]);
            let det = &a.0[0] * &b.0[1] - &a.0[1] * &b.0[0];
            if det == int(0) {
                continue;
            }
            let z = [
                (&a.1 * &b.0[1] - &a.0[1] * &b.1) / &det,
                (&a.0[0] * &b.1 - &a.1 * &b.0[0]) / &det,
            ];
            if feasible(&z) {
                let v = int(c[0]) * &z[0] + int(c[1]) * &z[1];
                if best.as_ref().is_none_or(|cur| v > *cur) {
                    best = Some(v);
                }
            }
        }
    }
    best
}

#[test]
fn vertex_oracle_agrees_on_the_worked_example() {
    assert_eq!(vertex_enumeration([1, 1], &[([1, 2], 4), ([1, 0], 2)]), Some(int(3)));
}

proptest! {
    #[test]
    fn bounded_two_variable_programs_match_vertex_enumeration(
        c in prop::array::uniform2(-5i64..6),
        rows in prop::collection::vec((prop::array::uniform2(-4i64..5), -3i64..10), 1..5),
    ) {
        let mut lp = LpProblem::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        let y = lp.add_nonneg("y");
        lp.set_objective(Sense::Maximize, vec![(x, int(c[0])), (y, int(c[1]))]);
        let mut all_rows = rows.clone();
        // keep the region bounded so the enumeration sees the optimum
        all_rows.push(([1, 1], 12));
        for (k, (a, b)) in all_rows.iter().enumerate() {
            lp.add_constraint(format!("r{k}"), vec![(x, int(a[0])), (y, int(a[1]))], Relation::Le, int(*b));
        }
        let sol = solve_lp(&lp);
        match vertex_enumeration(c, &all_rows) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(v) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert_eq!(&sol.value, &v);
                prop_assert!(lp.is_feasible(&sol.assignment));
            }
        }
    }
}

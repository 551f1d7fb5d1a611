//! Benchmark fixtures for `omd-core`.

use omd_core::rational::{int, ratio};
use omd_core::OmdInstance;

/// A two-point instance on `n` items with distinct high increments,
/// `a_i / d_i = 21 / (20 n)` and `p_i = 1/2`, so the grand bundle is the
/// only node with positive balance.
pub fn staircase(n: usize) -> OmdInstance {
    let d: Vec<_> = (0..n).map(|i| int(2 + 3 * i as i64)).collect();
    let a = d.iter().map(|di| di * ratio(21, 20 * n as i64)).collect();
    let p = vec![ratio(1, 2); n];
    OmdInstance::new(a, d, p).expect("fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use omd_core::{canonical_solution, closed_form_mechanism, verify_bic_ir};

    #[test]
    fn fixtures_solve_cleanly() {
        for n in 1..=8 {
            let inst = staircase(n);
            let params = inst.to_lp2_params(&int(1)).unwrap();
            let flow = canonical_solution(&params).unwrap();
            let mech = closed_form_mechanism(&params, &flow).unwrap();
            assert!(verify_bic_ir(&inst, &mech).unwrap().is_clean(), "n = {n}");
        }
    }
}

//! Randomized end-to-end checks of the LP and MIP solvers against
//! independent brute-force oracles.
//!
//! The LP oracle enumerates candidate vertices (every choice of active rows
//! and bounds) with dense Gaussian elimination, so it shares no code with the
//! simplex.  The MIP oracle enumerates all 0-1 patterns.

use lpkit::{
    solve_lp, solve_lp_with, solve_mip, LpConfig, LpStatus, MipConfig, MipStatus, ModelSystem,
    Sense, VarKind, VarStatus,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense solve of a k-by-k system; None when singular.
fn gauss_solve(a: &mut Vec<Vec<f64>>, b: &mut Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..k {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col] / a[col][col];
                for c in col..k {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..k).map(|i| b[i] / a[i][i]).collect())
}

/// Brute-force LP optimum by enumerating candidate vertices: every subset of
/// n active conditions drawn from rows (at equality) and variable bounds.
/// Exponential; usable only for tiny n and row counts.
fn lp_oracle(sys: &ModelSystem) -> Option<f64> {
    let n = sys.num_vars();
    let m = sys.num_rows();
    // Conditions: 0..m rows, m..m+n lower bounds, m+n..m+2n upper bounds.
    let total = m + 2 * n;
    assert!(total <= 20, "oracle only for tiny systems");
    let mut best: Option<f64> = None;
    let mut subset = vec![0usize; n];
    // Enumerate all (total choose n) combinations.
    fn combos(start: usize, total: usize, slot: usize, subset: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        let n = subset.len();
        if slot == n {
            f(subset);
            return;
        }
        for c in start..total {
            subset[slot] = c;
            combos(c + 1, total, slot + 1, subset, f);
        }
    }
    let mut check = |active: &[usize]| {
        let mut a: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut b: Vec<f64> = Vec::with_capacity(n);
        for &cond in active {
            let mut rowv = vec![0.0; n];
            let rhs;
            if cond < m {
                for &(j, v) in &sys.row(cond).coeffs {
                    rowv[j] = v;
                }
                rhs = sys.row(cond).rhs;
            } else if cond < m + n {
                rowv[cond - m] = 1.0;
                rhs = sys.var(cond - m).lower;
            } else {
                rowv[cond - m - n] = 1.0;
                rhs = sys.var(cond - m - n).upper;
            }
            a.push(rowv);
            b.push(rhs);
        }
        let x = match gauss_solve(&mut a, &mut b) {
            Some(x) => x,
            None => return,
        };
        // Feasibility of the candidate point.
        for j in 0..n {
            if x[j] < sys.var(j).lower - 1e-7 || x[j] > sys.var(j).upper + 1e-7 {
                return;
            }
        }
        for i in 0..m {
            let act: f64 = sys.row(i).coeffs.iter().map(|&(j, v)| v * x[j]).sum();
            let ok = match sys.row(i).sense {
                Sense::Le => act <= sys.row(i).rhs + 1e-7,
                Sense::Ge => act >= sys.row(i).rhs - 1e-7,
                Sense::Eq => (act - sys.row(i).rhs).abs() <= 1e-7,
            };
            if !ok {
                return;
            }
        }
        let obj = sys.obj_value(&x);
        if best.map_or(true, |b| obj < b) {
            best = Some(obj);
        }
    };
    combos(0, total, 0, &mut subset, &mut check);
    best
}

fn random_tiny_lp(seed: u64) -> ModelSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=4usize);
    let m = rng.gen_range(1..=3usize);
    let mut sys = ModelSystem::new("prop");
    for j in 0..n {
        let lo = (rng.gen_range(-30i32..10) as f64) / 10.0;
        let span = (rng.gen_range(0i32..40) as f64) / 10.0;
        let c = (rng.gen_range(-50i32..50) as f64) / 10.0;
        sys.add_var(&format!("x{}", j), lo, lo + span, c, VarKind::Continuous).unwrap();
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                let a = (rng.gen_range(-30i32..30) as f64) / 10.0;
                if a != 0.0 {
                    coeffs.push((j, a));
                }
            }
        }
        if coeffs.is_empty() {
            coeffs.push((0, 1.0));
        }
        let sense = match rng.gen_range(0..3) {
            0 => Sense::Le,
            1 => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = (rng.gen_range(-40i32..40) as f64) / 10.0;
        sys.add_row(&format!("r{}", i), coeffs, sense, rhs).unwrap();
    }
    sys
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration(seed in 0u64..1_000_000) {
        let sys = random_tiny_lp(seed);
        if sys.num_rows() + 2 * sys.num_vars() > 20 {
            return Ok(());
        }
        let sol = solve_lp(&sys).unwrap();
        let oracle = lp_oracle(&sys);
        match (sol.status, oracle) {
            (LpStatus::Optimal, Some(want)) => {
                prop_assert!(
                    (sol.objective - want).abs() <= 1e-6 * (1.0 + want.abs()),
                    "simplex {} vs oracle {}", sol.objective, want
                );
            }
            (LpStatus::Infeasible, None) => {}
            // The vertex oracle finds *a* feasible vertex iff one exists, so
            // any other pairing is a bug.
            (got, want) => prop_assert!(false, "status {:?} vs oracle {:?}", got, want),
        }
    }

    #[test]
    fn duals_satisfy_complementary_slackness(seed in 0u64..1_000_000) {
        let sys = random_tiny_lp(seed);
        let sol = solve_lp(&sys).unwrap();
        if sol.status != LpStatus::Optimal {
            return Ok(());
        }
        for (i, r) in sys.rows().iter().enumerate() {
            let y = sol.duals[i];
            let act: f64 = r.coeffs.iter().map(|&(j, a)| a * sol.primal[j]).sum();
            let slack = (r.rhs - act).abs();
            match r.sense {
                Sense::Le => {
                    prop_assert!(y <= 1e-6, "<= row with positive dual {}", y);
                    prop_assert!(y >= -1e-6 || slack <= 1e-5, "nonbinding <= row with dual {}", y);
                }
                Sense::Ge => {
                    prop_assert!(y >= -1e-6, ">= row with negative dual {}", y);
                    prop_assert!(y <= 1e-6 || slack <= 1e-5, "nonbinding >= row with dual {}", y);
                }
                Sense::Eq => {}
            }
        }
        // Strong duality via the reduced-cost identity.
        let mut dual_obj: f64 = sol.duals.iter().zip(sys.rows()).map(|(y, r)| y * r.rhs).sum();
        for j in 0..sys.num_vars() {
            match sol.basis.0[j] {
                VarStatus::AtLower => dual_obj += sol.reduced_costs[j] * sys.var(j).lower,
                VarStatus::AtUpper => dual_obj += sol.reduced_costs[j] * sys.var(j).upper,
                VarStatus::Basic => {}
            }
        }
        prop_assert!(
            (dual_obj - sol.objective).abs() <= 1e-5 * (1.0 + sol.objective.abs()),
            "duality gap: primal {} dual {}", sol.objective, dual_obj
        );
    }
}

/// All-binary oracle: enumerate every 0-1 pattern and keep the best feasible.
fn mip_oracle(sys: &ModelSystem) -> Option<f64> {
    let n = sys.num_vars();
    assert!(n <= 16);
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if sys.max_violation(&x) > 1e-9 {
            continue;
        }
        let obj = sys.obj_value(&x);
        if best.map_or(true, |b| obj < b) {
            best = Some(obj);
        }
    }
    best
}

#[test]
fn branch_and_bound_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for round in 0..60 {
        let n = rng.gen_range(4..=10usize);
        let m = rng.gen_range(1..=4usize);
        let mut sys = ModelSystem::new("mip");
        for j in 0..n {
            let c = (rng.gen_range(-60i32..60) as f64) / 10.0;
            sys.add_var(&format!("x{}", j), 0.0, 1.0, c, VarKind::Binary).unwrap();
        }
        for i in 0..m {
            let mut coeffs = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.6) {
                    coeffs.push((j, rng.gen_range(1..5) as f64));
                }
            }
            if coeffs.is_empty() {
                coeffs.push((0, 1.0));
            }
            let total: f64 = coeffs.iter().map(|&(_, a)| a).sum();
            let (sense, rhs) = match rng.gen_range(0..3) {
                0 => (Sense::Le, (total * 0.5).floor()),
                1 => (Sense::Ge, (total * 0.3).floor()),
                _ => (Sense::Eq, (total * 0.4).round()),
            };
            sys.add_row(&format!("r{}", i), coeffs, sense, rhs).unwrap();
        }
        let sol = solve_mip(&sys, &MipConfig::default()).unwrap();
        let want = mip_oracle(&sys);
        match (sol.status, want) {
            (MipStatus::Optimal, Some(w)) => assert!(
                (sol.objective - w).abs() <= 1e-6 * (1.0 + w.abs()),
                "round {}: solver {} vs enumeration {}",
                round,
                sol.objective,
                w
            ),
            (MipStatus::Infeasible, None) => {}
            (got, w) => panic!("round {}: status {:?} vs enumeration {:?}", round, got, w),
        }
    }
}

#[test]
fn solver_runs_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let sys = random_tiny_lp(rng.gen());
        let a = solve_lp(&sys).unwrap();
        let b = solve_lp(&sys).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.primal.len(), b.primal.len());
        for (x, y) in a.primal.iter().zip(&b.primal) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn warm_start_converges_faster_on_perturbed_problems() {
    // A moderately sized LP; re-solving after a small rhs change from the
    // previous basis should take far fewer iterations than from scratch.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 40;
    let mut sys = ModelSystem::new("warm");
    for j in 0..n {
        sys.add_var(&format!("x{}", j), 0.0, 4.0, rng.gen_range(-5.0..5.0), VarKind::Continuous)
            .unwrap();
    }
    for i in 0..25 {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.3) {
                coeffs.push((j, rng.gen_range(0.5..3.0)));
            }
        }
        if coeffs.is_empty() {
            coeffs.push((0, 1.0));
        }
        let total: f64 = coeffs.iter().map(|&(_, a)| a).sum();
        sys.add_row(&format!("r{}", i), coeffs, Sense::Le, total).unwrap();
    }
    let cold = solve_lp(&sys).unwrap();
    assert_eq!(cold.status, LpStatus::Optimal);

    // Tighten one variable bound slightly and warm start.
    sys.set_bounds(3, 0.0, 3.5);
    let warm = solve_lp_with(&sys, &LpConfig::default(), Some(&cold.basis)).unwrap();
    assert_eq!(warm.status, LpStatus::Optimal);
    assert!(
        warm.iterations <= cold.iterations,
        "warm {} vs cold {}",
        warm.iterations,
        cold.iterations
    );
}

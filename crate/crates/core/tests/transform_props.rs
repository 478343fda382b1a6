use ehlcp::blockdata::BoundLadder;
use ehlcp::transform::{feasibility_violations, reconstruct_y, recover_solution, selection_matrices, sum_identity};
use proptest::prelude::*;

fn ladder_and_point() -> impl Strategy<Value = (BoundLadder, Vec<f64>, Vec<f64>)> {
    (1usize..6, 1usize..4).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(0.01f64..2.0, n), m - 1),
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
        )
            .prop_map(move |(d, y, z)| (BoundLadder::new(n, d), y, z))
    })
}

/// Coordinates of a ladder's breakpoints, to probe the kinks directly.
fn snapped(ladder: &BoundLadder, y: &[f64], pick: usize) -> Vec<f64> {
    let s = ladder.prefix_sums();
    y.iter().enumerate().map(|(j, &v)| if pick % 2 == 0 { v } else { s[pick % s.len()][j] }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn recovered_tuple_is_feasible((ladder, y, _) in ladder_and_point()) {
        let sol = recover_solution(&y, &ladder);
        prop_assert_eq!(feasibility_violations(&sol, &ladder).max(), 0.0);
    }

    #[test]
    fn pieces_sum_to_positive_part((ladder, y, _) in ladder_and_point()) {
        let (lhs, rhs) = sum_identity(&y, &ladder);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        for (b, v) in rhs.iter().zip(&y) {
            prop_assert_eq!(*b, v.max(0.0));
        }
    }

    #[test]
    fn roundtrip_fixes_the_tuple((ladder, y, _) in ladder_and_point()) {
        let sol = recover_solution(&y, &ladder);
        let back = reconstruct_y(&sol, &ladder).unwrap();
        let again = recover_solution(&back, &ladder);
        for (a, b) in back.iter().zip(&y) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        for (a, b) in again.w.iter().zip(&sol.w) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        for (xa, xb) in again.x.iter().zip(&sol.x) {
            for (a, b) in xa.iter().zip(xb) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn selection_links_the_pieces((ladder, y, z) in ladder_and_point(), pick in 0usize..8) {
        let z = snapped(&ladder, &z, pick);
        let sel = selection_matrices(&y, &z, &ladder);
        prop_assert!(sel.simplex_defect() <= 1e-15);
        let (a, b) = (recover_solution(&y, &ladder), recover_solution(&z, &ladder));
        for j in 0..y.len() {
            let dy = y[j] - z[j];
            let tol = 1e-10 * (1.0 + dy.abs());
            prop_assert!(((b.w[j] - a.w[j]) - sel.lambdas[0][j] * dy).abs() <= tol);
            for i in 0..ladder.m() {
                prop_assert!(((a.x[i][j] - b.x[i][j]) - sel.lambdas[i + 1][j] * dy).abs() <= tol);
            }
            let mut prev = 1.0;
            for i in 1..=ladder.m() {
                let nu: f64 = sel.lambdas[i..].iter().map(|l| l[j]).sum();
                prop_assert!(nu <= prev + 1e-15);
                prev = nu;
            }
        }
    }

    #[test]
    fn selection_at_equal_points_is_a_vertex_mix((ladder, y, _) in ladder_and_point()) {
        let sel = selection_matrices(&y, &y, &ladder);
        for l in &sel.lambdas {
            for &v in l {
                prop_assert!(v == 0.0 || v == 0.5 || v == 1.0);
            }
        }
    }
}

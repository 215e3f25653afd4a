mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softpd::lp::{self, LpStatus};

#[test]
fn matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut infeasible = 0;
    for trial in 0..300 {
        let nv = rng.gen_range(1..=6);
        let m = rng.gen_range(0..=8);
        let p = common::random_bounded_lp(&mut rng, nv, m, 10.0);
        let sol = lp::solve(&p, None).unwrap();
        match common::vertex_enumeration(&p) {
            Some((obj, _)) => {
                assert_eq!(sol.status, LpStatus::Optimal, "trial {trial}");
                assert!((sol.objective - obj).abs() <= 1e-6 * (1.0 + obj.abs()), "trial {trial}: {} vs {obj}", sol.objective);
                for r in 0..p.num_rows() {
                    assert!(p.row_activity(r, &sol.x) <= p.rows[r].rhs + 1e-7, "trial {trial} row {r}");
                }
                let duals = sol.duals.as_ref().unwrap();
                let dual_obj: f64 = duals.iter().zip(&p.rows).map(|(y, r)| y * r.rhs).sum();
                assert!(duals.iter().all(|&y| y >= -1e-9));
                assert!((dual_obj - obj).abs() <= 1e-6 * (1.0 + obj.abs()), "trial {trial}: dual {dual_obj}");
            }
            None => {
                infeasible += 1;
                assert_eq!(sol.status, LpStatus::Infeasible, "trial {trial}");
            }
        }
    }
    assert!(infeasible < 300);
}

#[test]
fn warm_start_preserves_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let nv = rng.gen_range(2..=6);
        let m = rng.gen_range(2..=8);
        let p = common::random_bounded_lp(&mut rng, nv, m, 10.0);
        let first = lp::solve(&p, None).unwrap();
        let Some(warm) = first.warm.clone() else { continue };
        let mut q = p.clone();
        q.objective.iter_mut().for_each(|c| *c = rng.gen_range(-5.0..5.0));
        let cold = lp::solve(&q, None).unwrap();
        for w in [warm.clone(), warm.basis_only()] {
            let hot = lp::solve(&q, Some(&w)).unwrap();
            assert_eq!(hot.status, cold.status);
            assert!((hot.objective - cold.objective).abs() <= 1e-7 * (1.0 + cold.objective.abs()));
        }
    }
}

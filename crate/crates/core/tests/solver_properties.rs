mod common;

use common::{naive_kron, same_support};
use prodgraph::eval::{binarize, fscore, Adjacency};
use prodgraph::graph::{erdos_renyi, validate_gso};
use prodgraph::signal::{analytic_cov, generate_2d, random_filter, sample_cov, CovarianceSet};
use prodgraph::solver::{
    reference_solve_small, solve_kst, solve_kst_factor, solve_l1_commute, solve_sepkst, solve_st, KstFactor,
};
use prodgraph::{Gso, Matrix, NormMode, SolveReport, SolveStatus, SolverOptions};
use rand::Rng;

fn gso(n: usize, edges: &[(usize, usize)]) -> Gso {
    let mut m = Matrix::zeros(n, n);
    for &(i, j) in edges {
        m[(i, j)] = 1.0;
        m[(j, i)] = 1.0;
    }
    validate_gso(m, NormMode::BinaryUnnormalized).unwrap()
}

fn f1(est: &Option<Gso>, truth: &Matrix) -> f64 {
    let est = est.as_ref().expect("estimate present");
    fscore(&binarize(est.weights(), 0.1), &Adjacency::support(truth)).unwrap().fscore
}

struct Pair {
    gp: Gso,
    gq: Gso,
    cov: CovarianceSet,
}

fn er_pair(n: usize, seed: u64) -> Pair {
    let gp = erdos_renyi(n, 0.3, 2 * seed).unwrap();
    let gq = erdos_renyi(n, 0.3, 2 * seed + 1).unwrap();
    let hp = random_filter(&gp, 3, seed).unwrap();
    let hq = random_filter(&gq, 3, seed + 1000).unwrap();
    let cov = analytic_cov(&hp, &hq, true);
    Pair { gp, gq, cov }
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

/// Minimum of ‖S‖₁ over first-row-unit GSOs: row 0 alone contributes 2.
const FIRST_ROW_UNIT_MIN_L1: f64 = 2.0;

fn assert_feasible(rep: &SolveReport, radius: f64, tol: f64) {
    assert_eq!(rep.status, SolveStatus::Optimal);
    let s = rep.s_full.as_ref().unwrap().weights().clone();
    validate_gso(s, rep.norm_mode).unwrap();
    assert!(rep.commut_residual.unwrap() <= radius + tol);
}

#[test]
fn identity_covariance_gives_a_minimal_member() {
    let rep = solve_l1_commute(&Matrix::identity(5, 5), &opts()).unwrap();
    assert_feasible(&rep, 0.0, 1e-6);
    assert!((rep.objective.unwrap() - FIRST_ROW_UNIT_MIN_L1).abs() < 1e-5);
    assert_eq!(rep.commut_residual, Some(0.0));
    let st = solve_st(&Matrix::identity(4, 4), &opts()).unwrap();
    assert!((st.objective.unwrap() - FIRST_ROW_UNIT_MIN_L1).abs() < 1e-5);
}

#[test]
fn recovers_an_eight_node_graph_from_its_filter_covariance() {
    let g = erdos_renyi(8, 0.3, 0).unwrap();
    assert!(g.edge_count() > 0);
    let h = random_filter(&g, 3, 1).unwrap();
    let rep = solve_l1_commute(&h.squared(), &opts()).unwrap();
    assert_feasible(&rep, 0.0, 1e-6);
    assert_eq!(f1(&rep.s_full, g.weights()), 1.0);
}

#[test]
fn relaxation_restores_feasibility_on_sample_covariances() {
    let g = erdos_renyi(4, 0.5, 2).unwrap();
    let h = random_filter(&g, 3, 3).unwrap();
    let id = random_filter(&gso(3, &[(0, 1)]), 1, 0).unwrap();
    let c = sample_cov(&generate_2d(&h, &id, 10, 4).unwrap(), false).c_p;
    assert_eq!(solve_l1_commute(&c, &opts()).unwrap().status, SolveStatus::Infeasible);
    let relaxed = SolverOptions { epsilon_rel: 0.1, ..opts() };
    let rep = solve_l1_commute(&c, &relaxed).unwrap();
    assert_feasible(&rep, 0.1 * c.norm(), 1e-6);
}

#[test]
fn st_recovers_a_small_kronecker_graph() {
    // Three-node path centred on node 0.
    let path = gso(3, &[(0, 1), (0, 2)]);
    let hp = random_filter(&path, 3, 0).unwrap();
    let hq = random_filter(&path, 3, 50).unwrap();
    let c_y = analytic_cov(&hp, &hq, true).c_y.unwrap();
    let rep = solve_st(&c_y, &opts()).unwrap();
    assert_eq!(rep.status, SolveStatus::Optimal);
    assert_eq!(f1(&rep.s_full, &naive_kron(path.weights(), path.weights())), 1.0);
}

fn median_st_time(n: usize) -> f64 {
    let pair = er_pair(n, 1);
    let c_y = pair.cov.c_y.unwrap();
    let mut t: Vec<f64> = (0..5).map(|_| solve_st(&c_y, &opts()).unwrap().wall_time_s).collect();
    t.sort_by(f64::total_cmp);
    t[2]
}

#[test]
fn st_runtime_grows_with_size() {
    let (small, large) = (median_st_time(4), median_st_time(8));
    assert!(large > small, "PQ=64: {large}s, PQ=16: {small}s");
}

#[test]
fn kst_and_sepkst_recover_a_four_by_four_pair() {
    let pair = er_pair(4, 1);
    let c_y = pair.cov.c_y.as_ref().unwrap();
    let k = solve_kst(c_y, 4, 4, &opts()).unwrap();
    let s = solve_sepkst(&pair.cov.c_p, &pair.cov.c_q, &opts()).unwrap();
    for rep in [&k, &s] {
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert_eq!(f1(&rep.s_p, pair.gp.weights()), 1.0);
        assert_eq!(f1(&rep.s_q, pair.gq.weights()), 1.0);
    }
    let support = |g: &Option<Gso>| binarize(g.as_ref().unwrap().weights(), 0.1);
    assert_eq!(support(&k.s_p), support(&s.s_p));
    assert_eq!(support(&k.s_q), support(&s.s_q));
}

#[test]
fn kst_factor_with_true_partner_recovers_in_one_round() {
    let pair = er_pair(4, 1);
    let rep = solve_kst_factor(pair.cov.c_y.as_ref().unwrap(), 4, 4, KstFactor::P, pair.gq.weights(), &opts()).unwrap();
    assert_eq!(rep.status, SolveStatus::Optimal);
    assert_eq!(rep.alt_rounds, Some(1));
    assert_eq!(f1(&rep.s_p, pair.gp.weights()), 1.0);
}

#[test]
fn kst_on_white_covariance_stops_after_one_round() {
    let rep = solve_kst(&Matrix::identity(12, 12), 3, 4, &opts()).unwrap();
    assert_eq!(rep.status, SolveStatus::Optimal);
    assert_eq!(rep.alt_rounds, Some(1));
    assert_eq!(rep.commut_residual, Some(0.0));
}

#[test]
fn sepkst_recovers_an_eight_by_eight_pair() {
    let pair = er_pair(8, 2);
    let rep = solve_sepkst(&pair.cov.c_p, &pair.cov.c_q, &opts()).unwrap();
    assert_eq!(rep.status, SolveStatus::Optimal);
    assert_eq!(f1(&rep.s_p, pair.gp.weights()), 1.0);
    assert_eq!(f1(&rep.s_q, pair.gq.weights()), 1.0);
}

#[test]
fn sepkst_with_white_second_factor() {
    let pair = er_pair(4, 1);
    let rep = solve_sepkst(&pair.cov.c_p, &Matrix::identity(5, 5), &opts()).unwrap();
    assert_eq!(rep.factor_status, Some([SolveStatus::Optimal, SolveStatus::Optimal]));
    assert_eq!(f1(&rep.s_p, pair.gp.weights()), 1.0);
    assert!((rep.s_q.as_ref().unwrap().l1() - FIRST_ROW_UNIT_MIN_L1).abs() < 1e-5);
}

#[test]
fn sepkst_factors_are_solved_independently() {
    let pair = er_pair(5, 3);
    let a = solve_sepkst(&pair.cov.c_p, &pair.cov.c_q, &opts()).unwrap();
    let b = solve_sepkst(&pair.cov.c_q, &pair.cov.c_p, &opts()).unwrap();
    let w = |g: &Option<Gso>| g.as_ref().map(|g| g.weights().clone());
    assert_eq!(w(&a.s_p), w(&b.s_q));
    assert_eq!(w(&a.s_q), w(&b.s_p));
}

/// Product-graph support of a factored estimate; `None` unless both factors
/// were solved to optimality.
fn product_support(rep: &SolveReport) -> Option<Matrix> {
    if rep.status != SolveStatus::Optimal {
        return None;
    }
    let b = |g: &Option<Gso>| binarize(g.as_ref().unwrap().weights(), 0.1).matrix().clone();
    Some(naive_kron(&b(&rep.s_q), &b(&rep.s_p)))
}

#[test]
fn kst_and_sepkst_supports_agree_across_seeds() {
    let mut agree = 0;
    for seed in 0..100 {
        let pair = er_pair(4, seed);
        let k = solve_kst(pair.cov.c_y.as_ref().unwrap(), 4, 4, &opts()).unwrap();
        let s = solve_sepkst(&pair.cov.c_p, &pair.cov.c_q, &opts()).unwrap();
        if product_support(&k) == product_support(&s) {
            agree += 1;
        }
    }
    assert!(agree >= 95, "{agree}/100 seeds agree");
}

/// Random PSD matrices and filter covariances, with and without relaxation.
fn reference_instances() -> Vec<(Matrix, SolverOptions)> {
    let mut rng = prodgraph::rng::stream(99, 0);
    (0..100u64)
        .map(|k| {
            let n = 3 + (k % 4) as usize;
            let c = if k % 3 == 0 {
                let a = Matrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
                &a * a.transpose()
            } else {
                let g = erdos_renyi(n, 0.5, k).unwrap();
                random_filter(&g, 3, k).unwrap().squared()
            };
            let eps = if k % 3 == 2 { 0.0 } else { rng.random::<f64>() * 0.3 * c.norm() };
            (c, SolverOptions { epsilon: eps, ..opts() })
        })
        .collect()
}

#[test]
fn admm_matches_the_interior_point_reference() {
    let mut statuses = [0usize; 2];
    for (k, (c, o)) in reference_instances().iter().enumerate() {
        let a = solve_l1_commute(c, o).unwrap();
        let b = reference_solve_small(c, o).unwrap();
        assert_eq!(a.status, b.status, "instance {k}");
        if a.status == SolveStatus::Optimal {
            statuses[0] += 1;
            let gap = (a.objective.unwrap() - b.objective.unwrap()).abs();
            assert!(gap <= 1e-5, "instance {k}: gap {gap:e}");
            assert_feasible(&a, o.epsilon, 1e-6);
        } else {
            statuses[1] += 1;
        }
    }
    assert!(statuses[0] > 50 && statuses[1] > 0, "{statuses:?}");
}

#[test]
fn reference_agrees_on_white_covariance() {
    let c = Matrix::identity(4, 4);
    let a = solve_l1_commute(&c, &opts()).unwrap();
    let b = reference_solve_small(&c, &opts()).unwrap();
    assert!((a.objective.unwrap() - b.objective.unwrap()).abs() < 1e-6);
}

#[test]
fn both_solvers_detect_infeasibility() {
    // Node 0 is isolated and the spectrum is simple, so every commuting
    // matrix leaves row 0 empty.
    let g = gso(5, &[(1, 2), (2, 3), (3, 4)]);
    let c = random_filter(&g, 3, 8).unwrap().squared();
    assert_eq!(solve_l1_commute(&c, &opts()).unwrap().status, SolveStatus::Infeasible);
    assert_eq!(reference_solve_small(&c, &opts()).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn estimate_is_invariant_to_covariance_scale() {
    for (c, o) in reference_instances().into_iter().take(15) {
        let base = solve_l1_commute(&c, &o).unwrap();
        for scale in [1e-3, 7.5, 1e4] {
            let scaled = solve_l1_commute(&(&c * scale), &SolverOptions { epsilon: o.epsilon * scale, ..o }).unwrap();
            assert_eq!(base.status, scaled.status);
            if let (Some(a), Some(b)) = (&base.s_full, &scaled.s_full) {
                assert!((a.weights() - b.weights()).amax() < 1e-6);
            }
        }
    }
}

#[test]
fn enlarging_the_radius_never_raises_the_objective() {
    for (c, _) in reference_instances().into_iter().take(30) {
        let mut last = f64::INFINITY;
        for rel in [0.0, 0.01, 0.05, 0.1, 0.3] {
            let rep = solve_l1_commute(&c, &SolverOptions { epsilon_rel: rel, ..opts() }).unwrap();
            if rep.status != SolveStatus::Optimal {
                continue;
            }
            if let Some(obj) = rep.objective {
                assert!(obj <= last + 1e-6 * c.nrows() as f64, "{obj} > {last}");
                last = obj;
            }
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let pair = er_pair(4, 5);
    let c_y = pair.cov.c_y.as_ref().unwrap();
    let w = |r: &SolveReport| (r.status, r.iterations, r.s_p.as_ref().map(|g| g.weights().clone()), r.s_q.as_ref().map(|g| g.weights().clone()));
    assert_eq!(w(&solve_kst(c_y, 4, 4, &opts()).unwrap()), w(&solve_kst(c_y, 4, 4, &opts()).unwrap()));
    let st = |r: &SolveReport| (r.iterations, r.s_full.as_ref().map(|g| g.weights().clone()));
    assert_eq!(st(&solve_st(c_y, &opts()).unwrap()), st(&solve_st(c_y, &opts()).unwrap()));
}

#[test]
fn estimates_share_support_with_their_relaxed_counterparts() {
    // A tiny relaxation on exact data keeps the recovered support.
    let g = erdos_renyi(8, 0.3, 0).unwrap();
    let c = random_filter(&g, 3, 1).unwrap().squared();
    let exact = solve_l1_commute(&c, &opts()).unwrap();
    let relaxed = solve_l1_commute(&c, &SolverOptions { epsilon_rel: 1e-9, ..opts() }).unwrap();
    let b = |r: &SolveReport| binarize(r.s_full.as_ref().unwrap().weights(), 0.1).matrix().clone();
    assert!(same_support(&b(&exact), &b(&relaxed)));
}

mod common;

use common::{max_offdiag, naive_kron, naive_poly, naive_vec, rel_err};
use nalgebra::{DVector, SymmetricEigen};
use prodgraph::graph::{eig_sym, erdos_renyi, validate_gso};
use prodgraph::signal::{
    analytic_cov, generate_2d, generate_mrf, generate_polycov, make_filter, noise_slab, random_filter, sample_cov,
    PolyFilter,
};
use prodgraph::{Gso, Matrix, NormMode};

fn gso(n: usize, edges: &[(usize, usize)]) -> Gso {
    let mut m = Matrix::zeros(n, n);
    for &(i, j) in edges {
        m[(i, j)] = 1.0;
        m[(j, i)] = 1.0;
    }
    validate_gso(m, NormMode::BinaryUnnormalized).unwrap()
}

fn connected(g: &Gso) -> bool {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for (j, s) in seen.iter_mut().enumerate() {
            if g.weights()[(i, j)] != 0.0 && !*s {
                *s = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn filters(p: usize, q: usize, len: usize, seed: u64) -> (PolyFilter, PolyFilter) {
    let gp = erdos_renyi(p, 0.3, seed).unwrap();
    let gq = erdos_renyi(q, 0.3, seed + 7_000).unwrap();
    (random_filter(&gp, len, seed + 1).unwrap(), random_filter(&gq, len, seed + 2).unwrap())
}

/// `E[Y·Yᵀ]` read off a covariance of `vec(Y)` (column-major).
fn first_mode_cov(c_y: &Matrix, p: usize, q: usize) -> Matrix {
    Matrix::from_fn(p, p, |i, k| (0..q).map(|j| c_y[(j * p + i, j * p + k)]).sum())
}

fn second_mode_cov(c_y: &Matrix, p: usize, q: usize) -> Matrix {
    Matrix::from_fn(q, q, |j, l| (0..p).map(|i| c_y[(j * p + i, l * p + i)]).sum())
}

fn condition(m: &Matrix) -> f64 {
    let sv = m.clone().singular_values();
    sv.max() / sv.min()
}

#[test]
fn filter_matches_explicit_polynomial() {
    let s = erdos_renyi(6, 0.4, 3).unwrap();
    let coeffs = [0.7, -0.3, 0.2];
    let h = make_filter(&s, &coeffs).unwrap();
    assert!(rel_err(h.matrix(), &naive_poly(s.weights(), &coeffs)) < 1e-10);
    assert_eq!(h.matrix(), &h.matrix().transpose());
}

#[test]
fn random_filters_stay_well_conditioned() {
    let shift = (0..).map(|seed| erdos_renyi(8, 0.3, seed).unwrap()).find(connected).unwrap();
    for seed in 0..1000 {
        let h = random_filter(&shift, 3, seed).unwrap();
        assert!(condition(h.matrix()) <= 1e6, "seed {seed}");
    }
}

#[test]
fn generated_signals_follow_the_vectorized_model() {
    let (hp, hq) = filters(3, 4, 3, 11);
    let t = generate_2d(&hp, &hq, 3, 42).unwrap();
    let k = naive_kron(hq.matrix(), hp.matrix());
    for (r, y) in t.slabs().iter().enumerate() {
        let w = noise_slab(3, 4, 42, r as u64);
        let expected = &k * DVector::from_vec(naive_vec(&w));
        for (a, b) in naive_vec(y).iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    assert_eq!(t, generate_2d(&hp, &hq, 3, 42).unwrap());
}

#[test]
fn analytic_covariances_match_the_vectorized_covariance() {
    for seed in 0..50 {
        let (p, q) = (3 + seed as usize % 4, 3 + (seed as usize / 4) % 4);
        let (hp, hq) = filters(p, q, 3, 100 + seed);
        let cov = analytic_cov(&hp, &hq, true);
        let hp2 = hp.matrix() * hp.matrix();
        let hq2 = hq.matrix() * hq.matrix();
        let c_y = naive_kron(&hq2, &hp2);
        assert!(rel_err(cov.c_y.as_ref().unwrap(), &c_y) < 1e-12);
        assert!(rel_err(&cov.c_p, &first_mode_cov(&c_y, p, q)) < 1e-10);
        assert!(rel_err(&cov.c_q, &second_mode_cov(&c_y, p, q)) < 1e-10);
        let scale = hp.matrix().norm_squared() * hq.matrix().norm_squared();
        assert!(rel_err(&naive_kron(&cov.c_q, &cov.c_p), &(c_y * scale)) < 1e-10);
    }
}

#[test]
fn covariances_commute_with_their_shifts_and_share_eigenvectors() {
    for seed in 0..50 {
        let (hp, hq) = filters(5, 4, 3, 300 + seed);
        let cov = analytic_cov(&hp, &hq, true);
        for (c, s) in [(&cov.c_p, hp.shift().weights()), (&cov.c_q, hq.shift().weights())] {
            let comm = c * s - s * c;
            assert!(comm.norm() < 1e-8 * c.norm() * s.norm().max(1.0));
        }
        let v = naive_kron(&eig_sym(hq.shift().weights()).unwrap().vectors, &eig_sym(hp.shift().weights()).unwrap().vectors);
        let c_y = cov.c_y.unwrap();
        let rotated = v.transpose() * &c_y * &v;
        assert!(max_offdiag(&rotated) < 1e-8 * c_y.trace() / 20.0);
    }
}

#[test]
fn first_mode_covariance_matches_monte_carlo() {
    let (hp, hq) = filters(5, 4, 3, 17);
    let t = generate_2d(&hp, &hq, 100_000, 5).unwrap();
    let mut mc = Matrix::zeros(5, 5);
    for y in t.slabs() {
        mc += y * y.transpose();
    }
    mc /= 100_000.0;
    let c_p = analytic_cov(&hp, &hq, false).c_p;
    assert!(rel_err(&mc, &c_p) < 0.05, "{}", rel_err(&mc, &c_p));
}

#[test]
fn sample_covariance_converges_to_analytic() {
    let (hp, hq) = filters(4, 4, 3, 23);
    let exact = analytic_cov(&hp, &hq, true);
    let est = sample_cov(&generate_2d(&hp, &hq, 100_000, 9).unwrap(), true);
    assert!(rel_err(&est.c_p, &exact.c_p) < 0.05);
    assert!(rel_err(&est.c_q, &exact.c_q) < 0.05);
    assert!(rel_err(est.c_y.as_ref().unwrap(), exact.c_y.as_ref().unwrap()) < 0.1);
}

#[test]
fn sample_covariance_error_shrinks_with_r() {
    let (hp, hq) = filters(4, 4, 3, 29);
    let exact = analytic_cov(&hp, &hq, false).c_p;
    let errors: Vec<f64> = [50, 200, 800, 3200]
        .iter()
        .map(|&r| (0..20).map(|s| (sample_cov(&generate_2d(&hp, &hq, r, s).unwrap(), false).c_p - &exact).norm()).sum::<f64>() / 20.0)
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn white_noise_whitening_identity() {
    let (_, hq) = filters(4, 5, 3, 31);
    let hq2 = hq.matrix() * hq.matrix().transpose();
    let mut acc = Matrix::zeros(4, 4);
    let r = 100_000;
    for k in 0..r {
        let w = noise_slab(4, 5, 77, k);
        acc += &w * &hq2 * w.transpose();
    }
    acc /= r as f64;
    let expected = Matrix::identity(4, 4) * hq2.trace();
    assert!(rel_err(&acc, &expected) < 0.05);
}

#[test]
fn mrf_samples_have_inverse_covariance() {
    let s = erdos_renyi(16, 0.3, 4).unwrap();
    let lmin = SymmetricEigen::new(s.weights().clone()).eigenvalues.min();
    let target = (Matrix::identity(16, 16) * (lmin.abs() + 0.1) + s.weights()).try_inverse().unwrap();
    let t = generate_mrf(&s, 4, 4, 100_000, 8).unwrap();
    let c = sample_cov(&t, true).c_y.unwrap();
    assert!(rel_err(&c, &target) < 0.05, "{}", rel_err(&c, &target));
    assert_eq!(t, generate_mrf(&s, 4, 4, 100_000, 8).unwrap());
}

#[test]
fn polynomial_covariance_of_a_path() {
    let s = gso(4, &[(0, 1), (1, 2), (2, 3)]);
    let t = generate_polycov(&s, &[1.0], 2, 2, 100_000, 3, false).unwrap();
    let c = sample_cov(&t, true).c_y.unwrap();
    let target = s.weights() * s.weights();
    assert!(rel_err(&c, &target) < 0.05);
    assert_eq!(t, generate_polycov(&s, &[1.0], 2, 2, 100_000, 3, false).unwrap());
}

#[test]
fn polynomial_covariance_annihilates_null_directions() {
    // The star K_{1,3} has a two-dimensional kernel.
    let s = gso(4, &[(0, 1), (0, 2), (0, 3)]);
    let v = DVector::from_vec(vec![0.0, 1.0, -1.0, 0.0]) / 2f64.sqrt();
    assert!((s.weights() * &v).norm() < 1e-15);
    let t = generate_polycov(&s, &[0.5, -0.2, 0.1], 2, 2, 10_000, 1, true).unwrap();
    let c = sample_cov(&t, true).c_y.unwrap();
    assert!((v.transpose() * c * &v)[(0, 0)] < 1e-6);
    assert!(generate_polycov(&s, &[0.5, -0.2, 0.1], 2, 2, 10, 1, false).is_err());
}

use num_complex::Complex64;
use proptest::prelude::*;

use descm::confmap::{decay_constants, map_single_singularity, transformed_potential, ConformalMap};
use descm::convergence::{exact_reference, select_map, MapStrategy};
use descm::discretize::build_system;
use descm::eigensolve::{eigenvector, generalized_eigenpairs, generalized_eigs, solve_dense};
use descm::{Polynomial, RationalPotential};

fn upper_half_plane() -> impl Strategy<Value = Complex64> {
    (-5.0..5.0f64, 0.05..5.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn symmetric_problem(n: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (
        prop::collection::vec(-2.0..2.0f64, n * n),
        prop::collection::vec(0.2..3.0f64, n),
    )
        .prop_map(move |(raw, d2)| {
            let h = (0..n)
                .map(|i| (0..n).map(|j| raw[i.min(j) * n + i.max(j)]).collect())
                .collect();
            (h, d2)
        })
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugate_product_is_positive_and_normalised(pairs in prop::collection::vec(upper_half_plane(), 1..4), x in -20.0..20.0f64) {
        let q = Polynomial::from_conjugate_roots(&pairs).unwrap();
        prop_assert_eq!(q.coeff(0), 1.0);
        prop_assert_eq!(q.degree(), 2 * pairs.len());
        prop_assert!(q.eval_real(x) > 0.0);
    }

    #[test]
    fn roots_recover_conjugate_pairs(pairs in prop::collection::vec(upper_half_plane(), 1..3)) {
        let q = Polynomial::from_conjugate_roots(&pairs).unwrap();
        let roots = q.roots().unwrap();
        prop_assert_eq!(roots.len(), 2 * pairs.len());
        for z in &pairs {
            for target in [*z, z.conj()] {
                let best = roots.iter().map(|r| (r - target).norm()).fold(f64::INFINITY, f64::min);
                // clustered poles lose accuracy like sqrt(eps) at worst
                prop_assert!(best < 1e-6 * (1.0 + target.norm()), "root {target} missed by {best}");
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference(coeffs in prop::collection::vec(-3.0..3.0f64, 1..7), x in -2.0..2.0f64) {
        let p = Polynomial::new(coeffs);
        let step = 1e-5;
        let fd = (p.eval_real(x + step) - p.eval_real(x - step)) / (2.0 * step);
        let scale = 1.0 + p.coeffs().iter().map(|c| c.abs()).sum::<f64>() * 2f64.powi(6);
        prop_assert!((p.derivative().eval_real(x) - fd).abs() < 1e-8 * scale);
    }

    #[test]
    fn generalized_eigenpairs_satisfy_rayleigh_quotient((h, d2) in symmetric_problem(6)) {
        let (vals, vecs) = solve_dense(&h, &d2, 6, true).unwrap();
        let vecs = vecs.unwrap();
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for (e, v) in vals.iter().zip(&vecs) {
            let hv = matvec(&h, v);
            let num: f64 = hv.iter().zip(v).map(|(a, b)| a * b).sum();
            let den: f64 = v.iter().zip(&d2).map(|(a, w)| a * a * w).sum();
            prop_assert!((den - 1.0).abs() < 1e-12);
            prop_assert!((num / den - e).abs() < 1e-11 * (1.0 + e.abs()));
            for ((hv, x), w) in hv.iter().zip(v).zip(&d2) {
                prop_assert!((hv - e * w * x).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenvalues_invariant_under_permutation((h, d2) in symmetric_problem(5), shift in 1usize..5) {
        let perm: Vec<usize> = (0..5).map(|i| (i + shift) % 5).collect();
        let hp: Vec<Vec<f64>> = perm.iter().map(|&i| perm.iter().map(|&j| h[i][j]).collect()).collect();
        let dp: Vec<f64> = perm.iter().map(|&i| d2[i]).collect();
        let (a, _) = solve_dense(&h, &d2, 5, false).unwrap();
        let (b, _) = solve_dense(&hp, &dp, 5, false).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-11 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn eigenvalues_scale_with_weights((h, d2) in symmetric_problem(5), c in 0.1..10.0f64) {
        let scaled: Vec<f64> = d2.iter().map(|w| w * c).collect();
        let (a, _) = solve_dense(&h, &d2, 5, false).unwrap();
        let (b, _) = solve_dense(&h, &scaled, 5, false).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x / c - y).abs() < 1e-11 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn transformed_potential_matches_finite_differences(
        u0 in 0.3..4.0f64,
        shift in -2.0..2.0f64,
        slope in 0.0..1.0f64,
        t in -2.5..2.5f64,
        seed in 0u64..1000,
    ) {
        let v = RationalPotential::random(1 + (seed % 3) as u32, 1, seed);
        let map = ConformalMap::with_coefficients(u0, vec![shift, slope], 2.0);
        let step = 1e-3;
        let d = |k: f64| map.phi_prime(t + k * step);
        let d1 = (d(-2.0) - 8.0 * d(-1.0) + 8.0 * d(1.0) - d(2.0)) / (12.0 * step);
        let d2 = (-d(-2.0) + 16.0 * d(-1.0) - 30.0 * d(0.0) + 16.0 * d(1.0) - d(2.0)) / (12.0 * step * step);
        let p1 = d(0.0);
        let oracle = -d2 / (2.0 * p1) + 0.75 * (d1 / p1).powi(2) + p1 * p1 * v.evaluate(map.phi(t));
        let value = transformed_potential(&map, &v, t);
        prop_assert!((value - oracle).abs() < 1e-6 * (1.0 + value.abs()), "{value} vs {oracle}");
    }

    #[test]
    fn random_potentials_respect_supports(m in 1u32..5, l in 1u32..4, seed in any::<u64>()) {
        let v = RationalPotential::random(m, l, seed);
        prop_assert!(v.validate().is_ok());
        prop_assert!(v.omega() > 0.0 && v.omega() < 10.0);
        prop_assert!(v.numerator().degree() < (2 * m + 2 * l) as usize);
        prop_assert!(v.numerator().coeffs().iter().all(|c| c.abs() < 10.0));
        prop_assert_eq!(v.denominator().degree(), 2 * l as usize);
        prop_assert_eq!(v.denominator().coeff(0), 1.0);
        for s in v.singularities() {
            prop_assert!(s.delta.abs() < 5.0);
            prop_assert!(s.eps >= 1e-3 && s.eps < 10.0);
        }
    }

    #[test]
    fn oscillator_term_dominates_at_large_x(m in 1u32..4, l in 1u32..3, seed in any::<u64>()) {
        let v = RationalPotential::random(m, l, seed);
        // p/q over x^{2m} behaves like C x^{-j} with j >= 1 far from the poles
        let ratio = |x: f64| (v.rational_part(x) / x.powi(2 * m as i32)).abs();
        prop_assert!(ratio(1e9) <= 0.0101 * ratio(1e7), "{} vs {}", ratio(1e9), ratio(1e7));
    }

    #[test]
    fn single_map_levels_are_ordered(seed in 0u64..500) {
        let v = RationalPotential::random(1, 1, seed);
        let map = map_single_singularity(&v).unwrap();
        let s = generalized_eigs(&build_system(&v, &map, 8), 6).unwrap();
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn eigenvector_residual_for_first_exact_case() {
    let case = exact_reference(1, 1.0).unwrap();
    let map = select_map(&case.potential, MapStrategy::Auto).unwrap();
    let sys = build_system(&case.potential, &map, 30);
    let (spectrum, vecs) = generalized_eigenpairs(&sys, 3).unwrap();
    let h = sys.h_dense();
    for (e, v) in spectrum.eigenvalues.iter().zip(&vecs) {
        let hv = matvec(&h, v);
        let residual: f64 = hv
            .iter()
            .zip(v)
            .zip(sys.weights())
            .map(|((a, x), w)| (a - e * w * x).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = hv.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(residual <= 1e-9 * norm, "residual {residual:e}, |Hv| {norm:e}");
    }
}

#[test]
fn ground_state_decays_double_exponentially() {
    let case = exact_reference(1, 1.0).unwrap();
    let map = select_map(&case.potential, MapStrategy::Auto).unwrap();
    let sys = build_system(&case.potential, &map, 30);
    let v = eigenvector(&sys, 0).unwrap();
    let (gamma, b) = decay_constants(&case.potential, &map);
    let t = sys.points();
    let edge = sys.size() - 1;

    // fit log|v| = log A − β e^{γ|t|} through two interior points on the right
    let (i1, i2) = (30 + 12, 30 + 20);
    let (s1, s2) = ((gamma * t[i1]).exp(), (gamma * t[i2]).exp());
    let (l1, l2) = (v[i1].abs().ln(), v[i2].abs().ln());
    let beta = (l1 - l2) / (s2 - s1);
    let log_a = l1 + beta * s1;
    assert!(beta > 0.5 * b && beta < 2.0 * b, "fitted rate {beta} vs {b}");

    for k in i2..=edge {
        let envelope = (log_a - beta * (gamma * t[k]).exp()).exp();
        assert!(
            v[k].abs() <= 10.0 * envelope,
            "k={k} |v|={} envelope={envelope}",
            v[k].abs()
        );
    }
    // a single exponential through the same two points overshoots badly at the edge
    let rate = (l1 - l2) / (t[i2] - t[i1]);
    let single = (l2 - rate * (t[edge] - t[i2])).exp();
    assert!(v[edge].abs() < 1e-3 * single);
}

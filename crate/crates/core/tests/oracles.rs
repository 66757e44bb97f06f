//! Checks against routes that share no code with the transforms under test.

use approx::assert_abs_diff_eq;
use framekit::catalog::{canonical_l1_frame, haar_eval, haar_frame, haar_l2_norm};
use framekit::frames::{
    analysis_coefficient, besselian_sum, estimate_frame_constant, Element, Space,
};
use framekit::spaces::{DualSeq, GridFunction, SeqVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let f = a[row][col] / pivot_row[col];
            if f != 0.0 {
                for (v, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn midpoint(i: usize, level: u32) -> f64 {
    (i as f64 + 0.5) / (1u64 << level) as f64
}

#[test]
fn haar_coefficients_match_linear_system() {
    // f = Σ c_n h_n on the level-J grid, so ∫ f h_n/‖h_n‖_2 = c_n ‖h_n‖_2
    let level = 5;
    let size = 1usize << level;
    let matrix: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (1..=size)
                .map(|n| haar_eval(n, midpoint(i, level)).unwrap())
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [1.5, 2.0, 3.0] {
        let frame = haar_frame(p, level).unwrap();
        for _ in 0..5 {
            let values: Vec<f64> = (0..size).map(|_| rng.random_range(-5.0..5.0)).collect();
            let c = solve(matrix.clone(), values.clone());
            let f = Element::Grid(GridFunction::new(level, values).unwrap());
            for n in 1..=size {
                let expected = c[n - 1] * haar_l2_norm(n).unwrap();
                assert_abs_diff_eq!(
                    analysis_coefficient(&frame, n, &f).unwrap(),
                    expected,
                    epsilon = 1e-11
                );
            }
        }
    }
}

#[test]
fn haar_gram_matrix_by_quadrature() {
    // exact midpoint quadrature: every h_n is constant on cells two levels finer
    let level = 4;
    let fine = level + 2;
    let size = 1usize << level;
    let cells = 1usize << fine;
    for i in 1..=size {
        for j in 1..=size {
            let integral: f64 = (0..cells)
                .map(|k| {
                    let t = midpoint(k, fine);
                    haar_eval(i, t).unwrap() * haar_eval(j, t).unwrap()
                })
                .sum::<f64>()
                / cells as f64;
            let gram = integral / (haar_l2_norm(i).unwrap() * haar_l2_norm(j).unwrap());
            assert_abs_diff_eq!(gram, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
    }
}

#[test]
fn l1_constant_by_exhaustive_extreme_points() {
    // the product of balls is maximized on ±e_k × sign patterns
    let frame = canonical_l1_frame();
    let n = 6;
    let mut best: f64 = 0.0;
    for k in 1..=n {
        for signs in 0..(1u32 << n) {
            let prefix: Vec<f64> = (0..n)
                .map(|i| if signs >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let mu = Element::Bounded(DualSeq::new(prefix, 1.0));
            let e = Element::Seq(SeqVector::basis(k));
            best = best.max(besselian_sum(&frame, &e, &mu, n).unwrap());
        }
    }
    assert_eq!(best, 1.0);
    assert_eq!(estimate_frame_constant(&frame, n, 50, 7).unwrap(), best);
}

#[test]
fn parseval_bound_by_cauchy_schwarz() {
    let level = 4;
    let frame = haar_frame(2.0, level).unwrap();
    let space = Space::grid(2.0, level).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let f = space.random_primal(&mut rng, 16);
        let g = space.random_dual(&mut rng, 16);
        let bound = space.norm(&f).unwrap() * space.dual_norm(&g).unwrap();
        assert!(besselian_sum(&frame, &f, &g, 16).unwrap() <= bound * (1.0 + 1e-12));
    }
    let estimate = estimate_frame_constant(&frame, 16, 100, 1).unwrap();
    assert_abs_diff_eq!(estimate, 1.0, epsilon = 1e-9);
}

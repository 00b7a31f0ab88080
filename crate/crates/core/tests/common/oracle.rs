//! Reference computations that share no code with the library's solver.
#![allow(clippy::needless_range_loop)]

use kfarm::numeric::Matrix;
use kfarm::value::Rng;
use num_complex::Complex64;

pub fn random_matrix(n: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_row_major(n, n, (0..n * n).map(|_| 2.0 * rng.next_f64() - 1.0).collect()).unwrap()
}

/// Determinant by LU factorisation with partial pivoting.
pub fn lu_det(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = a.row_iter().map(<[f64]>::to_vec).collect();
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        if m[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        det *= m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    det
}

/// Eigenvalues of the n×n tridiagonal Toeplitz matrix with zero diagonal,
/// `t` above and `p` below: `2√(tp)·cos(kπ/(n+1))`, largest first.
pub fn toeplitz_closed_form(n: usize, t: f64, p: f64) -> Vec<f64> {
    let r = 2.0 * (t * p).sqrt();
    (1..=n)
        .map(|k| r * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
        .collect()
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut perms = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let inversions = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, sign)
        })
        .collect()
}

/// `det(A - xI)` by the Leibniz sum over all permutations.
fn leibniz_det_shifted(a: &Matrix, x: f64, perms: &[(Vec<usize>, f64)]) -> f64 {
    perms
        .iter()
        .map(|(p, sign)| {
            sign * p
                .iter()
                .enumerate()
                .map(|(i, &j)| a[(i, j)] - if i == j { x } else { 0.0 })
                .product::<f64>()
        })
        .sum()
}

/// Coefficients (constant term first) of `det(xI - A)`, found by sampling
/// the Leibniz determinant at x = 0..n and solving the Vandermonde system.
pub fn char_poly(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let perms = permutations(n);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let xs: Vec<f64> = (0..=n).map(|i| i as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| sign * leibniz_det_shifted(a, x, &perms))
        .collect();
    // Gaussian elimination on the Vandermonde system.
    let m = n + 1;
    let mut rows: Vec<Vec<f64>> = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let mut r: Vec<f64> = (0..m).map(|k| x.powi(k as i32)).collect();
            r.push(y);
            r
        })
        .collect();
    for k in 0..m {
        let p = (k..m)
            .max_by(|&i, &j| rows[i][k].abs().total_cmp(&rows[j][k].abs()))
            .unwrap();
        rows.swap(p, k);
        for i in 0..m {
            if i != k {
                let f = rows[i][k] / rows[k][k];
                for j in k..=m {
                    rows[i][j] -= f * rows[k][j];
                }
            }
        }
    }
    (0..m).map(|k| rows[k][m] / rows[k][k]).collect()
}

/// Roots of the characteristic polynomial by Durand–Kerner iteration.
pub fn char_poly_roots(a: &Matrix) -> Vec<Complex64> {
    let c = char_poly(a);
    let n = c.len() - 1;
    let lead = c[n];
    let eval = |z: Complex64| {
        c.iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k / lead)
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        let prev = roots.clone();
        for i in 0..n {
            let denom = (0..n)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
        }
        let moved = roots
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if moved < 1e-15 {
            break;
        }
    }
    roots
}

/// Largest distance in a greedy nearest-neighbour matching of two root sets.
pub fn match_roots(got: &[Complex64], want: &[Complex64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let mut unused: Vec<Complex64> = want.to_vec();
    let mut worst: f64 = 0.0;
    for g in got {
        let (idx, d) = unused
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (g - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        worst = worst.max(d);
        unused.swap_remove(idx);
    }
    worst
}

//! Generalized symmetric-definite eigenproblem `H v = E D² v` with diagonal
//! positive `D²`, reduced to the standard problem for `D⁻¹ H D⁻¹`.
//!
//! The dense solver is Householder tridiagonalization followed by implicit
//! QL with Wilkinson-style shifts (the EISPACK `tred2`/`tql2` pair).

use serde::{Deserialize, Serialize};

use crate::discretize::GeneralizedEigenSystem;
use crate::error::{Error, Result};

/// Iteration cap per eigenvalue in the QL sweep.
pub const QL_MAX_ITERATIONS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Ascending generalized eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Half-width of the system the spectrum came from.
    pub n: usize,
    pub h: f64,
}

/// The `count` smallest generalized eigenvalues of `(H, D²)`.
pub fn generalized_eigs(system: &GeneralizedEigenSystem, count: usize) -> Result<Spectrum> {
    let (values, _) = solve_dense(&system.h_dense(), system.weights(), count, false)?;
    Ok(Spectrum {
        eigenvalues: values,
        n: system.n(),
        h: system.h(),
    })
}

/// The `count` smallest eigenpairs; each vector satisfies `vᵀ D² v = 1`.
pub fn generalized_eigenpairs(system: &GeneralizedEigenSystem, count: usize) -> Result<(Spectrum, Vec<Vec<f64>>)> {
    let (values, vectors) = solve_dense(&system.h_dense(), system.weights(), count, true)?;
    Ok((
        Spectrum {
            eigenvalues: values,
            n: system.n(),
            h: system.h(),
        },
        vectors.expect("vectors requested"),
    ))
}

/// Generalized eigenvector `index` (ascending order), normalised to `vᵀ D² v = 1`.
pub fn eigenvector(system: &GeneralizedEigenSystem, index: usize) -> Result<Vec<f64>> {
    let (_, mut vectors) = generalized_eigenpairs(system, index + 1)?;
    Ok(vectors.swap_remove(index))
}

/// Dense entry point: symmetric `h` (row-major) and positive diagonal `d2`.
///
/// Returns the `count` smallest eigenvalues and, if requested, the matching
/// `D²`-normalised eigenvectors.
pub fn solve_dense(
    h: &[Vec<f64>],
    d2: &[f64],
    count: usize,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
    let n = d2.len();
    if count > n {
        return Err(Error::TooManyLevels {
            requested: count,
            available: n,
        });
    }
    if let Some((index, &value)) = d2.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(Error::NonPositiveWeight { index, value });
    }
    let inv_d: Vec<f64> = d2.iter().map(|w| 1.0 / w.sqrt()).collect();
    // Column-major; symmetric so row/column order of `h` does not matter.
    let mut a = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            a[j * n + i] = h[i][j] * inv_d[i] * inv_d[j];
        }
    }
    let (values, vectors) = symmetric_eigen(n, a, want_vectors)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let eigenvalues = order.iter().take(count).map(|&k| values[k]).collect();
    let vectors = vectors.map(|z| {
        order
            .iter()
            .take(count)
            .map(|&k| (0..n).map(|i| z[k * n + i] * inv_d[i]).collect())
            .collect()
    });
    Ok((eigenvalues, vectors))
}

/// Eigen-decomposition of the symmetric matrix stored column-major in `a`.
/// Eigenvalues come back unsorted; eigenvector `k` is column `k` of the
/// returned column-major matrix.
pub fn symmetric_eigen(n: usize, mut a: Vec<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(Vec::new)));
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut a, &mut d, &mut e, want_vectors);
    let z = if want_vectors { Some(&mut a[..]) } else { None };
    ql_implicit(n, &mut d, &mut e, z)?;
    Ok((d, want_vectors.then_some(a)))
}

/// Householder reduction to tridiagonal form. On return `d` holds the
/// diagonal, `e[1..]` the subdiagonal, and `v` the accumulated orthogonal
/// transform when `accumulate` is set.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let at = |row: usize, col: usize| col * n + row;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    let vkj = v[at(k, j)];
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for (i, di) in d.iter_mut().enumerate() {
            *di = v[at(i, i)];
        }
        e[0] = 0.0;
        return;
    }
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`, rotating the columns of `z`.
fn ql_implicit(n: usize, d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITERATIONS {
                    return Err(Error::EigenNotConverged(QL_MAX_ITERATIONS));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (left, right) = z.split_at_mut((i + 1) * n);
                        let col_i = &mut left[i * n..];
                        let col_i1 = &mut right[..n];
                        for (zi, zi1) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                            let t = *zi1;
                            *zi1 = s * *zi + c * t;
                            *zi = c * *zi - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_problem() {
        let (vals, vecs) = solve_dense(&[vec![5.0]], &[2.0], 1, true).unwrap();
        assert!((vals[0] - 2.5).abs() < 4.0 * f64::EPSILON);
        let v = &vecs.unwrap()[0];
        assert!((v[0].abs() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_problem() {
        let h = vec![vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 3.0]];
        let (vals, vecs) = solve_dense(&h, &[1.0, 1.0, 1.0], 3, true).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        let v0 = &vecs.unwrap()[0];
        assert!((v0[1].abs() - 1.0).abs() < 1e-15 && v0[0] == 0.0 && v0[2] == 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(
            solve_dense(&[vec![1.0]], &[0.0], 1, false),
            Err(Error::NonPositiveWeight { index: 0, value: 0.0 })
        );
        assert_eq!(
            solve_dense(&[vec![1.0]], &[1.0], 2, false),
            Err(Error::TooManyLevels {
                requested: 2,
                available: 1
            })
        );
    }

    #[test]
    fn values_only_matches_full_decomposition() {
        let n = 7;
        let h: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| 1.0 / (1.0 + (i + j) as f64) + if i == j { i as f64 } else { 0.0 })
                    .collect()
            })
            .collect();
        let w: Vec<f64> = (0..n).map(|i| 0.5 + i as f64).collect();
        let (a, _) = solve_dense(&h, &w, n, false).unwrap();
        let (b, vecs) = solve_dense(&h, &w, n, true).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
        // residual and D²-normalisation
        for (lam, v) in b.iter().zip(vecs.unwrap()) {
            let norm: f64 = v.iter().zip(&w).map(|(vi, wi)| vi * vi * wi).sum();
            assert!((norm - 1.0).abs() < 1e-13);
            for i in 0..n {
                let hv: f64 = (0..n).map(|j| h[i][j] * v[j]).sum();
                assert!((hv - lam * w[i] * v[i]).abs() < 1e-12);
            }
        }
    }
}

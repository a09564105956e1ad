//! Sinc basis functions and the collocated second-derivative stencil.

use std::f64::consts::PI;

/// `sin(πz)/(πz)`, continuous through the origin.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        // sin(πz)/(πz) = 1 − (πz)²/6 + (πz)⁴/120 − ...
        let u = (PI * z).powi(2);
        1.0 - u / 6.0 * (1.0 - u / 20.0)
    } else {
        (PI * z).sin() / (PI * z)
    }
}

/// Translated and scaled basis function `S(j, h)(x) = sinc(x/h − j)`.
pub fn sinc_basis(j: i64, h: f64, x: f64) -> f64 {
    let xh = x / h;
    let z = xh - j as f64;
    // Exact Kronecker delta on the grid, free of sin(π·k) rounding.
    let nearest = z.round();
    if (z - nearest).abs() <= 4.0 * f64::EPSILON * xh.abs().max(j.unsigned_abs() as f64).max(1.0) {
        return if nearest == 0.0 { 1.0 } else { 0.0 };
    }
    sinc(z)
}

/// Symmetric Toeplitz matrix stored by its first row: entry `(j, k)` is
/// `first_row[|j − k|]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzSymmetric {
    first_row: Vec<f64>,
}

impl ToeplitzSymmetric {
    pub fn new(first_row: Vec<f64>) -> Self {
        Self { first_row }
    }

    pub fn size(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.first_row[j.abs_diff(k)]
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        (0..n).map(|j| (0..n).map(|k| self.entry(j, k)).collect()).collect()
    }

    /// Returns a copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.first_row.iter().map(|t| t * factor).collect())
    }
}

/// Entry `t_r` of `h² d²/dx² S(j, h)(x)` at `x = kh`, `r = |k − j|`.
pub fn delta2_entry(r: usize) -> f64 {
    if r == 0 {
        -PI * PI / 3.0
    } else {
        let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
        -2.0 * sign / (r * r) as f64
    }
}

/// The `(2N+1) × (2N+1)` stencil `δ⁽²⁾` for collocation points `−N..=N`.
pub fn delta2_stencil(n: usize) -> ToeplitzSymmetric {
    ToeplitzSymmetric::new((0..=2 * n).map(delta2_entry).collect())
}

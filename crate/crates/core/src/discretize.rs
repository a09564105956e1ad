//! Mesh selection and assembly of the generalized eigensystem `H v = E D² v`.

use std::f64::consts::PI;

use crate::confmap::{decay_constants, transformed_potential, ConformalMap};
use crate::error::{Error, Result};
use crate::potential::RationalPotential;
use crate::sinc::{delta2_stencil, ToeplitzSymmetric};

/// Principal branch of the Lambert W function on `[0, ∞)`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::NegativeLambertArgument(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if x < 3.0 {
        // W(x) ≈ log(1 + x) is within a factor of two on [0, 3)
        x.ln_1p() * 0.75
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    // Halley iteration on f(w) = w e^w − x.
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= f64::EPSILON * w.abs() {
            break;
        }
    }
    Ok(w)
}

/// `h = W(π d γ N / B) / (γ N)`.
pub fn mesh_size(n: usize, gamma: f64, b: f64, d: f64) -> f64 {
    assert!(n >= 1, "mesh size needs N >= 1");
    let n = n as f64;
    lambert_w(PI * d * gamma * n / b).expect("argument is positive") / (gamma * n)
}

/// `H = −δ⁽²⁾/h² + diag(Ṽ(kh))` and `D² = diag(φ′(kh)²)` for `k = −N..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedEigenSystem {
    n: usize,
    h: f64,
    kinetic: ToeplitzSymmetric,
    potential_diag: Vec<f64>,
    weights: Vec<f64>,
}

impl GeneralizedEigenSystem {
    /// Builds a system directly from its parts; `kinetic` is the already
    /// scaled Toeplitz part of `H`.
    pub fn from_parts(h: f64, kinetic: ToeplitzSymmetric, potential_diag: Vec<f64>, weights: Vec<f64>) -> Self {
        let size = kinetic.size();
        assert_eq!(size % 2, 1, "system size must be odd");
        assert_eq!(potential_diag.len(), size);
        assert_eq!(weights.len(), size);
        Self {
            n: size / 2,
            h,
            kinetic,
            potential_diag,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        2 * self.n + 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kinetic(&self) -> &ToeplitzSymmetric {
        &self.kinetic
    }

    /// `Ṽ(kh)` for `k = −N..=N`.
    pub fn potential_diag(&self) -> &[f64] {
        &self.potential_diag
    }

    /// Diagonal of `D²`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Collocation points `kh`, `k = −N..=N`.
    pub fn points(&self) -> Vec<f64> {
        let n = self.n as i64;
        (-n..=n).map(|k| k as f64 * self.h).collect()
    }

    pub fn h_entry(&self, j: usize, k: usize) -> f64 {
        let t = self.kinetic.entry(j, k);
        if j == k {
            t + self.potential_diag[j]
        } else {
            t
        }
    }

    /// Dense row-major `H`.
    pub fn h_dense(&self) -> Vec<Vec<f64>> {
        let size = self.size();
        (0..size)
            .map(|j| (0..size).map(|k| self.h_entry(j, k)).collect())
            .collect()
    }
}

/// Assembles the collocation system for `potential` under `map` with
/// half-width `n`. The mesh follows [`mesh_size`]; for `n = 0` the `n = 1`
/// mesh is used since the rule is undefined there.
pub fn build_system(potential: &RationalPotential, map: &ConformalMap, n: usize) -> GeneralizedEigenSystem {
    let (gamma, b) = decay_constants(potential, map);
    let h = mesh_size(n.max(1), gamma, b, map.d());
    let kinetic = delta2_stencil(n).scaled(-1.0 / (h * h));
    let ni = n as i64;
    let (potential_diag, weights) = (-ni..=ni)
        .map(|k| {
            let x = k as f64 * h;
            let dphi = map.phi_prime(x);
            (transformed_potential(map, potential, x), dphi * dphi)
        })
        .unzip();
    GeneralizedEigenSystem::from_parts(h, kinetic, potential_diag, weights)
}

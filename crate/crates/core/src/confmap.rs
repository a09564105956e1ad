//! Double-exponential conformal maps `φ(t) = u₀ sinh(t) + Σ u_j t^{j−1}`.
//!
//! A map is chosen per potential so that the poles of the potential have
//! pre-images on the boundary of the strip `|Im t| < d`, `d = π/(2γ)`,
//! where `γ = m + 1` is the double-exponential decay rate of the transformed
//! eigenfunctions.

mod multi;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::Polynomial;
use crate::potential::{RationalPotential, Singularity};

pub use multi::{map_multi_singularity, MultiMapOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Plain,
    Single,
    Multi,
    Fallback,
}

impl std::fmt::Display for MapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MapKind::Plain => "plain",
            MapKind::Single => "single",
            MapKind::Multi => "multi",
            MapKind::Fallback => "fallback",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConformalMap {
    u0: f64,
    adjust: Polynomial,
    gamma: f64,
    d: f64,
    preimages: Vec<f64>,
    targets: Vec<Singularity>,
    kind: MapKind,
    fallback_reason: Option<String>,
}

/// Serializable summary of a constructed map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub kind: MapKind,
    /// `[u₀, u₁, ..., u_n]`.
    pub u: Vec<f64>,
    pub gamma: f64,
    pub d: f64,
    pub preimages: Vec<f64>,
    /// `|φ(x_k + i d) − (δ_k + i ε_k)|` for every placed singularity.
    pub residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
}

/// `γ = m + 1` for `ω x^{2m}` growth.
pub fn decay_rate(m: u32) -> f64 {
    m as f64 + 1.0
}

/// Maximal strip half-width `π/(2γ)`.
pub fn strip_width(gamma: f64) -> f64 {
    PI / (2.0 * gamma)
}

impl ConformalMap {
    pub(crate) fn from_parts(
        u0: f64,
        adjust: Polynomial,
        gamma: f64,
        preimages: Vec<f64>,
        targets: Vec<Singularity>,
        kind: MapKind,
    ) -> Self {
        assert!(u0 > 0.0, "sinh amplitude must be positive");
        Self {
            u0,
            adjust,
            gamma,
            d: strip_width(gamma),
            preimages,
            targets,
            kind,
            fallback_reason: None,
        }
    }

    /// `u₀ sinh(t) + Σ u_j t^{j−1}` with an explicit decay rate.
    pub fn with_coefficients(u0: f64, adjust: Vec<f64>, gamma: f64) -> Self {
        Self::from_parts(
            u0,
            Polynomial::new(adjust),
            gamma,
            Vec::new(),
            Vec::new(),
            MapKind::Plain,
        )
    }

    pub(crate) fn into_fallback(mut self, reason: String) -> Self {
        self.kind = MapKind::Fallback;
        self.fallback_reason = Some(reason);
        self
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn adjust(&self) -> &Polynomial {
        &self.adjust
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn preimages(&self) -> &[f64] {
        &self.preimages
    }

    pub fn fallback_reason(&self) -> Option<&str> {
        self.fallback_reason.as_deref()
    }

    /// `(φ, φ′, φ″, φ‴)` at a real point.
    pub fn phi_derivatives(&self, t: f64) -> [f64; 4] {
        let (s, c) = (t.sinh(), t.cosh());
        let p1 = self.adjust.derivative();
        let p2 = p1.derivative();
        let p3 = p2.derivative();
        [
            self.u0 * s + self.adjust.eval_real(t),
            self.u0 * c + p1.eval_real(t),
            self.u0 * s + p2.eval_real(t),
            self.u0 * c + p3.eval_real(t),
        ]
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.u0 * t.sinh() + self.adjust.eval_real(t)
    }

    pub fn phi_prime(&self, t: f64) -> f64 {
        self.u0 * t.cosh() + self.adjust.derivative().eval_real(t)
    }

    /// Analytic continuation of `φ` to a complex point.
    pub fn phi_complex(&self, z: Complex64) -> Complex64 {
        z.sinh() * self.u0 + self.adjust.eval(z)
    }

    /// `|φ(x_k + i d) − (δ_k + i ε_k)|` for every singularity the map places.
    pub fn residuals(&self) -> Vec<f64> {
        self.preimages
            .iter()
            .zip(&self.targets)
            .map(|(&x, s)| (self.phi_complex(Complex64::new(x, self.d)) - Complex64::new(s.delta, s.eps)).norm())
            .collect()
    }

    /// Whether `φ′ > 0` on a fine grid over `[−40, 40]`, beyond which the
    /// sinh term dominates any adjustment of moderate size.
    pub fn is_increasing(&self) -> bool {
        let dp = self.adjust.derivative();
        (-8000..=8000).all(|i| {
            let t = i as f64 * 0.005;
            self.u0 * t.cosh() + dp.eval_real(t) > 0.0
        })
    }

    pub fn report(&self) -> MapReport {
        let mut u = vec![self.u0];
        u.extend_from_slice(self.adjust.coeffs());
        MapReport {
            kind: self.kind,
            u,
            gamma: self.gamma,
            d: self.d,
            preimages: self.preimages.clone(),
            residuals: self.residuals(),
            fallback_reason: self.fallback_reason.clone(),
        }
    }
}

/// `(γ, B)` with `γ = m + 1` and `B = √ω/(m+1) · (u₀/2)^{m+1}`.
pub fn decay_constants(potential: &RationalPotential, map: &ConformalMap) -> (f64, f64) {
    let gamma = decay_rate(potential.m());
    let b = potential.omega().sqrt() / gamma * (map.u0() / 2.0).powf(gamma);
    (gamma, b)
}

/// `φ(t) = sinh(t)`.
pub fn map_plain_sinh(potential: &RationalPotential) -> ConformalMap {
    ConformalMap::from_parts(
        1.0,
        Polynomial::zero(),
        decay_rate(potential.m()),
        Vec::new(),
        Vec::new(),
        MapKind::Plain,
    )
}

/// Analytic map for a single pole pair `δ ± iε`:
/// `φ(t) = ε/sin(π/(2γ)) · sinh(t) + δ`, so that `φ(i d) = δ + iε`.
pub fn map_single_singularity(potential: &RationalPotential) -> Result<ConformalMap> {
    let sing = potential.singularities();
    if sing.len() != 1 {
        return Err(Error::NotSingleSingularity(sing.len()));
    }
    Ok(single_map(sing[0], decay_rate(potential.m())))
}

pub(crate) fn single_map(s: Singularity, gamma: f64) -> ConformalMap {
    let u0 = s.eps / strip_width(gamma).sin();
    ConformalMap::from_parts(
        u0,
        Polynomial::new(vec![s.delta]),
        gamma,
        vec![0.0],
        vec![s],
        MapKind::Single,
    )
}

/// `Ṽ(x) = −φ‴/(2φ′) + (3/4)(φ″/φ′)² + (φ′)² V(φ)`.
pub fn transformed_potential(map: &ConformalMap, potential: &RationalPotential, x: f64) -> f64 {
    let [phi, d1, d2, d3] = map.phi_derivatives(x);
    let ratio = d2 / d1;
    -d3 / (2.0 * d1) + 0.75 * ratio * ratio + d1 * d1 * potential.evaluate(phi)
}

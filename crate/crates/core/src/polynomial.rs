//! Dense real-coefficient polynomials with complex evaluation and an
//! Aberth–Ehrlich simultaneous root finder.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Backward-error tolerance a root must meet before it is accepted.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-12;
/// Iteration cap for the simultaneous root iteration.
pub const ROOT_MAX_ITERATIONS: usize = 200;
const INIT_SEED: u64 = 0x5eed_ab3e_7a11_0001;

/// Polynomial `c[0] + c[1] x + ... + c[n] x^n` with ascending coefficients.
///
/// Trailing zero coefficients are trimmed on construction, so the stored
/// leading coefficient is nonzero unless the polynomial is identically zero
/// (represented by an empty coefficient list).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Coefficient of `x^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Horner evaluation at a real point.
    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative at a complex point in one pass.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        self.coeffs
            .iter()
            .rev()
            .fold((zero, zero), |(p, dp), &c| (p * x + c, dp * x + p))
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    /// `Σ |c_i| |x|^i`, the scale against which evaluation rounding is measured.
    fn magnitude_at(&self, x: Complex64) -> f64 {
        let r = x.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    /// All complex roots, with multiplicity, sorted by real then imaginary part.
    ///
    /// Uses Aberth–Ehrlich iteration from starting points spread on a circle
    /// whose radius is the Fujiwara bound, with a fixed pseudo-random angular
    /// jitter so that the result is reproducible.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.leading();
        let monic: Vec<f64> = self.coeffs.iter().map(|c| c / lead).collect();
        let monic = Polynomial { coeffs: monic };
        // Roots at the origin are split off exactly.
        let zero_roots = monic.coeffs.iter().take_while(|&&c| c == 0.0).count();
        let reduced = Polynomial {
            coeffs: monic.coeffs[zero_roots..].to_vec(),
        };
        let mut roots = vec![Complex64::new(0.0, 0.0); zero_roots];
        if reduced.degree() > 0 {
            roots.extend(aberth(&reduced)?);
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }

    /// Builds `∏ (x − z)(x − z̄) / ∏ z z̄` from roots in the upper half plane.
    ///
    /// The result has real coefficients and a constant term of exactly one.
    pub fn from_conjugate_roots(pairs: &[Complex64]) -> Result<Polynomial> {
        for (index, z) in pairs.iter().enumerate() {
            if z.re == 0.0 && z.im == 0.0 {
                return Err(Error::PairAtOrigin { index });
            }
            if !(z.im > 0.0) {
                return Err(Error::PairNotInUpperHalfPlane { index, imag: z.im });
            }
        }
        // Each factor (1 − x/z)(1 − x/z̄) = 1 − 2 Re(z)/|z|² x + x²/|z|² is real,
        // so expanding in factored form never produces an imaginary residue.
        let mut coeffs = vec![1.0];
        for z in pairs {
            let norm2 = z.norm_sqr();
            let factor = [1.0, -2.0 * z.re / norm2, 1.0 / norm2];
            let mut next = vec![0.0; coeffs.len() + 2];
            for (i, &a) in coeffs.iter().enumerate() {
                for (j, &b) in factor.iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            coeffs = next;
        }
        coeffs[0] = 1.0;
        Ok(Polynomial::new(coeffs))
    }
}

fn fujiwara_bound(monic: &Polynomial) -> f64 {
    let n = monic.degree();
    let c = monic.coeffs();
    (1..=n)
        .map(|k| {
            let a = c[n - k].abs();
            let a = if k == n { a / 2.0 } else { a };
            a.powf(1.0 / k as f64)
        })
        .fold(0.0_f64, f64::max)
        * 2.0
}

fn aberth(monic: &Polynomial) -> Result<Vec<Complex64>> {
    let n = monic.degree();
    let radius = fujiwara_bound(monic).max(f64::MIN_POSITIVE.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(INIT_SEED);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let jitter: f64 = rng.gen_range(-0.25..0.25);
            let theta = std::f64::consts::TAU * (k as f64 + 0.5 + jitter) / n as f64;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    let accepted = |z: &[Complex64]| {
        z.iter()
            .all(|&r| monic.eval(r).norm() <= ROOT_RESIDUAL_TOL * (1.0 + monic.magnitude_at(r)))
    };

    for _ in 0..ROOT_MAX_ITERATIONS {
        let mut max_step = 0.0_f64;
        for i in 0..n {
            let (p, dp) = monic.eval_with_derivative(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step <= 4.0 * f64::EPSILON && accepted(&z) {
            return Ok(z);
        }
    }
    if accepted(&z) {
        Ok(z)
    } else {
        Err(Error::RootsNotConverged {
            iterations: ROOT_MAX_ITERATIONS,
        })
    }
}

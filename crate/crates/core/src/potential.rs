//! Rational potentials `V(x) = ω x^{2m} + p(x)/q(x)` with `q` free of real
//! roots and normalised to `q(0) = 1`.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::Polynomial;

/// Generator resamples any pole closer than this to the real axis.
pub const MIN_RANDOM_POLE_IMAG: f64 = 1e-3;
const SINGULARITY_DEDUP_TOL: f64 = 1e-10;
const REAL_ROOT_IMAG_TOL: f64 = 1e-7;

/// How the denominator was specified; decides how it is written back out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenominatorForm {
    Coefficients,
    Roots,
}

/// A complex pole `δ + iε` of the potential in the upper half plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    pub delta: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalPotential {
    omega: f64,
    m: u32,
    numerator: Polynomial,
    denominator: Polynomial,
    denominator_roots: Vec<Complex64>,
    form: DenominatorForm,
}

/// The first condition a candidate potential fails.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonPositiveOmega(f64),
    ZeroExponent,
    RealRoot(Complex64),
    Normalization(f64),
    DegreeCondition { k: usize, two_l: usize, m: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveOmega(w) => write!(f, "omega must be positive, got {w}"),
            Violation::ZeroExponent => write!(f, "exponent m must be at least 1"),
            Violation::RealRoot(z) => {
                write!(f, "real root: denominator vanishes on the real axis near x = {}", z.re)
            }
            Violation::Normalization(q0) => {
                write!(
                    f,
                    "normalization: denominator constant term must be exactly 1, got {q0}"
                )
            }
            Violation::DegreeCondition { k, two_l, m } => write!(
                f,
                "degree condition: need deg p - deg q < 2m, got {k} - {two_l} >= {}",
                2 * m
            ),
        }
    }
}

impl RationalPotential {
    /// Builds a potential whose denominator is given by ascending coefficients.
    pub fn from_coefficients(omega: f64, m: u32, numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self> {
        let denominator = Polynomial::new(denominator);
        let denominator_roots = denominator.roots()?;
        Ok(Self {
            omega,
            m,
            numerator: Polynomial::new(numerator),
            denominator,
            denominator_roots,
            form: DenominatorForm::Coefficients,
        })
    }

    /// Builds a potential whose denominator has the given upper-half-plane
    /// roots (and their conjugates), normalised to `q(0) = 1`.
    pub fn from_roots(omega: f64, m: u32, numerator: Vec<f64>, pairs: &[Complex64]) -> Result<Self> {
        let denominator = Polynomial::from_conjugate_roots(pairs)?;
        let denominator_roots = pairs.iter().flat_map(|z| [*z, z.conj()]).collect();
        Ok(Self {
            omega,
            m,
            numerator: Polynomial::new(numerator),
            denominator,
            denominator_roots,
            form: DenominatorForm::Roots,
        })
    }

    /// `ω x^{2m}` with no rational part.
    pub fn anharmonic(omega: f64, m: u32) -> Self {
        Self {
            omega,
            m,
            numerator: Polynomial::zero(),
            denominator: Polynomial::constant(1.0),
            denominator_roots: Vec::new(),
            form: DenominatorForm::Coefficients,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.denominator
    }

    pub fn denominator_form(&self) -> DenominatorForm {
        self.form
    }

    /// Checks membership in the admissible class, reporting the first failure.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if !(self.omega > 0.0) {
            return Err(Violation::NonPositiveOmega(self.omega));
        }
        if self.m == 0 {
            return Err(Violation::ZeroExponent);
        }
        if let Some(root) = self.denominator_roots.iter().find(|z| self.is_real_root(z)) {
            return Err(Violation::RealRoot(*root));
        }
        let q0 = self.denominator.coeff(0);
        if q0 != 1.0 {
            return Err(Violation::Normalization(q0));
        }
        let k = self.numerator.degree();
        let two_l = self.denominator.degree();
        if !self.numerator.is_zero() && k as i64 - two_l as i64 >= 2 * self.m as i64 {
            return Err(Violation::DegreeCondition { k, two_l, m: self.m });
        }
        Ok(())
    }

    fn is_real_root(&self, z: &Complex64) -> bool {
        z.im.abs() <= REAL_ROOT_IMAG_TOL * (1.0 + z.norm()) || self.denominator.eval_real(z.re) <= 0.0
    }

    /// `ω x^{2m} + p(x)/q(x)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.omega * x.powi(2 * self.m as i32) + self.rational_part(x)
    }

    /// `p(x)/q(x)` alone.
    pub fn rational_part(&self, x: f64) -> f64 {
        self.numerator.eval_real(x) / self.denominator.eval_real(x)
    }

    /// Poles of `p/q` in the upper half plane, deduplicated, in root order.
    pub fn singularities(&self) -> Vec<Singularity> {
        let mut out: Vec<Singularity> = Vec::new();
        for z in self.denominator_roots.iter().filter(|z| z.im > 0.0) {
            let dup = out.iter().any(|s| {
                (s.delta - z.re).abs() <= SINGULARITY_DEDUP_TOL * (1.0 + z.norm())
                    && (s.eps - z.im).abs() <= SINGULARITY_DEDUP_TOL * (1.0 + z.norm())
            });
            if !dup {
                out.push(Singularity { delta: z.re, eps: z.im });
            }
        }
        out
    }

    /// Draws a potential from the randomized protocol
    /// `ω ~ U(0,10)`, `k ~ U{0..2m+2l−1}`, `λ_i ~ U(−10,10)`,
    /// `Re z ~ U(−5,5)`, `Im z ~ U(0,10)`.
    ///
    /// The stream is ChaCha8 seeded with `seed`. Draw order: ω, k, λ_0..λ_k,
    /// then (Re, Im) per pole. Pole imaginary parts below
    /// [`MIN_RANDOM_POLE_IMAG`] and a zero ω are redrawn.
    pub fn random(m: u32, l: u32, seed: u64) -> Self {
        assert!(m >= 1 && l >= 1, "random potentials need m >= 1 and l >= 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = loop {
            let w: f64 = rng.gen_range(0.0..10.0);
            if w > 0.0 {
                break w;
            }
        };
        let k = rng.gen_range(0..(2 * m + 2 * l) as usize);
        let lambda: Vec<f64> = (0..=k).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let pairs: Vec<Complex64> = (0..l)
            .map(|_| {
                let re = rng.gen_range(-5.0..5.0);
                let im = loop {
                    let im: f64 = rng.gen_range(0.0..10.0);
                    if im >= MIN_RANDOM_POLE_IMAG {
                        break im;
                    }
                };
                Complex64::new(re, im)
            })
            .collect();
        Self::from_roots(omega, m, lambda, &pairs).expect("generated poles lie in the upper half plane")
    }

    pub fn to_file(&self) -> PotentialFile {
        let (q_coeffs, q_roots) = match self.form {
            DenominatorForm::Coefficients => (Some(self.denominator.coeffs().to_vec()), None),
            DenominatorForm::Roots => (
                None,
                Some(self.denominator_roots.iter().step_by(2).map(|z| [z.re, z.im]).collect()),
            ),
        };
        PotentialFile {
            omega: self.omega,
            m: self.m,
            lambda: self.numerator.coeffs().to_vec(),
            q_coeffs,
            q_roots,
        }
    }

    pub fn from_file(file: &PotentialFile) -> Result<Self> {
        match (&file.q_coeffs, &file.q_roots) {
            (Some(q), None) => Self::from_coefficients(file.omega, file.m, file.lambda.clone(), q.clone()),
            (None, Some(roots)) => {
                let pairs: Vec<Complex64> = roots.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                Self::from_roots(file.omega, file.m, file.lambda.clone(), &pairs)
            }
            _ => Err(Error::Parse(
                "potential must give exactly one of `q_coeffs` or `q_roots`".into(),
            )),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PotentialFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("potential JSON: {e}")))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("potential serialises")
    }
}

/// On-disk description of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub omega: f64,
    pub m: u32,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_roots: Option<Vec<[f64; 2]>>,
}

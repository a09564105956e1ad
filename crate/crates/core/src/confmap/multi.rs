//! Polynomial-adjusted sinh map for several pole pairs.
//!
//! Unknowns are `y = [u₀, u₁..u_n, x₁..x_n]` and the constraints are the
//! `2n` real equations `φ(x_k + i d) = δ_k + i ε_k`. The solution set is a
//! curve; we reach it by a homotopy in the pole positions and then walk
//! along it to the point where `u₀` is maximal, i.e. where the tangent of
//! the curve has no `u₀` component.

use num_complex::Complex64;

use super::{decay_rate, map_plain_sinh, single_map, strip_width, ConformalMap, MapKind};
use crate::linalg::{dot, gram, norm, solve};
use crate::polynomial::Polynomial;
use crate::potential::{RationalPotential, Singularity};

#[derive(Clone, Debug, PartialEq)]
pub struct MultiMapOptions {
    /// Poles closer than this to the real axis are not mapped.
    pub min_eps: f64,
    /// Largest accepted `|φ(x_k + i d) − (δ_k + i ε_k)|`.
    pub residual_tol: f64,
    /// Relative distance below which two poles are treated as one.
    pub merge_tol: f64,
    /// Iteration cap for the walk towards maximal `u₀`.
    pub max_walk_steps: usize,
}

impl Default for MultiMapOptions {
    fn default() -> Self {
        Self {
            min_eps: 1e-3,
            residual_tol: 1e-8,
            merge_tol: 1e-6,
            max_walk_steps: 400,
        }
    }
}

/// Optimal map for a potential with several pole pairs, or the plain sinh
/// map tagged as a fallback (with the reason) when no valid map is found.
pub fn map_multi_singularity(potential: &RationalPotential) -> ConformalMap {
    map_multi_singularity_with(potential, &MultiMapOptions::default())
}

pub fn map_multi_singularity_with(potential: &RationalPotential, opts: &MultiMapOptions) -> ConformalMap {
    let gamma = decay_rate(potential.m());
    let fallback = |reason: String| {
        log::debug!("multi-singularity map falls back to sinh: {reason}");
        map_plain_sinh(potential).into_fallback(reason)
    };

    let mut poles = potential.singularities();
    if poles.is_empty() {
        return fallback("potential has no complex singularities".into());
    }
    poles.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.eps.total_cmp(&b.eps)));
    poles.dedup_by(|b, a| {
        let scale = opts.merge_tol * (1.0 + a.delta.hypot(a.eps));
        (a.delta - b.delta).abs() <= scale && (a.eps - b.eps).abs() <= scale
    });
    if let Some(p) = poles.iter().find(|p| p.eps < opts.min_eps) {
        return fallback(format!(
            "singularity {} + {}i is closer than {} to the real axis",
            p.delta, p.eps, opts.min_eps
        ));
    }

    let system = Constraints::new(&poles, strip_width(gamma));
    let start = match system.feasible_point() {
        Some(y) => y,
        None => return fallback("no feasible point found by homotopy".into()),
    };
    let y = match system.maximize_u0(start, opts.max_walk_steps) {
        Ok(y) => y,
        Err(reason) => return fallback(reason),
    };

    let n = poles.len();
    let map = if n == 1 {
        // The single-pole optimum is known in closed form; keep its exact values.
        let exact = single_map(poles[0], gamma);
        if (exact.u0() - y[0]).abs() > 1e-6 * exact.u0() {
            return fallback(format!("walk converged to u0 = {} instead of {}", y[0], exact.u0()));
        }
        ConformalMap::from_parts(
            exact.u0(),
            exact.adjust().clone(),
            gamma,
            vec![0.0],
            poles,
            MapKind::Multi,
        )
    } else {
        ConformalMap::from_parts(
            y[0],
            Polynomial::new(y[1..=n].to_vec()),
            gamma,
            y[n + 1..].to_vec(),
            poles,
            MapKind::Multi,
        )
    };
    if !(map.u0() > 0.0) {
        return fallback(format!("non-positive amplitude u0 = {}", map.u0()));
    }
    let worst = map.residuals().into_iter().fold(0.0_f64, f64::max);
    if !(worst <= opts.residual_tol) {
        return fallback(format!("constraint residual {worst:e} exceeds {:e}", opts.residual_tol));
    }
    if !map.is_increasing() {
        return fallback("optimal map is not monotone on the real line".into());
    }
    map
}

struct Constraints {
    targets: Vec<Complex64>,
    d: f64,
    scale: f64,
}

impl Constraints {
    fn new(poles: &[Singularity], d: f64) -> Self {
        let targets: Vec<Complex64> = poles.iter().map(|p| Complex64::new(p.delta, p.eps)).collect();
        let scale = 1.0 + targets.iter().map(|t| t.norm()).fold(0.0, f64::max);
        Self { targets, d, scale }
    }

    fn n(&self) -> usize {
        self.targets.len()
    }

    fn split<'a>(&self, y: &'a [f64]) -> (f64, &'a [f64], &'a [f64]) {
        let n = self.n();
        (y[0], &y[1..=n], &y[n + 1..])
    }

    fn residual(&self, y: &[f64], targets: &[Complex64]) -> Vec<f64> {
        let (u0, u, x) = self.split(y);
        let adjust = Polynomial::new(u.to_vec());
        x.iter()
            .zip(targets)
            .flat_map(|(&xk, t)| {
                let z = Complex64::new(xk, self.d);
                let c = z.sinh() * u0 + adjust.eval(z) - t;
                [c.re, c.im]
            })
            .collect()
    }

    /// Rows `2k` and `2k+1` hold the real and imaginary parts of
    /// `∂C_k/∂(u₀, u₁..u_n, x₁..x_n)`.
    fn jacobian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n();
        let (u0, u, x) = self.split(y);
        let adjust = Polynomial::new(u.to_vec());
        let mut rows = vec![vec![0.0; 2 * n + 1]; 2 * n];
        for (k, &xk) in x.iter().enumerate() {
            let z = Complex64::new(xk, self.d);
            let mut cols = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
            cols[0] = z.sinh();
            let mut power = Complex64::new(1.0, 0.0);
            for col in cols.iter_mut().skip(1).take(n) {
                *col = power;
                power *= z;
            }
            let (_, dp) = adjust.eval_with_derivative(z);
            cols[n + 1 + k] = z.cosh() * u0 + dp;
            rows[2 * k] = cols.iter().map(|c| c.re).collect();
            rows[2 * k + 1] = cols.iter().map(|c| c.im).collect();
        }
        rows
    }

    /// Minimum-norm Gauss–Newton projection onto the constraint set.
    fn correct(&self, mut y: Vec<f64>, targets: &[Complex64]) -> Option<Vec<f64>> {
        let tol = 1e-13 * self.scale;
        let inf = |f: &[f64]| f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut f = self.residual(&y, targets);
        for _ in 0..60 {
            if inf(&f) <= tol {
                return Some(y);
            }
            let j = self.jacobian(&y);
            let w = solve(gram(&j), f.iter().map(|v| -v).collect())?;
            let step: Vec<f64> = (0..y.len())
                .map(|c| j.iter().zip(&w).map(|(r, wi)| r[c] * wi).sum())
                .collect();
            let current = norm(&f);
            let mut alpha = 1.0;
            loop {
                let trial: Vec<f64> = y.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
                let ft = self.residual(&trial, targets);
                if trial[0] > 0.0 && norm(&ft) < current {
                    y = trial;
                    f = ft;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-4 {
                    return (inf(&f) <= 1e3 * tol).then_some(y);
                }
            }
        }
        (inf(&f) <= 1e3 * tol).then_some(y)
    }

    /// A point on the constraint curve, found by deforming the poles from
    /// positions an unadjusted sinh map hits exactly. Three starts are tried:
    /// direct deformation, deformation through poles lifted to the largest
    /// imaginary part, and direct deformation from half the amplitude.
    fn feasible_point(&self) -> Option<Vec<f64>> {
        let min_eps = self.targets.iter().map(|t| t.im).fold(f64::INFINITY, f64::min);
        let max_eps = self.targets.iter().map(|t| t.im).fold(0.0, f64::max);
        let sd = self.d.sin();
        let lifted: Vec<Complex64> = self.targets.iter().map(|t| Complex64::new(t.re, max_eps)).collect();

        let stages: [(f64, Option<&[Complex64]>); 3] = [
            (min_eps / sd, None),
            (max_eps / sd, Some(&lifted)),
            (0.5 * min_eps / sd, None),
        ];
        for (u0, via) in stages {
            let (y0, start) = self.unadjusted_start(u0);
            let mut path = vec![start];
            if let Some(mid) = via {
                path.push(mid.to_vec());
            }
            path.push(self.targets.clone());
            let mut y = Some(y0);
            for leg in path.windows(2) {
                y = y.and_then(|y| self.homotopy(y, &leg[0], &leg[1]));
            }
            if y.is_some() {
                return y;
            }
        }
        None
    }

    fn unadjusted_start(&self, u0: f64) -> (Vec<f64>, Vec<Complex64>) {
        let n = self.n();
        let mut y = vec![0.0; 2 * n + 1];
        y[0] = u0;
        let mut start = Vec::with_capacity(n);
        for (k, t) in self.targets.iter().enumerate() {
            let xk = (t.re / (u0 * self.d.cos())).asinh();
            y[n + 1 + k] = xk;
            start.push(Complex64::new(xk, self.d).sinh() * u0);
        }
        (y, start)
    }

    fn homotopy(&self, mut y: Vec<f64>, from: &[Complex64], to: &[Complex64]) -> Option<Vec<f64>> {
        let mut tau: f64 = 0.0;
        let mut step: f64 = 0.25;
        while tau < 1.0 {
            let next = (tau + step).min(1.0);
            let targets: Vec<Complex64> = from.iter().zip(to).map(|(a, b)| a + (b - a) * next).collect();
            match self.correct(y.clone(), &targets) {
                Some(y_new) => {
                    y = y_new;
                    tau = next;
                    step = (step * 1.5).min(0.5);
                }
                None => {
                    step *= 0.5;
                    if step < 1e-6 {
                        return None;
                    }
                }
            }
        }
        Some(y)
    }

    /// Unit tangent of the constraint curve at `y`, oriented along `prev`.
    fn tangent(&self, y: &[f64], prev: &[f64]) -> Option<Vec<f64>> {
        let mut a = self.jacobian(y);
        a.push(prev.to_vec());
        let mut rhs = vec![0.0; a.len()];
        *rhs.last_mut().unwrap() = 1.0;
        let v = solve(a, rhs)?;
        let len = norm(&v);
        let sign = if dot(&v, prev) < 0.0 { -1.0 } else { 1.0 };
        Some(v.iter().map(|c| sign * c / len).collect())
    }

    /// Projection of `e₀` onto the tangent space: the ascent direction of `u₀`.
    fn u0_gradient(&self, y: &[f64]) -> Option<Vec<f64>> {
        let j = self.jacobian(y);
        let je0: Vec<f64> = j.iter().map(|r| r[0]).collect();
        let w = solve(gram(&j), je0)?;
        Some(
            (0..y.len())
                .map(|c| {
                    let e = if c == 0 { 1.0 } else { 0.0 };
                    e - j.iter().zip(&w).map(|(r, wi)| r[c] * wi).sum::<f64>()
                })
                .collect(),
        )
    }

    /// Secant search along the curve for a zero of `du₀/ds`.
    fn maximize_u0(&self, mut y: Vec<f64>, max_steps: usize) -> Result<Vec<f64>, String> {
        let grad = self.u0_gradient(&y).ok_or("singular constraint Jacobian at start")?;
        let glen = norm(&grad);
        if glen < 1e-12 {
            return Ok(y);
        }
        let mut tangent: Vec<f64> = grad.iter().map(|g| g / glen).collect();
        let mut slope = tangent[0];
        let mut reach = 0.1 * (1.0 + norm(&y));
        let mut curvature: Option<f64> = None;
        let u0_cap = 1e6 * self.scale;

        for _ in 0..max_steps {
            if slope.abs() < 1e-11 {
                return Ok(y);
            }
            let mut ds = reach.copysign(slope);
            let mut newton = false;
            if let Some(k) = curvature.filter(|k| *k < 0.0) {
                let s = -slope / k;
                if s.abs() < reach {
                    ds = s;
                    newton = true;
                }
            }
            let predicted: Vec<f64> = y.iter().zip(&tangent).map(|(a, t)| a + ds * t).collect();
            let next = self
                .correct(predicted, &self.targets)
                .and_then(|y_new| self.tangent(&y_new, &tangent).map(|t| (y_new, t)));
            match next {
                Some((y_new, t_new)) => {
                    curvature = Some((t_new[0] - slope) / ds);
                    slope = t_new[0];
                    y = y_new;
                    tangent = t_new;
                    if !newton {
                        reach *= 1.5;
                    }
                    if y[0] > u0_cap {
                        return Err(format!("u0 grows without bound (passed {u0_cap:e})"));
                    }
                }
                None => {
                    reach *= 0.5;
                    curvature = None;
                    if reach < 1e-14 {
                        break;
                    }
                }
            }
        }
        if slope.abs() < 1e-6 {
            Ok(y)
        } else {
            Err(format!("u0 maximization stalled with slope {slope:e}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn potential(m: u32, pairs: &[(f64, f64)]) -> RationalPotential {
        let pairs: Vec<Complex64> = pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        RationalPotential::from_roots(1.0, m, vec![1.0], &pairs).unwrap()
    }

    #[test]
    fn duplicate_pair_reduces_to_single_map() {
        let v = potential(1, &[(0.0, 1.0), (0.0, 1.0)]);
        let multi = map_multi_singularity(&v);
        assert_eq!(multi.kind(), MapKind::Multi);
        let single = single_map(Singularity { delta: 0.0, eps: 1.0 }, 2.0);
        assert!((multi.u0() - single.u0()).abs() < 1e-8);
        assert_eq!(multi.adjust().coeffs().len(), single.adjust().coeffs().len());
        for (a, b) in multi.adjust().coeffs().iter().zip(single.adjust().coeffs()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn general_walk_recovers_single_optimum() {
        let system = Constraints::new(&[Singularity { delta: 1.3, eps: 0.8 }], strip_width(3.0));
        let y = system.feasible_point().unwrap();
        let y = system.maximize_u0(y, 400).unwrap();
        let exact = single_map(Singularity { delta: 1.3, eps: 0.8 }, 3.0);
        assert!((y[0] - exact.u0()).abs() < 1e-8, "{} vs {}", y[0], exact.u0());
        assert!((y[1] - 1.3).abs() < 1e-8);
        assert!(y[2].abs() < 1e-6);
    }

    #[test]
    fn symmetric_pair_gives_odd_map() {
        let v = potential(1, &[(-2.0, 1.0), (2.0, 1.0)]);
        let map = map_multi_singularity(&v);
        assert_eq!(map.kind(), MapKind::Multi, "{:?}", map.fallback_reason());
        assert!(map.adjust().coeff(0).abs() < 1e-8, "u1 = {}", map.adjust().coeff(0));
        let x = map.preimages();
        assert!((x[0] + x[1]).abs() < 1e-8);
        assert!(map.residuals().iter().all(|r| *r <= 1e-8));
    }

    #[test]
    fn optimum_beats_nearby_feasible_points() {
        let poles = [
            Singularity { delta: -1.0, eps: 0.7 },
            Singularity { delta: 2.5, eps: 1.9 },
        ];
        let system = Constraints::new(&poles, strip_width(2.0));
        let start = system.feasible_point().unwrap();
        let best = system.maximize_u0(start, 400).unwrap();
        // step off the optimum along the curve in both directions
        let t = system
            .tangent(
                &best,
                &system
                    .u0_gradient(&best)
                    .map(|g| {
                        let mut g = g;
                        g[1] += 1.0;
                        g
                    })
                    .unwrap(),
            )
            .unwrap();
        for ds in [-0.05, 0.05] {
            let moved: Vec<f64> = best.iter().zip(&t).map(|(a, b)| a + ds * b).collect();
            let other = system.correct(moved, &system.targets).unwrap();
            assert!(other[0] <= best[0] + 1e-12, "{} > {}", other[0], best[0]);
        }
    }

    #[test]
    fn near_real_pole_falls_back() {
        let v = potential(1, &[(-1.0, 1e-4), (1.0, 1.0)]);
        let map = map_multi_singularity(&v);
        assert_eq!(map.kind(), MapKind::Fallback);
        assert_eq!(map.u0(), 1.0);
        assert!(map.fallback_reason().unwrap().contains("real axis"));
    }
}

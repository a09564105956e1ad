//! N-refinement driver, exact reference spectra and randomized studies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confmap::{map_multi_singularity, map_plain_sinh, map_single_singularity, ConformalMap, MapKind, MapReport};
use crate::discretize::build_system;
use crate::eigensolve::{generalized_eigs, Spectrum};
use crate::error::{Error, Result};
use crate::potential::{PotentialFile, RationalPotential, MIN_RANDOM_POLE_IMAG};

/// Relative size of `ε_n(N)` below which a level counts as converged
/// whatever the requested tolerance.
pub const MACHINE_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapStrategy {
    Auto,
    Plain,
    Single,
    Multi,
}

impl std::str::FromStr for MapStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "plain" => Ok(Self::Plain),
            "single" => Ok(Self::Single),
            "multi" => Ok(Self::Multi),
            other => Err(Error::Parse(format!("unknown map strategy `{other}`"))),
        }
    }
}

/// Picks the conformal map for a potential. `Auto` uses the analytic map
/// for one pole pair, the optimised map (with fallback) for several, and
/// plain sinh when there are none.
pub fn select_map(potential: &RationalPotential, strategy: MapStrategy) -> Result<ConformalMap> {
    match strategy {
        MapStrategy::Plain => Ok(map_plain_sinh(potential)),
        MapStrategy::Single => map_single_singularity(potential),
        MapStrategy::Multi => Ok(map_multi_singularity(potential)),
        MapStrategy::Auto => match potential.singularities().len() {
            0 => Ok(map_plain_sinh(potential)),
            1 => map_single_singularity(potential),
            _ => Ok(map_multi_singularity(potential)),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub eigenvalues: Vec<f64>,
    /// `|E_n(N) − E_n(N−1)|`, absent at the first N of a run.
    pub eps: Option<Vec<f64>>,
    pub map_kind: MapKind,
}

/// `ε_n = |E_n(N) − E_n(N−1)|` for the lowest `levels` eigenvalues.
pub fn error_estimate(prev: &Spectrum, curr: &Spectrum, levels: usize) -> Result<Vec<f64>> {
    let available = prev.eigenvalues.len().min(curr.eigenvalues.len());
    if levels > available {
        return Err(Error::TooManyLevels {
            requested: levels,
            available,
        });
    }
    Ok(prev
        .eigenvalues
        .iter()
        .zip(&curr.eigenvalues)
        .take(levels)
        .map(|(a, b)| (b - a).abs())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergeOptions {
    pub strategy: MapStrategy,
    pub tol: f64,
    pub n_max: usize,
    pub levels: usize,
}

impl Default for ConvergeOptions {
    fn default() -> Self {
        Self {
            strategy: MapStrategy::Auto,
            tol: 1e-10,
            n_max: 200,
            levels: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceRun {
    pub map: ConformalMap,
    /// Spectrum at the last N computed.
    pub spectrum: Spectrum,
    pub records: Vec<ConvergenceRecord>,
    /// First N at which each level met the tolerance (or the machine floor).
    pub n_to_tol: Vec<Option<usize>>,
    pub converged: bool,
}

/// Smallest half-width whose system holds `levels` eigenvalues.
pub fn first_n(levels: usize) -> usize {
    levels.div_ceil(2).max(1)
}

/// Refines N one step at a time until every requested level has
/// `ε_n(N) ≤ tol` at the same N, or `n_max` is reached.
pub fn converge(potential: &RationalPotential, opts: &ConvergeOptions) -> Result<ConvergenceRun> {
    assert!(opts.levels >= 1 && opts.tol > 0.0);
    let map = select_map(potential, opts.strategy)?;
    run_with_map(potential, map, opts)
}

pub fn run_with_map(
    potential: &RationalPotential,
    map: ConformalMap,
    opts: &ConvergeOptions,
) -> Result<ConvergenceRun> {
    let levels = opts.levels;
    let mut records = Vec::new();
    let mut n_to_tol = vec![None; levels];
    let mut floored = vec![false; levels];
    let mut prev: Option<Spectrum> = None;
    let mut converged = false;

    for n in first_n(levels)..=opts.n_max.max(first_n(levels)) {
        let system = build_system(potential, &map, n);
        let spectrum = generalized_eigs(&system, levels)?;
        let eps = prev
            .as_ref()
            .map(|p| error_estimate(p, &spectrum, levels))
            .transpose()?;
        let mut all_met = false;
        if let Some(eps) = &eps {
            all_met = true;
            for (level, (&e, &energy)) in eps.iter().zip(&spectrum.eigenvalues).enumerate() {
                if e < MACHINE_FLOOR * energy.abs().max(1.0) {
                    floored[level] = true;
                }
                let met = e <= opts.tol || floored[level];
                if met && n_to_tol[level].is_none() {
                    n_to_tol[level] = Some(n);
                }
                all_met &= met;
            }
        }
        log::debug!(
            "N = {n}: h = {:.6e}, E = {:?}, eps = {:?}",
            system.h(),
            spectrum.eigenvalues,
            eps
        );
        records.push(ConvergenceRecord {
            n,
            h: system.h(),
            eigenvalues: spectrum.eigenvalues.clone(),
            eps,
            map_kind: map.kind(),
        });
        prev = Some(spectrum);
        if all_met {
            converged = true;
            break;
        }
    }

    Ok(ConvergenceRun {
        map,
        spectrum: prev.expect("at least one N is computed"),
        records,
        n_to_tol,
        converged,
    })
}

/// One of the closed-form test cases `V = x² + λ(g) x²/(1 + g x²)`.
#[derive(Clone, Debug)]
pub struct ExactCase {
    pub case: u32,
    pub g: f64,
    pub lambda: f64,
    pub level: usize,
    pub energy: f64,
    pub potential: RationalPotential,
}

/// Exact eigenvalue `E_{case−1}` for the coupling `λ_case(g)`.
pub fn exact_reference(case: u32, g: f64) -> Result<ExactCase> {
    assert!(g > 0.0, "coupling g must be positive");
    let (lambda, base) = match case {
        1 => (-2.0 * g * (2.0 + g), 5.0),
        2 => (-2.0 * g * (2.0 + 3.0 * g), 7.0),
        3 => (-g * (7.0 * g + 6.0 - (25.0 * g * g - 12.0 * g + 4.0).sqrt()), 9.0),
        4 => (-g * (13.0 * g + 6.0 - (49.0 * g * g - 4.0 * g + 4.0).sqrt()), 11.0),
        other => return Err(Error::UnknownCase(other)),
    };
    let potential = RationalPotential::from_coefficients(1.0, 1, vec![0.0, 0.0, lambda], vec![1.0, 0.0, g])?;
    Ok(ExactCase {
        case,
        g,
        lambda,
        level: case as usize - 1,
        energy: base + lambda / g,
        potential,
    })
}

/// SplitMix64 finaliser applied to `master + (index + 1)·φ₆₄`; gives each
/// potential of a study an independent stream regardless of run order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyOptions {
    pub m: u32,
    pub l: u32,
    pub count: usize,
    pub seed: u64,
    pub tol: f64,
    pub n_max: usize,
    pub levels: usize,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub generator: String,
    pub seed_splitter: String,
    pub pole_imag_floor: f64,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyEntry {
    pub potential_id: usize,
    pub seed: u64,
    pub potential: PotentialFile,
    pub map: MapReport,
    #[serde(rename = "N_to_tol")]
    pub n_to_tol: Vec<Option<usize>>,
    #[serde(rename = "N_final")]
    pub n_final: usize,
    pub final_eigenvalues: Vec<f64>,
    pub final_eps: Option<Vec<f64>>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub records: Vec<ConvergenceRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub seed: u64,
    pub m: u32,
    pub l: u32,
    pub count: usize,
    pub tol: f64,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub levels: usize,
    pub metadata: StudyMetadata,
    pub entries: Vec<StudyEntry>,
}

impl StudyReport {
    pub fn non_converged(&self) -> impl Iterator<Item = &StudyEntry> {
        self.entries.iter().filter(|e| !e.converged)
    }
}

fn study_entry(opts: &StudyOptions, id: usize) -> StudyEntry {
    let seed = derive_seed(opts.seed, id as u64);
    let potential = RationalPotential::random(opts.m, opts.l, seed);
    let copts = ConvergeOptions {
        strategy: MapStrategy::Auto,
        tol: opts.tol,
        n_max: opts.n_max,
        levels: opts.levels,
    };
    let (map, run) = match select_map(&potential, MapStrategy::Auto) {
        Ok(map) => (map.report(), run_with_map(&potential, map, &copts)),
        Err(e) => (map_plain_sinh(&potential).report(), Err(e)),
    };
    match run {
        Ok(run) => {
            let last = run.records.last().expect("non-empty run");
            StudyEntry {
                potential_id: id,
                seed,
                potential: potential.to_file(),
                map,
                n_to_tol: run.n_to_tol.clone(),
                n_final: last.n,
                final_eigenvalues: last.eigenvalues.clone(),
                final_eps: last.eps.clone(),
                converged: run.converged,
                error: None,
                records: run.records,
            }
        }
        Err(e) => StudyEntry {
            potential_id: id,
            seed,
            potential: potential.to_file(),
            map,
            n_to_tol: vec![None; opts.levels],
            n_final: 0,
            final_eigenvalues: Vec::new(),
            final_eps: None,
            converged: false,
            error: Some(e.to_string()),
            records: Vec::new(),
        },
    }
}

/// Runs `count` random potentials through [`converge`] with the `Auto`
/// strategy. Entries are ordered by potential index and are identical for
/// a fixed seed whatever the thread count.
pub fn random_study(opts: &StudyOptions) -> StudyReport {
    assert!(opts.count >= 1, "study needs at least one potential");
    let run = || {
        (0..opts.count)
            .into_par_iter()
            .map(|id| study_entry(opts, id))
            .collect::<Vec<_>>()
    };
    let entries = match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    };
    StudyReport {
        seed: opts.seed,
        m: opts.m,
        l: opts.l,
        count: opts.count,
        tol: opts.tol,
        n_max: opts.n_max,
        levels: opts.levels,
        metadata: StudyMetadata {
            generator: "ChaCha8 stream per potential; draw order omega, k, lambda_0..lambda_k, (Re z, Im z) per pole"
                .into(),
            seed_splitter: "SplitMix64 finaliser of seed + (index + 1) * 0x9E3779B97F4A7C15".into(),
            pole_imag_floor: MIN_RANDOM_POLE_IMAG,
            note: format!("pole imaginary parts drawn from U(0,10) are redrawn when below {MIN_RANDOM_POLE_IMAG}"),
        },
        entries,
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `potential_id,N,h,level,energy,eps` rows; `eps` is empty at the
/// first N of a run.
pub fn write_records_csv<W: Write>(
    out: W,
    runs: &[(usize, &[ConvergenceRecord])],
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["potential_id", "N", "h", "level", "energy", "eps"])?;
    for (id, records) in runs {
        for r in records.iter() {
            for (level, energy) in r.eigenvalues.iter().enumerate() {
                let eps = r.eps.as_ref().map(|e| fmt_f64(e[level])).unwrap_or_default();
                w.write_record([
                    id.to_string(),
                    r.n.to_string(),
                    fmt_f64(r.h),
                    level.to_string(),
                    fmt_f64(*energy),
                    eps,
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

impl StudyReport {
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let runs: Vec<(usize, &[ConvergenceRecord])> = self
            .entries
            .iter()
            .map(|e| (e.potential_id, e.records.as_slice()))
            .collect();
        write_records_csv(out, &runs)
    }
}

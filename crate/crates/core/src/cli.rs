//! Command-line surface. [`run`] parses arguments, executes a subcommand and
//! returns the process exit code: 0 on success, 1 when a tolerance is not
//! met, 2 on bad input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::confmap::MapReport;
use crate::convergence::{
    converge, exact_reference, fmt_f64, random_study, select_map, write_records_csv, ConvergeOptions,
    ConvergenceRecord, MapStrategy, StudyOptions,
};
use crate::discretize::build_system;
use crate::eigensolve::generalized_eigs;
use crate::error::Error;
use crate::potential::RationalPotential;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "descm",
    version,
    about = "Sinc-collocation eigenvalues for rational anharmonic oscillators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MapArg {
    Auto,
    Plain,
    Single,
    Multi,
}

impl From<MapArg> for MapStrategy {
    fn from(m: MapArg) -> Self {
        match m {
            MapArg::Auto => MapStrategy::Auto,
            MapArg::Plain => MapStrategy::Plain,
            MapArg::Single => MapStrategy::Single,
            MapArg::Multi => MapStrategy::Multi,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the four closed-form test spectra at coupling g.
    ValidateExact {
        #[arg(long)]
        g: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long = "nmax", default_value_t = 200)]
        n_max: usize,
    },
    /// Converge the lowest eigenvalues of one potential.
    Solve {
        /// Path to a potential JSON file, or the JSON text itself.
        #[arg(long)]
        potential: String,
        #[arg(long, value_enum, default_value_t = MapArg::Auto)]
        map: MapArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long = "nmax", default_value_t = 200)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Converge a batch of randomly drawn potentials.
    RandomStudy {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        l: u32,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long = "nmax", default_value_t = 200)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory for study.json, study.csv and study.gp.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Where the potential description comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSource {
    Inline(String),
    File(PathBuf),
}

impl PotentialSource {
    pub fn parse(arg: &str) -> Self {
        if arg.trim_start().starts_with('{') {
            Self::Inline(arg.to_string())
        } else {
            Self::File(PathBuf::from(arg))
        }
    }

    pub fn load(&self) -> Result<RationalPotential, Error> {
        match self {
            Self::Inline(text) => RationalPotential::from_json(text),
            Self::File(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
                RationalPotential::from_json(&text)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub potential: PotentialSource,
    pub strategy: MapStrategy,
    pub tol: f64,
    pub n_max: usize,
    pub levels: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn check(&self) -> Result<(), String> {
        if !(self.tol > 0.0) {
            return Err(format!("--tol must be positive, got {}", self.tol));
        }
        if self.levels < 1 {
            return Err("--levels must be at least 1".into());
        }
        if self.n_max < 2 {
            return Err(format!("--nmax must be at least 2, got {}", self.n_max));
        }
        Ok(())
    }
}

pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::ValidateExact { g, tol, n_max } => cmd_validate_exact(g, tol, n_max, stdout, stderr),
        Command::Solve {
            potential,
            map,
            tol,
            n_max,
            levels,
            format,
            out,
        } => {
            let config = RunConfig {
                potential: PotentialSource::parse(&potential),
                strategy: map.into(),
                tol,
                n_max,
                levels,
                format,
                out,
                seed: None,
            };
            cmd_solve(&config, stdout, stderr)
        }
        Command::RandomStudy {
            m,
            l,
            count,
            seed,
            tol,
            n_max,
            levels,
            jobs,
            out,
        } => {
            let opts = StudyOptions {
                m,
                l,
                count,
                seed,
                tol,
                n_max,
                levels,
                jobs,
            };
            cmd_random_study(&opts, &out, stdout, stderr)
        }
    };
    match result {
        Ok(code) => code,
        Err(CliError::Input(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INPUT
        }
    }
}

enum CliError {
    Input(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult = Result<i32, CliError>;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("cannot write {}: {e}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct ExactRow {
    pub case: u32,
    pub lambda: f64,
    pub level: usize,
    pub exact: f64,
    pub computed: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub passed: bool,
}

/// Refines N until `|E_n(N) − E_n| ≤ tol` for each exact case, keeping the
/// best error seen when the tolerance is never reached.
pub fn exact_rows(g: f64, tol: f64, n_max: usize) -> Result<Vec<ExactRow>, Error> {
    (1..=4)
        .map(|case| {
            let c = exact_reference(case, g)?;
            let map = select_map(&c.potential, MapStrategy::Auto)?;
            let mut best: Option<(f64, f64, usize)> = None;
            for n in crate::convergence::first_n(c.level + 1)..=n_max {
                let spectrum = generalized_eigs(&build_system(&c.potential, &map, n), c.level + 1)?;
                let computed = spectrum.eigenvalues[c.level];
                let err = (computed - c.energy).abs();
                if best.is_none_or(|(_, e, _)| err < e) {
                    best = Some((computed, err, n));
                }
                if err <= tol {
                    break;
                }
            }
            let (computed, abs_error, n) = best.expect("at least one N");
            Ok(ExactRow {
                case,
                lambda: c.lambda,
                level: c.level,
                exact: c.energy,
                computed,
                abs_error,
                rel_error: if c.energy != 0.0 {
                    abs_error / c.energy.abs()
                } else {
                    f64::NAN
                },
                n,
                passed: abs_error <= tol,
            })
        })
        .collect()
}

fn cmd_validate_exact(g: f64, tol: f64, n_max: usize, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> CliResult {
    if !(g > 0.0) {
        return Err(CliError::Input(format!("--g must be positive, got {g}")));
    }
    if !(tol > 0.0) || n_max < 2 {
        return Err(CliError::Input("--tol must be positive and --nmax at least 2".into()));
    }
    let rows = exact_rows(g, tol, n_max)?;
    let w = |e: std::io::Error| CliError::Input(format!("cannot write output: {e}"));
    writeln!(
        stdout,
        "{:>4} {:>24} {:>6} {:>24} {:>24} {:>10} {:>10} {:>5} {:>6}",
        "case", "lambda", "level", "exact", "computed", "abs_error", "rel_error", "N", "status"
    )
    .map_err(w)?;
    for r in &rows {
        writeln!(
            stdout,
            "{:>4} {:>24.16e} {:>6} {:>24.16e} {:>24.16e} {:>10.3e} {:>10.3e} {:>5} {:>6}",
            r.case,
            r.lambda,
            r.level,
            r.exact,
            r.computed,
            r.abs_error,
            r.rel_error,
            r.n,
            if r.passed { "pass" } else { "FAIL" }
        )
        .map_err(w)?;
    }
    Ok(if rows.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    })
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    potential: crate::potential::PotentialFile,
    map: MapReport,
    converged: bool,
    eigenvalues: &'a [f64],
    #[serde(rename = "N_to_tol")]
    n_to_tol: &'a [Option<usize>],
    records: &'a [ConvergenceRecord],
}

fn cmd_solve(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    config.check().map_err(CliError::Input)?;
    let potential = config.potential.load()?;
    potential
        .validate()
        .map_err(|v| CliError::Input(format!("invalid potential: {v}")))?;
    let opts = ConvergeOptions {
        strategy: config.strategy,
        tol: config.tol,
        n_max: config.n_max,
        levels: config.levels,
    };
    let run = converge(&potential, &opts)?;

    let mut buf = Vec::new();
    match config.format {
        OutputFormat::Csv => {
            write_records_csv(&mut buf, &[(0, &run.records)]).map_err(|e| CliError::Input(format!("csv: {e}")))?
        }
        OutputFormat::Json => {
            let out = SolveOutput {
                potential: potential.to_file(),
                map: run.map.report(),
                converged: run.converged,
                eigenvalues: &run.spectrum.eigenvalues,
                n_to_tol: &run.n_to_tol,
                records: &run.records,
            };
            serde_json::to_writer_pretty(&mut buf, &out).expect("serialisable");
            buf.push(b'\n');
        }
    }
    match &config.out {
        Some(path) => fs::write(path, &buf).map_err(io_err(path))?,
        None => stdout
            .write_all(&buf)
            .map_err(|e| CliError::Input(format!("cannot write output: {e}")))?,
    }

    let last = run.records.last().expect("non-empty run");
    let _ = writeln!(
        stderr,
        "map {} | N = {} | converged = {}",
        run.map.kind(),
        last.n,
        run.converged
    );
    for (n, e) in run.spectrum.eigenvalues.iter().enumerate() {
        let _ = writeln!(stderr, "E_{n} = {}", fmt_f64(*e));
    }
    Ok(if run.converged { EXIT_OK } else { EXIT_NUMERICAL })
}

fn gnuplot_script(csv_name: &str, count: usize) -> String {
    format!(
        "# eps_0(N) for every potential of the study\n\
         set datafile separator ','\n\
         set logscale y\n\
         set format y '10^{{%L}}'\n\
         set xlabel 'N'\n\
         set ylabel 'eps_0(N)'\n\
         set key off\n\
         plot for [i=0:{last}] '{csv_name}' every ::1 using ($1==i && $4==0 ? $2 : 1/0):6 with lines\n",
        last = count.saturating_sub(1)
    )
}

fn cmd_random_study(opts: &StudyOptions, out: &Path, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> CliResult {
    if opts.count == 0 {
        return Err(CliError::Input("--count must be at least 1".into()));
    }
    if opts.m == 0 || opts.l == 0 {
        return Err(CliError::Input("--m and --l must be at least 1".into()));
    }
    if !(opts.tol > 0.0) || opts.levels == 0 || opts.n_max < 2 {
        return Err(CliError::Input(
            "--tol must be positive, --levels >= 1, --nmax >= 2".into(),
        ));
    }
    if opts.jobs == Some(0) {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    let report = random_study(opts);

    let json_path = out.join("study.json");
    let csv_path = out.join("study.csv");
    let gp_path = out.join("study.gp");
    let json = serde_json::to_string_pretty(&report).expect("serialisable");
    fs::write(&json_path, json + "\n").map_err(io_err(&json_path))?;
    let mut csv_buf = Vec::new();
    report
        .write_csv(&mut csv_buf)
        .map_err(|e| CliError::Input(format!("csv: {e}")))?;
    fs::write(&csv_path, csv_buf).map_err(io_err(&csv_path))?;
    fs::write(&gp_path, gnuplot_script("study.csv", report.count)).map_err(io_err(&gp_path))?;

    let converged = report.entries.iter().filter(|e| e.converged).count();
    let w = |e: std::io::Error| CliError::Input(format!("cannot write output: {e}"));
    writeln!(stdout, "converged {converged}/{} potentials", report.count).map_err(w)?;
    for e in report.non_converged() {
        writeln!(
            stdout,
            "not converged: id {} seed {} map {} u0 {} N_final {} eps {:?}{}{}",
            e.potential_id,
            e.seed,
            e.map.kind,
            e.map.u[0],
            e.n_final,
            e.final_eps,
            e.map
                .fallback_reason
                .as_ref()
                .map(|r| format!(" fallback: {r}"))
                .unwrap_or_default(),
            e.error.as_ref().map(|r| format!(" error: {r}")).unwrap_or_default(),
        )
        .map_err(w)?;
    }
    writeln!(
        stdout,
        "wrote {}, {}, {}",
        json_path.display(),
        csv_path.display(),
        gp_path.display()
    )
    .map_err(w)?;
    Ok(EXIT_OK)
}

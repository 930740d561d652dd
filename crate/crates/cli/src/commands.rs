use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use glp_core::blp::blp_posterior_path;
use glp_core::glp::{
    fully_conditioned_marginal_density, glp_transition_density, marginal_transition_density, r_process_laws,
    sample_glp_markov, sample_terminal, terminal_transition_law, transition_mass, GlpPath, MassQuery, PathGrid,
    Sampler,
};
use glp_core::io::{write_jumps_csv, write_paths_csv, write_posterior_csv};
use glp_core::plp::{sample_plp_jumps, PlpSpec};
use glp_core::verify::checks::{par_draws, sample_paths};
use glp_core::verify::{run_suite, Thresholds, VerificationReport};
use glp_core::{DensityFamily, GlpError};

use crate::config::LoadedConfig;
use crate::error::CliError;

/// Overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
    pub sampler: Option<Sampler>,
}

struct Run {
    seed: u64,
    paths: usize,
    out: Option<PathBuf>,
    sampler: Sampler,
}

fn resolve(cfg: &LoadedConfig, o: &Overrides) -> Result<Run, CliError> {
    let run = &cfg.config.run;
    let sampler = o.sampler.unwrap_or(run.sampler);
    cfg.check_sampler(sampler)?;
    let paths = o.paths.unwrap_or(run.paths);
    if paths == 0 {
        return Err(CliError::Usage("the path count must be positive".into()));
    }
    Ok(Run {
        seed: o.seed.unwrap_or(run.seed),
        paths,
        out: o.out.clone().or_else(|| run.out.clone()),
        sampler,
    })
}

fn with_output<F>(out: Option<&Path>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> glp_core::Result<()>,
{
    let io_err = |path: &Path, source| CliError::Write {
        path: path.display().to_string(),
        source,
    };
    match out.filter(|p| p.as_os_str() != "-") {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| io_err(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            Ok(())
        }
    }
}

/// Samples paths. The Markov sampler stops before 1 by construction; a grid
/// ending at 1 gets its last value from the conditional law of `ξ_1`.
pub fn sample(cfg: &LoadedConfig, o: &Overrides) -> Result<Vec<GlpPath>, CliError> {
    let run = resolve(cfg, o)?;
    let (spec, grid) = (&cfg.spec, &cfg.grid);
    let times = grid.times();
    if run.sampler == Sampler::Markov && times[times.len() - 1] == 1.0 && times.len() > 1 {
        let head = PathGrid::new(times[..times.len() - 1].to_vec())?;
        let s = head.times()[head.len() - 1];
        return Ok(par_draws(run.paths, run.seed, "cli-sample", |rng| {
            let p = sample_glp_markov(spec, &head, rng)?;
            let last = sample_terminal(spec, s, p.at(head.len() - 1), rng)?;
            let mut rows = p.rows().to_vec();
            rows.push(last);
            GlpPath::new(grid.clone(), rows)
        })?);
    }
    Ok(sample_paths(spec, grid, run.sampler, run.paths, run.seed, "cli-sample")?)
}

pub fn cmd_sample(cfg: &LoadedConfig, o: &Overrides) -> Result<(), CliError> {
    let paths = sample(cfg, o)?;
    let out = resolve(cfg, o)?.out;
    with_output(out.as_deref(), |w| write_paths_csv(w, &paths))
}

/// Which density `cmd_density` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DensityKind {
    /// Joint transition density of the whole vector.
    Joint,
    /// One coordinate in its own filtration.
    Marginal,
    /// One coordinate given the whole vector.
    Conditioned,
    /// The sum process.
    Sum,
    /// `ξ_1` given `ξ_s`.
    Terminal,
}

#[derive(Debug, Clone)]
pub struct DensityQuery {
    pub kind: DensityKind,
    pub s: f64,
    pub t: Option<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Coordinate numbered from 1.
    pub coord: Option<usize>,
    /// Print the total mass of the law instead of point values.
    pub mass: bool,
}

/// Twelve significant digits.
pub fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn density_values(cfg: &LoadedConfig, q: &DensityQuery) -> Result<Vec<f64>, CliError> {
    let spec = &cfg.spec;
    let n = spec.n();
    if q.x.len() != n {
        return Err(CliError::Usage(format!("--x needs {n} values, got {}", q.x.len())));
    }
    let need_t = || {
        q.t
            .ok_or_else(|| CliError::Usage(format!("--t is required for the {:?} density", q.kind)))
    };
    let coord = || match q.coord {
        Some(c) if (1..=n).contains(&c) => Ok(c - 1),
        Some(c) => Err(CliError::Usage(format!("--coord must be between 1 and {n}, got {c}"))),
        None => Err(CliError::Usage("--coord is required for coordinate densities".into())),
    };
    if q.mass {
        let query = match q.kind {
            DensityKind::Joint => MassQuery::Joint,
            DensityKind::Marginal => MassQuery::Marginal(coord()?),
            DensityKind::Conditioned => MassQuery::FullyConditioned(coord()?),
            DensityKind::Sum => MassQuery::Sum,
            DensityKind::Terminal => MassQuery::Terminal,
        };
        let t = if q.kind == DensityKind::Terminal { 1.0 } else { need_t()? };
        return Ok(vec![transition_mass(spec, query, q.s, &q.x, t)?]);
    }
    if q.y.is_empty() {
        return Err(CliError::Usage("--y is required".into()));
    }
    let vector = |what: &str| {
        if q.y.len() == n {
            Ok(())
        } else {
            Err(CliError::Usage(format!("the {what} density needs --y with {n} values")))
        }
    };
    let values: Result<Vec<f64>, GlpError> = match q.kind {
        DensityKind::Joint => {
            vector("joint")?;
            glp_transition_density(spec, q.s, &q.x, need_t()?, &q.y).map(|v| vec![v])
        }
        DensityKind::Terminal => {
            vector("terminal")?;
            terminal_transition_law(spec, q.s, &q.x).and_then(|l| l.density(&q.y)).map(|v| vec![v])
        }
        DensityKind::Marginal => {
            let (i, t) = (coord()?, need_t()?);
            q.y.iter().map(|&y| marginal_transition_density(spec, i, q.s, q.x[i], t, y)).collect()
        }
        DensityKind::Conditioned => {
            let (i, t) = (coord()?, need_t()?);
            q.y.iter().map(|&y| fully_conditioned_marginal_density(spec, i, q.s, &q.x, t, y)).collect()
        }
        DensityKind::Sum => {
            let t = need_t()?;
            let laws = r_process_laws(spec, q.s, &q.x)?;
            q.y.iter().map(|&y| laws.transition_density(t, y)).collect()
        }
    };
    Ok(values?)
}

pub fn cmd_density(cfg: &LoadedConfig, q: &DensityQuery) -> Result<(), CliError> {
    for v in density_values(cfg, q)? {
        println!("{}", sig12(v));
    }
    Ok(())
}

pub const DEFAULT_REPORT: &str = "report.jsonl";

/// Runs a suite, writes the JSON-lines report and returns whether every
/// check passed.
pub fn cmd_verify(cfg: &LoadedConfig, suite: &str, o: &Overrides) -> Result<bool, CliError> {
    let run = resolve(cfg, o)?;
    let reports = run_suite(&cfg.spec, suite, run.paths, run.seed, Thresholds::default())?;
    let path = o
        .out
        .clone()
        .or_else(|| cfg.config.run.report.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_REPORT));
    write_report(&path, &reports)?;
    print!("{}", VerificationReport::table(&reports));
    Ok(reports.iter().all(|r| r.pass))
}

fn write_report(path: &Path, reports: &[VerificationReport]) -> Result<(), CliError> {
    let err = |source| CliError::Write {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    for r in reports {
        writeln!(w, "{}", r.to_json_line()).map_err(err)?;
    }
    w.flush().map_err(err)
}

/// Jump times of the counting version of the spec. Only `--out` names the
/// destination: the config's `out` is for paths.
pub fn cmd_jumps(cfg: &LoadedConfig, o: &Overrides) -> Result<(), CliError> {
    if *cfg.spec.family() != DensityFamily::Poisson {
        return Err(CliError::Usage("jump times need the Poisson family".into()));
    }
    let run = resolve(cfg, o)?;
    let plp = PlpSpec::from_glp(cfg.spec.clone())?;
    let jumps = par_draws(run.paths, run.seed, "cli-jumps", |rng| sample_plp_jumps(&plp, rng))?;
    with_output(o.out.as_deref(), |w| write_jumps_csv(w, &jumps))
}

/// Filter weights along one sampled path, written to `--out` or stdout.
pub fn cmd_filter(cfg: &LoadedConfig, o: &Overrides) -> Result<(), CliError> {
    let one = Overrides {
        paths: Some(1),
        ..o.clone()
    };
    let path = sample(cfg, &one)?.remove(0);
    let states = blp_posterior_path(&cfg.spec, &path)?;
    with_output(o.out.as_deref(), |w| write_posterior_csv(w, &states))
}

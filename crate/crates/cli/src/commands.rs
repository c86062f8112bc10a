//! The `bounds`, `simulate` and `fit` subcommands.

use std::path::{Path, PathBuf};

use qnet_core::estimate::{find_m_opt, fit_gamma, run_experiment, FitResult, MOptResult, BOUNDARY_MARGIN};
use qnet_core::fisher::{
    fock_optimal_bound, gain, invert_qfim, me_optimal_bound, ms_optimal_bound, qcrb, qfim, shot_noise,
    sum_of_variances_bound,
};
use qnet_core::{Error, NetworkConfig, Scheme};
use serde::Serialize;

use crate::config::{RunConfig, Series, Task};
use crate::output::{num, write_json, Envelope, Table};

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Io(_) => 1,
            CmdError::Usage(_) => 2,
            CmdError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Usage(m) | CmdError::Numerical(m) | CmdError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::Unnormalized { .. }
            | Error::WrongScheme { .. }
            | Error::Infeasible { .. }
            | Error::CutoffTooSmall { .. } => CmdError::Usage(e.to_string()),
            _ => CmdError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e.to_string())
    }
}

macro_rules! rows {
    ($m:expr) => {{
        let m = &$m;
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<f64>>())
            .collect::<Vec<_>>()
    }};
}

/// Seed for run `k` of series `s`.
fn run_seed(base: u64, s: usize, k: usize) -> u64 {
    base.wrapping_add(1000 * s as u64 + k as u64)
}

fn progress(config: &RunConfig, msg: std::fmt::Arguments) {
    eprintln!("[{}] {msg}", config.name);
}

/// `(n_t, m)` pairs at which a series is evaluated.
fn operating_points(task: &Task) -> Vec<(Option<f64>, u64)> {
    match task {
        Task::Curve { m, .. } => m.iter().map(|&m| (None, m)).collect(),
        Task::Sweep { m, .. } => vec![(None, *m)],
        Task::FixedTotal { m_opt, n_t } => n_t.iter().map(|&n| (Some(n), *m_opt)).collect(),
        Task::MOpt { total_n, m } => m.iter().map(|&m| (Some(total_n / m as f64), m)).collect(),
    }
}

#[derive(Serialize)]
struct BoundsEntry {
    series: String,
    scheme: Scheme,
    v: Vec<f64>,
    m: u64,
    alphas: Vec<f64>,
    splitting: Option<Vec<f64>>,
    mean_nc: f64,
    mean_n: f64,
    mean_total: f64,
    gain: f64,
    kappa: f64,
    qfim: Vec<Vec<f64>>,
    qfim_inverse: Option<Vec<Vec<f64>>>,
    qcrb: f64,
    shot_noise: f64,
    fock_optimal: f64,
    me_optimal: f64,
    ms_optimal: f64,
    sum_of_variances: f64,
}

fn bounds_entry(config: &RunConfig, s: &Series, net: &NetworkConfig, m: u64) -> Result<BoundsEntry, CmdError> {
    let v = config.series_v(s);
    let q = qfim(net)?;
    let nt = net.mean_total();
    Ok(BoundsEntry {
        series: s.label.clone(),
        scheme: net.scheme(),
        v: v.to_vec(),
        m,
        alphas: net.alphas().to_vec(),
        splitting: net.splitting().map(<[f64]>::to_vec),
        mean_nc: net.mean_nc(),
        mean_n: net.mean_n(),
        mean_total: nt,
        gain: gain(v)?,
        kappa: q.kappa,
        qfim: rows!(q.matrix),
        qfim_inverse: invert_qfim(&q).ok().map(|inv| rows!(inv)),
        qcrb: qcrb(&q, v, m)?,
        shot_noise: shot_noise(v, nt, m),
        fock_optimal: fock_optimal_bound(v, nt, m),
        me_optimal: me_optimal_bound(v, nt, m),
        ms_optimal: ms_optimal_bound(v, nt, m),
        sum_of_variances: sum_of_variances_bound(&q, m)?,
    })
}

fn print_bounds(e: &BoundsEntry) {
    println!(
        "{} ({}) m={} nT={:.6} v={:?}: qcrb {:.4e}  shot-noise {:.4e}  fock-optimal {:.4e}  ME-optimal {:.4e}  MS-optimal {:.4e}  sum-var {:.4e}  gain {:.6}",
        e.series,
        e.scheme,
        e.m,
        e.mean_total,
        e.v,
        e.qcrb,
        e.shot_noise,
        e.fock_optimal,
        e.me_optimal,
        e.ms_optimal,
        e.sum_of_variances,
        e.gain
    );
}

fn print_network(e: &BoundsEntry) {
    println!(
        "{} ({}) nT={:.6}: alphas {:?}  splitting {:?}  nc {:.6}  n {:.6}  kappa {:.6}",
        e.series, e.scheme, e.mean_total, e.alphas, e.splitting, e.mean_nc, e.mean_n, e.kappa
    );
    println!("  qfim         {:?}", e.qfim);
    match &e.qfim_inverse {
        Some(inv) => println!("  qfim inverse {inv:?}"),
        None => println!("  qfim inverse: singular"),
    }
}

pub fn bounds(config: &RunConfig, out: &Path) -> Result<PathBuf, CmdError> {
    let mut entries = Vec::new();
    for s in &config.series {
        let mut last_nt = None;
        for (n_t, m) in operating_points(&config.task) {
            let net = config.network(s, n_t)?;
            let entry = bounds_entry(config, s, &net, m)?;
            if last_nt != Some(n_t) {
                print_network(&entry);
                last_nt = Some(n_t);
            }
            print_bounds(&entry);
            entries.push(entry);
        }
    }
    #[derive(Serialize)]
    struct Payload {
        bounds: Vec<BoundsEntry>,
    }
    let path = out.join(format!("{}_bounds.json", config.name));
    write_json(
        &path,
        &Envelope {
            version: crate::output::VERSION,
            command: "bounds",
            config,
            payload: Payload { bounds: entries },
        },
    )?;
    Ok(path)
}

#[derive(Serialize)]
struct RunSummary {
    series: String,
    scheme: Scheme,
    m: u64,
    n_t: f64,
    seed: u64,
    theta_true: Vec<f64>,
    msf: f64,
    msf_std_error: f64,
    bias: f64,
    qcrb: f64,
    ratio: f64,
    sum_of_variances: f64,
    nonconverged: usize,
    floored: usize,
}

#[derive(Serialize)]
struct FitSummary {
    series: String,
    #[serde(flatten)]
    fit: FitResult,
}

#[derive(Serialize)]
struct MOptSummary {
    series: String,
    #[serde(flatten)]
    result: MOptResult,
}

#[derive(Serialize, Default)]
struct SimulatePayload {
    files: Vec<String>,
    runs: Vec<RunSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    fits: Vec<FitSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    m_opt: Vec<MOptSummary>,
    max_nonconverged_fraction: f64,
}

struct Runner<'a> {
    config: &'a RunConfig,
    payload: SimulatePayload,
}

impl Runner<'_> {
    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        s: &Series,
        net: &NetworkConfig,
        theta: &[f64],
        m: u64,
        seed: u64,
    ) -> Result<(qnet_core::estimate::EstimationResult, &RunSummary), CmdError> {
        let c = self.config;
        let v = c.series_v(s);
        let bound = qcrb(&qfim(net)?, v, m)?;
        let r = run_experiment(net, theta, v, m, c.trials, seed, &c.mle)?;
        let frac = r.nonconverged as f64 / r.trials as f64;
        self.payload.max_nonconverged_fraction = self.payload.max_nonconverged_fraction.max(frac);
        progress(
            c,
            format_args!(
                "{} m={m} nT={} theta={:?}: msf {:.4e} qcrb {:.4e} ratio {:.3}",
                s.label,
                net.mean_total(),
                theta,
                r.msf,
                bound,
                r.msf / bound
            ),
        );
        self.payload.runs.push(RunSummary {
            series: s.label.clone(),
            scheme: net.scheme(),
            m,
            n_t: net.mean_total(),
            seed,
            theta_true: theta.to_vec(),
            msf: r.msf,
            msf_std_error: r.msf_std_error(v),
            bias: r.bias,
            qcrb: bound,
            ratio: r.msf / bound,
            sum_of_variances: r.sum_of_variances(),
            nonconverged: r.nonconverged,
            floored: r.floored,
        });
        Ok((r, self.payload.runs.last().unwrap()))
    }
}

fn run_row(s: &RunSummary, extra_bound: f64) -> Vec<String> {
    vec![
        s.series.clone(),
        s.scheme.to_string(),
        s.m.to_string(),
        num(s.n_t),
        s.seed.to_string(),
        num(s.msf),
        num(s.msf_std_error),
        num(s.bias),
        num(s.qcrb),
        num(s.ratio),
        num(extra_bound),
        num(s.sum_of_variances),
        s.nonconverged.to_string(),
        s.floored.to_string(),
    ]
}

const RUN_COLUMNS: [&str; 14] = [
    "series",
    "scheme",
    "m",
    "n_t",
    "seed",
    "msf",
    "msf_std_error",
    "bias",
    "qcrb",
    "ratio",
    "shot_noise",
    "sum_of_variances",
    "nonconverged",
    "floored",
];

pub fn simulate(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CmdError> {
    let mut runner = Runner {
        config,
        payload: SimulatePayload::default(),
    };
    let mut files = Vec::new();
    let csv_path = out.join(format!("{}_{}.csv", config.name, config.task.kind()));
    let d = config.d;
    match &config.task {
        Task::Curve { m, write_estimates } => {
            let mut table = Table::new(RUN_COLUMNS);
            let mut est = Table::new(
                ["series", "m", "trial"]
                    .into_iter()
                    .map(String::from)
                    .chain((1..=d).map(|j| format!("theta_{j}"))),
            );
            let theta = config.theta_true();
            for (si, s) in config.series.iter().enumerate() {
                let net = config.network(s, None)?;
                for (k, &m) in m.iter().enumerate() {
                    let (r, summary) = runner.run(s, &net, &theta, m, run_seed(config.seed, si, k))?;
                    let sn = shot_noise(config.series_v(s), net.mean_total(), m);
                    table.push(run_row(summary, sn));
                    if *write_estimates {
                        for (t, e) in r.estimates.iter().enumerate() {
                            let mut row = vec![s.label.clone(), m.to_string(), t.to_string()];
                            row.extend(e.iter().map(|x| num(*x)));
                            est.push(row);
                        }
                    }
                }
            }
            table.write(&csv_path, config)?;
            files.push(csv_path);
            if *write_estimates {
                let p = out.join(format!("{}_estimates.csv", config.name));
                est.write(&p, config)?;
                files.push(p);
            }
        }
        Task::Sweep { m, grid } => {
            let mut table = Table::new(
                ["series", "point"]
                    .into_iter()
                    .map(String::from)
                    .chain((1..=d).map(|j| format!("theta_{j}")))
                    .chain(
                        ["seed", "msf", "msf_std_error", "bias", "qcrb", "normalized", "boundary", "nonconverged"]
                            .map(String::from),
                    ),
            );
            for (si, s) in config.series.iter().enumerate() {
                let net = config.network(s, None)?;
                for (k, theta) in grid.iter().enumerate() {
                    let (_, r) = runner.run(s, &net, theta, *m, run_seed(config.seed, si, k))?;
                    let boundary = theta.iter().any(|t| t.min(std::f64::consts::PI - t) < BOUNDARY_MARGIN);
                    let mut row = vec![s.label.clone(), k.to_string()];
                    row.extend(theta.iter().map(|x| num(*x)));
                    row.extend([
                        r.seed.to_string(),
                        num(r.msf),
                        num(r.msf_std_error),
                        num(r.bias),
                        num(r.qcrb),
                        num(r.ratio),
                        boundary.to_string(),
                        r.nonconverged.to_string(),
                    ]);
                    table.push(row);
                }
            }
            table.write(&csv_path, config)?;
            files.push(csv_path);
        }
        Task::FixedTotal { m_opt, n_t } => {
            let mut table = Table::new(
                ["series", "scheme", "N_T", "n_t", "m", "seed", "msf", "msf_std_error", "qcrb", "nonconverged"]
                    .map(String::from),
            );
            let theta = config.theta_true();
            for (si, s) in config.series.iter().enumerate() {
                let mut points = Vec::with_capacity(n_t.len());
                let mut scheme = s.scheme;
                for (k, &nt) in n_t.iter().enumerate() {
                    let net = config.network(s, Some(nt))?;
                    scheme = net.scheme();
                    let (_, r) = runner.run(s, &net, &theta, *m_opt, run_seed(config.seed, si, k))?;
                    let total = nt * *m_opt as f64;
                    points.push((total, r.msf));
                    table.push(vec![
                        s.label.clone(),
                        r.scheme.to_string(),
                        num(total),
                        num(nt),
                        m_opt.to_string(),
                        r.seed.to_string(),
                        num(r.msf),
                        num(r.msf_std_error),
                        num(r.qcrb),
                        r.nonconverged.to_string(),
                    ]);
                }
                let fit = fit_gamma(&points, *m_opt, d, scheme)?;
                progress(config, format_args!("{} fit: gamma {:.4}", s.label, fit.gamma));
                runner.payload.fits.push(FitSummary {
                    series: s.label.clone(),
                    fit,
                });
            }
            table.write(&csv_path, config)?;
            files.push(csv_path);
        }
        Task::MOpt { total_n, m } => {
            let mut table = Table::new(["series", "m", "n_t", "seed", "msf", "qcrb"].map(String::from));
            let theta = config.theta_true();
            for (si, s) in config.series.iter().enumerate() {
                let seed = run_seed(config.seed, si, 0);
                let v = config.series_v(s);
                let result = find_m_opt(|nt| config.network(s, Some(nt)), *total_n, m, &theta, v, config.trials, seed, &config.mle)?;
                progress(config, format_args!("{} m_opt {}", s.label, result.m_opt));
                for (k, p) in result.curve.iter().enumerate() {
                    table.push(vec![
                        s.label.clone(),
                        p.m.to_string(),
                        num(p.n_t),
                        seed.wrapping_add(k as u64).to_string(),
                        num(p.msf),
                        num(p.qcrb),
                    ]);
                }
                runner.payload.m_opt.push(MOptSummary {
                    series: s.label.clone(),
                    result,
                });
            }
            table.write(&csv_path, config)?;
            files.push(csv_path);
        }
    }
    let summary = out.join(format!("{}_summary.json", config.name));
    let mut payload = runner.payload;
    payload.files = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    write_json(
        &summary,
        &Envelope {
            version: crate::output::VERSION,
            command: "simulate",
            config,
            payload: &payload,
        },
    )?;
    files.push(summary);
    if payload.max_nonconverged_fraction > config.nonconvergence_threshold {
        return Err(CmdError::Numerical(format!(
            "{:.1}% of trials in some run did not converge (threshold {:.1}%); outputs kept in {}",
            100.0 * payload.max_nonconverged_fraction,
            100.0 * config.nonconvergence_threshold,
            out.display()
        )));
    }
    Ok(files)
}

#[derive(Clone, Debug, Serialize)]
pub struct FitRequest {
    pub input: PathBuf,
    pub models: Vec<Scheme>,
    pub d: usize,
    pub m_opt: u64,
    pub series: Option<String>,
}

/// `(scheme, N_T, msf)` rows of a fixed-total CSV. A `scheme` column is
/// optional; `series` filters on the `series` column.
fn read_points(path: &Path, series: Option<&str>) -> Result<Vec<(Option<Scheme>, f64, f64)>, CmdError> {
    let bad = |msg: String| CmdError::Usage(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let n_col = col("N_T").ok_or_else(|| bad("missing column N_T".into()))?;
    let msf_col = col("msf").ok_or_else(|| bad("missing column msf".into()))?;
    let scheme_col = col("scheme");
    let series_col = col("series");
    if series.is_some() && series_col.is_none() {
        return Err(bad("--series given but the file has no series column".into()));
    }
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if let (Some(want), Some(c)) = (series, series_col) {
            if record.get(c) != Some(want) {
                continue;
            }
        }
        let field = |c: usize| -> Result<f64, CmdError> {
            record
                .get(c)
                .and_then(|x| x.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("record {}: non-numeric field", line + 1)))
        };
        let scheme = match scheme_col.and_then(|c| record.get(c)) {
            None => None,
            Some("ME") => Some(Scheme::Entangled),
            Some("MS") => Some(Scheme::Separable),
            Some(other) => return Err(bad(format!("record {}: unknown scheme `{other}`", line + 1))),
        };
        points.push((scheme, field(n_col)?, field(msf_col)?));
    }
    if points.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(points)
}

/// Schemes present in the file, in order of appearance.
pub fn schemes_in(path: &Path) -> Result<Vec<Scheme>, CmdError> {
    let mut found = Vec::new();
    for (s, _, _) in read_points(path, None)? {
        match s {
            Some(s) if !found.contains(&s) => found.push(s),
            Some(_) => {}
            None => return Err(CmdError::Usage("no scheme column; pass --model".into())),
        }
    }
    Ok(found)
}

pub fn fit(request: &FitRequest, out: Option<&Path>) -> Result<(Vec<FitResult>, Option<PathBuf>), CmdError> {
    let points = read_points(&request.input, request.series.as_deref())?;
    let mut fits = Vec::new();
    for &model in &request.models {
        let selected: Vec<(f64, f64)> = points
            .iter()
            .filter(|(s, _, _)| s.is_none_or(|s| s == model))
            .map(|&(_, n, y)| (n, y))
            .collect();
        if selected.is_empty() {
            return Err(CmdError::Usage(format!("no rows for model {model}")));
        }
        fits.push(fit_gamma(&selected, request.m_opt, request.d, model)?);
    }
    let path = match out {
        Some(dir) => {
            #[derive(Serialize)]
            struct Payload<'a> {
                fits: &'a [FitResult],
            }
            let path = dir.join("fit.json");
            write_json(
                &path,
                &Envelope {
                    version: crate::output::VERSION,
                    command: "fit",
                    config: request,
                    payload: Payload { fits: &fits },
                },
            )?;
            Some(path)
        }
        None => None,
    };
    Ok((fits, path))
}

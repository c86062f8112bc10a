//! Run configuration schema, presets and network construction.

use std::f64::consts::PI;
use std::path::Path;

use qnet_core::allocate::{me_allocation, ms_allocation_norm, ms_coherent_allocation};
use qnet_core::estimate::MleSettings;
use qnet_core::{Error, NetworkConfig, Scheme, SingleModeState};
use serde::{Deserialize, Serialize};

/// Non-converged trials tolerated before a run counts as a numerical failure.
pub const DEFAULT_NONCONVERGENCE_THRESHOLD: f64 = 0.05;

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2e", include_str!("../presets/fig2e.json")),
    ("fig2f", include_str!("../presets/fig2f.json")),
    ("fig3a", include_str!("../presets/fig3a.json")),
    ("fig3b", include_str!("../presets/fig3b.json")),
    ("fig3c", include_str!("../presets/fig3c.json")),
    ("fig3d", include_str!("../presets/fig3d.json")),
    ("sumvar", include_str!("../presets/sumvar.json")),
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub d: usize,
    /// Figure-of-merit direction, overridable per series.
    pub v: Vec<f64>,
    /// True phases. Defaults to `pi/2` on every sensor.
    #[serde(default)]
    pub theta_true: Option<Vec<f64>>,
    pub trials: usize,
    pub seed: u64,
    pub series: Vec<Series>,
    pub task: Task,
    #[serde(default)]
    pub mle: MleSettings,
    #[serde(default = "default_threshold")]
    pub nonconvergence_threshold: f64,
    /// Output directory used when `--out` is absent.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_threshold() -> f64 {
    DEFAULT_NONCONVERGENCE_THRESHOLD
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub label: String,
    pub scheme: Scheme,
    pub resources: Resources,
    /// Probe state. For MS schemes this is the state fed to each sensor.
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    #[serde(default)]
    pub v: Option<Vec<f64>>,
    /// Direction the resources are optimized for; defaults to the series `v`.
    #[serde(default)]
    pub allocate_for: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Resources {
    /// Coherent amplitudes given directly; `splitting` only for ME.
    Explicit {
        alphas: Vec<f64>,
        #[serde(default)]
        splitting: Option<Vec<f64>>,
    },
    /// Optimal coherent allocation of `n_c` photons around the given probe.
    Allocated { n_c: f64 },
    /// Fock probe with the optimal split of `n_t` photons per shot.
    /// `n_t` may be omitted when the task supplies it.
    OptimalFock {
        #[serde(default)]
        n_t: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    Vacuum,
    Fock { n: usize },
    Coherent { alpha: f64 },
    Squeezed { mean_n: f64 },
    Cat { alpha: f64 },
}

impl ProbeSpec {
    pub fn state(&self) -> Result<SingleModeState, Error> {
        match *self {
            ProbeSpec::Vacuum => Ok(SingleModeState::vacuum()),
            ProbeSpec::Fock { n } => Ok(SingleModeState::fock(n)),
            ProbeSpec::Coherent { alpha } => SingleModeState::coherent(alpha, None),
            ProbeSpec::Squeezed { mean_n } => SingleModeState::squeezed_vacuum_with_mean(mean_n, None),
            ProbeSpec::Cat { alpha } => SingleModeState::cat(alpha, None),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    /// Fluctuation versus shot number.
    Curve {
        m: Vec<u64>,
        #[serde(default)]
        write_estimates: bool,
    },
    /// Fluctuation versus true phase at fixed `m`.
    Sweep { m: u64, grid: Vec<Vec<f64>> },
    /// Fixed total budget `N_T = n_t m_opt`, followed by the gamma fit.
    FixedTotal { m_opt: u64, n_t: Vec<f64> },
    /// Scan of `m` at fixed `N_T = n_t m`.
    MOpt { total_n: f64, m: Vec<u64> },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Curve { .. } => "curve",
            Task::Sweep { .. } => "sweep",
            Task::FixedTotal { .. } => "fixed_total",
            Task::MOpt { .. } => "m_opt",
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Schema(String),
    UnknownPreset(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(msg) => write!(f, "cannot read config: {msg}"),
            ConfigError::Schema(msg) => write!(f, "invalid config: {msg}"),
            ConfigError::UnknownPreset(name) => {
                let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                write!(f, "unknown preset `{name}` (available: {})", known.join(", "))
            }
        }
    }
}

pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    parse(text)
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
    config.validate().map_err(ConfigError::Schema)?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.d == 0 {
            return Err("d must be at least 1".into());
        }
        let check_len = |what: &str, x: &[f64]| {
            if x.len() == self.d {
                Ok(())
            } else {
                Err(format!("{what} has length {}, expected d = {}", x.len(), self.d))
            }
        };
        check_len("v", &self.v)?;
        if let Some(t) = &self.theta_true {
            check_len("theta_true", t)?;
        }
        if self.trials < 2 {
            return Err("trials must be at least 2".into());
        }
        if self.series.is_empty() {
            return Err("at least one series is required".into());
        }
        if !(0.0..=1.0).contains(&self.nonconvergence_threshold) {
            return Err("nonconvergence_threshold must lie in [0, 1]".into());
        }
        for s in &self.series {
            if let Some(v) = &s.v {
                check_len(&format!("series `{}` v", s.label), v)?;
            }
            if let Some(v) = &s.allocate_for {
                check_len(&format!("series `{}` allocate_for", s.label), v)?;
            }
            match &s.resources {
                Resources::Explicit { alphas, splitting } => {
                    check_len(&format!("series `{}` alphas", s.label), alphas)?;
                    if let Some(p) = splitting {
                        check_len(&format!("series `{}` splitting", s.label), p)?;
                    }
                    if s.probe.is_none() {
                        return Err(format!("series `{}` needs a probe", s.label));
                    }
                }
                Resources::Allocated { .. } => {
                    if s.probe.is_none() {
                        return Err(format!("series `{}` needs a probe", s.label));
                    }
                }
                Resources::OptimalFock { n_t } => {
                    if s.probe.is_some() {
                        return Err(format!("series `{}`: optimal_fock fixes the probe itself", s.label));
                    }
                    let needs_nt = !matches!(self.task, Task::FixedTotal { .. } | Task::MOpt { .. });
                    if needs_nt && n_t.is_none() {
                        return Err(format!("series `{}`: optimal_fock needs n_t for this task", s.label));
                    }
                }
            }
        }
        match &self.task {
            Task::Curve { m, .. } if m.is_empty() || m.contains(&0) => Err("curve needs positive m values".into()),
            Task::Sweep { m, grid } => {
                if *m == 0 || grid.is_empty() {
                    return Err("sweep needs m >= 1 and a non-empty grid".into());
                }
                grid.iter().try_for_each(|t| check_len("grid point", t))
            }
            Task::FixedTotal { m_opt, n_t } if *m_opt == 0 || n_t.len() < 3 => {
                Err("fixed_total needs m_opt >= 1 and at least three n_t values".into())
            }
            Task::MOpt { total_n, m } if !(*total_n > 0.0) || m.len() < 2 || m.contains(&0) => {
                Err("m_opt needs total_n > 0 and at least two positive m values".into())
            }
            _ => Ok(()),
        }
    }

    pub fn theta_true(&self) -> Vec<f64> {
        self.theta_true.clone().unwrap_or_else(|| vec![PI / 2.0; self.d])
    }

    pub fn series_v<'a>(&'a self, s: &'a Series) -> &'a [f64] {
        s.v.as_deref().unwrap_or(&self.v)
    }

    /// Network for `s`, with `n_t` supplied by the task where needed.
    pub fn network(&self, s: &Series, n_t: Option<f64>) -> Result<NetworkConfig, Error> {
        let alloc_v = s.allocate_for.as_deref().unwrap_or_else(|| self.series_v(s));
        match (&s.resources, s.scheme) {
            (Resources::Explicit { alphas, splitting }, Scheme::Entangled) => {
                let p = splitting.clone().unwrap_or_else(|| vec![1.0 / self.d as f64; self.d]);
                NetworkConfig::entangled(alphas.clone(), probe_state(s)?, p)
            }
            (Resources::Explicit { alphas, .. }, Scheme::Separable) => {
                NetworkConfig::separable(alphas.clone(), vec![probe_state(s)?; self.d])
            }
            (Resources::Allocated { n_c }, Scheme::Entangled) => {
                me_allocation(alloc_v, *n_c)?.entangled_config(probe_state(s)?)
            }
            (Resources::Allocated { n_c }, Scheme::Separable) => {
                let state = probe_state(s)?;
                let n = state.mean_n() * self.d as f64;
                ms_coherent_allocation(alloc_v, *n_c, n, state.var_p())?.separable_config(vec![state; self.d])
            }
            (Resources::OptimalFock { n_t: own }, scheme) => {
                let n_t = n_t.or(*own).ok_or_else(|| Error::InvalidArgument("n_t missing".into()))?;
                optimal_fock(scheme, alloc_v, n_t)
            }
        }
    }
}

fn probe_state(s: &Series) -> Result<SingleModeState, Error> {
    s.probe
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("series `{}` needs a probe", s.label)))?
        .state()
}

fn fock_count(n: f64) -> Result<usize, Error> {
    let r = n.round();
    if (n - r).abs() > 1e-9 || r < 0.0 {
        return Err(Error::InvalidArgument(format!("optimal Fock probe needs an integer photon number, got {n}")));
    }
    Ok(r as usize)
}

/// Fock probe holding half the per-shot budget; coherent light gets the rest.
fn optimal_fock(scheme: Scheme, v: &[f64], n_t: f64) -> Result<NetworkConfig, Error> {
    match scheme {
        Scheme::Entangled => me_allocation(v, n_t / 2.0)?.entangled_config(SingleModeState::fock(fock_count(n_t / 2.0)?)),
        Scheme::Separable => {
            let plan = ms_allocation_norm(v, n_t)?;
            let probes = plan
                .probe_photons
                .iter()
                .map(|&n| fock_count(n).map(SingleModeState::fock))
                .collect::<Result<Vec<_>, _>>()?;
            plan.separable_config(probes)
        }
    }
}

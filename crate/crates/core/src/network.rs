//! The 2d-mode sensor probe and its photon-counting statistics.
//!
//! Sensor `j` is fed by a coherent state `|alpha_j>` in mode `a_j` and by
//! output `b_j` of the quantum circuit (QC). In the entangled scheme the QC
//! splits one probe state multinomially over the `d` modes with
//! probabilities `P_j`; in the separable scheme every sensor has its own probe.
//!
//! Each MZI conserves its photon number, so the outcome distribution splits
//! into sectors labelled by the per-sensor totals `N_j = n_j + m_j`. Sector
//! weights do not depend on the phases, which is what the cutoff policy
//! exploits.

use std::fmt::Write as _;
use std::io;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::SingleModeState;
use crate::interferometer::{RotationCache, SectorRotation};
use crate::util::{coherent_amplitudes, ln_factorials};

/// Probability mass a table must capture before it may be sampled.
pub const MIN_SAMPLING_MASS: f64 = 1.0 - 1e-3;

/// Mass allowed to be dropped when pruning light sectors.
pub const SECTOR_PRUNE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// One probe state split over all sensors by the QC.
    #[serde(rename = "ME")]
    Entangled,
    /// Independent probe state per sensor.
    #[serde(rename = "MS")]
    Separable,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Entangled => "ME",
            Scheme::Separable => "MS",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Probe {
    Entangled {
        state: SingleModeState,
        splitting: Vec<f64>,
    },
    Separable {
        states: Vec<SingleModeState>,
    },
}

/// Full description of the sensor array.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    alphas: Vec<f64>,
    probe: Probe,
}

impl NetworkConfig {
    pub fn entangled(alphas: Vec<f64>, state: SingleModeState, splitting: Vec<f64>) -> Result<Self> {
        check_alphas(&alphas)?;
        if splitting.len() != alphas.len() {
            return Err(Error::DimensionMismatch {
                expected: alphas.len(),
                found: splitting.len(),
            });
        }
        if splitting.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidArgument("splitting probabilities must be >= 0".into()));
        }
        let total: f64 = splitting.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("splitting probabilities sum to {total}")));
        }
        Ok(Self {
            alphas,
            probe: Probe::Entangled { state, splitting },
        })
    }

    pub fn separable(alphas: Vec<f64>, states: Vec<SingleModeState>) -> Result<Self> {
        check_alphas(&alphas)?;
        if states.len() != alphas.len() {
            return Err(Error::DimensionMismatch {
                expected: alphas.len(),
                found: states.len(),
            });
        }
        Ok(Self {
            alphas,
            probe: Probe::Separable { states },
        })
    }

    /// Number of sensors.
    pub fn d(&self) -> usize {
        self.alphas.len()
    }

    pub fn scheme(&self) -> Scheme {
        match self.probe {
            Probe::Entangled { .. } => Scheme::Entangled,
            Probe::Separable { .. } => Scheme::Separable,
        }
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn probe(&self) -> &Probe {
        &self.probe
    }

    pub fn splitting(&self) -> Option<&[f64]> {
        match &self.probe {
            Probe::Entangled { splitting, .. } => Some(splitting),
            Probe::Separable { .. } => None,
        }
    }

    /// Total coherent photon number `sum_j alpha_j^2`.
    pub fn mean_nc(&self) -> f64 {
        self.alphas.iter().map(|a| a * a).sum()
    }

    /// Total probe photon number.
    pub fn mean_n(&self) -> f64 {
        match &self.probe {
            Probe::Entangled { state, .. } => state.mean_n(),
            Probe::Separable { states } => states.iter().map(|s| s.mean_n()).sum(),
        }
    }

    pub fn mean_total(&self) -> f64 {
        self.mean_nc() + self.mean_n()
    }

    /// Copy with different coherent amplitudes.
    pub fn with_alphas(&self, alphas: Vec<f64>) -> Result<Self> {
        match &self.probe {
            Probe::Entangled { state, splitting } => Self::entangled(alphas, state.clone(), splitting.clone()),
            Probe::Separable { states } => Self::separable(alphas, states.clone()),
        }
    }

    /// Hex SHA-256 of a canonical text rendering of the configuration.
    pub fn fingerprint(&self) -> String {
        let mut text = format!("{};", self.scheme());
        let push = |text: &mut String, xs: &[f64]| {
            for x in xs {
                let _ = write!(text, "{x:.17e},");
            }
            text.push(';');
        };
        push(&mut text, &self.alphas);
        match &self.probe {
            Probe::Entangled { state, splitting } => {
                push(&mut text, splitting);
                push(&mut text, state.coeffs());
            }
            Probe::Separable { states } => {
                for s in states {
                    push(&mut text, s.coeffs());
                }
            }
        }
        Sha256::digest(text.as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut acc, b| {
                let _ = write!(acc, "{b:02x}");
                acc
            })
    }
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("at least one sensor is required".into()));
    }
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coherent amplitude".into()));
    }
    Ok(())
}

/// Photon counts `(n_1, m_1, ..., n_d, m_d)` at the outputs of the MZIs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub counts: Vec<u32>,
}

impl Outcome {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn d(&self) -> usize {
        self.counts.len() / 2
    }

    /// Count in output mode `a_j`.
    pub fn n(&self, j: usize) -> u32 {
        self.counts[2 * j]
    }

    /// Count in output mode `b_j`.
    pub fn m(&self, j: usize) -> u32 {
        self.counts[2 * j + 1]
    }

    /// Photon total through MZI `j`.
    pub fn sector(&self, j: usize) -> u32 {
        self.n(j) + self.m(j)
    }
}

/// Outcome probabilities at a fixed phase vector, sorted lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeTable {
    entries: Vec<(Outcome, f64)>,
    captured_mass: f64,
    theta: Vec<f64>,
}

impl OutcomeTable {
    /// Builds a table from explicit entries. Probabilities must lie in
    /// `[0, 1]` and sum to at most one.
    pub fn from_entries(mut entries: Vec<(Outcome, f64)>, theta: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate outcome".into()));
        }
        let captured_mass: f64 = entries.iter().map(|(_, p)| p).sum();
        if captured_mass > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!("total probability {captured_mass} exceeds one")));
        }
        Ok(Self {
            entries,
            captured_mass,
            theta,
        })
    }

    pub fn entries(&self) -> &[(Outcome, f64)] {
        &self.entries
    }

    pub fn captured_mass(&self) -> f64 {
        self.captured_mass
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Probability of `outcome`, zero if it is not in the table.
    pub fn probability(&self, outcome: &Outcome) -> f64 {
        self.entries
            .binary_search_by(|(o, _)| o.cmp(outcome))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Writes the table as CSV: metadata comment lines, a column header
    /// `n1,m1,...,nd,md,probability`, then one row per outcome.
    pub fn write_csv<W: io::Write>(&self, mut writer: W, config_hash: &str) -> Result<()> {
        let d = self.entries.first().map(|(o, _)| o.d()).unwrap_or(self.theta.len());
        let theta: Vec<String> = self.theta.iter().map(|t| format!("{t:.16e}")).collect();
        let io_err = |e: io::Error| Error::InvalidArgument(format!("write failed: {e}"));
        writeln!(writer, "# theta={}", theta.join(";")).map_err(io_err)?;
        writeln!(writer, "# captured_mass={:.16e}", self.captured_mass).map_err(io_err)?;
        writeln!(writer, "# config_hash={config_hash}").map_err(io_err)?;
        let mut csv = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("write failed: {e}"));
        let mut header: Vec<String> = (1..=d).flat_map(|j| [format!("n{j}"), format!("m{j}")]).collect();
        header.push("probability".into());
        csv.write_record(&header).map_err(csv_err)?;
        for (o, p) in &self.entries {
            let mut row: Vec<String> = o.counts.iter().map(|c| c.to_string()).collect();
            row.push(format!("{p:.16e}"));
            csv.write_record(&row).map_err(csv_err)?;
        }
        csv.flush().map_err(|e| Error::InvalidArgument(format!("write failed: {e}")))?;
        Ok(())
    }

    /// Categorical sampler over the entries, renormalized by the captured mass.
    pub fn sampler(&self) -> Result<TableSampler<'_>> {
        if self.entries.is_empty() {
            return Err(Error::EmptyTable);
        }
        if self.captured_mass < MIN_SAMPLING_MASS {
            return Err(Error::CutoffInsufficient {
                captured_mass: self.captured_mass,
            });
        }
        let index = WeightedIndex::new(self.entries.iter().map(|(_, p)| *p))
            .map_err(|e| Error::InvalidArgument(format!("cannot sample table: {e}")))?;
        Ok(TableSampler { table: self, index })
    }
}

pub struct TableSampler<'a> {
    table: &'a OutcomeTable,
    index: WeightedIndex<f64>,
}

impl TableSampler<'_> {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &Outcome {
        &self.table.entries[self.index.sample(rng)].0
    }

    pub fn draw_many<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Outcome> {
        (0..count).map(|_| self.draw(rng).clone()).collect()
    }
}

/// `count` i.i.d. draws from `table`, reproducible from `seed`.
pub fn sample(table: &OutcomeTable, seed: u64, count: usize) -> Result<Vec<Outcome>> {
    let sampler = table.sampler()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.draw_many(&mut rng, count))
}

/// Generator for trial `stream` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Amplitude of the QC output `|m_1 ... m_d>` when `probe` enters the first
/// QC input and the remaining inputs are empty.
pub fn qc_split_coefficient(probe: &SingleModeState, splitting: &[f64], occupation: &[u32]) -> f64 {
    let total: usize = occupation.iter().map(|&m| m as usize).sum();
    let c = probe.coeff(total);
    if c == 0.0 {
        return 0.0;
    }
    let lnf = ln_factorials(total);
    multinomial_amplitude(c, splitting, occupation, &lnf)
}

fn multinomial_amplitude(c: f64, splitting: &[f64], occupation: &[u32], lnf: &[f64]) -> f64 {
    let total: usize = occupation.iter().map(|&m| m as usize).sum();
    let mut ln_mag = 0.5 * lnf[total];
    for (&m, &p) in occupation.iter().zip(splitting) {
        if m == 0 {
            continue;
        }
        if p == 0.0 {
            return 0.0;
        }
        ln_mag += 0.5 * (m as f64 * p.ln() - lnf[m as usize]);
    }
    c * ln_mag.exp()
}

/// All `d`-part compositions of `total`, in lexicographic order.
fn compositions(total: u32, d: usize) -> Vec<Vec<u32>> {
    fn rec(rest: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=rest).rev() {
            prefix.push(first);
            rec(rest - first, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, d, &mut Vec::with_capacity(d), &mut out);
    out.sort();
    out
}

/// Joint distribution of the QC output counts, one entry per occupation
/// vector with nonzero probability.
pub fn marginal_qc_distribution(config: &NetworkConfig) -> Result<Vec<(Vec<u32>, f64)>> {
    let Probe::Entangled { state, splitting } = config.probe() else {
        return Err(Error::WrongScheme { expected: "ME" });
    };
    let lnf = ln_factorials(state.cutoff());
    let mut out = Vec::new();
    for (m, &c) in state.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for occ in compositions(m as u32, splitting.len()) {
            let a = multinomial_amplitude(c, splitting, &occ, &lnf);
            if a != 0.0 {
                out.push((occ, a * a));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Per-mode photon caps used when building outcome tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Cutoffs {
    /// Largest input photon number kept in each coherent mode.
    pub coherent: Vec<usize>,
    /// Largest photon number kept in each probe-fed mode.
    pub probe: Vec<usize>,
    /// Sector mass that may be dropped after the caps are applied.
    pub prune_tolerance: f64,
}

impl Cutoffs {
    /// Coherent modes capped at `alpha^2 + 10 sqrt(alpha^2 + 1)`, probe-fed
    /// modes at the probe cutoff.
    pub fn auto(config: &NetworkConfig) -> Self {
        let coherent = config
            .alphas
            .iter()
            .map(|a| crate::fock::auto_cutoff(a * a).max(1))
            .collect();
        let probe = match &config.probe {
            Probe::Entangled { state, .. } => vec![state.support_max(); config.d()],
            Probe::Separable { states } => states.iter().map(|s| s.support_max()).collect(),
        };
        Self {
            coherent,
            probe,
            prune_tolerance: SECTOR_PRUNE_TOLERANCE,
        }
    }
}

/// One input basis state of the probe modes with its amplitude.
#[derive(Clone, Debug)]
struct ProbeTerm {
    occupation: Vec<u32>,
    amplitude: f64,
}

/// Phase-independent precomputation for a configuration: coherent amplitudes
/// up to the caps, the probe-mode expansion and the sector weights.
#[derive(Clone, Debug)]
pub struct AmplitudeModel {
    d: usize,
    coherent: Vec<Vec<f64>>,
    probe_terms: Vec<ProbeTerm>,
    /// Retained sectors with their masses, heaviest first.
    sectors: Vec<(Vec<u32>, f64)>,
    available_mass: f64,
}

impl AmplitudeModel {
    pub fn new(config: &NetworkConfig, cutoffs: &Cutoffs) -> Result<Self> {
        let d = config.d();
        if cutoffs.coherent.len() != d || cutoffs.probe.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: cutoffs.coherent.len().min(cutoffs.probe.len()),
            });
        }
        let coherent: Vec<Vec<f64>> = config
            .alphas
            .iter()
            .zip(&cutoffs.coherent)
            .map(|(&a, &cap)| coherent_amplitudes(a, cap))
            .collect();

        let mut probe_terms = Vec::new();
        match &config.probe {
            Probe::Entangled { state, splitting } => {
                let lnf = ln_factorials(state.cutoff());
                for (m, &c) in state.coeffs().iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    for occ in compositions(m as u32, d) {
                        if occ.iter().zip(&cutoffs.probe).any(|(&o, &cap)| o as usize > cap) {
                            continue;
                        }
                        let amplitude = multinomial_amplitude(c, splitting, &occ, &lnf);
                        if amplitude != 0.0 {
                            probe_terms.push(ProbeTerm { occupation: occ, amplitude });
                        }
                    }
                }
            }
            Probe::Separable { states } => {
                probe_terms.push(ProbeTerm {
                    occupation: Vec::with_capacity(d),
                    amplitude: 1.0,
                });
                for (state, &cap) in states.iter().zip(&cutoffs.probe) {
                    let mut next = Vec::new();
                    for term in &probe_terms {
                        for (m, &c) in state.coeffs().iter().enumerate().take(cap + 1) {
                            if c == 0.0 {
                                continue;
                            }
                            let mut occupation = term.occupation.clone();
                            occupation.push(m as u32);
                            next.push(ProbeTerm {
                                occupation,
                                amplitude: term.amplitude * c,
                            });
                        }
                    }
                    probe_terms = next;
                }
            }
        }

        let mut model = Self {
            d,
            coherent,
            probe_terms,
            sectors: Vec::new(),
            available_mass: 0.0,
        };
        model.select_sectors(cutoffs.prune_tolerance);
        Ok(model)
    }

    pub fn with_auto_cutoffs(config: &NetworkConfig) -> Result<Self> {
        Self::new(config, &Cutoffs::auto(config))
    }

    fn select_sectors(&mut self, prune_tolerance: f64) {
        let dims: Vec<usize> = (0..self.d)
            .map(|j| {
                let probe_max = self.probe_terms.iter().map(|t| t.occupation[j] as usize).max().unwrap_or(0);
                self.coherent[j].len() + probe_max
            })
            .collect();
        let mut mass = vec![0.0; dims.iter().product()];
        let mut n_in = vec![0usize; self.d];
        for term in &self.probe_terms {
            // every coherent input combination within the caps
            n_in.iter_mut().for_each(|x| *x = 0);
            'outer: loop {
                let mut weight = term.amplitude * term.amplitude;
                let mut flat = 0;
                for j in 0..self.d {
                    let c = self.coherent[j][n_in[j]];
                    weight *= c * c;
                    flat = flat * dims[j] + n_in[j] + term.occupation[j] as usize;
                }
                mass[flat] += weight;
                for j in (0..self.d).rev() {
                    n_in[j] += 1;
                    if n_in[j] < self.coherent[j].len() {
                        continue 'outer;
                    }
                    n_in[j] = 0;
                }
                break;
            }
        }
        let mut sectors: Vec<(Vec<u32>, f64)> = mass
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(flat, &w)| {
                let mut idx = vec![0u32; self.d];
                let mut rest = flat;
                for j in (0..self.d).rev() {
                    idx[j] = (rest % dims[j]) as u32;
                    rest /= dims[j];
                }
                (idx, w)
            })
            .collect();
        sectors.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let available: f64 = sectors.iter().map(|s| s.1).sum();
        let mut kept = 0.0;
        let mut keep = 0;
        for (_, w) in &sectors {
            if kept >= available - prune_tolerance {
                break;
            }
            kept += w;
            keep += 1;
        }
        sectors.truncate(keep);
        sectors.sort_by(|a, b| a.0.cmp(&b.0));
        self.sectors = sectors;
        self.available_mass = available;
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Retained sectors `(N_1..N_d)` with their phase-independent masses.
    pub fn sectors(&self) -> &[(Vec<u32>, f64)] {
        &self.sectors
    }

    /// Input mass within the caps, before pruning.
    pub fn available_mass(&self) -> f64 {
        self.available_mass
    }

    pub fn retained_mass(&self) -> f64 {
        self.sectors.iter().map(|s| s.1).sum()
    }

    /// Input terms feeding sector `totals`: amplitude and mode-`a` input
    /// counts.
    fn sector_inputs(&self, totals: &[u32]) -> Vec<(f64, Vec<usize>)> {
        self.probe_terms
            .iter()
            .filter_map(|t| {
                let mut amp = t.amplitude;
                let mut n_in = Vec::with_capacity(self.d);
                for j in 0..self.d {
                    let m = t.occupation[j];
                    if m > totals[j] {
                        return None;
                    }
                    let n = (totals[j] - m) as usize;
                    let c = *self.coherent[j].get(n)?;
                    amp *= c;
                    n_in.push(n);
                }
                (amp != 0.0).then_some((amp, n_in))
            })
            .collect()
    }

    /// Precomputed expansion of `<mu|Psi_theta>` for one outcome.
    pub fn outcome_terms(&self, outcome: &Outcome) -> OutcomeTerms {
        let totals: Vec<u32> = (0..self.d).map(|j| outcome.sector(j)).collect();
        let n_out = (0..self.d).map(|j| outcome.n(j) as usize).collect();
        let inputs = self.sector_inputs(&totals);
        OutcomeTerms {
            totals: totals.iter().map(|&t| t as usize).collect(),
            n_out,
            inputs,
        }
    }

    /// Exact outcome probabilities at `theta` over the retained sectors.
    pub fn table(&self, theta: &[f64], cache: &mut RotationCache) -> Result<OutcomeTable> {
        if theta.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: theta.len(),
            });
        }
        let mut entries = Vec::new();
        for (totals, _) in &self.sectors {
            let rotations: Vec<_> = totals
                .iter()
                .zip(theta)
                .map(|(&n, &t)| cache.get(n as usize, t).matrix_a())
                .collect();
            let dims: Vec<usize> = totals.iter().map(|&n| n as usize + 1).collect();
            let size: usize = dims.iter().product();
            let mut amps = vec![0.0; size];
            let mut partial = vec![0.0; size];
            for (w, n_in) in self.sector_inputs(totals) {
                // outer product of the input columns, mode by mode
                partial[0] = w;
                let mut len = 1;
                for j in 0..self.d {
                    let col = rotations[j].column(n_in[j]);
                    for idx in (0..len).rev() {
                        let base = partial[idx];
                        for (k, c) in col.iter().enumerate() {
                            partial[idx * dims[j] + k] = base * c;
                        }
                    }
                    len *= dims[j];
                }
                amps.iter_mut().zip(&partial).for_each(|(a, p)| *a += p);
            }
            let mut n_out = vec![0u32; self.d];
            for (flat, a) in amps.iter().enumerate() {
                let p = a * a;
                if p == 0.0 {
                    continue;
                }
                let mut rest = flat;
                for j in (0..self.d).rev() {
                    n_out[j] = (rest % dims[j]) as u32;
                    rest /= dims[j];
                }
                let counts = n_out
                    .iter()
                    .zip(totals)
                    .flat_map(|(&n, &t)| [n, t - n])
                    .collect();
                entries.push((Outcome { counts }, p.min(1.0)));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let captured_mass = entries.iter().map(|(_, p)| p).sum();
        Ok(OutcomeTable {
            entries,
            captured_mass,
            theta: theta.to_vec(),
        })
    }
}

/// Expansion `<mu|Psi_theta> = sum_inputs w prod_j D_j[n_j, n'_j](theta_j)`.
#[derive(Clone, Debug)]
pub struct OutcomeTerms {
    totals: Vec<usize>,
    n_out: Vec<usize>,
    inputs: Vec<(f64, Vec<usize>)>,
}

impl OutcomeTerms {
    pub fn totals(&self) -> &[usize] {
        &self.totals
    }

    /// Output counts in the `a` modes.
    pub fn n_out(&self) -> &[usize] {
        &self.n_out
    }

    /// Input terms: weight and `a`-mode input counts.
    pub fn inputs(&self) -> &[(f64, Vec<usize>)] {
        &self.inputs
    }

    /// Amplitude given one rotation per sensor, each for this outcome's sector.
    pub fn amplitude<R: std::ops::Deref<Target = SectorRotation>>(&self, rotations: &[R]) -> f64 {
        self.inputs
            .iter()
            .map(|(w, n_in)| {
                let mut acc = *w;
                for (j, r) in rotations.iter().enumerate() {
                    acc *= r.element(self.n_out[j], n_in[j]);
                }
                acc
            })
            .sum()
    }
}

/// Outcome probabilities at `theta`.
///
/// Fails with [`Error::CutoffInsufficient`] when the caps keep less than
/// `1 - 1e-3` of the probability mass.
pub fn probability_table(config: &NetworkConfig, theta: &[f64], cutoffs: &Cutoffs) -> Result<OutcomeTable> {
    let model = AmplitudeModel::new(config, cutoffs)?;
    let table = model.table(theta, &mut RotationCache::new())?;
    if table.captured_mass < MIN_SAMPLING_MASS {
        return Err(Error::CutoffInsufficient {
            captured_mass: table.captured_mass,
        });
    }
    Ok(table)
}

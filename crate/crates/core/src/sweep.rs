//! Single-point pipeline and parallel `(beta, h)` sweeps over the triangle.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{probe_expectation_on, run_circuit, ProbeReadout, ShotSampler};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Topology};
use crate::noise::{
    depolarize, estimate_eta, observable_decay, projection_overlap, recover, t1_envelope,
    AnisotropySplit, DecayProfile, DensityMatrix, EtaMode,
};
use crate::output::{Format, PlotKind};
use crate::reconstruct::{
    assemble_density, diagonal_fidelity, entropy, fidelity, observables_summary, DiagonalObservable,
    EntropyPolicy, MeasurementSet, Provenance,
};
use crate::synth::build_triangle_circuit;

/// Calibration point for `--recover auto`: low temperature, strong field.
pub const CALIBRATION_BETA: f64 = 11.0;
pub const CALIBRATION_FIELD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseConfig {
    #[default]
    Off,
    /// Uniform depolarizing channel on the register.
    Depolarizing { eta: f64 },
    /// Per-observable `e^{-tau/T2}` readout decay.
    Decay { profile: DecayProfile },
    /// Decay profile still to be loaded from disk.
    DecayFile { path: PathBuf },
}

impl NoiseConfig {
    pub fn is_off(&self) -> bool {
        matches!(self, NoiseConfig::Off)
    }

    /// Loads a [`NoiseConfig::DecayFile`] and validates parameters.
    pub fn resolve(&self) -> Result<NoiseConfig> {
        match self {
            NoiseConfig::DecayFile { path } => Ok(NoiseConfig::Decay {
                profile: DecayProfile::load(path)?,
            }),
            NoiseConfig::Depolarizing { eta } if !(0.0..=1.0).contains(eta) => {
                Err(Error::Domain(format!("eta = {eta} outside [0, 1]")))
            }
            other => Ok(other.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RecoverMode {
    #[default]
    Off,
    Fixed(f64),
    /// `sqrt(purity)` of the noisy state at the calibration point.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointOptions {
    pub noise: NoiseConfig,
    pub recover: RecoverMode,
    /// Finite-shot sampling of the probe readouts.
    pub shots: Option<u64>,
    pub seed: u64,
}

/// One provenance variant of a grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowVariant {
    pub provenance: Provenance,
    #[serde(rename = "M")]
    pub magnetization: f64,
    #[serde(rename = "C2")]
    pub pair_correlation: f64,
    #[serde(rename = "C3")]
    pub triple_correlation: f64,
    #[serde(rename = "S")]
    pub entropy: f64,
    /// `ln Z` recovered from the data as `S - beta <E>`.
    #[serde(rename = "logZ")]
    pub log_partition: f64,
    /// The seven diagonal expectations, canonical order.
    pub observables: [f64; 7],
    pub populations: [f64; 8],
    pub negative_populations: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub h: f64,
    #[serde(rename = "J")]
    pub coupling: f64,
    /// Recovery factor used, when recovery ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub variants: Vec<RowVariant>,
}

impl SweepRow {
    pub fn variant(&self, p: Provenance) -> Option<&RowVariant> {
        self.variants.iter().find(|v| v.provenance == p)
    }

    pub fn ideal(&self) -> &RowVariant {
        self.variant(Provenance::Ideal).expect("every row has an ideal variant")
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// RNG stream tied to the grid coordinates, so results do not depend on
/// scheduling.
fn point_stream(params: &ModelParams) -> u64 {
    splitmix(params.beta.to_bits() ^ splitmix(params.field.to_bits() ^ splitmix(params.coupling.to_bits())))
}

fn require_triangle(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.topology != Topology::Triangle {
        return Err(Error::UnsupportedTopology(
            "sweeps and the seven-observable pipeline run on the triangle".into(),
        ));
    }
    Ok(())
}

/// Probe readouts of all seven diagonal observables.
pub fn measure_all(params: &ModelParams) -> Result<Vec<ProbeReadout>> {
    let base = build_triangle_circuit(params, true)?;
    DiagonalObservable::ALL
        .iter()
        .map(|o| {
            let mut c = base.clone();
            probe_expectation_on(&mut c, &o.pauli()).map_err(|e| e.context(format!("probe {o}")))
        })
        .collect()
}

/// Readouts after the configured noise channel (no sampling).
fn apply_noise(params: &ModelParams, ideal: &[ProbeReadout], noise: &NoiseConfig) -> Result<Option<Vec<ProbeReadout>>> {
    match noise {
        NoiseConfig::Off => Ok(None),
        NoiseConfig::Depolarizing { eta } => {
            let psi = run_circuit(&build_triangle_circuit(params, false)?)?;
            let rho = depolarize(&DensityMatrix::from_pure(&psi), *eta)?;
            DiagonalObservable::ALL
                .iter()
                .map(|o| Ok(ProbeReadout::new(o.label(), rho.expectation(&o.pauli())?)))
                .collect::<Result<Vec<_>>>()
                .map(Some)
        }
        NoiseConfig::Decay { profile } => ideal
            .iter()
            .map(|r| {
                let d = profile.get(&r.label)?;
                let decayed = observable_decay(r, &d);
                Ok(match profile.t1 {
                    Some(t1) => t1_envelope(&decayed, d.duration, t1),
                    None => decayed,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
        NoiseConfig::DecayFile { .. } => apply_noise(params, ideal, &noise.resolve()?),
    }
}

/// Recovery factor from the calibration point, or the fixed value.
pub fn resolve_lambda(coupling: f64, options: &PointOptions) -> Result<Option<f64>> {
    match options.recover {
        RecoverMode::Off => Ok(None),
        RecoverMode::Fixed(l) => {
            crate::noise::check_recovery_factor(l)?;
            Ok(Some(l))
        }
        RecoverMode::Auto => {
            let cal = ModelParams::triangle(coupling, CALIBRATION_FIELD, CALIBRATION_BETA);
            let ideal = measure_all(&cal)?;
            let noisy = apply_noise(&cal, &ideal, &options.noise)?.unwrap_or(ideal);
            let d = assemble_density(&MeasurementSet::from_readouts(&noisy, Provenance::Noisy)?)?;
            let eta = estimate_eta(&d.to_density_matrix()?, EtaMode::Approx).eta;
            crate::noise::check_recovery_factor(eta)
                .map_err(|e| e.context("auto recovery factor"))?;
            Ok(Some(eta))
        }
    }
}

fn variant(params: &ModelParams, set: &MeasurementSet) -> Result<RowVariant> {
    let summary = observables_summary(set)?;
    let density = assemble_density(set)?;
    let s = entropy(&density, EntropyPolicy::Clamp)?;
    let mean_energy = params.coupling * summary.pair_correlation + params.field * summary.magnetization;
    Ok(RowVariant {
        provenance: set.provenance,
        magnetization: summary.magnetization,
        pair_correlation: summary.pair_correlation,
        triple_correlation: summary.triple_correlation,
        entropy: s,
        log_partition: s - params.beta * mean_energy,
        observables: set.reals()?,
        populations: density.populations,
        negative_populations: density.has_negative(),
    })
}

fn run_point_with_lambda(params: &ModelParams, options: &PointOptions, lambda: Option<f64>) -> Result<SweepRow> {
    require_triangle(params)?;
    let ideal = measure_all(params)?;
    let ideal_set = MeasurementSet::from_readouts(&ideal, Provenance::Ideal)?;
    let mut variants = vec![variant(params, &ideal_set)?];

    let mut noisy = apply_noise(params, &ideal, &options.noise)?;
    if let Some(shots) = options.shots {
        let mut sampler = ShotSampler::with_stream(shots, options.seed, point_stream(params))?;
        let source = noisy.as_deref().unwrap_or(&ideal);
        noisy = Some(source.iter().map(|r| sampler.sample(r)).collect::<Result<Vec<_>>>()?);
    }

    let mut used_lambda = None;
    if let Some(noisy) = noisy {
        let noisy_set = MeasurementSet::from_readouts(&noisy, Provenance::Noisy)?;
        variants.push(variant(params, &noisy_set)?);
        if let Some(l) = lambda {
            variants.push(variant(params, &noisy_set.rescaled(l)?)?);
            used_lambda = Some(l);
        }
    }
    Ok(SweepRow {
        beta: params.beta,
        h: params.field,
        coupling: params.coupling,
        lambda: used_lambda,
        variants,
    })
}

/// Synthesize, simulate, read all seven observables through the probe,
/// optionally add noise and recover, then reconstruct and summarize.
pub fn run_point(params: &ModelParams, options: &PointOptions) -> Result<SweepRow> {
    let options = PointOptions {
        noise: options.noise.resolve()?,
        ..options.clone()
    };
    let lambda = resolve_lambda(params.coupling, &options)?;
    run_point_with_lambda(params, &options, lambda)
        .map_err(|e| e.context(format!("point beta={} h={}", params.beta, params.field)))
}

/// Grid axis: an inclusive linear range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Range { min: f64, max: f64, steps: usize },
    List(Vec<f64>),
}

impl Axis {
    pub fn single(v: f64) -> Self {
        Axis::List(vec![v])
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::List(v) => v.clone(),
            Axis::Range { min, max, steps } => match steps {
                0 => Vec::new(),
                1 => vec![*min],
                n => (0..*n)
                    .map(|i| min + (max - min) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if let Axis::Range { steps: 0, .. } = self {
            return Err(Error::Usage(format!("{name}: steps must be >= 1")));
        }
        let v = self.values();
        if v.is_empty() {
            return Err(Error::Usage(format!("{name}: empty axis")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Usage(format!("{name}: non-finite value")));
        }
        Ok(())
    }

    /// `v`, `min:max:steps`, or a comma-separated list.
    pub fn parse(s: &str) -> Result<Self> {
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("bad number {t:?} in {s:?}")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [one] if one.contains(',') => Ok(Axis::List(one.split(',').map(num).collect::<Result<_>>()?)),
            [one] => Ok(Axis::single(num(one)?)),
            [min, max, steps] => Ok(Axis::Range {
                min: num(min)?,
                max: num(max)?,
                steps: steps
                    .trim()
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad step count in {s:?}")))?,
            }),
            _ => Err(Error::Usage(format!("expected v or min:max:steps, got {s:?}"))),
        }
    }
}

fn default_coupling() -> f64 {
    1.0
}

fn default_parallelism() -> usize {
    1
}

fn default_betas() -> Axis {
    Axis::Range { min: 0.5, max: 11.0, steps: 101 }
}

fn default_fields() -> Axis {
    Axis::Range { min: -5.0, max: 5.0, steps: 101 }
}

fn default_observables() -> Vec<String> {
    DiagonalObservable::ALL.iter().map(|o| o.label().to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_betas")]
    pub beta: Axis,
    #[serde(default = "default_fields")]
    pub h: Axis,
    #[serde(rename = "J", default = "default_coupling")]
    pub coupling: f64,
    /// Observables whose raw values are reported.
    #[serde(default = "default_observables")]
    pub observables: Vec<String>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub recover: RecoverMode,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub plot: Option<PlotKind>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            beta: default_betas(),
            h: default_fields(),
            coupling: default_coupling(),
            observables: default_observables(),
            noise: NoiseConfig::Off,
            recover: RecoverMode::Off,
            shots: None,
            seed: 0,
            parallelism: default_parallelism(),
            out_dir: None,
            formats: Vec::new(),
            plot: None,
        }
    }
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Usage(format!("sweep config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.beta.validate("beta")?;
        self.h.validate("h")?;
        if self.beta.values().iter().any(|&b| b < 0.0) {
            return Err(Error::Usage("beta values must be >= 0".into()));
        }
        if !self.coupling.is_finite() {
            return Err(Error::Usage("J must be finite".into()));
        }
        for l in &self.observables {
            if DiagonalObservable::from_label(l).is_none() {
                return Err(Error::Usage(format!("unknown observable {l:?}")));
            }
        }
        Ok(())
    }

    pub fn point_options(&self) -> PointOptions {
        PointOptions {
            noise: self.noise.clone(),
            recover: self.recover,
            shots: self.shots,
            seed: self.seed,
        }
    }
}

/// Rows in row-major order: `beta` outer, `h` inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    #[serde(rename = "J")]
    pub coupling: f64,
    pub betas: Vec<f64>,
    pub fields: Vec<f64>,
    pub observables: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl Dataset {
    pub fn row(&self, beta_index: usize, h_index: usize) -> &SweepRow {
        &self.rows[beta_index * self.fields.len() + h_index]
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Creates `dir` and checks it accepts a file.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".cets-write-probe");
    std::fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
    Ok(())
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Dataset> {
    spec.validate()?;
    if let Some(dir) = &spec.out_dir {
        ensure_writable(dir)?;
    }
    let mut options = spec.point_options();
    options.noise = options.noise.resolve()?;
    let lambda = resolve_lambda(spec.coupling, &options)?;

    let betas = spec.beta.values();
    let fields = spec.h.values();
    let grid: Vec<ModelParams> = betas
        .iter()
        .flat_map(|&b| fields.iter().map(move |&h| (b, h)))
        .map(|(b, h)| ModelParams::triangle(spec.coupling, h, b))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        grid.par_iter()
            .map(|p| {
                run_point_with_lambda(p, &options, lambda)
                    .map_err(|e| e.context(format!("point beta={} h={}", p.beta, p.field)))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    Ok(Dataset {
        coupling: spec.coupling,
        betas,
        fields,
        observables: spec.observables.clone(),
        rows,
    })
}

/// Figures of merit for one noisy point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudy {
    pub row: SweepRow,
    /// From the full noisy state when available, else from the diagonal.
    pub eta_exact: f64,
    pub eta_approx: f64,
    pub eta_exact_clamped: bool,
    /// Full-state Uhlmann fidelity against the ideal CETS (depolarizing only).
    pub state_fidelity: Option<f64>,
    pub projection_overlap: Option<f64>,
    /// Whether the density-matrix recovery stayed positive (depolarizing only).
    pub recovered_physical: Option<bool>,
    /// Classical fidelity of the reconstructed populations against the Gibbs weights.
    pub population_fidelity_noisy: f64,
    pub population_fidelity_recovered: Option<f64>,
    /// Split of the decay exponents `tau/T2` (decay profiles only).
    pub anisotropy: Option<AnisotropySplit>,
}

pub fn noise_study(params: &ModelParams, options: &PointOptions) -> Result<NoiseStudy> {
    let options = PointOptions {
        noise: options.noise.resolve()?,
        ..options.clone()
    };
    if options.noise.is_off() && options.shots.is_none() {
        return Err(Error::Usage("noise study needs --eta, --decay-profile or --shots".into()));
    }
    let row = run_point(params, &options)?;
    let ideal_pop = assemble_density(&MeasurementSet::from_reals(row.ideal().observables, Provenance::Ideal))?;
    let noisy_v = row.variant(Provenance::Noisy).expect("noise enabled");
    let noisy_pop = assemble_density(&MeasurementSet::from_reals(noisy_v.observables, Provenance::Noisy))?;
    let population_fidelity_noisy = diagonal_fidelity(&ideal_pop, &noisy_pop);
    let population_fidelity_recovered = match row.variant(Provenance::Recovered) {
        Some(v) => Some(diagonal_fidelity(
            &ideal_pop,
            &assemble_density(&MeasurementSet::from_reals(v.observables, Provenance::Recovered))?,
        )),
        None => None,
    };

    let mut study = NoiseStudy {
        eta_exact: 0.0,
        eta_approx: 0.0,
        eta_exact_clamped: false,
        state_fidelity: None,
        projection_overlap: None,
        recovered_physical: None,
        population_fidelity_noisy,
        population_fidelity_recovered,
        anisotropy: None,
        row,
    };

    match &options.noise {
        NoiseConfig::Depolarizing { eta } => {
            let psi = run_circuit(&build_triangle_circuit(params, false)?)?;
            let ideal = DensityMatrix::from_pure(&psi);
            let noisy = depolarize(&ideal, *eta)?;
            let exact = estimate_eta(&noisy, EtaMode::Exact);
            study.eta_exact = exact.eta;
            study.eta_exact_clamped = exact.clamped;
            study.eta_approx = estimate_eta(&noisy, EtaMode::Approx).eta;
            study.state_fidelity = Some(fidelity(&noisy, &ideal)?);
            study.projection_overlap = Some(projection_overlap(&noisy, &psi)?);
            if let Some(l) = study.row.lambda {
                study.recovered_physical = Some(recover(&noisy, l)?.physical);
            }
        }
        other => {
            let rho = noisy_pop.to_density_matrix()?;
            let exact = estimate_eta(&rho, EtaMode::Exact);
            study.eta_exact = exact.eta;
            study.eta_exact_clamped = exact.clamped;
            study.eta_approx = estimate_eta(&rho, EtaMode::Approx).eta;
            if let NoiseConfig::Decay { profile } = other {
                let labels: Vec<&str> = DiagonalObservable::ALL.iter().map(|o| o.label()).collect();
                study.anisotropy = Some(profile.anisotropy(&labels)?);
            }
        }
    }
    Ok(study)
}

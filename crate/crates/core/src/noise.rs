//! Depolarizing noise, purity-based `eta` estimation and affine recovery.
//!
//! The noisy state is modelled as `(1 - eta) I/D + eta rho_c`. Recovery with a
//! guess `lambda` applies `(rho - I/D) / lambda + I/D`, which is trace
//! preserving but not positive, so recovered states carry a physicality flag.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{DecayRecord, ProbeReadout, StateVector};
use crate::error::{Error, Result};
use crate::pauli::PauliString;

const TRACE_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues below `-POSITIVITY_TOL` mark a state as non-physical.
pub const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Checks squareness, unit trace and Hermiticity. Positivity is not
    /// required; see [`DensityMatrix::is_physical`].
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Domain(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Domain(format!("trace {tr} != 1")));
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::Domain(format!("not Hermitian (max deviation {herm:e})")));
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            matrix: &v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        Ok(Self {
            matrix: DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0)),
        })
    }

    pub fn from_diagonal(populations: &[f64]) -> Result<Self> {
        let diag = nalgebra::DVector::from_iterator(
            populations.len(),
            populations.iter().map(|&p| Complex64::new(p, 0.0)),
        );
        Self::new(DMatrix::from_diagonal(&diag))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `Tr(rho^2)`, which for Hermitian `rho` is the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -POSITIVITY_TOL
    }

    /// `Tr(rho P)`.
    pub fn expectation(&self, op: &PauliString) -> Result<Complex64> {
        if 1usize << op.len() != self.dim() {
            return Err(Error::Domain(format!(
                "Pauli string {op} does not match dimension {}",
                self.dim()
            )));
        }
        // Tr(rho P) = sum_k <k| rho P |k> = sum_k phase(k) rho[k, P(k)]
        Ok((0..self.dim())
            .map(|k| {
                let (j, phase) = op.act_on_basis(k);
                self.matrix[(k, j)] * phase
            })
            .sum())
    }

    /// `<psi| rho |psi>`.
    pub fn sandwich(&self, state: &StateVector) -> Result<f64> {
        if state.amplitudes().len() != self.dim() {
            return Err(Error::Domain(format!(
                "state of dimension {} vs density matrix of dimension {}",
                state.amplitudes().len(),
                self.dim()
            )));
        }
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Ok((v.adjoint() * &self.matrix * &v)[(0, 0)].re)
    }

    fn affine_to_mixed(&self, scale: f64) -> DMatrix<Complex64> {
        // scale * rho + (1 - scale) I/D
        let d = self.dim();
        let shift = Complex64::new((1.0 - scale) / d as f64, 0.0);
        let mut m = self.matrix.map(|z| z * scale);
        for i in 0..d {
            m[(i, i)] += shift;
        }
        m
    }
}

fn check_unit_interval(x: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// `(1 - eta) I/D + eta rho`.
pub fn depolarize(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    check_unit_interval(eta, "eta")?;
    Ok(DensityMatrix {
        matrix: rho.affine_to_mixed(eta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaMode {
    /// `sqrt((Tr rho^2 - 1/D) / (1 - 1/D))`, exact for a depolarized pure state.
    Exact,
    /// `sqrt(Tr rho^2)`, the large-`D` approximation.
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaEstimate {
    pub eta: f64,
    /// Set when the exact form saw a purity below `1/D` and clamped to 0.
    pub clamped: bool,
}

pub fn estimate_eta(rho: &DensityMatrix, mode: EtaMode) -> EtaEstimate {
    let purity = rho.purity();
    match mode {
        EtaMode::Approx => EtaEstimate {
            eta: purity.sqrt(),
            clamped: false,
        },
        EtaMode::Exact => {
            let inv_d = 1.0 / rho.dim() as f64;
            if rho.dim() == 1 {
                return EtaEstimate { eta: 1.0, clamped: false };
            }
            let ratio = (purity - inv_d) / (1.0 - inv_d);
            if ratio < 0.0 {
                log::warn!("purity {purity} below 1/D; exact eta clamped to 0");
                EtaEstimate { eta: 0.0, clamped: true }
            } else {
                EtaEstimate {
                    eta: ratio.sqrt(),
                    clamped: false,
                }
            }
        }
    }
}

/// Output of [`recover`]; the map is not positive, so physicality is reported.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredState {
    pub state: DensityMatrix,
    pub min_eigenvalue: f64,
    pub physical: bool,
}

/// `(rho - I/D) / lambda + I/D`.
pub fn recover(rho: &DensityMatrix, lambda: f64) -> Result<RecoveredState> {
    check_recovery_factor(lambda)?;
    let state = DensityMatrix {
        matrix: rho.affine_to_mixed(1.0 / lambda),
    };
    let min_eigenvalue = state.min_eigenvalue();
    Ok(RecoveredState {
        physical: min_eigenvalue >= -POSITIVITY_TOL,
        min_eigenvalue,
        state,
    })
}

pub fn check_recovery_factor(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("recovery factor {lambda} outside (0, 1]")));
    }
    Ok(())
}

/// Observable-space form of [`recover`]: a traceless Pauli expectation is
/// divided by `lambda`.
pub fn rescale_expectation(value: f64, lambda: f64) -> Result<f64> {
    check_recovery_factor(lambda)?;
    Ok(value / lambda)
}

/// `<psi| rho |psi> / sqrt(Tr rho^2)`.
pub fn projection_overlap(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    Ok(rho.sandwich(psi)? / rho.purity().sqrt())
}

/// Duration and `T2` of one observable's measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableDecay {
    /// Seconds, including state preparation.
    pub duration: f64,
    /// Seconds; `f64::INFINITY` disables decay.
    pub t2: f64,
}

impl ObservableDecay {
    pub fn new(duration: f64, t2: f64) -> Result<Self> {
        let d = Self { duration, t2 };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Domain(format!("duration {} must be > 0", self.duration)));
        }
        if self.t2.is_nan() || self.t2 <= 0.0 {
            return Err(Error::Domain(format!("T2 {} must be > 0", self.t2)));
        }
        Ok(())
    }

    /// `tau / T2`.
    pub fn exponent(&self) -> f64 {
        self.duration / self.t2
    }

    /// `e^{-tau / T2}`.
    pub fn factor(&self) -> f64 {
        (-self.exponent()).exp()
    }
}

/// Default `T2` in seconds when a profile does not give one.
pub const DEFAULT_T2: f64 = 1.0;

/// Published measurement durations (seconds) per observable label.
pub const REFERENCE_DURATIONS: [(&str, f64); 13] = [
    ("Z1", 0.35),
    ("Z2", 0.46),
    ("Z3", 0.57),
    ("Z1Z2", 0.62),
    ("Z2Z3", 0.58),
    ("Z1Z3", 0.76),
    ("Z1Z2Z3", 0.59),
    ("X1", 0.37),
    ("X2", 0.49),
    ("X3", 0.63),
    ("Y1", 0.37),
    ("Y2", 0.49),
    ("Y3", 0.63),
];

/// Preparation time included in every duration above.
pub const PREPARATION_TIME: f64 = 0.33;

/// Per-observable decay, keyed by sparse Pauli label (`Z1`, `Z1Z2`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub observables: BTreeMap<String, ObservableDecay>,
    /// Optional global `T1` envelope `e^{-tau / T1}` in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct DecayProfileFile {
    #[serde(default)]
    t2: Option<f64>,
    #[serde(default)]
    t1: Option<f64>,
    #[serde(default)]
    observables: BTreeMap<String, DecayEntryFile>,
}

#[derive(Debug, Deserialize)]
struct DecayEntryFile {
    #[serde(default)]
    duration: Option<f64>,
    #[serde(default)]
    t2: Option<f64>,
}

impl DecayProfile {
    /// Reference durations with a single `T2` for every observable.
    pub fn reference(t2: f64) -> Result<Self> {
        let observables = REFERENCE_DURATIONS
            .iter()
            .map(|&(l, d)| Ok((l.to_string(), ObservableDecay::new(d, t2)?)))
            .collect::<Result<_>>()?;
        Ok(Self { observables, t1: None })
    }

    /// JSON of the form
    /// `{"t2": 1.0, "t1": 2.95, "observables": {"Z1": {"duration": 0.35, "t2": 0.9}}}`.
    /// Missing fields fall back to the reference durations and the top-level
    /// (or default) `T2`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: DecayProfileFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("decay profile: {e}")))?;
        let default_t2 = file.t2.unwrap_or(DEFAULT_T2);
        let mut profile = Self::reference(default_t2)?;
        for (label, entry) in file.observables {
            let base = profile.observables.get(&label).copied();
            let duration = entry
                .duration
                .or(base.map(|b| b.duration))
                .ok_or_else(|| Error::Parse(format!("decay profile: no duration for {label}")))?;
            let t2 = entry.t2.unwrap_or(default_t2);
            profile
                .observables
                .insert(label, ObservableDecay::new(duration, t2)?);
        }
        if let Some(t1) = file.t1 {
            if t1.is_nan() || t1 <= 0.0 {
                return Err(Error::Domain(format!("T1 {t1} must be > 0")));
            }
        }
        profile.t1 = file.t1;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn get(&self, label: &str) -> Result<ObservableDecay> {
        self.observables
            .get(label)
            .copied()
            .ok_or_else(|| Error::Domain(format!("decay profile has no entry for {label}")))
    }

    /// Mean/residual split of the decay exponents `tau_i / T2_i` over `labels`.
    pub fn anisotropy(&self, labels: &[&str]) -> Result<AnisotropySplit> {
        let rates = labels
            .iter()
            .map(|l| self.get(l).map(|d| d.exponent()))
            .collect::<Result<Vec<_>>>()?;
        AnisotropySplit::from_rates(&rates)
    }
}

/// Multiplies a readout by `e^{-tau/T2}` and records the factor.
pub fn observable_decay(readout: &ProbeReadout, decay: &ObservableDecay) -> ProbeReadout {
    let factor = decay.factor();
    let mut out = readout.clone();
    out.value *= factor;
    out.decays.push(DecayRecord {
        duration: decay.duration,
        t2: decay.t2,
        factor,
    });
    out
}

/// `e^{-tau/T1}` envelope applied on top of the `T2` decay.
pub fn t1_envelope(readout: &ProbeReadout, duration: f64, t1: f64) -> ProbeReadout {
    let factor = (-duration / t1).exp();
    let mut out = readout.clone();
    out.value *= factor;
    out.decays.push(DecayRecord {
        duration,
        t2: t1,
        factor,
    });
    out
}

/// Isotropic (mean) and anisotropic (residual) parts of per-observable decay rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropySplit {
    pub mean_rate: f64,
    pub residuals: Vec<f64>,
}

impl AnisotropySplit {
    pub fn from_rates(rates: &[f64]) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Domain("no rates to split".into()));
        }
        let mean_rate = rates.iter().sum::<f64>() / rates.len() as f64;
        let residuals = if let [a, b] = rates {
            // +-(a - b)/2, antisymmetric in floating point as well
            let half = (a - b) / 2.0;
            vec![half, -half]
        } else {
            rates.iter().map(|r| r - mean_rate).collect()
        };
        Ok(Self {
            mean_rate,
            residuals,
        })
    }

    /// Rescaling by `e^{mean}` removes the isotropic part; this is its inverse.
    pub fn isotropic_factor(&self) -> f64 {
        (-self.mean_rate).exp()
    }
}

/// Clip-and-renormalize audit for a probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipAudit {
    /// Indices whose value was negative.
    pub clipped: Vec<usize>,
    /// Total negative mass removed (a non-negative number).
    pub removed_mass: f64,
    /// Sum after clipping, before renormalization.
    pub kept_mass: f64,
}

/// Zeroes negative entries and renormalizes to unit sum.
pub fn clip_to_simplex(values: &[f64]) -> Result<(Vec<f64>, ClipAudit)> {
    let clipped: Vec<usize> = (0..values.len()).filter(|&i| values[i] < 0.0).collect();
    let removed_mass = clipped.iter().map(|&i| -values[i]).sum();
    let kept: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let kept_mass: f64 = kept.iter().sum();
    if kept_mass.is_nan() || kept_mass <= 0.0 || !kept_mass.is_finite() {
        return Err(Error::NonPhysical(format!(
            "no positive mass left after clipping {values:?}"
        )));
    }
    let audit = ClipAudit {
        clipped,
        removed_mass,
        kept_mass,
    };
    if audit.removed_mass > 1e-12 {
        log::warn!(
            "clipped {} negative populations (mass {:.3e}) before renormalizing",
            audit.clipped.len(),
            audit.removed_mass
        );
    }
    Ok((kept.iter().map(|v| v / kept_mass).collect(), audit))
}

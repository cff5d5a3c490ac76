//! Thermal-state reconstruction from the seven diagonal Pauli expectations.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::{ProbeReadout, StateVector};
use crate::error::{Error, Result};
use crate::model::{exact_expectation, spin_value, ModelParams, Topology};
use crate::noise::{clip_to_simplex, rescale_expectation, ClipAudit, DensityMatrix};
use crate::pauli::PauliString;

/// Imaginary parts larger than this fraction of the real part are flagged.
pub const IMAGINARY_FLAG_RATIO: f64 = 0.11;
/// Populations below `-NEGATIVE_TOL` count as negative.
pub const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagonalObservable {
    Z1,
    Z2,
    Z3,
    Z1Z2,
    Z2Z3,
    Z1Z3,
    Z1Z2Z3,
}

impl DiagonalObservable {
    pub const ALL: [DiagonalObservable; 7] = [
        DiagonalObservable::Z1,
        DiagonalObservable::Z2,
        DiagonalObservable::Z3,
        DiagonalObservable::Z1Z2,
        DiagonalObservable::Z2Z3,
        DiagonalObservable::Z1Z3,
        DiagonalObservable::Z1Z2Z3,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DiagonalObservable::Z1 => "Z1",
            DiagonalObservable::Z2 => "Z2",
            DiagonalObservable::Z3 => "Z3",
            DiagonalObservable::Z1Z2 => "Z1Z2",
            DiagonalObservable::Z2Z3 => "Z2Z3",
            DiagonalObservable::Z1Z3 => "Z1Z3",
            DiagonalObservable::Z1Z2Z3 => "Z1Z2Z3",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.label() == label)
    }

    /// 0-based spins the product runs over.
    pub fn spins(self) -> &'static [usize] {
        match self {
            DiagonalObservable::Z1 => &[0],
            DiagonalObservable::Z2 => &[1],
            DiagonalObservable::Z3 => &[2],
            DiagonalObservable::Z1Z2 => &[0, 1],
            DiagonalObservable::Z2Z3 => &[1, 2],
            DiagonalObservable::Z1Z3 => &[0, 2],
            DiagonalObservable::Z1Z2Z3 => &[0, 1, 2],
        }
    }

    pub fn pauli(self) -> PauliString {
        PauliString::z_product(3, self.spins()).expect("fixed three-qubit labels")
    }

    /// Eigenvalue of the product on basis state `k`.
    pub fn sign(self, k: usize) -> f64 {
        self.spins().iter().map(|&s| spin_value(k, 3, s)).product()
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|&o| o == self).unwrap()
    }
}

impl fmt::Display for DiagonalObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Ideal,
    Noisy,
    Recovered,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Ideal => "ideal",
            Provenance::Noisy => "noisy",
            Provenance::Recovered => "recovered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub real: f64,
    #[serde(default)]
    pub imag: f64,
    /// Measurement duration in seconds, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl Measured {
    pub fn real(real: f64) -> Self {
        Self {
            real,
            imag: 0.0,
            duration: None,
        }
    }

    pub fn imaginary_flagged(&self) -> bool {
        self.imag.abs() > IMAGINARY_FLAG_RATIO * self.real.abs() && self.imag.abs() > NEGATIVE_TOL
    }
}

/// Expectations of the seven diagonal observables; JSON is a map
/// `label -> {real, imag, duration}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    values: [Option<Measured>; 7],
    pub provenance: Provenance,
}

impl MeasurementSet {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            values: [None; 7],
            provenance,
        }
    }

    pub fn from_reals(values: [f64; 7], provenance: Provenance) -> Self {
        Self {
            values: values.map(|v| Some(Measured::real(v))),
            provenance,
        }
    }

    /// Exact expectations of the ideal CETS.
    pub fn ideal(params: &ModelParams) -> Result<Self> {
        if params.topology != Topology::Triangle {
            return Err(Error::UnsupportedTopology(
                "the seven-observable set is defined for the triangle".into(),
            ));
        }
        let mut m = Self::new(Provenance::Ideal);
        for o in DiagonalObservable::ALL {
            let v = exact_expectation(params, &o.pauli())?;
            m.set(o, Measured { real: v.re, imag: v.im, duration: None });
        }
        Ok(m)
    }

    /// Collects readouts by label; unknown labels are rejected.
    pub fn from_readouts(readouts: &[ProbeReadout], provenance: Provenance) -> Result<Self> {
        let mut m = Self::new(provenance);
        for r in readouts {
            let o = DiagonalObservable::from_label(&r.label)
                .ok_or_else(|| Error::Domain(format!("{} is not a diagonal observable", r.label)))?;
            m.set(o, Measured { real: r.re(), imag: r.im(), duration: r.decays.first().map(|d| d.duration) });
        }
        Ok(m)
    }

    pub fn set(&mut self, o: DiagonalObservable, value: Measured) {
        self.values[o.index()] = Some(value);
    }

    pub fn measured(&self, o: DiagonalObservable) -> Result<Measured> {
        self.values[o.index()].ok_or_else(|| Error::IncompleteSet(o.label().into()))
    }

    pub fn get(&self, o: DiagonalObservable) -> Result<f64> {
        self.measured(o).map(|m| m.real)
    }

    /// Real parts in canonical order.
    pub fn reals(&self) -> Result<[f64; 7]> {
        let mut out = [0.0; 7];
        for o in DiagonalObservable::ALL {
            out[o.index()] = self.get(o)?;
        }
        Ok(out)
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Observables whose imaginary residual exceeds the flag ratio.
    pub fn imaginary_flags(&self) -> Vec<DiagonalObservable> {
        DiagonalObservable::ALL
            .into_iter()
            .filter(|&o| self.values[o.index()].is_some_and(|m| m.imaginary_flagged()))
            .collect()
    }

    /// Every value multiplied by `factor`, keeping metadata.
    pub fn scaled(&self, factor: f64, provenance: Provenance) -> Self {
        Self {
            values: self.values.map(|v| {
                v.map(|m| Measured {
                    real: m.real * factor,
                    imag: m.imag * factor,
                    duration: m.duration,
                })
            }),
            provenance,
        }
    }

    /// Observable-space recovery: every expectation divided by `lambda`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        rescale_expectation(0.0, lambda)?;
        Ok(self.scaled(1.0 / lambda, Provenance::Recovered))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("measurement set: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measurement set serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct MeasurementSetRepr {
    #[serde(default = "default_provenance")]
    provenance: Provenance,
    observables: BTreeMap<String, Measured>,
}

fn default_provenance() -> Provenance {
    Provenance::Noisy
}

impl Serialize for MeasurementSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let observables = DiagonalObservable::ALL
            .into_iter()
            .filter_map(|o| self.values[o.index()].map(|m| (o.label().to_string(), m)))
            .collect();
        MeasurementSetRepr {
            provenance: self.provenance,
            observables,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeasurementSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MeasurementSetRepr::deserialize(d)?;
        let mut m = MeasurementSet::new(repr.provenance);
        for (label, value) in repr.observables {
            let o = DiagonalObservable::from_label(&label).ok_or_else(|| {
                serde::de::Error::custom(format!("unknown observable label {label:?}"))
            })?;
            m.set(o, value);
        }
        Ok(m)
    }
}

/// Diagonal thermal density matrix `I/8 + sum a_i Z_i + sum b_jk Z_j Z_k + t Z1Z2Z3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalDensity {
    pub populations: [f64; 8],
    pub provenance: Provenance,
    /// `<Z_i>/8`.
    pub field_coeffs: [f64; 3],
    /// `<Z_j Z_k>/8` for pairs (1,2), (2,3), (1,3).
    pub pair_coeffs: [f64; 3],
    /// `<Z1 Z2 Z3>/8`.
    pub triple_coeff: f64,
}

impl DiagonalDensity {
    pub fn from_populations(populations: [f64; 8], provenance: Provenance) -> Result<Self> {
        let sum: f64 = populations.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("populations sum to {sum}")));
        }
        let coeff = |o: DiagonalObservable| -> f64 {
            (0..8).map(|k| populations[k] * o.sign(k)).sum::<f64>() / 8.0
        };
        use DiagonalObservable::*;
        Ok(Self {
            populations,
            provenance,
            field_coeffs: [coeff(Z1), coeff(Z2), coeff(Z3)],
            pair_coeffs: [coeff(Z1Z2), coeff(Z2Z3), coeff(Z1Z3)],
            triple_coeff: coeff(Z1Z2Z3),
        })
    }

    pub fn has_negative(&self) -> bool {
        self.populations.iter().any(|&p| p < -NEGATIVE_TOL)
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_diagonal(&self.populations)
    }

    /// Zero negatives and renormalize.
    pub fn clamped(&self) -> Result<(DiagonalDensity, ClipAudit)> {
        let (p, audit) = clip_to_simplex(&self.populations)?;
        let mut pops = [0.0; 8];
        pops.copy_from_slice(&p);
        Ok((Self::from_populations(pops, self.provenance)?, audit))
    }

    pub fn purity(&self) -> f64 {
        self.populations.iter().map(|p| p * p).sum()
    }
}

pub fn assemble_density(m: &MeasurementSet) -> Result<DiagonalDensity> {
    let reals = m.reals()?;
    let mut populations = [0.0; 8];
    for (k, p) in populations.iter_mut().enumerate() {
        let s: f64 = DiagonalObservable::ALL
            .iter()
            .zip(reals)
            .map(|(o, v)| v * o.sign(k))
            .sum();
        *p = (1.0 + s) / 8.0;
    }
    let d = DiagonalDensity::from_populations(populations, m.provenance)?;
    if m.provenance == Provenance::Ideal && d.has_negative() {
        return Err(Error::NumericConsistency(format!(
            "ideal expectations produced negative populations {populations:?}"
        )));
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyPolicy {
    /// Negative populations are an error.
    Strict,
    /// Negative populations are zeroed and the rest renormalized.
    Clamp,
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn entropy(rho: &DiagonalDensity, policy: EntropyPolicy) -> Result<f64> {
    if !rho.has_negative() {
        return Ok(shannon(&rho.populations));
    }
    match policy {
        EntropyPolicy::Strict => Err(Error::NonPhysical(format!(
            "negative populations {:?}",
            rho.populations
        ))),
        EntropyPolicy::Clamp => {
            let (clamped, _audit) = rho.clamped()?;
            Ok(shannon(&clamped.populations))
        }
    }
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Leading eigenvector when `rho` is rank one to within `1e-12`.
fn pure_component(rho: &DensityMatrix) -> Option<StateVector> {
    if (rho.purity() - 1.0).abs() > 1e-12 {
        return None;
    }
    let eig = SymmetricEigen::new(rho.matrix().clone());
    let (imax, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let v: Vec<Complex64> = eig.eigenvectors.column(imax).iter().copied().collect();
    StateVector::from_amplitudes(v).ok()
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
///
/// With a pure argument this is `<psi|sigma|psi>`, evaluated directly.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Domain(format!(
            "fidelity of {}- and {}-dimensional states",
            rho.dim(),
            sigma.dim()
        )));
    }
    if let Some(psi) = pure_component(rho) {
        return Ok(sigma.sandwich(&psi)?.clamp(0.0, 1.0));
    }
    if let Some(psi) = pure_component(sigma) {
        return Ok(rho.sandwich(&psi)?.clamp(0.0, 1.0));
    }
    let s = hermitian_sqrt(rho.matrix());
    let inner = &s * sigma.matrix() * &s;
    let eig = SymmetricEigen::new(inner);
    let tr: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Classical fidelity `(sum sqrt(p q))^2` of two diagonal states.
pub fn diagonal_fidelity(p: &DiagonalDensity, q: &DiagonalDensity) -> f64 {
    let bc: f64 = p
        .populations
        .iter()
        .zip(&q.populations)
        .map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt())
        .sum();
    bc * bc
}

/// Total magnetization and summed correlations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservablesSummary {
    /// `<Z1> + <Z2> + <Z3>`.
    pub magnetization: f64,
    /// `<Z1Z2> + <Z2Z3> + <Z1Z3>`.
    pub pair_correlation: f64,
    /// `<Z1Z2Z3>`.
    pub triple_correlation: f64,
}

pub fn observables_summary(m: &MeasurementSet) -> Result<ObservablesSummary> {
    use DiagonalObservable::*;
    Ok(ObservablesSummary {
        magnetization: m.get(Z1)? + m.get(Z2)? + m.get(Z3)?,
        pair_correlation: m.get(Z1Z2)? + m.get(Z2Z3)? + m.get(Z1Z3)?,
        triple_correlation: m.get(Z1Z2Z3)?,
    })
}

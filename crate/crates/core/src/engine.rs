//! Exact state-vector simulation and probe-qubit (phase kick-back) readout.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::pauli::{Pauli, PauliString};
use crate::synth::{build_circuit, Circuit, Gate, GateKind};

/// Largest register the engine will allocate for.
pub const MAX_QUBITS: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubit_count: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(qubit_count: usize) -> Result<Self> {
        if qubit_count > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{qubit_count} qubits exceeds engine limit {MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubit_count];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            qubit_count,
            amplitudes,
        })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Domain(format!("amplitude count {len} is not a power of two")));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("state norm {norm} != 1")));
        }
        Ok(Self {
            qubit_count: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|<self|other>|^2`.
    pub fn overlap_sqr(&self, other: &StateVector) -> Result<f64> {
        if self.qubit_count != other.qubit_count {
            return Err(Error::Domain("state dimensions differ".into()));
        }
        let ip: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(ip.norm_sqr())
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.qubit_count - 1 - qubit)
    }

    /// Applies `gate` in place on the subspace where every control bit is 1.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.qubit_count)?;
        let m = gate_matrix(gate.kind);
        let tbit = self.bit(gate.target);
        let cmask = gate.controls.iter().fold(0, |m, &c| m | self.bit(c));
        for k in 0..self.amplitudes.len() {
            if k & tbit != 0 || k & cmask != cmask {
                continue;
            }
            let (a0, a1) = (self.amplitudes[k], self.amplitudes[k | tbit]);
            self.amplitudes[k] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[k | tbit] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }
}

fn gate_matrix(kind: GateKind) -> [[Complex64; 2]; 2] {
    let re = |x: f64| Complex64::new(x, 0.0);
    match kind {
        GateKind::Rotation { theta } => {
            let (s, c) = theta.sin_cos();
            [[re(c), re(-s)], [re(s), re(c)]]
        }
        GateKind::Hadamard => [
            [re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)],
            [re(FRAC_1_SQRT_2), re(-FRAC_1_SQRT_2)],
        ],
        GateKind::Pauli { op } => op.matrix(),
    }
}

pub fn apply_gate(state: &mut StateVector, gate: &Gate) -> Result<()> {
    state.apply(gate)
}

/// Runs `circuit` from `|0...0>`.
pub fn run_circuit(circuit: &Circuit) -> Result<StateVector> {
    let mut state = StateVector::zero(circuit.qubit_count)?;
    for g in &circuit.gates {
        state.apply(g)?;
    }
    Ok(state)
}

/// `<psi|op|psi>` by direct contraction of amplitudes.
pub fn direct_expectation(state: &StateVector, op: &PauliString) -> Result<Complex64> {
    if op.len() != state.qubit_count {
        return Err(Error::Domain(format!(
            "Pauli string {op} has {} letters, state has {} qubits",
            op.len(),
            state.qubit_count
        )));
    }
    let amps = &state.amplitudes;
    Ok(amps
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let (j, phase) = op.act_on_basis(k);
            amps[j].conj() * phase * a
        })
        .sum())
}

/// Multiplicative decay applied to a readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub duration: f64,
    pub t2: f64,
    pub factor: f64,
}

/// `<U_M>` extracted from the probe's coherence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReadout {
    pub label: String,
    pub value: Complex64,
    /// Decay factors applied so far, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decays: Vec<DecayRecord>,
}

impl ProbeReadout {
    pub fn new(label: impl Into<String>, value: Complex64) -> Self {
        Self {
            label: label.into(),
            value,
            decays: Vec::new(),
        }
    }

    pub fn re(&self) -> f64 {
        self.value.re
    }

    pub fn im(&self) -> f64 {
        self.value.im
    }
}

/// Reduced density matrix of qubit 0 after tracing out the rest.
pub fn probe_reduced_density(state: &StateVector) -> Result<[[Complex64; 2]; 2]> {
    if state.qubit_count == 0 {
        return Err(Error::Domain("no probe qubit".into()));
    }
    let half = state.amplitudes.len() / 2;
    let (lo, hi) = state.amplitudes.split_at(half);
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (a, b) in lo.iter().zip(hi) {
        rho[0][0] += a * a.conj();
        rho[0][1] += a * b.conj();
        rho[1][0] += b * a.conj();
        rho[1][1] += b * b.conj();
    }
    Ok(rho)
}

/// Appends controlled-`op` (control = probe qubit 0) to a probe circuit.
pub fn append_controlled_pauli(circuit: &mut Circuit, op: &PauliString) -> Result<()> {
    if op.len() + 1 != circuit.qubit_count {
        return Err(Error::Domain(format!(
            "Pauli string {op} does not fit a {}-qubit register",
            circuit.qubit_count.saturating_sub(1)
        )));
    }
    for (i, &p) in op.letters().iter().enumerate() {
        if p != Pauli::I {
            circuit.push(Gate::controlled_pauli(i + 1, vec![0], p))?;
        }
    }
    Ok(())
}

/// Phase kick-back readout of `<Psi_beta|op|Psi_beta>`.
///
/// The probe is prepared in `(|0> + |1>)/sqrt(2)` ahead of the CETS circuit,
/// then controlled-`op` acts on the register. The probe's `(0, 1)` entry is
/// `conj(<op>) / 2`, so twice its conjugate is returned.
pub fn probe_expectation(params: &ModelParams, op: &PauliString) -> Result<ProbeReadout> {
    let mut circuit = build_circuit(params, true)?;
    probe_expectation_on(&mut circuit, op)
}

/// As [`probe_expectation`] for an already-synthesized probe circuit; the
/// controlled-op gates are appended to `circuit`.
pub fn probe_expectation_on(circuit: &mut Circuit, op: &PauliString) -> Result<ProbeReadout> {
    append_controlled_pauli(circuit, op)?;
    let state = run_circuit(circuit)?;
    let rho = probe_reduced_density(&state)?;
    Ok(ProbeReadout::new(op.sparse_label(), 2.0 * rho[0][1].conj()))
}

/// Seeded binomial sampling of the probe's `sigma_x` / `sigma_y` readouts.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    shots: u64,
    rng: ChaCha8Rng,
}

impl ShotSampler {
    pub fn new(shots: u64, seed: u64) -> Result<Self> {
        Self::with_stream(shots, seed, 0)
    }

    /// Independent stream per `stream` id under one seed.
    pub fn with_stream(shots: u64, seed: u64, stream: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Domain("shot count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self { shots, rng })
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    fn sample_component(&mut self, mean: f64) -> Result<f64> {
        let p = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
        let dist = Binomial::new(self.shots, p)
            .map_err(|e| Error::NumericConsistency(format!("binomial({p}): {e}")))?;
        let ups = dist.sample(&mut self.rng) as f64;
        Ok(2.0 * ups / self.shots as f64 - 1.0)
    }

    /// Replaces the exact value with a finite-shot estimate.
    pub fn sample(&mut self, readout: &ProbeReadout) -> Result<ProbeReadout> {
        let re = self.sample_component(readout.value.re)?;
        let im = self.sample_component(readout.value.im)?;
        Ok(ProbeReadout {
            label: readout.label.clone(),
            value: Complex64::new(re, im),
            decays: readout.decays.clone(),
        })
    }
}

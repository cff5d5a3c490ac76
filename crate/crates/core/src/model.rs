//! Classical Ising models: energies, Gibbs weights and exact observables.
//!
//! The Hamiltonian is `H = J * sum_{bonds} z_i z_j + h * sum_i z_i` with
//! `J > 0` antiferromagnetic. Weights are evaluated in the log domain so that
//! large `beta` never overflows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmath::{log_add_exp, log_sum_exp, logistic};
use crate::pauli::PauliString;

/// Largest register that brute-force enumeration will accept.
pub const MAX_ENUMERATED_SPINS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "spins")]
pub enum Topology {
    /// Three spins, all three pairs bonded.
    Triangle,
    /// `n` spins with nearest-neighbour bonds and free ends.
    OpenChain(usize),
}

impl Topology {
    pub fn spin_count(self) -> usize {
        match self {
            Topology::Triangle => 3,
            Topology::OpenChain(n) => n,
        }
    }

    /// Bonded pairs, 0-based.
    pub fn bonds(self) -> Vec<(usize, usize)> {
        match self {
            Topology::Triangle => vec![(0, 1), (1, 2), (0, 2)],
            Topology::OpenChain(n) => (1..n).map(|i| (i - 1, i)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Coupling `J`.
    pub coupling: f64,
    /// Field `h`, in units of `J`.
    pub field: f64,
    /// Inverse temperature `beta`, `k_B = 1`.
    pub beta: f64,
    pub topology: Topology,
}

impl ModelParams {
    pub fn triangle(coupling: f64, field: f64, beta: f64) -> Self {
        Self {
            coupling,
            field,
            beta,
            topology: Topology::Triangle,
        }
    }

    pub fn chain(spins: usize, coupling: f64, field: f64, beta: f64) -> Self {
        Self {
            coupling,
            field,
            beta,
            topology: Topology::OpenChain(spins),
        }
    }

    pub fn spin_count(&self) -> usize {
        self.topology.spin_count()
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn validate(&self) -> Result<()> {
        if !self.coupling.is_finite() || !self.field.is_finite() {
            return Err(Error::Domain(format!(
                "couplings must be finite (J={}, h={})",
                self.coupling, self.field
            )));
        }
        if self.beta.is_nan() || self.beta < 0.0 || self.beta.is_infinite() {
            return Err(Error::Domain(format!(
                "inverse temperature must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if self.spin_count() == 0 {
            return Err(Error::Domain("spin count must be at least 1".into()));
        }
        Ok(())
    }
}

/// A computational basis state of the spin register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    index: usize,
    spins: usize,
}

impl SpinConfig {
    pub fn new(index: usize, spins: usize) -> Result<Self> {
        if spins == 0 || spins >= usize::BITS as usize || index >= (1usize << spins) {
            return Err(Error::Domain(format!(
                "basis index {index} out of range for {spins} spins"
            )));
        }
        Ok(Self { index, spins })
    }

    /// Parses a bit string such as `"011"`; the first character is spin 1.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let spins = bits.len();
        let index = usize::from_str_radix(bits, 2)
            .map_err(|_| Error::Parse(format!("bad bit string {bits:?}")))?;
        Self::new(index, spins)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn bit(&self, spin: usize) -> usize {
        (self.index >> (self.spins - 1 - spin)) & 1
    }

    /// Z eigenvalue of `spin`: `+1` for bit 0, `-1` for bit 1.
    pub fn z(&self, spin: usize) -> f64 {
        spin_value(self.index, self.spins, spin)
    }
}

#[inline]
pub(crate) fn spin_value(index: usize, spins: usize, spin: usize) -> f64 {
    if (index >> (spins - 1 - spin)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn energy_unchecked(index: usize, params: &ModelParams, bonds: &[(usize, usize)]) -> f64 {
    let n = params.spin_count();
    let bond: f64 = bonds
        .iter()
        .map(|&(i, j)| spin_value(index, n, i) * spin_value(index, n, j))
        .sum();
    let field: f64 = (0..n).map(|i| spin_value(index, n, i)).sum();
    params.coupling * bond + params.field * field
}

pub fn energy(config: SpinConfig, params: &ModelParams) -> Result<f64> {
    if config.spins() != params.spin_count() {
        return Err(Error::Domain(format!(
            "configuration has {} spins, model has {}",
            config.spins(),
            params.spin_count()
        )));
    }
    Ok(energy_unchecked(config.index(), params, &params.topology.bonds()))
}

/// Energies, normalized Boltzmann weights and the partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsTable {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub log_partition: f64,
}

impl GibbsTable {
    /// `Z`, which overflows to infinity for very large `beta * |E|`.
    pub fn partition_function(&self) -> f64 {
        self.log_partition.exp()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn ground_states(&self, tol: f64) -> Vec<usize> {
        let e0 = self.ground_energy();
        (0..self.energies.len())
            .filter(|&k| self.energies[k] - e0 <= tol)
            .collect()
    }
}

pub fn gibbs_distribution(params: &ModelParams) -> Result<GibbsTable> {
    params.validate()?;
    let n = params.spin_count();
    if n > MAX_ENUMERATED_SPINS {
        return Err(Error::Capacity(format!(
            "{n} spins exceeds brute-force limit of {MAX_ENUMERATED_SPINS}"
        )));
    }
    let bonds = params.topology.bonds();
    let energies: Vec<f64> = (0..1usize << n)
        .map(|k| energy_unchecked(k, params, &bonds))
        .collect();
    let exponents: Vec<f64> = energies.iter().map(|e| -params.beta * e).collect();
    let log_partition = log_sum_exp(&exponents);
    let log_weights: Vec<f64> = exponents.iter().map(|x| x - log_partition).collect();
    let weights = log_weights.iter().map(|l| l.exp()).collect();
    Ok(GibbsTable {
        energies,
        weights,
        log_weights,
        log_partition,
    })
}

/// `<Psi_beta| op |Psi_beta>` on the ideal CETS with amplitudes `sqrt(w_k)`.
///
/// For diagonal strings this is `Tr(rho_th op)`.
pub fn exact_expectation(params: &ModelParams, op: &PauliString) -> Result<Complex64> {
    let table = gibbs_distribution(params)?;
    if op.len() != params.spin_count() {
        return Err(Error::Parse(format!(
            "Pauli string {op} has {} letters, register has {}",
            op.len(),
            params.spin_count()
        )));
    }
    let amps: Vec<f64> = table.log_weights.iter().map(|l| (0.5 * l).exp()).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &a) in amps.iter().enumerate() {
        let (j, phase) = op.act_on_basis(k);
        acc += phase * (a * amps[j]);
    }
    Ok(acc)
}

/// Shannon entropy of the Gibbs weights, `-sum w ln w`.
pub fn exact_entropy(params: &ModelParams) -> Result<f64> {
    let table = gibbs_distribution(params)?;
    Ok(table
        .weights
        .iter()
        .zip(&table.log_weights)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, l)| -w * l)
        .sum())
}

/// Sequential conditionals of an open Ising chain.
///
/// `first[b]` is `p(b_1 = b)`; `transitions[i][prev][b]` is
/// `p(b_{i+2} = b | b_{i+1} = prev)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConditionals {
    pub first: [f64; 2],
    pub transitions: Vec<[[f64; 2]; 2]>,
}

impl ChainConditionals {
    pub fn spins(&self) -> usize {
        self.transitions.len() + 1
    }

    /// Product of conditionals along the bits of `index`.
    pub fn weight(&self, index: usize) -> f64 {
        let n = self.spins();
        let bit = |i: usize| (index >> (n - 1 - i)) & 1;
        let mut w = self.first[bit(0)];
        for (i, t) in self.transitions.iter().enumerate() {
            w *= t[bit(i)][bit(i + 1)];
        }
        w
    }
}

/// Conditionals from backward transfer-matrix partial sums in the log domain.
pub fn chain_conditionals(params: &ModelParams) -> Result<ChainConditionals> {
    params.validate()?;
    let n = match params.topology {
        Topology::OpenChain(n) => n,
        Topology::Triangle => {
            return Err(Error::UnsupportedTopology(
                "chain conditionals need an open chain; the triangle uses renormalized angles".into(),
            ))
        }
    };
    let beta = params.beta;
    let (j, h) = (params.coupling, params.field);
    let z = |b: usize| if b == 0 { 1.0 } else { -1.0 };

    // tail[i][b]: log of the partial sum over spins i+1..n given spin i has bit b
    let mut tail = vec![[0.0f64; 2]; n];
    for i in (0..n - 1).rev() {
        for b in 0..2 {
            let terms = [0usize, 1].map(|c| -beta * (j * z(b) * z(c) + h * z(c)) + tail[i + 1][c]);
            tail[i][b] = log_add_exp(terms[0], terms[1]);
        }
    }

    let pair = |l0: f64, l1: f64| [logistic(l0 - l1), logistic(l1 - l0)];
    let first = pair(-beta * h * z(0) + tail[0][0], -beta * h * z(1) + tail[0][1]);
    let transitions = (1..n)
        .map(|i| {
            [0usize, 1].map(|prev| {
                let l = [0usize, 1].map(|b| -beta * (j * z(prev) * z(b) + h * z(b)) + tail[i][b]);
                pair(l[0], l[1])
            })
        })
        .collect();
    Ok(ChainConditionals { first, transitions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn cfg(bits: &str) -> SpinConfig {
        SpinConfig::from_bits(bits).unwrap()
    }

    #[test]
    fn energy_examples() {
        let p = ModelParams::triangle(1.0, 1.0, 1.0);
        assert_eq!(energy(cfg("000"), &p).unwrap(), 6.0);
        assert_eq!(energy(cfg("011"), &p).unwrap(), -2.0);
        assert!(energy(cfg("0110"), &p).is_err());
        assert!(SpinConfig::new(8, 3).is_err());
    }

    #[test]
    fn six_fold_ground_state_at_zero_field() {
        let p = ModelParams::triangle(1.0, 0.0, 1.0);
        let t = gibbs_distribution(&p).unwrap();
        assert_eq!(t.ground_energy(), -1.0);
        assert_eq!(t.ground_states(1e-12).len(), 6);
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let t = gibbs_distribution(&ModelParams::triangle(1.0, 3.0, 0.0)).unwrap();
        for w in &t.weights {
            assert!((w - 0.125).abs() < 1e-15);
        }
        assert!((t.partition_function() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn low_temperature_weights() {
        let t = gibbs_distribution(&ModelParams::triangle(1.0, 1.0, 11.0)).unwrap();
        for k in 0..8 {
            if [3, 5, 6].contains(&k) {
                assert!((t.weights[k] - 1.0 / 3.0).abs() < 1e-9);
            } else {
                assert!(t.weights[k] < 1e-9);
            }
        }
        let t = gibbs_distribution(&ModelParams::triangle(1.0, 5.0, 11.0)).unwrap();
        assert!((t.weights[7] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_beta_rejected() {
        assert!(gibbs_distribution(&ModelParams::triangle(1.0, 0.0, -0.1)).is_err());
        assert!(gibbs_distribution(&ModelParams::triangle(1.0, 0.0, f64::NAN)).is_err());
    }

    #[test]
    fn huge_beta_does_not_overflow() {
        let t = gibbs_distribution(&ModelParams::triangle(1.0, 1.0, 1e4)).unwrap();
        let s: f64 = t.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(t.log_partition.is_finite());
    }

    #[test]
    fn exact_expectations_at_table_point() {
        let p = ModelParams::triangle(1.0, 1.0, 11.0);
        let e = |s: &str| exact_expectation(&p, &PauliString::parse_sparse(s, 3).unwrap()).unwrap();
        assert!((e("I").re - 1.0).abs() < 1e-14);
        assert!((e("Z1").re + 1.0 / 3.0).abs() < 1e-6);
        assert!((e("Z1Z2").re + 1.0 / 3.0).abs() < 1e-6);
        assert!((e("Z1Z2Z3").re - 1.0).abs() < 1e-6);
        assert!(e("X1").norm() < 1e-4);
        for y in ["Y1", "Y2", "Y3"] {
            assert_eq!(e(y).re, 0.0);
            assert!(e(y).im.abs() < 1e-15);
        }
        assert!(exact_expectation(&p, &"ZZ".parse().unwrap()).is_err());
    }

    #[test]
    fn entropy_examples() {
        let s0 = exact_entropy(&ModelParams::triangle(1.0, 0.3, 0.0)).unwrap();
        assert!((s0 - 3.0 * LN_2).abs() < 1e-14);
        let s = exact_entropy(&ModelParams::triangle(1.0, 0.0, 11.0)).unwrap();
        assert!((s - 6f64.ln()).abs() < 1e-3);
        let s = exact_entropy(&ModelParams::triangle(1.0, 5.0, 11.0)).unwrap();
        assert!(s.abs() < 1e-6);
    }

    #[test]
    fn chain_single_spin() {
        let (beta, h) = (0.7, 1.3);
        let c = chain_conditionals(&ModelParams::chain(1, 1.0, h, beta)).unwrap();
        let expected = (-beta * h).exp() / (2.0 * (beta * h).cosh());
        assert!((c.first[0] - expected).abs() < 1e-15);
        assert!(c.transitions.is_empty());
    }

    #[test]
    fn chain_infinite_temperature_is_half() {
        let c = chain_conditionals(&ModelParams::chain(6, 1.0, 2.0, 0.0)).unwrap();
        assert_eq!(c.first, [0.5, 0.5]);
        for t in &c.transitions {
            assert_eq!(*t, [[0.5, 0.5], [0.5, 0.5]]);
        }
    }

    #[test]
    fn chain_conditionals_reproduce_brute_force() {
        let p = ModelParams::chain(5, 1.0, 0.7, 2.0);
        let c = chain_conditionals(&p).unwrap();
        let oracle = brute_force_weights(&p);
        for (k, w) in oracle.iter().enumerate() {
            assert!((c.weight(k) - w).abs() < 1e-10, "k={k}");
        }
        for t in &c.transitions {
            for row in t {
                assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triangle_rejected_by_chain_conditionals() {
        let err = chain_conditionals(&ModelParams::triangle(1.0, 0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedTopology(_)));
    }

    // naive exp/sum with an explicit loop over bonds, kept separate from the
    // log-domain path under test
    fn brute_force_weights(p: &ModelParams) -> Vec<f64> {
        let n = p.spin_count();
        let mut raw = Vec::new();
        for k in 0..1usize << n {
            let z: Vec<f64> = (0..n)
                .map(|i| if (k >> (n - 1 - i)) & 1 == 0 { 1.0 } else { -1.0 })
                .collect();
            let mut e = 0.0;
            for (a, b) in p.topology.bonds() {
                e += p.coupling * z[a] * z[b];
            }
            e += p.field * z.iter().sum::<f64>();
            raw.push((-p.beta * e).exp());
        }
        let z: f64 = raw.iter().sum();
        raw.iter().map(|r| r / z).collect()
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn weights_normalized(beta in 0.0f64..20.0, h in -5.0f64..5.0) {
            let t = gibbs_distribution(&ModelParams::triangle(1.0, h, beta)).unwrap();
            let s: f64 = t.weights.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(t.weights.iter().all(|&w| w >= 0.0));
        }

        #[test]
        fn spin_flip_symmetry_at_zero_field(beta in 0.0f64..20.0, j in 0.1f64..3.0) {
            let t = gibbs_distribution(&ModelParams::triangle(j, 0.0, beta)).unwrap();
            for k in 0..8 {
                prop_assert_eq!(t.weights[k], t.weights[7 - k]);
            }
        }

        #[test]
        fn log_domain_matches_naive(beta in 0.0f64..5.0, h in -5.0f64..5.0) {
            let p = ModelParams::triangle(1.0, h, beta);
            let t = gibbs_distribution(&p).unwrap();
            let naive = brute_force_weights(&p);
            for k in 0..8 {
                prop_assert!((t.weights[k] - naive[k]).abs() < 1e-10);
            }
        }

        #[test]
        fn chain_matches_brute_force(n in 1usize..=12, beta in 0.0f64..4.0, j in -2.0f64..2.0, h in -2.0f64..2.0) {
            let p = ModelParams::chain(n, j, h, beta);
            let c = chain_conditionals(&p).unwrap();
            let oracle = brute_force_weights(&p);
            for (k, w) in oracle.iter().enumerate() {
                prop_assert!((c.weight(k) - w).abs() < 1e-10);
            }
        }
    }
}

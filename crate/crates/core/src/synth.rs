//! Compiles Ising models into CETS-preparation circuits of real rotations.
//!
//! Triangle: the first two spins are prepared for a renormalized two-spin
//! Hamiltonian (`J - b`, `h - c`) that accounts for summing out the third spin,
//! then the third spin is rotated conditionally on the sum of the first two.
//! Open chains use one conditional rotation pair per site driven by
//! transfer-matrix conditionals.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmath::{ln_cosh, logistic};
use crate::model::{chain_conditionals, ModelParams, Topology};
use crate::pauli::Pauli;

/// Below this `beta` the renormalization shifts use their series forms.
pub const SMALL_BETA: f64 = 1e-8;
/// Tolerance on `cos^2` before clamping into `[0, 1]`.
pub const ARCCOS_TOLERANCE: f64 = 1e-12;
/// Largest chain the state-vector engine is expected to simulate.
pub const MAX_CHAIN_SPINS: usize = 20;

/// Renormalization constants of the triangle construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormConstants {
    /// `ln A`; `A` itself drops out of the normalized state.
    pub log_norm_a: f64,
    /// Bond shift `b`.
    pub bond_shift: f64,
    /// Field shift `c`.
    pub field_shift: f64,
    /// `J - b`.
    pub effective_coupling: f64,
    /// `h - c`.
    pub effective_field: f64,
    /// Offset `g` entering the first-spin angle.
    pub offset_g: f64,
}

impl RenormConstants {
    pub fn norm_a(&self) -> f64 {
        self.log_norm_a.exp()
    }
}

/// Summing out spin 3 leaves `2 cosh(beta (J (z1 + z2) + h))`, which
/// factorizes as `A e^{beta b z1 z2} e^{beta c (z1 + z2)}`.
pub fn effective_params(params: &ModelParams) -> Result<RenormConstants> {
    params.validate()?;
    let (beta, j, h) = (params.beta, params.coupling, params.field);

    let lc_plus = ln_cosh(2.0 * beta * j + beta * h);
    let lc_minus = ln_cosh(2.0 * beta * j - beta * h);
    let lc_field = ln_cosh(beta * h);
    let log_norm_a = std::f64::consts::LN_2 + 0.25 * (lc_plus + lc_minus) + 0.5 * lc_field;

    let (bond_shift, field_shift) = if beta < SMALL_BETA {
        (beta * j * j, beta * j * h)
    } else {
        (
            (lc_plus + lc_minus - 2.0 * lc_field) / (4.0 * beta),
            (lc_plus - lc_minus) / (4.0 * beta),
        )
    };
    let effective_coupling = j - bond_shift;
    let effective_field = h - field_shift;
    let offset_g = if beta < SMALL_BETA {
        beta * effective_coupling * effective_field
    } else {
        (ln_cosh(beta * (effective_coupling + effective_field))
            - ln_cosh(beta * (effective_coupling - effective_field)))
            / (2.0 * beta)
    };

    let out = RenormConstants {
        log_norm_a,
        bond_shift,
        field_shift,
        effective_coupling,
        effective_field,
        offset_g,
    };
    if [log_norm_a, bond_shift, field_shift, offset_g]
        .iter()
        .any(|v| !v.is_finite())
    {
        return Err(Error::NumericConsistency(format!(
            "non-finite renormalization constants {out:?}"
        )));
    }
    Ok(out)
}

/// Rotation angles of the triangle circuit, all in `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
    /// Third spin when `z1 + z2 = +2` (both control bits 0).
    pub theta_0: f64,
    /// Third spin when `z1 + z2 = 0`.
    pub theta_1: f64,
    /// Third spin when `z1 + z2 = -2` (both control bits 1).
    pub theta_2: f64,
}

impl AngleSet {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.theta_x,
            self.theta_y,
            self.theta_z,
            self.theta_0,
            self.theta_1,
            self.theta_2,
        ]
    }
}

/// Angle with `cos^2 = p0` and `sin^2 = p1`, range-checked.
pub fn angle_from_probabilities(p0: f64, p1: f64) -> Result<f64> {
    let check = |p: f64, name: &str| -> Result<f64> {
        if !(-ARCCOS_TOLERANCE..=1.0 + ARCCOS_TOLERANCE).contains(&p) {
            return Err(Error::NumericConsistency(format!(
                "{name} = {p} outside [0, 1] beyond tolerance"
            )));
        }
        Ok(p.clamp(0.0, 1.0))
    };
    let p0 = check(p0, "cos^2")?;
    let p1 = check(p1, "sin^2")?;
    if (p0 + p1 - 1.0).abs() > ARCCOS_TOLERANCE {
        return Err(Error::NumericConsistency(format!(
            "cos^2 + sin^2 = {} != 1",
            p0 + p1
        )));
    }
    Ok(p1.sqrt().atan2(p0.sqrt()))
}

/// Angle with `cos^2 = e^{-x} / (2 cosh x)`.
fn boltzmann_angle(x: f64) -> Result<f64> {
    angle_from_probabilities(logistic(-2.0 * x), logistic(2.0 * x))
}

pub fn cets_angles(params: &ModelParams) -> Result<AngleSet> {
    let rc = effective_params(params)?;
    let beta = params.beta;
    let (j, h) = (params.coupling, params.field);
    let (jt, ht) = (rc.effective_coupling, rc.effective_field);
    Ok(AngleSet {
        theta_x: boltzmann_angle(beta * (ht - rc.offset_g))?,
        theta_y: boltzmann_angle(beta * (jt + ht))?,
        theta_z: boltzmann_angle(beta * (-jt + ht))?,
        theta_0: boltzmann_angle(beta * (2.0 * j + h))?,
        theta_1: boltzmann_angle(beta * h)?,
        theta_2: boltzmann_angle(beta * (-2.0 * j + h))?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GateKind {
    /// Real rotation `[[cos t, -sin t], [sin t, cos t]]`.
    Rotation { theta: f64 },
    Hadamard,
    Pauli { op: Pauli },
}

/// A single-target gate, applied only where every control bit is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub controls: Vec<usize>,
}

impl Gate {
    pub fn rotation(target: usize, theta: f64) -> Self {
        Self {
            kind: GateKind::Rotation { theta },
            target,
            controls: Vec::new(),
        }
    }

    pub fn controlled_rotation(target: usize, controls: Vec<usize>, theta: f64) -> Self {
        Self {
            kind: GateKind::Rotation { theta },
            target,
            controls,
        }
    }

    pub fn hadamard(target: usize) -> Self {
        Self {
            kind: GateKind::Hadamard,
            target,
            controls: Vec::new(),
        }
    }

    pub fn controlled_pauli(target: usize, controls: Vec<usize>, op: Pauli) -> Self {
        Self {
            kind: GateKind::Pauli { op },
            target,
            controls,
        }
    }

    pub fn validate(&self, qubit_count: usize) -> Result<()> {
        if self.target >= qubit_count {
            return Err(Error::Domain(format!(
                "gate target {} outside {qubit_count} qubits",
                self.target
            )));
        }
        for (i, &c) in self.controls.iter().enumerate() {
            if c >= qubit_count {
                return Err(Error::Domain(format!("control {c} outside {qubit_count} qubits")));
            }
            if c == self.target {
                return Err(Error::Domain(format!("qubit {c} is both target and control")));
            }
            if self.controls[..i].contains(&c) {
                return Err(Error::Domain(format!("control {c} repeated")));
            }
        }
        if let GateKind::Rotation { theta } = self.kind {
            if !theta.is_finite() {
                return Err(Error::Domain(format!("non-finite rotation angle {theta}")));
            }
        }
        Ok(())
    }

    fn shifted(&self, by: usize) -> Self {
        Self {
            kind: self.kind,
            target: self.target + by,
            controls: self.controls.iter().map(|c| c + by).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub qubit_count: usize,
    pub gates: Vec<Gate>,
    /// Model the circuit was synthesized from.
    pub params: Option<ModelParams>,
    /// Unix seconds at synthesis.
    pub synthesized_at: Option<u64>,
}

impl Circuit {
    pub fn new(qubit_count: usize) -> Self {
        Self {
            qubit_count,
            gates: Vec::new(),
            params: None,
            synthesized_at: None,
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.qubit_count)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.gates.iter().try_for_each(|g| g.validate(self.qubit_count))
    }

    /// Shifts every gate up by one qubit and prepares qubit 0 in
    /// `(|0> + |1>)/sqrt(2)`.
    pub fn with_probe(&self) -> Self {
        let mut gates = Vec::with_capacity(self.gates.len() + 1);
        gates.push(Gate::hadamard(0));
        gates.extend(self.gates.iter().map(|g| g.shifted(1)));
        Self {
            qubit_count: self.qubit_count + 1,
            gates,
            params: self.params,
            synthesized_at: self.synthesized_at,
        }
    }

    pub fn rotation_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g.kind, GateKind::Rotation { .. }))
            .count()
    }
}

fn now_unix() -> Option<u64> {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

/// Triangle CETS circuit on register qubits 0..3, or 1..4 behind a probe.
pub fn build_triangle_circuit(params: &ModelParams, include_probe: bool) -> Result<Circuit> {
    if params.topology != Topology::Triangle {
        return Err(Error::UnsupportedTopology(format!(
            "triangle circuit requested for {:?}",
            params.topology
        )));
    }
    let a = cets_angles(params)?;
    let mut c = Circuit::new(3);
    c.params = Some(*params);
    c.synthesized_at = now_unix();
    // first two spins, renormalized
    c.push(Gate::rotation(0, a.theta_x))?;
    c.push(Gate::rotation(1, a.theta_y))?;
    c.push(Gate::controlled_rotation(1, vec![0], a.theta_z - a.theta_y))?;
    // third spin: R(t0), then U1 per set control, then U2 when both are set;
    // the product telescopes to R(t0), R(t1), R(t1), R(t2)
    let u1 = a.theta_1 - a.theta_0;
    c.push(Gate::rotation(2, a.theta_0))?;
    c.push(Gate::controlled_rotation(2, vec![0], u1))?;
    c.push(Gate::controlled_rotation(2, vec![1], u1))?;
    c.push(Gate::controlled_rotation(
        2,
        vec![0, 1],
        a.theta_2 - (2.0 * a.theta_1 - a.theta_0),
    ))?;
    Ok(if include_probe { c.with_probe() } else { c })
}

/// Open-chain CETS circuit with `2n - 1` rotations.
pub fn build_chain_circuit(params: &ModelParams) -> Result<Circuit> {
    let n = match params.topology {
        Topology::OpenChain(n) => n,
        Topology::Triangle => {
            return Err(Error::UnsupportedTopology(
                "chain circuit requested for the triangle".into(),
            ))
        }
    };
    if n > MAX_CHAIN_SPINS {
        return Err(Error::Capacity(format!(
            "{n} spins exceeds simulable chain length {MAX_CHAIN_SPINS}"
        )));
    }
    let cond = chain_conditionals(params)?;
    let mut c = Circuit::new(n);
    c.params = Some(*params);
    c.synthesized_at = now_unix();
    c.push(Gate::rotation(0, angle_from_probabilities(cond.first[0], cond.first[1])?))?;
    for (i, t) in cond.transitions.iter().enumerate() {
        let after_zero = angle_from_probabilities(t[0][0], t[0][1])?;
        let after_one = angle_from_probabilities(t[1][0], t[1][1])?;
        c.push(Gate::rotation(i + 1, after_zero))?;
        c.push(Gate::controlled_rotation(i + 1, vec![i], after_one - after_zero))?;
    }
    Ok(c)
}

/// Dispatches on topology. Probe wrapping is available for both.
pub fn build_circuit(params: &ModelParams, include_probe: bool) -> Result<Circuit> {
    match params.topology {
        Topology::Triangle => build_triangle_circuit(params, include_probe),
        Topology::OpenChain(_) => {
            let c = build_chain_circuit(params)?;
            Ok(if include_probe { c.with_probe() } else { c })
        }
    }
}

pub const CIRCUIT_FORMAT_VERSION: &str = "cets-circuit v1";

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_controls(controls: &[usize]) -> String {
    let parts: Vec<String> = controls.iter().map(|c| c.to_string()).collect();
    format!("[{}]", parts.join(","))
}

/// Line-oriented text form (`.cets`). Output is a pure function of the circuit.
pub fn export_circuit(circuit: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {CIRCUIT_FORMAT_VERSION}");
    let _ = writeln!(out, "# qubits={}", circuit.qubit_count);
    if let Some(p) = &circuit.params {
        let topo = match p.topology {
            Topology::Triangle => "triangle".to_string(),
            Topology::OpenChain(n) => format!("chain:{n}"),
        };
        let _ = writeln!(
            out,
            "# params topology={topo} J={} h={} beta={}",
            fmt_f64(p.coupling),
            fmt_f64(p.field),
            fmt_f64(p.beta)
        );
    }
    if let Some(t) = circuit.synthesized_at {
        let _ = writeln!(out, "# synthesized_at={t}");
    }
    for g in &circuit.gates {
        let controls = fmt_controls(&g.controls);
        let _ = match g.kind {
            GateKind::Rotation { theta } => writeln!(
                out,
                "ROT target={} controls={controls} theta={}",
                g.target,
                fmt_f64(theta)
            ),
            GateKind::Hadamard => writeln!(out, "H target={} controls={controls}", g.target),
            GateKind::Pauli { op } => writeln!(
                out,
                "PAULI target={} controls={controls} op={}",
                g.target,
                op.as_char()
            ),
        };
    }
    out
}

fn parse_kv(tokens: &[&str], line_no: usize) -> Result<Vec<(String, String)>> {
    tokens
        .iter()
        .map(|t| {
            t.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse(format!("line {line_no}: expected key=value, got {t:?}")))
        })
        .collect()
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str, line_no: usize) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Parse(format!("line {line_no}: missing {key}")))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, line_no: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line_no}: bad {what} {s:?}")))
}

/// Inverse of [`export_circuit`].
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut qubits = None;
    let mut params = None;
    let mut synthesized_at = None;
    let mut gates = Vec::new();
    let mut saw_version = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if rest == CIRCUIT_FORMAT_VERSION {
                saw_version = true;
            } else if let Some(v) = rest.strip_prefix("qubits=") {
                qubits = Some(parse_num::<usize>(v, "qubit count", line_no)?);
            } else if let Some(v) = rest.strip_prefix("synthesized_at=") {
                synthesized_at = Some(parse_num::<u64>(v, "timestamp", line_no)?);
            } else if let Some(v) = rest.strip_prefix("params ") {
                let tokens: Vec<&str> = v.split_whitespace().collect();
                let kv = parse_kv(&tokens, line_no)?;
                let topology = match lookup(&kv, "topology", line_no)? {
                    "triangle" => Topology::Triangle,
                    t => match t.strip_prefix("chain:") {
                        Some(n) => Topology::OpenChain(parse_num(n, "chain length", line_no)?),
                        None => return Err(Error::Parse(format!("line {line_no}: bad topology {t:?}"))),
                    },
                };
                params = Some(ModelParams {
                    coupling: parse_num(lookup(&kv, "J", line_no)?, "J", line_no)?,
                    field: parse_num(lookup(&kv, "h", line_no)?, "h", line_no)?,
                    beta: parse_num(lookup(&kv, "beta", line_no)?, "beta", line_no)?,
                    topology,
                });
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let kv = parse_kv(&tokens[1..], line_no)?;
        let target = parse_num(lookup(&kv, "target", line_no)?, "target", line_no)?;
        let controls_raw = lookup(&kv, "controls", line_no)?;
        let inner = controls_raw
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("line {line_no}: bad control list {controls_raw:?}")))?;
        let controls = if inner.is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|c| parse_num(c, "control", line_no))
                .collect::<Result<Vec<usize>>>()?
        };
        let kind = match tokens[0] {
            "ROT" => GateKind::Rotation {
                theta: parse_num(lookup(&kv, "theta", line_no)?, "theta", line_no)?,
            },
            "H" => GateKind::Hadamard,
            "PAULI" => {
                let op = lookup(&kv, "op", line_no)?;
                let mut chars = op.chars();
                let p = match (chars.next().and_then(Pauli::from_char), chars.next()) {
                    (Some(p), None) => p,
                    _ => return Err(Error::Parse(format!("line {line_no}: bad Pauli {op:?}"))),
                };
                GateKind::Pauli { op: p }
            }
            other => return Err(Error::Parse(format!("line {line_no}: unknown gate {other:?}"))),
        };
        gates.push(Gate {
            kind,
            target,
            controls,
        });
    }

    if !saw_version {
        return Err(Error::Parse(format!("missing '# {CIRCUIT_FORMAT_VERSION}' header")));
    }
    let qubit_count = qubits.ok_or_else(|| Error::Parse("missing qubits header".into()))?;
    let c = Circuit {
        qubit_count,
        gates,
        params,
        synthesized_at,
    };
    c.validate().map_err(|e| e.context("invalid circuit file"))?;
    Ok(c)
}

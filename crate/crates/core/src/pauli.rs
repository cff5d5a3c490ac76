//! Pauli strings over a register of qubits.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// The 2x2 matrix, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// A tensor product of single-qubit Paulis, one letter per register qubit.
///
/// Letter `i` acts on register qubit `i`, which is bit `len - 1 - i` of a basis
/// index. Two textual forms are accepted: dense (`"ZZI"`) and sparse with
/// 1-based qubit numbers (`"Z1Z2"`, which needs the register size).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        Ok(Self { letters })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            letters: vec![Pauli::I; len.max(1)],
        }
    }

    /// A single letter on 0-based register qubit `qubit`.
    pub fn single(len: usize, qubit: usize, p: Pauli) -> Result<Self> {
        if qubit >= len {
            return Err(Error::Domain(format!("qubit {qubit} outside register of {len}")));
        }
        let mut letters = vec![Pauli::I; len];
        letters[qubit] = p;
        Ok(Self { letters })
    }

    /// Product of `Z` on each listed 0-based register qubit.
    pub fn z_product(len: usize, qubits: &[usize]) -> Result<Self> {
        let mut letters = vec![Pauli::I; len];
        for &q in qubits {
            if q >= len {
                return Err(Error::Domain(format!("qubit {q} outside register of {len}")));
            }
            letters[q] = Pauli::Z;
        }
        Self::new(letters)
    }

    /// Parses the sparse form, e.g. `Z1Z3` or `X2`, on a register of `len`.
    /// `I` alone denotes the identity.
    pub fn parse_sparse(label: &str, len: usize) -> Result<Self> {
        let label = label.trim();
        if label.eq_ignore_ascii_case("I") {
            return Ok(Self::identity(len));
        }
        let mut letters = vec![Pauli::I; len];
        let chars: Vec<char> = label.chars().collect();
        let mut pos = 0;
        if chars.is_empty() {
            return Err(Error::Parse("empty Pauli label".into()));
        }
        while pos < chars.len() {
            let p = Pauli::from_char(chars[pos])
                .ok_or_else(|| Error::Parse(format!("bad Pauli letter in {label:?}")))?;
            pos += 1;
            let start = pos;
            while pos < chars.len() && chars[pos].is_ascii_digit() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Parse(format!("missing qubit number in {label:?}")));
            }
            let digits: String = chars[start..pos].iter().collect();
            let q: usize = digits
                .parse()
                .map_err(|_| Error::Parse(format!("bad qubit number in {label:?}")))?;
            if q == 0 || q > len {
                return Err(Error::Parse(format!(
                    "qubit {q} in {label:?} outside 1..={len}"
                )));
            }
            if letters[q - 1] != Pauli::I {
                return Err(Error::Parse(format!("qubit {q} repeated in {label:?}")));
            }
            letters[q - 1] = p;
        }
        Self::new(letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Only `I` and `Z` letters.
    pub fn is_diagonal(&self) -> bool {
        self.letters.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Sparse label with 1-based qubit numbers, `I` for the identity.
    pub fn sparse_label(&self) -> String {
        if self.is_identity() {
            return "I".into();
        }
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(i, p)| format!("{}{}", p.as_char(), i + 1))
            .collect()
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.letters.len() - 1 - qubit)
    }

    /// Bits flipped by `X` and `Y`.
    pub fn flip_mask(&self) -> usize {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .fold(0, |m, (i, _)| m | self.bit(i))
    }

    /// Bits that contribute a sign, from `Y` and `Z`.
    pub fn sign_mask(&self) -> usize {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::Y | Pauli::Z))
            .fold(0, |m, (i, _)| m | self.bit(i))
    }

    /// `P|k> = phase(k) |k ^ flip_mask>`; returns `(k ^ flip_mask, phase(k))`.
    pub fn act_on_basis(&self, k: usize) -> (usize, Complex64) {
        let ny = self.letters.iter().filter(|&&p| p == Pauli::Y).count();
        let base = match ny % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let sign = if (k & self.sign_mask()).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        (k ^ self.flip_mask(), base * sign)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Dense form: one letter per qubit, e.g. `"XIZ"`.
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_agree() {
        let a: PauliString = "ZIZ".parse().unwrap();
        let b = PauliString::parse_sparse("Z1Z3", 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sparse_label(), "Z1Z3");
        assert_eq!(a.to_string(), "ZIZ");
    }

    #[test]
    fn malformed_strings_are_rejected() {
        assert!("".parse::<PauliString>().is_err());
        assert!("ZQ".parse::<PauliString>().is_err());
        assert!(PauliString::parse_sparse("Z4", 3).is_err());
        assert!(PauliString::parse_sparse("Z0", 3).is_err());
        assert!(PauliString::parse_sparse("Z1Z1", 3).is_err());
        assert!(PauliString::parse_sparse("Z", 3).is_err());
    }

    #[test]
    fn basis_action_matches_matrices() {
        // single-qubit check of every letter against its matrix
        for p in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
            let s = PauliString::new(vec![p]).unwrap();
            let m = p.matrix();
            for k in 0..2 {
                let (j, phase) = s.act_on_basis(k);
                assert_eq!(m[j][k], phase);
            }
        }
    }

    #[test]
    fn identity_label() {
        let id = PauliString::identity(3);
        assert!(id.is_identity());
        assert_eq!(id.sparse_label(), "I");
        assert_eq!(PauliString::parse_sparse("I", 3).unwrap(), id);
    }
}

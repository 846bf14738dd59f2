//! Exact symbolic engine for Witt, Heisenberg and Feigin-Fuchs operators.
//!
//! Polynomials live in `Q(i, sqrt 2)[Q, alpha, alphabar, c, phi_m, phibar_m]`; all
//! relation checks are exact. Gaussian inner products use Wick's rule.

pub mod checks;
pub mod ops;
pub mod poly;
pub mod scalar;
pub mod verma;
pub mod wick;

pub use ops::{Engine, OperatorExpr};
pub use poly::{ModePoly, Monomial, Var};
pub use scalar::Scalar;
pub use verma::{basis_state_gram, kac_membership, KacClass};
pub use wick::{inner, wick_expectation, WickLaw};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VirasoroError {
    #[error("mode truncation exceeded at {var}")]
    Truncation { var: String },
    #[error("zero mode c cannot be integrated by Wick's rule")]
    ZeroModeInExpectation,
    #[error("expression is not a constant")]
    NotConstant,
    #[error("partition weight {0} exceeds the supported range")]
    PartitionOverflow(u32),
    #[error("Gram constant mismatch: commutator {commutator} vs Wick {wick}")]
    GramMismatch { commutator: String, wick: String },
}

/// Integer partition by multiplicities: `0[i]` is the multiplicity of part `i + 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Partition(pub Vec<u32>);

impl Partition {
    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    /// Partition from its parts, e.g. `[2, 1, 1]`.
    pub fn from_parts(parts: &[u32]) -> Self {
        let top = parts.iter().copied().max().unwrap_or(0) as usize;
        let mut k = vec![0; top];
        for &p in parts {
            if p > 0 {
                k[p as usize - 1] += 1;
            }
        }
        Partition(k)
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().enumerate().map(|(i, m)| (i as u32 + 1) * m).sum()
    }

    /// All partitions of `n`.
    pub fn all_of_weight(n: u32) -> Vec<Partition> {
        fn rec(n: u32, max: u32, acc: &mut Vec<u32>, out: &mut Vec<Partition>) {
            if n == 0 {
                out.push(Partition::from_parts(acc));
                return;
            }
            for p in (1..=n.min(max)).rev() {
                acc.push(p);
                rec(n - p, p, acc, out);
                acc.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, n, &mut Vec::new(), &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (0..7).map(|n| Partition::all_of_weight(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 7, 11]);
        assert_eq!(Partition::from_parts(&[2, 1, 1]).weight(), 4);
    }
}

//! Post-selection and encoding-conversion circuits.
//!
//! Every builder returns a [`Circuit`] whose first `n` wires are data wires
//! (little-endian) followed by the builder's ancilla wires. Acceptance of the
//! noiseless circuit on a basis state is exactly 1 when the state satisfies
//! [`EncodingSpec::is_valid`] and exactly 0 otherwise.

mod convert;
mod filters;

pub use convert::{gray_to_binary, onehot_compress, onehot_output_wires, onehot_postselect, onehot_postselect_with,
    onehot_zero_wires, wall_to_onehot};
pub use filters::{binary_bound_filter, domainwall_filter, gray_bound_filter, khot_filter, mixed_decode, mixed_filter,
    BoundCheck, DomainWallVariant, KHotVariant, MixedVariant};

use crate::circuit::{Circuit, CircuitError};
use crate::linalg::ceil_log2;
use crate::sim::{SimError, Statevector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("variant `{variant}` does not apply to {encoding}")]
    VariantMismatch { variant: String, encoding: &'static str },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub(crate) fn invalid(msg: impl Into<String>) -> BuildError {
    BuildError::InvalidParameter(msg.into())
}

/// Number of verification blocks needed to read a count in `0..=n`.
pub fn count_blocks(n: usize) -> usize {
    ceil_log2(n + 1)
}

/// An encoding together with its data width and parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncodingSpec {
    KHot { n: usize, k: usize },
    OneHot { n: usize },
    DomainWall { n: usize },
    BinaryBound { n: usize, mu: u64 },
    GrayBound { n: usize, mu: u64 },
    Mixed { l: usize, m: usize, mu_last: Option<u64> },
}

/// Gray code to binary: bit j of the result is the XOR of Gray bits ≥ j.
pub fn gray_decode(g: u64) -> u64 {
    let mut b = g;
    let mut shift = 1;
    while shift < 64 {
        b ^= b >> shift;
        shift <<= 1;
    }
    b
}

impl EncodingSpec {
    pub fn data_width(&self) -> usize {
        match *self {
            EncodingSpec::KHot { n, .. }
            | EncodingSpec::OneHot { n }
            | EncodingSpec::DomainWall { n }
            | EncodingSpec::BinaryBound { n, .. }
            | EncodingSpec::GrayBound { n, .. } => n,
            EncodingSpec::Mixed { l, m, .. } => l * m,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EncodingSpec::KHot { .. } => "khot",
            EncodingSpec::OneHot { .. } => "onehot",
            EncodingSpec::DomainWall { .. } => "wall",
            EncodingSpec::BinaryBound { .. } => "binary",
            EncodingSpec::GrayBound { .. } => "gray",
            EncodingSpec::Mixed { .. } => "mixed",
        }
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        let bound = |n: usize, mu: u64| {
            if n == 0 || n > 63 {
                Err(invalid(format!("width {n} outside 1..=63")))
            } else if mu >= 1u64 << n {
                Err(invalid(format!("mu {mu} does not fit in {n} bits")))
            } else {
                Ok(())
            }
        };
        match *self {
            EncodingSpec::KHot { n, k } if k == 0 || k > n => Err(invalid(format!("k = {k} must lie in 1..={n}"))),
            EncodingSpec::KHot { .. } => Ok(()),
            EncodingSpec::OneHot { n } | EncodingSpec::DomainWall { n } if n < 2 => {
                Err(invalid(format!("n = {n} must be at least 2")))
            }
            EncodingSpec::OneHot { .. } | EncodingSpec::DomainWall { .. } => Ok(()),
            EncodingSpec::BinaryBound { n, mu } | EncodingSpec::GrayBound { n, mu } => bound(n, mu),
            EncodingSpec::Mixed { l, m, mu_last } => {
                if l == 0 || m == 0 {
                    return Err(invalid("l and m must be positive"));
                }
                match mu_last {
                    Some(mu) => bound(m, mu),
                    None => Ok(()),
                }
            }
        }
    }

    /// Validity predicate over a basis index (bit w = wire w).
    pub fn is_valid(&self, x: u64) -> bool {
        match *self {
            EncodingSpec::KHot { k, .. } => x.count_ones() as usize == k,
            EncodingSpec::OneHot { .. } => x.count_ones() == 1,
            // no wire i holding 0 with wire i+1 holding 1
            EncodingSpec::DomainWall { .. } => (!x & (x >> 1)) == 0,
            EncodingSpec::BinaryBound { mu, .. } => x <= mu,
            EncodingSpec::GrayBound { mu, .. } => gray_decode(x) <= mu,
            EncodingSpec::Mixed { l, m, mu_last } => {
                let mask = (1u64 << m) - 1;
                let groups: Vec<u64> = (0..l).map(|g| (x >> (g * m)) & mask).collect();
                let nonzero = groups.iter().filter(|&&v| v != 0).count();
                nonzero == 1 && mu_last.is_none_or(|mu| groups[l - 1] <= mu)
            }
        }
    }
}

/// Which circuit family realizes the check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterVariant {
    SingleAncilla,
    LogAncilla,
    Compression,
    Parallel,
    Inductive,
    Exact,
    CountSigma1,
    CountSiglog,
    StoreOnehot,
}

impl std::str::FromStr for FilterVariant {
    type Err = BuildError;

    fn from_str(s: &str) -> Result<Self, BuildError> {
        Ok(match s {
            "single" | "single_ancilla" => FilterVariant::SingleAncilla,
            "log" | "log_ancilla" => FilterVariant::LogAncilla,
            "compression" => FilterVariant::Compression,
            "parallel" => FilterVariant::Parallel,
            "inductive" => FilterVariant::Inductive,
            "exact" => FilterVariant::Exact,
            "sigma1" | "count_sigma1" => FilterVariant::CountSigma1,
            "siglog" | "count_siglog" => FilterVariant::CountSiglog,
            "store" | "store_onehot" => FilterVariant::StoreOnehot,
            other => return Err(invalid(format!("unknown variant `{other}`"))),
        })
    }
}

impl EncodingSpec {
    pub fn default_variant(&self) -> FilterVariant {
        match self {
            EncodingSpec::KHot { .. } => FilterVariant::SingleAncilla,
            EncodingSpec::OneHot { .. } => FilterVariant::Compression,
            EncodingSpec::DomainWall { .. } => FilterVariant::Parallel,
            EncodingSpec::BinaryBound { .. } | EncodingSpec::GrayBound { .. } => FilterVariant::Exact,
            EncodingSpec::Mixed { .. } => FilterVariant::StoreOnehot,
        }
    }

    /// All variants that apply to this encoding.
    pub fn variants(&self) -> &'static [FilterVariant] {
        use FilterVariant::*;
        match self {
            EncodingSpec::KHot { .. } => &[SingleAncilla, LogAncilla],
            EncodingSpec::OneHot { .. } => &[Compression, SingleAncilla, LogAncilla],
            EncodingSpec::DomainWall { .. } => &[Parallel, Inductive],
            EncodingSpec::BinaryBound { .. } | EncodingSpec::GrayBound { .. } => &[Exact],
            EncodingSpec::Mixed { .. } => &[CountSigma1, CountSiglog, StoreOnehot],
        }
    }

    /// Builds the post-selection circuit for this encoding.
    pub fn filter(&self, variant: FilterVariant) -> Result<Circuit, BuildError> {
        self.validate()?;
        let mismatch = || BuildError::VariantMismatch { variant: format!("{variant:?}"), encoding: self.name() };
        match (*self, variant) {
            (EncodingSpec::KHot { n, k }, FilterVariant::SingleAncilla) => khot_filter(n, k, KHotVariant::SingleAncilla),
            (EncodingSpec::KHot { n, k }, FilterVariant::LogAncilla) => khot_filter(n, k, KHotVariant::LogAncilla),
            (EncodingSpec::OneHot { n }, FilterVariant::Compression) => onehot_postselect(n),
            (EncodingSpec::OneHot { n }, FilterVariant::SingleAncilla) => khot_filter(n, 1, KHotVariant::SingleAncilla),
            (EncodingSpec::OneHot { n }, FilterVariant::LogAncilla) => khot_filter(n, 1, KHotVariant::LogAncilla),
            (EncodingSpec::DomainWall { n }, FilterVariant::Parallel) => domainwall_filter(n, DomainWallVariant::Parallel),
            (EncodingSpec::DomainWall { n }, FilterVariant::Inductive) => {
                domainwall_filter(n, DomainWallVariant::Inductive)
            }
            (EncodingSpec::BinaryBound { n, mu }, FilterVariant::Exact) => binary_bound_filter(n, mu, BoundCheck::Full),
            (EncodingSpec::GrayBound { n, mu }, FilterVariant::Exact) => gray_bound_filter(n, mu),
            (EncodingSpec::Mixed { l, m, mu_last }, FilterVariant::CountSigma1) => {
                mixed_filter(l, m, MixedVariant::CountSigma1, mu_last)
            }
            (EncodingSpec::Mixed { l, m, mu_last }, FilterVariant::CountSiglog) => {
                mixed_filter(l, m, MixedVariant::CountSiglog, mu_last)
            }
            (EncodingSpec::Mixed { l, m, mu_last }, FilterVariant::StoreOnehot) => {
                mixed_filter(l, m, MixedVariant::StoreOnehot, mu_last)
            }
            _ => Err(mismatch()),
        }
    }
}

/// Outcome of running a filter on every data basis state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checked: usize,
    pub passed: usize,
    /// Basis states whose acceptance disagreed with the predicate.
    pub failures: Vec<u64>,
    /// Largest |p − predicate| seen.
    pub max_error: f64,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.checked
    }
}

/// Noiseless acceptance probability of `c` on data basis state `x`, with
/// ancillas starting in |0⟩. Also returns whether an accepted branch left
/// the register unchanged.
pub fn basis_acceptance(c: &Circuit, x: u64) -> Result<(f64, bool), BuildError> {
    let mut s = Statevector::basis(c.n_qubits(), x as usize)?;
    match s.run(c) {
        Ok(()) => {
            let amp = s.amplitudes()[x as usize].norm_sqr();
            Ok((s.acceptance(), (amp - 1.0).abs() < 1e-9))
        }
        Err(SimError::Rejected(_)) => Ok((0.0, true)),
        Err(e) => Err(e.into()),
    }
}

/// Checks `c` against the validity predicate of `spec` on all 2^n data basis
/// states.
pub fn verify_filter(spec: &EncodingSpec, c: &Circuit, tol: f64) -> Result<OracleReport, BuildError> {
    let n = spec.data_width();
    if n > 24 {
        return Err(invalid(format!("exhaustive check over {n} wires is too large")));
    }
    let mut report = OracleReport { checked: 0, passed: 0, failures: Vec::new(), max_error: 0.0 };
    for x in 0..1u64 << n {
        let (p, intact) = basis_acceptance(c, x)?;
        let want = if spec.is_valid(x) { 1.0 } else { 0.0 };
        let err = (p - want).abs();
        report.checked += 1;
        report.max_error = report.max_error.max(err);
        if err < tol && intact {
            report.passed += 1;
        } else {
            report.failures.push(x);
        }
    }
    Ok(report)
}

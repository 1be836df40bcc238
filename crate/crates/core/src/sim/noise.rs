use super::SimError;
use crate::linalg::{max_abs_diff, Mat2, ONE, ZERO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    #[default]
    None,
    Depolarizing,
    AmplitudeDamping,
    RandomX,
}

impl FromStr for NoiseFamily {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "none" => Ok(NoiseFamily::None),
            "depol" | "depolarizing" => Ok(NoiseFamily::Depolarizing),
            "ampdamp" | "amplitude_damping" => Ok(NoiseFamily::AmplitudeDamping),
            "randx" | "random_x" => Ok(NoiseFamily::RandomX),
            other => Err(SimError::InvalidNoise(format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseFamily::None => "none",
            NoiseFamily::Depolarizing => "depol",
            NoiseFamily::AmplitudeDamping => "ampdamp",
            NoiseFamily::RandomX => "randx",
        })
    }
}

/// A noise channel applied after every gate on the wires it acts on.
///
/// Depolarizing acts jointly on the gate's subsystem:
/// ρ ↦ (1−γ)ρ + γ·(I/d ⊗ Tr_sub ρ) with d = 2 or 4. Amplitude damping and
/// random-X act independently on each wire of the gate.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    family: NoiseFamily,
    gamma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseModel {
    /// Validates γ ∈ [0, 1] and the completeness Σ K†K = I of the Kraus set.
    pub fn new(family: NoiseFamily, gamma: f64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(SimError::InvalidNoise(format!("gamma {gamma} outside [0, 1]")));
        }
        let m = Self { family, gamma };
        let err = m.completeness_error();
        if err > 1e-12 {
            return Err(SimError::InvalidNoise(format!("Kraus completeness error {err:e}")));
        }
        Ok(m)
    }

    pub fn none() -> Self {
        Self { family: NoiseFamily::None, gamma: 0.0 }
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_noiseless(&self) -> bool {
        self.family == NoiseFamily::None || self.gamma == 0.0
    }

    /// Single-qubit Kraus operators of the channel.
    pub fn kraus_1q(&self) -> Vec<Mat2> {
        let g = self.gamma;
        let r = |x: f64| C64::new(x.max(0.0).sqrt(), 0.0);
        match self.family {
            NoiseFamily::None => vec![Mat2::identity()],
            NoiseFamily::Depolarizing => vec![
                Mat2::identity().scale(r(1.0 - 0.75 * g)),
                Mat2::x().scale(r(g / 4.0)),
                Mat2::y().scale(r(g / 4.0)),
                Mat2::z().scale(r(g / 4.0)),
            ],
            NoiseFamily::AmplitudeDamping => {
                vec![Mat2::new(ONE, ZERO, ZERO, r(1.0 - g)), Mat2::new(ZERO, r(g), ZERO, ZERO)]
            }
            NoiseFamily::RandomX => vec![Mat2::identity().scale(r(1.0 - g)), Mat2::x().scale(r(g))],
        }
    }

    /// max |Σ K†K − I| over the single-qubit Kraus set.
    pub fn completeness_error(&self) -> f64 {
        let zero = Mat2::new(ZERO, ZERO, ZERO, ZERO);
        let sum = self.kraus_1q().iter().fold(zero, |acc, k| {
            let p = k.adjoint() * *k;
            Mat2::new(acc.0[0][0] + p.0[0][0], acc.0[0][1] + p.0[0][1], acc.0[1][0] + p.0[1][0], acc.0[1][1] + p.0[1][1])
        });
        max_abs_diff(&sum, &Mat2::identity())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completeness_holds_across_gamma() {
        for fam in [NoiseFamily::Depolarizing, NoiseFamily::AmplitudeDamping, NoiseFamily::RandomX] {
            for i in 0..=20 {
                let m = NoiseModel::new(fam, i as f64 / 20.0).unwrap();
                assert!(m.completeness_error() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(NoiseModel::new(NoiseFamily::RandomX, 1.5).is_err());
        assert!(NoiseModel::new(NoiseFamily::RandomX, -0.1).is_err());
    }

    #[test]
    fn parses_cli_names() {
        for f in [NoiseFamily::None, NoiseFamily::Depolarizing, NoiseFamily::AmplitudeDamping, NoiseFamily::RandomX] {
            assert_eq!(f.to_string().parse::<NoiseFamily>().unwrap(), f);
        }
    }
}

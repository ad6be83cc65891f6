//! JSON experiment configuration.

use crate::HarnessError;
use qwalk::coin::{derive_params, make_phased_hadamard, random_coin, CoinU2, DerivedParams, InitialState, UNITARY_TOL};
use qwalk::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kappa: usize,
    #[serde(default)]
    pub kappa_prime: Option<usize>,
    pub coin: CoinSpec,
    /// Phase ω of the root coin in tree-check, as [re, im].
    #[serde(default)]
    pub omega: Option<[f64; 2]>,
    pub psi: PsiSpec,
    pub t_max: usize,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoinSpec {
    /// e^{i·phase}·H with the phase in degrees.
    Hadamard {
        #[serde(default)]
        phase_deg: f64,
    },
    /// Entries a, b, c, d as [re, im] pairs.
    Custom { entries: [[f64; 2]; 4] },
    /// Drawn from the config seed.
    Random,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PsiSpec {
    Named(PsiName),
    Explicit(Vec<[f64; 2]>),
    /// Per-component magnitude and phase in degrees.
    Polar {
        polar: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PsiName {
    Symmetric,
    Random,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum CompareMode {
    Fig2,
    #[default]
    Fig3,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum WalkKind {
    #[default]
    Reduced,
    Joined,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub r: usize,
    /// Position for fig2 rows.
    #[serde(default = "default_x")]
    pub x: usize,
    #[serde(default)]
    pub x_max: Option<usize>,
    #[serde(default)]
    pub t_min: Option<usize>,
    #[serde(default)]
    pub mode: CompareMode,
    #[serde(default)]
    pub walk: WalkKind,
    #[serde(default = "default_pred_floor")]
    pub pred_floor: f64,
    #[serde(default = "default_window")]
    pub near_zero_window: usize,
    #[serde(default = "default_atom_tolerance")]
    pub atom_tolerance: f64,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_x() -> usize {
    1
}
fn default_pred_floor() -> f64 {
    1e-8
}
fn default_window() -> usize {
    10
}
fn default_atom_tolerance() -> f64 {
    0.01
}
fn default_bins() -> usize {
    50
}

impl Default for Options {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all option fields have defaults")
    }
}

/// A config after validation: coin, parameters and ψ are ready to use.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub coin: CoinU2,
    pub params: DerivedParams,
    pub psi: InitialState,
    pub omega: C64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Number of components ψ must have: κ′ for tree-check, κ otherwise.
    fn psi_len(&self, tree: bool) -> usize {
        if tree {
            self.kappa_prime.unwrap_or(self.kappa)
        } else {
            self.kappa
        }
    }

    /// Checks every invariant and builds the runtime objects. `tree` selects
    /// the tree-check reading of κ and κ′.
    pub fn validate(self, tree: bool) -> Result<Experiment, HarnessError> {
        if self.kappa == 0 {
            return Err(HarnessError::Validation("kappa must be at least 1".into()));
        }
        if self.kappa_prime == Some(0) {
            return Err(HarnessError::Validation("kappa_prime must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let coin = match &self.coin {
            CoinSpec::Hadamard { phase_deg } => make_phased_hadamard(phase_deg.to_radians()),
            CoinSpec::Custom { entries } => {
                let [a, b, c, d] = entries.map(|[re, im]| C64::new(re, im));
                CoinU2::new(a, b, c, d)?
            }
            CoinSpec::Random => random_coin(&mut rng),
        };
        let n = self.psi_len(tree);
        let psi = match &self.psi {
            PsiSpec::Named(PsiName::Symmetric) => InitialState::symmetric(n),
            PsiSpec::Named(PsiName::Random) => InitialState::random(n, &mut rng),
            PsiSpec::Explicit(v) => InitialState::for_kappa(v.iter().map(|[re, im]| C64::new(*re, *im)).collect(), n)?,
            PsiSpec::Polar { polar } => {
                InitialState::for_kappa(polar.iter().map(|[m, deg]| C64::from_polar(*m, deg.to_radians())).collect(), n)?
            }
        };
        let omega = self.omega.map(|[re, im]| C64::new(re, im)).unwrap_or(C64::new(1.0, 0.0));
        if (omega.norm() - 1.0).abs() > UNITARY_TOL {
            return Err(qwalk::coin::CoinError::NotUnitModulus(omega.norm()).into());
        }
        let params = derive_params(&coin, self.kappa)?;
        if self.options.r >= n {
            return Err(HarnessError::Validation(format!("options.r = {} but there are only {n} branches", self.options.r)));
        }
        if self.options.bins == 0 {
            return Err(HarnessError::Validation("options.bins must be positive".into()));
        }
        Ok(Experiment { coin, params, psi, omega, config: self })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"{
        "kappa": 3,
        "coin": {"type": "hadamard", "phase_deg": 80},
        "psi": {"polar": [[0.5773502691896258, 10], [0.5773502691896258, 30], [0.5773502691896258, 340]]},
        "t_max": 100
    }"#;

    #[test]
    fn parses_fig2_style_config() {
        let c = ExperimentConfig::from_json(FIG2).unwrap();
        assert_eq!(c.options.near_zero_window, 10);
        assert_eq!(c.options.mode, CompareMode::Fig3);
        let e = c.validate(false).unwrap();
        assert!((e.params.phi - 80f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalised_psi() {
        let text = FIG2.replace("0.5773502691896258, 10", "0.9, 10");
        let err = ExperimentConfig::from_json(&text).unwrap().validate(false).unwrap_err();
        assert!(err.to_string().contains("||psi|| = 1"));
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = FIG2.replace("\"t_max\"", "\"bogus\": 1, \"t_max\"");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn explicit_and_named_psi() {
        let text = FIG2.replace(
            r#"{"polar": [[0.5773502691896258, 10], [0.5773502691896258, 30], [0.5773502691896258, 340]]}"#,
            r#"[[1, 0], [0, 0], [0, 0]]"#,
        );
        assert!(ExperimentConfig::from_json(&text).unwrap().validate(false).is_ok());
        let text =
            FIG2.replace(r#"{"polar": [[0.5773502691896258, 10], [0.5773502691896258, 30], [0.5773502691896258, 340]]}"#, r#""random""#);
        let a = ExperimentConfig::from_json(&text).unwrap().validate(false).unwrap();
        let b = ExperimentConfig::from_json(&text).unwrap().validate(false).unwrap();
        assert_eq!(a.psi, b.psi);
    }

    #[test]
    fn rejects_non_unitary_custom_coin() {
        let text = FIG2.replace(r#"{"type": "hadamard", "phase_deg": 80}"#, r#"{"type": "custom", "entries": [[1,0],[1,0],[1,0],[1,0]]}"#);
        let err = ExperimentConfig::from_json(&text).unwrap().validate(false).unwrap_err();
        assert!(err.to_string().contains("unitary"));
    }
}

use std::path::Path;

use serde::Deserialize;
use spectral_da_core::{AssimilationProblem, CoeffSeq, SpectrumModel};

use crate::error::CliError;

/// An assimilation problem plus optional run parameters. Command-line flags
/// take precedence over the run parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub prior_mean: CoeffSeq,
    pub prior_spectrum: SpectrumModel,
    pub noise_spectrum: SpectrumModel,
    #[serde(default)]
    pub data: CoeffSeq,
    pub truncate: Option<u64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub dims: Option<Vec<u64>>,
    pub modes: Option<Vec<u64>>,
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn problem(&self) -> AssimilationProblem {
        AssimilationProblem::new(
            self.prior_mean.clone(),
            self.prior_spectrum.clone(),
            self.noise_spectrum.clone(),
            self.data.clone(),
        )
    }
}

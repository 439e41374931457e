//! Error categories and their process exit codes.

use meander_core::averaging::{AveragingError, PlantError};
use meander_core::center_bundle::CbError;
use meander_core::lattice_fhn::FhnError;
use meander_core::meander_analysis::AnalysisError;
use meander_core::torus_fourier::FourierError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("analysis: {0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Analysis(_) => 5,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<FhnError> for CliError {
    fn from(e: FhnError) -> Self {
        match e {
            FhnError::BlowUp { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

impl From<CbError> for CliError {
    fn from(e: CbError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AveragingError> for CliError {
    fn from(e: AveragingError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PlantError> for CliError {
    fn from(e: PlantError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FourierError> for CliError {
    fn from(e: FourierError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_distinct() {
        let codes: Vec<i32> = [
            CliError::Config(String::new()),
            CliError::Io(String::new()),
            CliError::Numerical(String::new()),
            CliError::Analysis(String::new()),
        ]
        .iter()
        .map(CliError::exit_code)
        .collect();
        assert_eq!(codes, vec![2, 3, 4, 5]);
    }

    #[test]
    fn blow_up_is_numerical() {
        let e: CliError = FhnError::BlowUp {
            index: 0,
            i: 0,
            j: 0,
            t: 1.0,
        }
        .into();
        assert_eq!(e.exit_code(), 4);
        let e: CliError = FhnError::Grid("n".into()).into();
        assert_eq!(e.exit_code(), 2);
    }
}

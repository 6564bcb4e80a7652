use skillgap::features::FeatureError;
use skillgap::fewshot::FewShotError;
use skillgap::ot::OtError;
use thiserror::Error;

/// Command failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or labels the protocol cannot use (exit 2).
    #[error("{0}")]
    Config(String),
    /// Unreadable or inconsistent input data (exit 3).
    #[error("{0}")]
    Data(String),
    /// A solver gave up (exit 4).
    #[error("{0}")]
    Solver(String),
    /// `selftest` found a failing check (exit 1).
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Solver(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<OtError> for CliError {
    fn from(e: OtError) -> Self {
        let msg = e.to_string();
        match e {
            OtError::InvalidArgument(_) => CliError::Config(msg),
            OtError::NumericalUnderflow { .. } | OtError::NotConverged { .. } | OtError::PivotLimit(_) => CliError::Solver(msg),
            _ => CliError::Data(msg),
        }
    }
}

impl From<FewShotError> for CliError {
    fn from(e: FewShotError) -> Self {
        let msg = e.to_string();
        match e {
            FewShotError::GrsOutOfTaskRange { .. } | FewShotError::MissingGrs { .. } | FewShotError::InvalidArgument(_) => {
                CliError::Config(msg)
            }
            _ => CliError::Data(msg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_partition_failures() {
        assert_eq!(CliError::from(OtError::DimMismatch { a: 384, b: 512 }).exit_code(), 3);
        assert_eq!(CliError::from(OtError::NotConverged { iterations: 1, error: 1.0 }).exit_code(), 4);
        assert_eq!(CliError::from(OtError::InvalidArgument("eps".into())).exit_code(), 2);
        assert_eq!(CliError::from(FewShotError::MissingGrs { video_id: "v".into() }).exit_code(), 2);
        assert_eq!(CliError::from(FewShotError::GrsOutOfTaskRange { grs: 12 }).exit_code(), 2);
        assert_eq!(CliError::from(FewShotError::CellMismatch("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(FeatureError::BadMagic { found: *b"XXXX" }).exit_code(), 3);
    }

    #[test]
    fn dim_mismatch_names_both_dims() {
        let msg = CliError::from(OtError::DimMismatch { a: 384, b: 512 }).to_string();
        assert!(msg.contains("384") && msg.contains("512"), "{msg}");
    }
}

use beable_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("optimization stopped at transfer {transfer:.6} below the goal {goal}")]
    BelowGoal { transfer: f64, goal: f64 },
    #[error("self-check failed for {path}: {reason}")]
    SelfCheck { path: String, reason: String },
}

impl CliError {
    /// 1 configuration, 2 numerical failure, 3 empty result.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::SelfCheck { .. } => 1,
            CliError::BelowGoal { .. } => 2,
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Core(CoreError::AllExcluded | CoreError::EmptySelection(_) | CoreError::InsufficientData(_)) => 3,
            CliError::Core(_) => 1,
        }
    }
}

//! End-to-end orchestration: load, split, train, privatise terms,
//! generate, select, evaluate, account.

mod config;
mod run;

pub use config::{
    default_delta, BudgetConfig, ConfigOverrides, EvaluationConfig, GenerationConfig,
    PathsConfig, PipelineConfig, QualityConfig, RunConfig, TermsConfig,
};
pub use run::{accountant_plan, run_pipeline, AccountantPlan, CorpusStats, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: StageError,
    },
}

impl PipelineError {
    pub fn is_config(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }
}

/// Any failure surfaced by a pipeline stage.
#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Rules(#[from] crate::structuring::RulesError),
    #[error(transparent)]
    Terms(#[from] crate::terms::TermsError),
    #[error(transparent)]
    Privacy(#[from] crate::privacy::PrivacyError),
    #[error(transparent)]
    Generation(#[from] crate::generation::GenerationError),
    #[error(transparent)]
    Quality(#[from] crate::quality::QualityError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn at_stage<T, E: Into<StageError>>(
    stage: &'static str,
    result: Result<T, E>,
) -> Result<T, PipelineError> {
    result.map_err(|e| PipelineError::Stage {
        stage,
        source: e.into(),
    })
}

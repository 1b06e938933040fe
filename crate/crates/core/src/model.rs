//! JSON model files: a skew system plus optional construction data.

use serde::{Deserialize, Serialize};

use crate::engine::{NonperiodicCaseParams, PeriodicCaseParams, SkewSystem, SystemSpec};
use crate::error::{Result, SpectraError};
use crate::symbolic::TransitionMatrix;

/// Subhorseshoe used to certify intervals below a level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subhorseshoe {
    pub matrix: TransitionMatrix,
    pub periodic_case: PeriodicCaseParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Model {
    #[serde(flatten)]
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic_case: Option<PeriodicCaseParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonperiodic_case: Option<NonperiodicCaseParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subhorseshoe: Option<Subhorseshoe>,
}

impl Model {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SpectraError::InvalidModel(e.to_string()))
    }

    pub fn system(&self) -> Result<SkewSystem> {
        let sys = SkewSystem::new(self.system.clone())?;
        if let Some(sub) = &self.subhorseshoe {
            sys.restricted(sub.matrix.clone())?;
        }
        Ok(sys)
    }
}

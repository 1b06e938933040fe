use serde::{Deserialize, Serialize};

use crate::symbolic::BiSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Markov,
    Lagrange,
}

impl SampleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleKind::Markov => "markov",
            SampleKind::Lagrange => "lagrange",
        }
    }
}

/// A spectrum value together with the orbit that realizes it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    /// `+∞` when the orbit is unbounded for the observable.
    pub value: f64,
    pub kind: SampleKind,
    pub witness: BiSequence,
    pub error_bound: f64,
    /// Set when part of the value comes from an approximation that is not
    /// covered by `error_bound` (e.g. tails of general cocycles).
    #[serde(default)]
    pub approximate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<String>,
}

impl SpectrumSample {
    /// `value, kind, witness, error_bound` CSV row (witness quoted).
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},\"{}\",{:e}",
            self.value,
            self.kind.as_str(),
            self.witness,
            self.error_bound
        )
    }

    pub const CSV_HEADER: &'static str = "value,kind,witness,error_bound";
}

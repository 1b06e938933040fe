use serde::{Deserialize, Serialize};

use super::observable::{Observable, ObservableSpec};
use crate::circle::{rationality_check, Cocycle, SteerConfig};
use crate::error::{Result, SpectraError};
use crate::symbolic::{BiSequence, EmbeddedPoint, EmbeddingSpec, TailBounds, TransitionMatrix};

/// Plain-data description of a skew product `Φ(x, t) = (φ(x), R_x(t))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemSpec {
    pub matrix: TransitionMatrix,
    pub embedding: EmbeddingSpec,
    pub cocycle: Cocycle,
    pub observable: ObservableSpec,
    /// Digits per half used when embedding sequences; chosen from the base
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

/// Validated skew product over an SFT. Immutable and shareable across threads.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SystemSpec", into = "SystemSpec")]
pub struct SkewSystem {
    spec: SystemSpec,
    obs: Observable,
    depth: usize,
    tails: TailBounds,
}

impl TryFrom<SystemSpec> for SkewSystem {
    type Error = SpectraError;
    fn try_from(s: SystemSpec) -> Result<Self> {
        SkewSystem::new(s)
    }
}

impl From<SkewSystem> for SystemSpec {
    fn from(s: SkewSystem) -> Self {
        s.spec
    }
}

impl SkewSystem {
    pub fn new(spec: SystemSpec) -> Result<Self> {
        spec.embedding.validate(spec.matrix.size())?;
        match &spec.cocycle {
            Cocycle::Rotation { alpha } if !alpha.is_finite() => {
                return Err(SpectraError::InvalidModel("rotation angle must be finite".into()))
            }
            Cocycle::AffineRotation { alpha, cs, cu } if ![alpha, cs, cu].iter().all(|v| v.is_finite()) => {
                return Err(SpectraError::InvalidModel("affine cocycle parameters must be finite".into()))
            }
            _ => {}
        }
        let depth = match spec.depth {
            Some(d) if !(4..=200).contains(&d) => {
                return Err(SpectraError::InvalidModel(format!("embedding depth {d} outside 4..=200")))
            }
            Some(d) => d,
            None => spec.embedding.depth_for(1e-16),
        };
        let obs = Observable::new(spec.observable.clone())?;
        let tails = TailBounds::new(&spec.embedding, &spec.matrix);
        Ok(SkewSystem { spec, obs, depth, tails })
    }

    /// Convenience constructor with an automatic embedding depth.
    pub fn build(
        matrix: TransitionMatrix,
        embedding: EmbeddingSpec,
        cocycle: Cocycle,
        observable: ObservableSpec,
    ) -> Result<Self> {
        Self::new(SystemSpec {
            matrix,
            embedding,
            cocycle,
            observable,
            depth: None,
        })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.spec.matrix
    }

    pub fn embedding(&self) -> &EmbeddingSpec {
        &self.spec.embedding
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.spec.cocycle
    }

    pub fn observable(&self) -> &Observable {
        &self.obs
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn tails(&self) -> &TailBounds {
        &self.tails
    }

    /// Same system restricted to another transition matrix (a subhorseshoe).
    pub fn restricted(&self, matrix: TransitionMatrix) -> Result<Self> {
        if matrix.size() != self.spec.matrix.size() {
            return Err(SpectraError::InvalidModel("subhorseshoe must use the same alphabet".into()));
        }
        for a in 0..matrix.size() as u32 {
            for b in 0..matrix.size() as u32 {
                if matrix.allows(a, b) && !self.spec.matrix.allows(a, b) {
                    return Err(SpectraError::InvalidModel(format!(
                        "transition {a}->{b} is not allowed in the parent system"
                    )));
                }
            }
        }
        Self::new(SystemSpec {
            matrix,
            ..self.spec.clone()
        })
    }

    /// Same system with another observable.
    pub fn with_observable(&self, observable: ObservableSpec) -> Result<Self> {
        Self::new(SystemSpec {
            observable,
            ..self.spec.clone()
        })
    }

    #[inline]
    pub fn embed_at(&self, s: &BiSequence, n: i64) -> EmbeddedPoint {
        self.spec.embedding.embed_at(s, n, self.depth)
    }

    /// Largest digit gap `max digit − min digit` times the ratio sum: the
    /// per-axis diameter of the whole embedded set.
    pub fn axis_span(&self) -> f64 {
        let e = &self.spec.embedding;
        let (lo, hi) = e.digits.iter().fold((u32::MAX, 0), |(a, b), &d| (a.min(d), b.max(d)));
        (hi - lo) as f64 * e.ratio() / (1.0 - e.ratio())
    }

    /// Euclidean distance bound between two embedded points whose sequences
    /// agree on `k` symbols on each side of the origin (`k ≥ 0`).
    pub fn agreement_radius(&self, k: usize) -> f64 {
        std::f64::consts::SQRT_2 * self.axis_span() * self.spec.embedding.ratio().powi(k as i32)
    }

    /// Error from truncating embeddings to `depth` digits, in value units.
    pub fn truncation_error(&self) -> f64 {
        self.obs.lipschitz_x() * std::f64::consts::SQRT_2 * self.spec.embedding.radius(self.depth)
    }

    /// `α` when the cocycle is a constant rotation that passes the
    /// irrationality heuristic.
    pub fn irrational_rotation(&self) -> Option<f64> {
        let alpha = self.spec.cocycle.constant_rotation()?;
        let cfg = SteerConfig::default();
        rationality_check(alpha, cfg.max_denominator, cfg.rational_tol)
            .is_none()
            .then_some(alpha)
    }

    /// Constant rotation angle required by the steering constructions.
    pub fn require_rotation(&self) -> Result<f64> {
        let alpha = self.spec.cocycle.constant_rotation().ok_or_else(|| {
            SpectraError::Unsupported("steering constructions need a constant rotation cocycle".into())
        })?;
        let cfg = SteerConfig::default();
        if let Some((p, q)) = rationality_check(alpha, cfg.max_denominator, cfg.rational_tol) {
            return Err(SpectraError::RationalRotation { p, q });
        }
        Ok(alpha)
    }
}

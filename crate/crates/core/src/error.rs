use thiserror::Error;

pub type Result<T, E = EpnError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpnError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed or inconsistent structure (shapes, decompositions, chains).
    #[error("structural error: {0}")]
    Structural(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("eigensolver failed to converge after {iterations} iterations (n = {dimension})")]
    Solver { iterations: usize, dimension: usize },
    #[error("bracket error: {0}")]
    Bracket(String),
    #[error("degeneracy error: {0}")]
    Degeneracy(String),
    #[error("spectral error: {0}")]
    Spectral(String),
    #[error("ambiguous clusterization of level {level}: candidates {first} and {second} (overlaps {overlap_first:.3e}, {overlap_second:.3e})")]
    Clusterization {
        level: usize,
        first: usize,
        second: usize,
        overlap_first: f64,
        overlap_second: f64,
    },
}

impl EpnError {
    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            EpnError::Domain(_) | EpnError::Structural(_) | EpnError::Backend(_) | EpnError::Parse(_)
        )
    }
}

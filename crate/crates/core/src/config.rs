use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knobs of the adaptive Gauss-Legendre integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Nodes per panel.
    pub base_order: usize,
    /// Maximum bisection depth of a panel.
    pub max_refinements: u32,
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            base_order: 64,
            max_refinements: 12,
            rel_tolerance: 1e-10,
            abs_tolerance: 1e-14,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_order < 8 {
            return Err(Error::InvalidParameter {
                name: "base_order",
                value: self.base_order as f64,
                reason: "at least 8 nodes per panel are required",
            });
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rel_tolerance",
                value: self.rel_tolerance,
                reason: "must be positive",
            });
        }
        if !(self.abs_tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "abs_tolerance",
                value: self.abs_tolerance,
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

/// Everything that controls a single operator evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Basis mass allowed to fall outside the summation window.
    pub truncation_tolerance: f64,
    /// Hard cap on the last summation index.
    pub max_terms: u64,
    pub quadrature: QuadratureConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            truncation_tolerance: 1e-14,
            max_terms: 10_000_000,
            quadrature: QuadratureConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.truncation_tolerance > 0.0 && self.truncation_tolerance <= 1e-3) {
            return Err(Error::InvalidParameter {
                name: "truncation_tolerance",
                value: self.truncation_tolerance,
                reason: "must lie in (0, 1e-3]",
            });
        }
        self.quadrature.validate()
    }
}

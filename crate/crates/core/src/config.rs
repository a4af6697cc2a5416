//! Solver parameters and the records a solve produces.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// A parameter that is either given explicitly or derived from the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Auto,
    Value(f64),
}

impl Param {
    pub fn resolve(self, auto: f64) -> f64 {
        match self {
            Param::Auto => auto,
            Param::Value(v) => v,
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Param::Auto);
        }
        s.parse::<f64>()
            .map(Param::Value)
            .map_err(|e| format!("expected a number or \"auto\", got {s:?}: {e}"))
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Auto => f.write_str("auto"),
            Param::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Trace-norm weight; `Auto` is `sqrt(max(m, n))`.
    pub lambda: Param,
    /// Initial rank bound `d` of the factors.
    pub rank: usize,
    /// Penalty growth factor.
    pub rho: f64,
    /// Initial penalty; `Auto` is the reciprocal norm of the observed data.
    pub alpha0: Param,
    pub alpha_max: f64,
    /// Relative stopping tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Enable the one-shot rank reduction heuristic.
    pub adjust_rank: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: Param::Auto,
            rank: 10,
            rho: 1.1,
            alpha0: Param::Auto,
            alpha_max: 1e10,
            tol: 1e-4,
            max_iter: 500,
            adjust_rank: false,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Defaults for the linearized compressive solver, which needs more
    /// iterations than the exact-update solvers.
    pub fn cpcp_default() -> Self {
        Self {
            max_iter: 1000,
            ..Self::default()
        }
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Param::Value(lambda);
        self
    }

    /// Checks hard constraints and returns soft warnings.
    ///
    /// `rho` outside `(1.0, 1.1]` only warns: the range is a guideline.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.rank == 0 {
            return Err(Error::Argument("rank bound d must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Argument(format!(
                "tolerance must be positive and finite, got {}",
                self.tol
            )));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::Argument(format!(
                "penalty growth rho must be positive and finite, got {}",
                self.rho
            )));
        }
        if !(self.rho > 1.0 && self.rho <= 1.1) {
            warnings.push(format!(
                "rho = {} is outside (1.0, 1.1]; ρ∈(1.0,1.1] in general",
                self.rho
            ));
        }
        if let Param::Value(l) = self.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::Argument(format!(
                    "lambda must be nonnegative and finite, got {l}"
                )));
            }
        }
        if !(self.alpha_max > 0.0) || !self.alpha_max.is_finite() {
            return Err(Error::Argument(format!(
                "alpha_max must be positive and finite, got {}",
                self.alpha_max
            )));
        }
        if let Param::Value(a) = self.alpha0 {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::Argument(format!(
                    "alpha0 must be positive and finite, got {a}"
                )));
            }
            if self.alpha_max < a {
                return Err(Error::Argument(format!(
                    "alpha_max ({}) is below alpha0 ({a})",
                    self.alpha_max
                )));
            }
        }
        Ok(warnings)
    }

    pub(crate) fn resolve_lambda(&self, rows: usize, cols: usize) -> f64 {
        self.lambda.resolve((rows.max(cols) as f64).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterReached,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIterReached => "max_iter_reached",
        })
    }
}

/// Scalars recorded once per iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    /// 1-based iteration number.
    pub iter: usize,
    /// Constraint violation after the iteration (`‖D − UVᵀ − S‖_F` for the
    /// matrix-space solvers, `‖y − P_Q(UVᵀ + S)‖₂` for the compressive one).
    pub residual: f64,
    pub objective: f64,
    /// Penalty used during this iteration.
    pub alpha: f64,
    /// Working rank during this iteration.
    pub rank: usize,
    /// Relative change of the iterates (compressive solver only).
    pub stop_ratio: Option<f64>,
}

/// The one-shot rank reduction, if it happened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankReduction {
    pub iter: usize,
    pub from: usize,
    pub to: usize,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult<M = DenseMatrix> {
    /// `m x d` with orthonormal columns.
    pub u: DenseMatrix,
    /// `n x d`.
    pub v: DenseMatrix,
    /// Sparse component; zero outside the observed set.
    pub s: DenseMatrix,
    /// Final Lagrange multiplier.
    pub multiplier: M,
    pub trace: Vec<IterRecord>,
    pub termination: Termination,
    pub rank_reduction: Option<RankReduction>,
    pub warnings: Vec<String>,
}

impl<M> SolveResult<M> {
    /// The low-rank estimate `U Vᵀ`.
    pub fn low_rank(&self) -> DenseMatrix {
        self.u.matmul_tr(&self.v)
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.residual)
    }

    pub fn rank(&self) -> usize {
        self.v.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_validates_cleanly() {
        assert!(SolverConfig::default().validate().unwrap().is_empty());
    }

    #[test]
    fn rho_outside_guideline_warns() {
        let cfg = SolverConfig {
            rho: 1.5,
            ..SolverConfig::default()
        };
        let w = cfg.validate().unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("(1.0,1.1]"));
    }

    #[test]
    fn hard_errors() {
        let base = SolverConfig::default();
        for bad in [
            SolverConfig { tol: 0.0, ..base.clone() },
            SolverConfig { rank: 0, ..base.clone() },
            SolverConfig { rho: -1.0, ..base.clone() },
            SolverConfig { alpha0: Param::Value(10.0), alpha_max: 1.0, ..base.clone() },
            SolverConfig { lambda: Param::Value(-1.0), ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn param_parsing() {
        assert_eq!("auto".parse::<Param>().unwrap(), Param::Auto);
        assert_eq!("0.5".parse::<Param>().unwrap(), Param::Value(0.5));
        assert!("x".parse::<Param>().is_err());
    }
}

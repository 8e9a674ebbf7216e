//! Equilibrium computation: best-response dynamics, the projection method,
//! equilibrium verification and a brute-force grid oracle.

mod brute;
mod dynamics;
mod newton;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GameSpec;
use crate::linalg;

pub use brute::{brute_force_nash, BruteForceConfig, BruteForceResult, Equilibrium};
pub use dynamics::{continuous_br, discrete_br, projection_method, run_dynamics};
pub use newton::{continuous_stability, newton_polish};

/// Threshold for `‖x_k − x_{k−p}‖∞` in cycle detection.
pub const CYCLE_TOL: f64 = 1e-9;
/// Longest cycle period that is detected.
pub const MAX_CYCLE_PERIOD: usize = 8;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-9;
pub const DEFAULT_RK4_STEP: f64 = 0.05;
pub const DEFAULT_HORIZON: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DynamicsMode {
    DiscreteSimultaneous,
    /// One iteration is a full sweep over the agents in index order.
    DiscreteSequential,
    DiscreteRelaxed {
        tau: f64,
    },
    ContinuousRk4 {
        step: f64,
    },
    Projection {
        step: f64,
        /// Halve the step on a sustained residual increase.
        #[serde(default = "yes")]
        adaptive: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub mode: DynamicsMode,
    /// Iterations for discrete modes and the projection method, RK4 steps
    /// for the continuous mode.
    pub max_iters: usize,
    pub residual_tol: f64,
    pub record_every: usize,
}

impl DynamicsConfig {
    pub fn new(mode: DynamicsMode) -> Self {
        let max_iters = match mode {
            DynamicsMode::ContinuousRk4 { step } => (DEFAULT_HORIZON / step).ceil() as usize,
            _ => 10_000,
        };
        Self {
            mode,
            max_iters,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self.mode {
            DynamicsMode::DiscreteRelaxed { tau } if !(tau > 0.0 && tau <= 1.0) => {
                return bad(format!("relaxation tau must lie in (0, 1], got {tau}"))
            }
            DynamicsMode::ContinuousRk4 { step } if !(step > 0.0 && step.is_finite()) => {
                return bad(format!("RK4 step must be positive, got {step}"))
            }
            DynamicsMode::Projection { step, .. } if !(step > 0.0 && step.is_finite()) => {
                return bad(format!("projection step must be positive, got {step}"))
            }
            _ => {}
        }
        if !(self.residual_tol > 0.0) {
            return bad(format!("residual_tol must be positive, got {}", self.residual_tol));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Converged,
    MaxIters,
    OscillationDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Iteration count, or time for the continuous mode.
    pub step: f64,
    pub x: Vec<f64>,
    /// Natural residual `‖x − Π_X[x − F(x)]‖₂`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAdaptation {
    pub iteration: usize,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub terminal: Terminal,
    pub final_residual: f64,
    /// Iterations (or RK4 steps) performed.
    pub iterations: usize,
    /// Cycle period when oscillation was detected.
    pub period: Option<usize>,
    /// Step reductions of the adaptive projection method.
    pub adaptations: Vec<StepAdaptation>,
}

impl Trajectory {
    pub fn final_profile(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.points.last().expect("non-empty trajectory").x)
    }

    pub fn converged(&self) -> bool {
        self.terminal == Terminal::Converged
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub residual: f64,
    /// `‖xⁱ − Bⁱ(zⁱ(x))‖₂` per agent.
    pub agent_gaps: Vec<f64>,
    /// Every agent gap is at most the requested epsilon.
    pub is_equilibrium: bool,
}

pub fn verify_equilibrium(spec: &GameSpec, x: &DVector<f64>, eps: f64) -> Result<EquilibriumReport> {
    spec.check_profile(x)?;
    let b = spec.best_response_map(x)?;
    let n = spec.strategy_dim();
    let agent_gaps: Vec<f64> = (0..spec.n_agents())
        .map(|i| (x.rows(i * n, n) - b.rows(i * n, n)).norm())
        .collect();
    Ok(EquilibriumReport {
        residual: spec.natural_residual(x)?,
        is_equilibrium: agent_gaps.iter().all(|&g| g <= eps),
        agent_gaps,
    })
}

/// Equilibrium near `x0`: Newton on `x − B(x)`, then sequential best
/// responses, then the adaptive projection method.
pub fn find_equilibrium(spec: &GameSpec, x0: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let start = spec.project_profile(x0)?;
    if let Some(x) = newton_polish(spec, &start, tol)? {
        return Ok(x);
    }
    let mut cfg = DynamicsConfig::new(DynamicsMode::DiscreteSequential);
    cfg.residual_tol = tol;
    let t = discrete_br(spec, &start, &cfg)?;
    if t.converged() {
        return Ok(t.final_profile());
    }
    cfg.mode = DynamicsMode::Projection {
        step: 0.5,
        adaptive: true,
    };
    cfg.max_iters = 100_000;
    let t = projection_method(spec, &start, &cfg)?;
    if t.converged() {
        return Ok(t.final_profile());
    }
    Err(Error::NotConverged(format!(
        "no equilibrium found to tolerance {tol:e}; last residual {:e}",
        t.final_residual
    )))
}

/// Five deterministic feasible starting profiles: the lower corner, the
/// centre and the upper corner of the bounding box (or `0`, `𝟙`, `2·𝟙`
/// projected when sets are unbounded) and two low-discrepancy points.
pub fn default_initial_conditions(spec: &GameSpec) -> Result<Vec<DVector<f64>>> {
    let d = spec.dim();
    let (lo, hi) = spec
        .bounding_box()
        .unwrap_or_else(|| (DVector::zeros(d), DVector::from_element(d, 2.0)));
    let at = |u: &[f64]| DVector::from_fn(d, |r, _| lo[r] + u[r] * (hi[r] - lo[r]));
    let raw = [
        at(&vec![0.0; d]),
        at(&vec![0.5; d]),
        at(&vec![1.0; d]),
        at(&linalg::halton_point(1, d, 7)),
        at(&linalg::halton_point(2, d, 7)),
    ];
    raw.iter().map(|v| spec.project_profile(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{races, scalar_lq};
    use crate::network::{Network, NetworkKind};

    #[test]
    fn ray_profiles_are_equilibria() {
        for n in [3, 10] {
            let net = Network::generate(&NetworkKind::Complete { n, weight: 1.0 }).unwrap();
            let g = scalar_lq(net, &vec![-1.0 / (n as f64 - 1.0); n], &vec![0.0; n]).unwrap();
            for beta in [0.0, 0.5, 1.0, 3.0] {
                let r = verify_equilibrium(&g, &DVector::from_element(n, beta), 1e-12).unwrap();
                assert!(r.residual <= 1e-12 && r.is_equilibrium);
            }
        }
    }

    #[test]
    fn symmetric_race_root_is_an_equilibrium() {
        // Root of 0.5·x(5 − x) = x − 1 by bisection.
        let (mut lo, mut hi) = (1.0f64, 5.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 0.5 * mid * (5.0 - mid) - (mid - 1.0) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let g = races(Network::generate(&NetworkKind::Complete { n: 2, weight: 1.0 }).unwrap(), 0.5, &[1.0; 2], &[5.0; 2]).unwrap();
        let x = DVector::from_element(2, lo);
        assert!(verify_equilibrium(&g, &x, 1e-10).unwrap().residual <= 1e-10);
        let mut y = x.clone();
        y[0] -= 0.1;
        assert!(verify_equilibrium(&g, &y, 1e-10).unwrap().residual > 0.0);
    }

    #[test]
    fn initial_conditions_are_feasible_and_distinct() {
        let g = scalar_lq(Network::generate(&NetworkKind::Complete { n: 4, weight: 1.0 }).unwrap(), &[0.5; 4], &[1.0; 4]).unwrap();
        let x0 = default_initial_conditions(&g).unwrap();
        assert_eq!(x0.len(), 5);
        for (i, x) in x0.iter().enumerate() {
            assert!(g.is_feasible(x, 0.0));
            for y in &x0[..i] {
                assert!((x - y).amax() > 1e-6);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(DynamicsConfig::new(DynamicsMode::DiscreteRelaxed { tau: 1.5 }).validate().is_err());
        assert!(DynamicsConfig::new(DynamicsMode::ContinuousRk4 { step: 0.0 }).validate().is_err());
        assert!(DynamicsConfig::new(DynamicsMode::DiscreteRelaxed { tau: 1.0 }).validate().is_ok());
    }
}

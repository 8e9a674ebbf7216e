use std::collections::VecDeque;

use nalgebra::DVector;

use super::{
    DynamicsConfig, DynamicsMode, StepAdaptation, Terminal, Trajectory, TrajectoryPoint, CYCLE_TOL,
    MAX_CYCLE_PERIOD,
};
use crate::error::{Error, Result};
use crate::games::GameSpec;

const FEASIBILITY_TOL: f64 = 1e-9;
/// Consecutive RK4 steps with growing `Ũ` and growing gap before the step is
/// declared too large.
const LYAPUNOV_PATIENCE: usize = 50;
/// Consecutive residual increases before the projection step is halved.
const PROJECTION_PATIENCE: usize = 5;

pub fn run_dynamics(spec: &GameSpec, x0: &DVector<f64>, cfg: &DynamicsConfig) -> Result<Trajectory> {
    match cfg.mode {
        DynamicsMode::ContinuousRk4 { .. } => continuous_br(spec, x0, cfg),
        DynamicsMode::Projection { .. } => projection_method(spec, x0, cfg),
        _ => discrete_br(spec, x0, cfg),
    }
}

fn check_start(spec: &GameSpec, x0: &DVector<f64>, cfg: &DynamicsConfig) -> Result<()> {
    cfg.validate()?;
    spec.check_profile(x0)?;
    if !spec.is_feasible(x0, FEASIBILITY_TOL) {
        return Err(Error::Infeasible("initial profile is not feasible".into()));
    }
    Ok(())
}

/// Shared bookkeeping: recording, convergence and cycle detection.
struct Recorder<'a> {
    cfg: &'a DynamicsConfig,
    points: Vec<TrajectoryPoint>,
    history: VecDeque<DVector<f64>>,
    last_recorded: usize,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a DynamicsConfig) -> Self {
        Self {
            cfg,
            points: vec![],
            history: VecDeque::with_capacity(MAX_CYCLE_PERIOD + 1),
            last_recorded: usize::MAX,
        }
    }

    fn record(&mut self, k: usize, step: f64, x: &DVector<f64>, residual: f64) {
        self.points.push(TrajectoryPoint {
            step,
            x: x.iter().cloned().collect(),
            residual,
        });
        self.last_recorded = k;
    }

    fn observe(&mut self, k: usize, step: f64, x: &DVector<f64>, residual: f64) {
        if k % self.cfg.record_every == 0 {
            self.record(k, step, x, residual);
        }
    }

    /// Period `p ≥ 2` with `‖x_k − x_{k−p}‖∞ ≤ CYCLE_TOL` while the iterates
    /// still move.
    fn cycle(&mut self, x: &DVector<f64>) -> Option<usize> {
        if self.history.len() > MAX_CYCLE_PERIOD {
            self.history.pop_back();
        }
        self.history.push_front(x.clone());
        let h = &self.history;
        (2..=MAX_CYCLE_PERIOD).filter(|&p| p < h.len()).find(|&p| {
            (&h[0] - &h[p]).amax() <= CYCLE_TOL
                && (1..p).any(|j| (&h[0] - &h[j]).amax() > 1e3 * CYCLE_TOL)
        })
    }

    fn finish(
        mut self,
        k: usize,
        step: f64,
        x: &DVector<f64>,
        residual: f64,
        terminal: Terminal,
        period: Option<usize>,
        adaptations: Vec<StepAdaptation>,
    ) -> Trajectory {
        if self.last_recorded != k {
            self.record(k, step, x, residual);
        }
        Trajectory {
            points: self.points,
            terminal,
            final_residual: residual,
            iterations: k,
            period,
            adaptations,
        }
    }
}

/// Discrete best-response dynamics on the simultaneous, sequential or
/// relaxed schedule.
pub fn discrete_br(spec: &GameSpec, x0: &DVector<f64>, cfg: &DynamicsConfig) -> Result<Trajectory> {
    check_start(spec, x0, cfg)?;
    let n = spec.strategy_dim();
    let mut rec = Recorder::new(cfg);
    let mut x = x0.clone();
    let mut r = spec.natural_residual(&x)?;
    rec.observe(0, 0.0, &x, r);
    rec.cycle(&x);
    if r <= cfg.residual_tol {
        return Ok(rec.finish(0, 0.0, &x, r, Terminal::Converged, None, vec![]));
    }
    for k in 1..=cfg.max_iters {
        x = match cfg.mode {
            DynamicsMode::DiscreteSequential => {
                for i in 0..spec.n_agents() {
                    let z = spec.network().aggregate_for(i, &x, n);
                    let b = spec.best_response(i, &z)?;
                    x.rows_mut(i * n, n).copy_from(&b);
                }
                x
            }
            DynamicsMode::DiscreteRelaxed { tau } if tau < 1.0 => {
                let b = spec.best_response_map(&x)?;
                &x * (1.0 - tau) + b * tau
            }
            _ => spec.best_response_map(&x)?,
        };
        r = spec.natural_residual(&x)?;
        rec.observe(k, k as f64, &x, r);
        if r <= cfg.residual_tol {
            return Ok(rec.finish(k, k as f64, &x, r, Terminal::Converged, None, vec![]));
        }
        if let Some(p) = rec.cycle(&x) {
            return Ok(rec.finish(k, k as f64, &x, r, Terminal::OscillationDetected, Some(p), vec![]));
        }
    }
    let k = cfg.max_iters;
    Ok(rec.finish(k, k as f64, &x, r, Terminal::MaxIters, None, vec![]))
}

/// Continuous best-response dynamics `ẋ = B(x) − x` integrated with classical
/// RK4. `max_iters` counts steps, so the horizon is `max_iters·h`.
pub fn continuous_br(spec: &GameSpec, x0: &DVector<f64>, cfg: &DynamicsConfig) -> Result<Trajectory> {
    check_start(spec, x0, cfg)?;
    let DynamicsMode::ContinuousRk4 { step: h } = cfg.mode else {
        return Err(Error::Config("continuous dynamics need the continuous_rk4 mode".into()));
    };
    let field = |x: &DVector<f64>| -> Result<DVector<f64>> { Ok(spec.best_response_map(x)? - x) };
    let guard = spec.q_blocks().is_some();

    let mut rec = Recorder::new(cfg);
    let mut x = x0.clone();
    let mut gap = field(&x)?.norm();
    let mut r = spec.natural_residual(&x)?;
    let mut u = if guard { spec.lyapunov(&x)? } else { 0.0 };
    let mut rising = 0;
    rec.observe(0, 0.0, &x, r);
    for k in 0..=cfg.max_iters {
        if gap.max(r) <= cfg.residual_tol {
            return Ok(rec.finish(k, k as f64 * h, &x, r, Terminal::Converged, None, vec![]));
        }
        if k == cfg.max_iters {
            break;
        }
        let k1 = field(&x)?;
        let k2 = field(&(&x + &k1 * (h / 2.0)))?;
        let k3 = field(&(&x + &k2 * (h / 2.0)))?;
        let k4 = field(&(&x + &k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepTooLarge(format!("RK4 with step {h} diverged")));
        }
        let new_gap = field(&x)?.norm();
        r = spec.natural_residual(&x)?;
        if guard {
            let new_u = spec.lyapunov(&x)?;
            if new_u > u + 1e-9 * (1.0 + u.abs()) && new_gap > gap {
                rising += 1;
                if rising >= LYAPUNOV_PATIENCE {
                    return Err(Error::StepTooLarge(format!(
                        "Lyapunov value increased for {LYAPUNOV_PATIENCE} consecutive RK4 steps with step {h}"
                    )));
                }
            } else {
                rising = 0;
            }
            u = new_u;
        }
        gap = new_gap;
        rec.observe(k + 1, (k + 1) as f64 * h, &x, r);
    }
    let k = cfg.max_iters;
    Ok(rec.finish(k, k as f64 * h, &x, r, Terminal::MaxIters, None, vec![]))
}

/// Projection method `x ← Π_X[x − τF(x)]`.
pub fn projection_method(
    spec: &GameSpec,
    x0: &DVector<f64>,
    cfg: &DynamicsConfig,
) -> Result<Trajectory> {
    check_start(spec, x0, cfg)?;
    let DynamicsMode::Projection { step, adaptive } = cfg.mode else {
        return Err(Error::Config("the projection method needs the projection mode".into()));
    };
    let mut tau = step;
    let mut adaptations = vec![];
    let mut rec = Recorder::new(cfg);
    let mut x = x0.clone();
    let mut r = spec.natural_residual(&x)?;
    let mut rising = 0;
    rec.observe(0, 0.0, &x, r);
    rec.cycle(&x);
    if r <= cfg.residual_tol {
        return Ok(rec.finish(0, 0.0, &x, r, Terminal::Converged, None, adaptations));
    }
    for k in 1..=cfg.max_iters {
        let f = spec.operator(&x)?;
        x = spec.project_profile(&(&x - f * tau))?;
        let prev = r;
        r = spec.natural_residual(&x)?;
        rec.observe(k, k as f64, &x, r);
        if r <= cfg.residual_tol {
            return Ok(rec.finish(k, k as f64, &x, r, Terminal::Converged, None, adaptations));
        }
        if adaptive {
            rising = if r > prev { rising + 1 } else { 0 };
            if rising >= PROJECTION_PATIENCE {
                tau /= 2.0;
                rising = 0;
                adaptations.push(StepAdaptation {
                    iteration: k,
                    step: tau,
                });
                rec.history.clear();
            }
        }
        if let Some(p) = rec.cycle(&x) {
            return Ok(rec.finish(k, k as f64, &x, r, Terminal::OscillationDetected, Some(p), adaptations));
        }
    }
    let k = cfg.max_iters;
    Ok(rec.finish(k, k as f64, &x, r, Terminal::MaxIters, None, adaptations))
}

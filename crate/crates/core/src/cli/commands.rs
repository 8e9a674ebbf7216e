use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DynamicsRunConfig, RunConfig, SweepConfig, SweepTarget};
use super::output::{coord_labels, float, write_csv, write_json};
use super::RunOptions;
use crate::diagnostics::{block_p_constant, certify_with, CertificateReport, CertifyOptions};
use crate::error::{Error, Result};
use crate::games::{Family, GameSpec, RaceKind};
use crate::sensitivity::{
    equilibrium_sensitivity, lipschitz_bound, parameters, with_parameters, ActiveRow, LipschitzBound,
    ParamSelector, Regularity, SensitivityOptions,
};
use crate::solvers;
use crate::solvers::{
    brute_force_nash, continuous_stability, default_initial_conditions, find_equilibrium,
    verify_equilibrium, BruteForceConfig, DynamicsConfig, DynamicsMode, StepAdaptation, Terminal,
    DEFAULT_RESIDUAL_TOL,
};

const DEDUPE_TOL: f64 = 1e-6;

fn certify_options(cfg: &RunConfig, opts: &RunOptions) -> CertifyOptions {
    CertifyOptions {
        sym_tol: cfg.certify.sym_tol,
        seed: opts.seed,
    }
}

fn profile(spec: &GameSpec, v: &[f64], what: &str) -> Result<DVector<f64>> {
    if v.len() != spec.dim() {
        return Err(Error::Config(format!(
            "{what}: expected {} coordinates, got {}",
            spec.dim(),
            v.len()
        )));
    }
    Ok(DVector::from_column_slice(v))
}

fn stability_tag(s: Option<bool>) -> &'static str {
    match s {
        Some(true) => "stable",
        Some(false) => "unstable",
        None => "undetermined",
    }
}

/// Certificate report, written to `report.json`.
pub fn run_analyze(cfg: &RunConfig, opts: &RunOptions) -> Result<CertificateReport> {
    let spec = cfg.game.build()?;
    let report = certify_with(&spec, certify_options(cfg, opts))?;
    write_json(&opts.out, "report.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundEquilibrium {
    pub x: Vec<f64>,
    pub residual: f64,
    pub stability: String,
    /// Indices of the starting profiles that reached this equilibrium.
    pub reached_from: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub equilibria: Vec<FoundEquilibrium>,
    /// Starting profiles from which no equilibrium was found.
    pub failed_starts: Vec<usize>,
    pub tol: f64,
}

/// Equilibria reached from the configured (or default) starting profiles,
/// written to `equilibria.json` and `equilibria.csv`.
pub fn run_solve(cfg: &RunConfig, opts: &RunOptions) -> Result<SolveOutput> {
    let spec = cfg.game.build()?;
    let tol = opts.tol.or(cfg.solve.tol).unwrap_or(DEFAULT_RESIDUAL_TOL);
    let starts = match &cfg.solve.x0 {
        Some(list) => list
            .iter()
            .map(|v| profile(&spec, v, "solve.x0"))
            .collect::<Result<Vec<_>>>()?,
        None => default_initial_conditions(&spec)?,
    };
    let results: Vec<Result<DVector<f64>>> = starts.par_iter().map(|x0| find_equilibrium(&spec, x0, tol)).collect();
    let mut found: Vec<(DVector<f64>, Vec<usize>)> = vec![];
    let mut failed_starts = vec![];
    for (s, r) in results.into_iter().enumerate() {
        match r {
            Ok(x) => match found.iter_mut().find(|(y, _)| (y - &x).amax() <= DEDUPE_TOL) {
                Some((_, from)) => from.push(s),
                None => found.push((x, vec![s])),
            },
            Err(Error::NotConverged(_)) => failed_starts.push(s),
            Err(e) => return Err(e),
        }
    }
    if found.is_empty() {
        return Err(Error::NotConverged(format!(
            "no equilibrium reached from {} starting profiles",
            starts.len()
        )));
    }
    let equilibria = found
        .into_iter()
        .map(|(x, reached_from)| {
            Ok(FoundEquilibrium {
                residual: verify_equilibrium(&spec, &x, tol)?.residual,
                stability: stability_tag(continuous_stability(&spec, &x)?).into(),
                x: x.iter().cloned().collect(),
                reached_from,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = SolveOutput {
        equilibria,
        failed_starts,
        tol,
    };
    let mut header = vec!["equilibrium".to_string()];
    header.extend(coord_labels(spec.n_agents(), spec.strategy_dim()));
    header.extend(["residual".into(), "stability".into()]);
    let rows: Vec<Vec<String>> = out
        .equilibria
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let mut r = vec![(k + 1).to_string()];
            r.extend(e.x.iter().map(|v| float(*v)));
            r.extend([float(e.residual), e.stability.clone()]);
            r
        })
        .collect();
    write_csv(&opts.out, "equilibria.csv", &header, &rows)?;
    write_json(&opts.out, "equilibria.json", &out)?;
    Ok(out)
}

pub fn mode_name(mode: &DynamicsMode) -> &'static str {
    match mode {
        DynamicsMode::DiscreteSimultaneous => "discrete_simultaneous",
        DynamicsMode::DiscreteSequential => "discrete_sequential",
        DynamicsMode::DiscreteRelaxed { .. } => "discrete_relaxed",
        DynamicsMode::ContinuousRk4 { .. } => "continuous_rk4",
        DynamicsMode::Projection { .. } => "projection",
    }
}

/// Sidecar status of one dynamics run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOutput {
    pub mode: DynamicsMode,
    pub csv: String,
    pub terminal: Terminal,
    pub final_residual: f64,
    pub iterations: usize,
    pub period: Option<usize>,
    pub adaptations: Vec<StepAdaptation>,
    pub final_profile: Vec<f64>,
}

fn dynamics_config(mode: DynamicsMode, run: &DynamicsRunConfig, opts: &RunOptions) -> Result<DynamicsConfig> {
    let mut dc = DynamicsConfig::new(mode);
    if let Some(m) = run.max_iters {
        dc.max_iters = m;
    }
    if let Some(t) = opts.tol.or(run.residual_tol) {
        dc.residual_tol = t;
    }
    if let Some(r) = run.record_every {
        dc.record_every = r;
    }
    dc.validate()?;
    Ok(dc)
}

/// One trajectory CSV plus a JSON sidecar per requested mode. Oscillation
/// and an exhausted budget are results, reported in the sidecar.
pub fn run_dynamics(cfg: &RunConfig, opts: &RunOptions) -> Result<Vec<DynamicsOutput>> {
    let run = cfg
        .dynamics
        .as_ref()
        .ok_or_else(|| Error::Config("dynamics section missing".into()))?;
    if run.modes.is_empty() {
        return Err(Error::Config("dynamics.modes is empty".into()));
    }
    let spec = cfg.game.build()?;
    let x0 = match &run.x0 {
        Some(v) => profile(&spec, v, "dynamics.x0")?,
        None => spec.project_profile(&DVector::zeros(spec.dim()))?,
    };
    let mut header = vec!["step_or_time".to_string()];
    header.extend(coord_labels(spec.n_agents(), spec.strategy_dim()));
    header.push("residual".into());
    let mut outputs = vec![];
    for (k, mode) in run.modes.iter().enumerate() {
        let dc = dynamics_config(*mode, run, opts)?;
        let traj = solvers::run_dynamics(&spec, &x0, &dc)?;
        // Repeated modes get an index suffix so no file is overwritten.
        let stem = match run.modes[..k].iter().filter(|m| mode_name(m) == mode_name(mode)).count() {
            0 => format!("dynamics_{}", mode_name(mode)),
            c => format!("dynamics_{}_{}", mode_name(mode), c + 1),
        };
        let rows: Vec<Vec<String>> = traj
            .points
            .iter()
            .map(|p| {
                let mut r = vec![float(p.step)];
                r.extend(p.x.iter().map(|v| float(*v)));
                r.push(float(p.residual));
                r
            })
            .collect();
        write_csv(&opts.out, &format!("{stem}.csv"), &header, &rows)?;
        let out = DynamicsOutput {
            mode: *mode,
            csv: format!("{stem}.csv"),
            terminal: traj.terminal,
            final_residual: traj.final_residual,
            iterations: traj.iterations,
            period: traj.period,
            adaptations: traj.adaptations.clone(),
            final_profile: traj.final_profile().iter().cloned().collect(),
        };
        write_json(&opts.out, &format!("{stem}.json"), &out)?;
        outputs.push(out);
    }
    Ok(outputs)
}

/// `spec` with the swept parameter set to `value`.
pub fn apply_sweep(spec: &GameSpec, target: SweepTarget, value: f64) -> Result<GameSpec> {
    let wrong = |name: &str| Error::Config(format!("sweep target {name} does not apply to this game family"));
    match target {
        SweepTarget::Gamma => match spec.family() {
            Family::Races {
                lower,
                upper,
                response: RaceKind::Quadratic { .. },
            } => spec.with_family(Family::Races {
                lower: lower.clone(),
                upper: upper.clone(),
                response: RaceKind::Quadratic { gamma: value },
            }),
            _ => Err(wrong("gamma")),
        },
        SweepTarget::Delta | SweepTarget::Mu => match spec.family().clone() {
            Family::MultiActivity {
                intercept_a,
                intercept_b,
                beta,
                delta,
                mu,
            } => {
                let (delta, mu) = match target {
                    SweepTarget::Delta => (value, mu),
                    _ => (delta, value),
                };
                spec.with_family(Family::MultiActivity {
                    intercept_a,
                    intercept_b,
                    beta,
                    delta,
                    mu,
                })
            }
            _ => Err(wrong(if target == SweepTarget::Delta { "delta" } else { "mu" })),
        },
        SweepTarget::Edge { row, col } => {
            let n = spec.n_agents();
            if row == 0 || col == 0 || row > n || col > n || row == col {
                return Err(Error::Config(format!(
                    "edge ({row}, {col}) is not an off-diagonal entry of a {n}-agent network"
                )));
            }
            spec.with_network(spec.network().with_weight(row - 1, col - 1, value)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub equilibrium: usize,
    pub count: usize,
    pub x: Vec<f64>,
    pub total_effort: f64,
    pub residual: f64,
    pub stability: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub value: f64,
    pub count: usize,
    pub unpolished: usize,
    pub survivors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub sweep: SweepConfig,
    pub points: Vec<SweepPoint>,
    pub rows: Vec<SweepRow>,
}

/// Brute-force equilibrium sets along a parameter path, computed
/// concurrently and written in sweep order to `sweep.csv` and `sweep.json`.
pub fn run_sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<SweepOutput> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep section missing".into()))?;
    let values = sweep.values()?;
    let base = cfg.game.build()?;
    apply_sweep(&base, sweep.parameter, values[0])?;
    let mut bf = BruteForceConfig::new(sweep.resolution);
    bf.bounds = sweep.bounds.clone();
    let results = values
        .par_iter()
        .map(|&v| brute_force_nash(&apply_sweep(&base, sweep.parameter, v)?, &bf))
        .collect::<Result<Vec<_>>>()?;

    let mut points = vec![];
    let mut rows = vec![];
    for (index, (res, &value)) in results.iter().zip(&values).enumerate() {
        let count = res.equilibria.len();
        points.push(SweepPoint {
            index,
            value,
            count,
            unpolished: res.unpolished.len(),
            survivors: res.survivors,
        });
        for (k, e) in res.equilibria.iter().enumerate() {
            rows.push(SweepRow {
                index,
                value,
                equilibrium: k + 1,
                count,
                total_effort: e.x.iter().sum(),
                x: e.x.clone(),
                residual: e.residual,
                stability: stability_tag(e.stable).into(),
            });
        }
    }
    let mut header: Vec<String> = ["index", "value", "equilibrium", "count"].map(String::from).to_vec();
    header.extend(coord_labels(base.n_agents(), base.strategy_dim()));
    header.extend(["total_effort", "residual", "stability"].map(String::from));
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![r.index.to_string(), float(r.value), r.equilibrium.to_string(), r.count.to_string()];
            c.extend(r.x.iter().map(|v| float(*v)));
            c.extend([float(r.total_effort), float(r.residual), r.stability.clone()]);
            c
        })
        .collect();
    write_csv(&opts.out, "sweep.csv", &header, &csv_rows)?;
    let out = SweepOutput {
        sweep: sweep.clone(),
        points,
        rows,
    };
    write_json(&opts.out, "sweep.json", &out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub bound: Option<LipschitzBound>,
    /// Why no bound applies, when `bound` is absent.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityOutput {
    pub parameter: ParamSelector,
    pub y: Vec<f64>,
    pub xstar: Vec<f64>,
    pub regularity: Regularity,
    pub active: Vec<ActiveRow>,
    pub multipliers: Vec<f64>,
    /// Row-major `∇_y x*`, one row per strategy coordinate.
    pub grad_y_xstar: Vec<Vec<f64>>,
    /// Max absolute deviation from central finite differences.
    pub fd_error: f64,
    pub fd_step: f64,
    pub lipschitz: LipschitzReport,
}

/// Central finite differences of `x*(y)`, re-solving from `xstar`.
pub fn finite_difference_jacobian(
    spec: &GameSpec,
    xstar: &DVector<f64>,
    sel: ParamSelector,
    step: f64,
    tol: f64,
) -> Result<DMatrix<f64>> {
    let y = parameters(spec, sel)?;
    let mut jac = DMatrix::zeros(spec.dim(), y.len());
    for k in 0..y.len() {
        let h = step * (1.0 + y[k].abs());
        let solve = |sign: f64| -> Result<DVector<f64>> {
            let mut yk = y.clone();
            yk[k] += sign * h;
            find_equilibrium(&with_parameters(spec, sel, &yk)?, xstar, tol)
        };
        let d = (solve(1.0)? - solve(-1.0)?) / (2.0 * h);
        jac.set_column(k, &d);
    }
    Ok(jac)
}

/// Equilibrium Jacobian with regularity flags, its finite-difference check
/// and any Lipschitz bound that a certificate supports.
pub fn run_sensitivity(cfg: &RunConfig, opts: &RunOptions) -> Result<SensitivityOutput> {
    let sc = cfg
        .sensitivity
        .as_ref()
        .ok_or_else(|| Error::Config("sensitivity section missing".into()))?;
    if !(sc.fd_step > 0.0 && sc.fd_step.is_finite()) {
        return Err(Error::Config(format!("fd_step must be positive, got {}", sc.fd_step)));
    }
    let spec = cfg.game.build()?;
    let y = parameters(&spec, sc.parameter).map_err(|e| Error::Config(e.to_string()))?;
    let tol = opts.tol.unwrap_or(1e-12);
    let start = match &sc.x0 {
        Some(v) => profile(&spec, v, "sensitivity.x0")?,
        None => default_initial_conditions(&spec)?.swap_remove(1),
    };
    let xstar = find_equilibrium(&spec, &start, tol)?;
    let mut so = SensitivityOptions::default();
    if let Some(t) = sc.activity_tol {
        so.activity_tol = t;
    }
    if let Some(t) = sc.strict_tol {
        so.strict_tol = t;
    }
    let res = equilibrium_sensitivity(&spec, &xstar, sc.parameter, so)?;
    let fd = finite_difference_jacobian(&spec, &xstar, sc.parameter, sc.fd_step, tol)?;
    let fd_error = (&fd - &res.grad_y_xstar).amax();

    let report = certify_with(&spec, certify_options(cfg, opts))?;
    let lipschitz = match block_p_constant(&report, &spec) {
        Some(eta) => match lipschitz_bound(&spec, eta, sc.l_const) {
            Ok(b) => LipschitzReport {
                bound: Some(b),
                reason: None,
            },
            Err(e) => LipschitzReport {
                bound: None,
                reason: Some(e.to_string()),
            },
        },
        None => LipschitzReport {
            bound: None,
            reason: Some("no uniform block P-function constant is certified".into()),
        },
    };

    let grad = &res.grad_y_xstar;
    let out = SensitivityOutput {
        parameter: sc.parameter,
        y: y.iter().cloned().collect(),
        xstar: xstar.iter().cloned().collect(),
        regularity: res.regularity.clone(),
        active: res.kkt.active.rows.clone(),
        multipliers: res.kkt.multipliers.iter().cloned().collect(),
        grad_y_xstar: grad.row_iter().map(|r| r.iter().cloned().collect()).collect(),
        fd_error,
        fd_step: sc.fd_step,
        lipschitz,
    };
    let mut header = vec!["coordinate".to_string()];
    header.extend((0..grad.ncols()).map(|k| format!("y_{}", k + 1)));
    let labels = coord_labels(spec.n_agents(), spec.strategy_dim());
    let rows: Vec<Vec<String>> = out
        .grad_y_xstar
        .iter()
        .zip(labels)
        .map(|(r, l)| std::iter::once(l).chain(r.iter().map(|v| float(*v))).collect())
        .collect();
    write_csv(&opts.out, "grad_y_xstar.csv", &header, &rows)?;
    write_json(&opts.out, "sensitivity.json", &out)?;
    Ok(out)
}

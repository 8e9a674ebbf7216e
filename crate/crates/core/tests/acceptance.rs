//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use common::*;
use netgame::cli::{self, RunConfig, RunOptions};
use netgame::diagnostics::{
    build_upsilon, certify, check_potential, contraction_weights, Criterion, GuaranteeKind, PotentialVerdict,
    Verdict, Witness,
};
use netgame::diagnostics::{alpha_margins, block_p_constant};
use netgame::games::scalar_lq;
use netgame::sensitivity::{equilibrium_sensitivity, lipschitz_bound, parameters, with_parameters, ParamSelector, SensitivityOptions};
use netgame::solvers::{
    brute_force_nash, default_initial_conditions, find_equilibrium, run_dynamics, verify_equilibrium,
    BruteForceConfig, DynamicsConfig, DynamicsMode, Terminal,
};
use netgame::{GameSpec, Network, NetworkKind};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(t: Duration, limit: f64) -> Result<(), String> {
    ensure(t.as_secs_f64() < limit, || format!("runtime {:.2}s exceeds {limit}s", t.as_secs_f64()))
}

fn spectral_table() -> Check {
    let t = Instant::now();
    let cases = [
        ("complete", NetworkKind::Complete { n: 4, weight: 1.0 }, 3.0, 3.0, Some(1.0)),
        (
            "bipartite",
            NetworkKind::BipartiteComplete { left: 2, right: 2, weight: 1.0 },
            2.0,
            2.0,
            Some(2.0),
        ),
        ("directed regular", NetworkKind::DirectedRegular { n: 4, weight: 1.0 }, 2.2882, 2.0, None),
        ("asymmetric star", NetworkKind::AsymmetricStar { n: 4, weight: 1.0 }, 3f64.sqrt(), 1.0, None),
    ];
    let mut out = vec![];
    for (name, kind, two, inf, lmin) in cases {
        let sm = Network::generate(&kind).unwrap().spectral_measures(1e-12);
        ensure((sm.spectral_norm - two).abs() < 1e-3, || format!("{name}: ‖G‖₂ = {}", sm.spectral_norm))?;
        ensure((sm.infinity_norm - inf).abs() < 1e-3, || format!("{name}: ‖G‖∞ = {}", sm.infinity_norm))?;
        match (lmin, sm.min_eigenvalue) {
            (Some(e), Some(l)) => ensure((l.abs() - e).abs() < 1e-3, || format!("{name}: |λ_min| = {}", l.abs()))?,
            (None, None) => {}
            (e, l) => return Err(format!("{name}: |λ_min| expected {e:?}, got {l:?}")),
        }
        out.push(format!("{name} ({:.4}, {:.4}, {})", sm.spectral_norm, sm.infinity_norm, sm.min_eigenvalue.map_or("-".into(), |l| format!("{:.4}", l.abs()))));
    }
    within_time(t.elapsed(), 1.0)?;
    Ok(out.join("; "))
}

fn trend_setter_config(delta: f64) -> RunConfig {
    RunConfig::parse(&format!(
        r#"{{"game": {{"family": "scalar_lq", "network": {{"kind": "trend_setter"}},
            "k": {}, "intercept": 1}}}}"#,
        -delta
    ))
    .unwrap()
}

fn trend_setter() -> Check {
    let net = Network::generate(&NetworkKind::TrendSetter { n: 4, leader_weight: 1.0, follower_weight: 0.1 }).unwrap();
    let sm = net.spectral_measures(1e-12);
    ensure((sm.spectral_norm - 1.7437).abs() < 1e-3, || format!("‖G‖₂ = {}", sm.spectral_norm))?;
    // 1 + 0.1 + 0.1 in binary floating point rounds one ulp above the literal 1.2.
    ensure((sm.infinity_norm - 1.2).abs() <= 2.0 * f64::EPSILON, || format!("‖G‖∞ = {:e}", sm.infinity_norm))?;
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: dir.path().to_path_buf(), ..Default::default() };
    let hi = cli::run_analyze(&trend_setter_config(0.8), &opts).map_err(|e| e.to_string())?;
    ensure(
        hi.guarantees.iter().any(|g| g.kind == GuaranteeKind::ExistenceUniqueness && g.criterion == Criterion::RowSumMargin),
        || format!("delta 0.8: no row-sum uniqueness guarantee in {:?}", hi.guarantees),
    )?;
    ensure(hi.margins.alpha_2 < 0.0 && hi.margins.alpha_inf > 0.0, || format!("delta 0.8 margins {:?}", hi.margins))?;
    let lo = cli::run_analyze(&trend_setter_config(0.6), &opts).map_err(|e| e.to_string())?;
    ensure(
        !lo.guarantees.iter().any(|g| g.criterion == Criterion::SpectralNormMargin),
        || format!("delta 0.6 cites the spectral-norm margin: {:?}", lo.guarantees),
    )?;
    ensure(dir.path().join("report.json").exists(), || "report.json missing".into())?;
    Ok(format!(
        "‖G‖₂ = {:.4}, ‖G‖∞ = {}, δ=0.8 alpha_inf = {:.3}, δ=0.6 alpha_2 = {:.3}",
        sm.spectral_norm, sm.infinity_norm, hi.margins.alpha_inf, lo.margins.alpha_2
    ))
}

fn counterexamples() -> Check {
    let t = Instant::now();
    // Infinitely many equilibria on a ray.
    for n in [3usize, 10] {
        let g = scalar_lq(complete(n), &vec![-1.0 / (n as f64 - 1.0); n], &vec![0.0; n]).unwrap();
        for beta in [0.0, 0.5, 1.0, 3.0] {
            let r = verify_equilibrium(&g, &DVector::from_element(n, beta), 1e-12).map_err(|e| e.to_string())?;
            ensure(r.residual <= 1e-12, || format!("N={n} β={beta}: residual {:e}", r.residual))?;
        }
    }
    // Monotone without P_Υ.
    let r = certify(&scalar_lq(complete(10), &[0.5; 10], &[1.0; 10]).unwrap()).map_err(|e| e.to_string())?;
    ensure(r.strong_monotone.is_certified() && r.p_upsilon.is_refuted(), || {
        format!("common coupling: {:?} / {:?}", r.strong_monotone, r.p_upsilon)
    })?;
    // Uniform P via H = K⁻¹ without monotonicity.
    let mut k = vec![0.1; 10];
    k[9] = 0.9;
    let g = scalar_lq(complete(10), &k, &[1.0; 10]).unwrap();
    let r = certify(&g).map_err(|e| e.to_string())?;
    let Verdict::Refuted { witness: Witness::Direction { direction, .. } } = &r.strong_monotone else {
        return Err(format!("heterogeneous: monotonicity not refuted: {:?}", r.strong_monotone));
    };
    // Independent check of the witness on the explicit Jacobian I + diag(K) G.
    let a = DMatrix::identity(10, 10) + DMatrix::from_diagonal(&DVector::from_column_slice(&k)) * g.network().weights();
    let w = DVector::from_column_slice(direction);
    let val = (w.transpose() * (&a + a.transpose()) * &w)[(0, 0)];
    ensure(val < 0.0, || format!("witness value {val}"))?;
    let Verdict::Certified { criterion: Criterion::DiagonalScaling, scaling: Some(h), .. } = &r.uniform_p else {
        return Err(format!("heterogeneous: uniform P not certified by scaling: {:?}", r.uniform_p));
    };
    let ratio: Vec<f64> = h.iter().zip(&k).map(|(h, k)| h * k).collect();
    ensure(ratio.iter().all(|v| (v - ratio[0]).abs() <= 1e-9 * ratio[0]), || format!("H·K = {ratio:?}"))?;
    // Asymmetric star: P_Υ without monotonicity.
    let star = Network::generate(&NetworkKind::AsymmetricStar { n: 6, weight: 1.0 }).unwrap();
    let r = certify(&scalar_lq(star, &[0.9; 6], &[1.0; 6]).unwrap()).map_err(|e| e.to_string())?;
    ensure(r.p_upsilon.is_certified() && r.strong_monotone.is_refuted(), || {
        format!("star: {:?} / {:?}", r.p_upsilon, r.strong_monotone)
    })?;
    within_time(t.elapsed(), 5.0)?;
    Ok(format!("ray residuals ≤ 1e-12, witness wᵀ(A+Aᵀ)w = {val:.4}, all verdicts as expected"))
}

fn race_count(gamma: f64) -> usize {
    brute_force_nash(&race_pair(gamma), &BruteForceConfig::new(400)).unwrap().equilibria.len()
}

fn races_reproduction() -> Check {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(
        r#"{"game": {"family": "races", "network": {"kind": "complete", "n": 2}, "gamma": 0.5, "lower": 1, "upper": 5},
            "sweep": {"parameter": {"target": "gamma"}, "start": 0.05, "stop": 1.2, "steps": 60, "resolution": 400}}"#,
    )
    .unwrap();
    let out = cli::run_sweep(&cfg, &RunOptions { out: dir.path().to_path_buf(), ..Default::default() })
        .map_err(|e| e.to_string())?;
    let mut sym: Vec<(f64, f64, String)> = vec![];
    let mut asym: Vec<(f64, f64, String)> = vec![];
    for p in &out.points {
        if p.value <= 0.45 {
            ensure(p.count == 1, || format!("γ = {:.4}: {} equilibria", p.value, p.count))?;
        } else if p.value >= 0.55 {
            ensure(p.count == 3, || format!("γ = {:.4}: {} equilibria", p.value, p.count))?;
        }
    }
    for r in &out.rows {
        let entry = (r.value, r.total_effort, r.stability.clone());
        if (r.x[0] - r.x[1]).abs() < 1e-6 {
            sym.push(entry);
        } else if r.x[0] < r.x[1] {
            asym.push(entry);
        }
    }
    ensure(sym.len() == out.points.len(), || "symmetric branch missing at some sweep point".into())?;
    for w in sym.windows(2) {
        ensure(w[1].1 > w[0].1, || format!("symmetric total effort not increasing at γ = {:.4}", w[1].0))?;
    }
    // The asymmetric branch hits the corner (1, 5) at γ = 1 and stays there:
    // its total effort falls strictly while interior and is constant after.
    let corner = |v: f64| v >= 1.0;
    for w in asym.windows(2) {
        if corner(w[1].0) {
            ensure((w[1].1 - w[0].1) <= 1e-9 && (w[1].1 - 6.0).abs() < 1e-9, || {
                format!("asymmetric total effort {} at γ = {:.4} past the corner", w[1].1, w[1].0)
            })?;
        } else {
            ensure(w[1].1 < w[0].1, || format!("asymmetric total effort not decreasing at γ = {:.4}", w[1].0))?;
        }
    }
    let last = out.rows.iter().filter(|r| r.index == out.points.len() - 1).collect::<Vec<_>>();
    let corners = last
        .iter()
        .filter(|r| {
            ((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 5.0).abs() < 1e-3)
                || ((r.x[0] - 5.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3)
        })
        .count();
    ensure(corners == 2, || format!("γ = 1.2: asymmetric equilibria {last:?}"))?;
    // Stability: symmetric branch stable while unique, unstable once three
    // equilibria exist; asymmetric branch always stable.
    for ((value, _, tag), p) in sym.iter().zip(&out.points) {
        let expect = if p.count == 1 { "stable" } else { "unstable" };
        ensure(tag == expect, || format!("symmetric branch at γ = {value:.4} tagged {tag}"))?;
    }
    ensure(sym.first().unwrap().2 == "stable" && sym.last().unwrap().2 == "unstable", || "no stability flip".into())?;
    ensure(asym.iter().all(|a| a.2 == "stable"), || "asymmetric branch not stable everywhere".into())?;
    // Bisection on the equilibrium count.
    let (mut lo, mut hi) = (0.45, 0.55);
    ensure(race_count(lo) == 1 && race_count(hi) == 3, || "bisection bracket invalid".into())?;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if race_count(mid) >= 2 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ensure(lo > 0.47 && hi < 0.51, || format!("bifurcation bracket ({lo:.4}, {hi:.4})"))?;
    within_time(t.elapsed(), 60.0)?;
    Ok(format!(
        "one/three equilibria as required, bifurcation in ({lo:.4}, {hi:.4}), {} asymmetric points, stability flips",
        asym.len()
    ))
}

fn trajectory(spec: &GameSpec, x0: &DVector<f64>, mode: DynamicsMode) -> netgame::solvers::Trajectory {
    let mut cfg = DynamicsConfig::new(mode);
    cfg.record_every = 1000;
    run_dynamics(spec, x0, &cfg).unwrap()
}

fn dynamics_reproduction() -> Check {
    let t = Instant::now();
    let rk4 = DynamicsMode::ContinuousRk4 { step: 0.05 };
    let (a, b) = (e1a(), e1b());
    let starts_a = default_initial_conditions(&a).unwrap();
    for (s, x0) in starts_a.iter().enumerate() {
        for mode in [rk4, DynamicsMode::DiscreteSequential] {
            let tr = trajectory(&a, x0, mode);
            ensure(tr.converged() && tr.final_residual <= 1e-9, || {
                format!("potential game, start {s}, {mode:?}: {:?} residual {:e}", tr.terminal, tr.final_residual)
            })?;
        }
        let tr = trajectory(&a, x0, DynamicsMode::DiscreteSimultaneous);
        ensure(tr.terminal == Terminal::OscillationDetected, || format!("potential game, start {s}: simultaneous {:?}", tr.terminal))?;
    }
    let starts_b = default_initial_conditions(&b).unwrap();
    for (s, x0) in starts_b.iter().enumerate() {
        let tr = trajectory(&b, x0, rk4);
        ensure(tr.converged() && tr.final_residual <= 1e-9, || format!("non-potential, start {s}: continuous {:?}", tr.terminal))?;
        for mode in [DynamicsMode::DiscreteSimultaneous, DynamicsMode::DiscreteSequential] {
            let tr = trajectory(&b, x0, mode);
            ensure(!tr.converged(), || format!("non-potential, start {s}: {mode:?} converged"))?;
        }
    }
    within_time(t.elapsed(), 30.0)?;
    Ok(format!("{} starts per game, all terminal states as expected", starts_a.len()))
}

fn fd_column(spec: &GameSpec, xstar: &DVector<f64>, sel: ParamSelector, k: usize, h: f64) -> DVector<f64> {
    let y = parameters(spec, sel).unwrap();
    let solve = |s: f64| {
        let mut yk = y.clone();
        yk[k] += s * h;
        find_equilibrium(&with_parameters(spec, sel, &yk).unwrap(), xstar, 1e-13).unwrap()
    };
    (solve(1.0) - solve(-1.0)) / (2.0 * h)
}

fn sensitivity_validation() -> Check {
    let mut rng = rng(6);
    let mut passed = 0;
    let mut attempts = 0;
    let mut worst = 0.0f64;
    while passed < 20 {
        attempts += 1;
        ensure(attempts <= 200, || format!("only {passed} regular instances in 200 draws"))?;
        let agents = rng.random_range(2..=6);
        let n = rng.random_range(1..=2);
        let cons = mixed_constraints(&mut rng, agents, n);
        let g = random_lq(&mut rng, agents, n, 0.6, cons);
        let x = find_equilibrium(&g, &default_initial_conditions(&g).unwrap()[1], 1e-13).map_err(|e| e.to_string())?;
        let Ok(res) = equilibrium_sensitivity(&g, &x, ParamSelector::Intercept, SensitivityOptions::default()) else {
            continue;
        };
        passed += 1;
        for k in 0..g.dim() {
            let fd = fd_column(&g, &x, ParamSelector::Intercept, k, 1e-6);
            for r in 0..g.dim() {
                let an = res.grad_y_xstar[(r, k)];
                let err = (fd[r] - an).abs();
                worst = worst.max(err);
                ensure(err <= 1e-5 + 1e-3 * an.abs(), || {
                    format!("instance {passed}, entry ({r}, {k}): analytic {an}, finite difference {}", fd[r])
                })?;
            }
        }
    }
    let mut race_err = 0.0f64;
    for gamma in [0.1, 0.3, 0.45] {
        let g = race_pair(gamma);
        let xbar = race_symmetric_root(gamma, 1.0, 5.0);
        let eps = gamma * (5.0 - 2.0 * xbar);
        let closed = xbar * (5.0 - xbar) / (1.0 - eps);
        let x = find_equilibrium(&g, &DVector::from_element(2, 3.0), 1e-14).map_err(|e| e.to_string())?;
        let res = equilibrium_sensitivity(&g, &x, ParamSelector::Gamma, SensitivityOptions::default()).map_err(|e| e.to_string())?;
        for r in 0..2 {
            race_err = race_err.max((res.grad_y_xstar[(r, 0)] - closed).abs());
        }
    }
    ensure(race_err <= 1e-8, || format!("races closed-form error {race_err:e}"))?;
    Ok(format!(
        "20 regular instances ({attempts} drawn), max |FD − analytic| = {worst:.2e}; races closed-form error {race_err:.2e}"
    ))
}

fn perturb_network(rng: &mut rand_chacha::ChaCha8Rng, net: &Network, scale: f64) -> Network {
    let n = net.n_agents();
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (net.weight(i, j) + rng.random_range(-scale..scale)).max(0.0)
        }
    });
    Network::new(w).unwrap()
}

fn lipschitz_experiments() -> Check {
    let mut rng = rng(7);
    let trend = Network::generate(&NetworkKind::TrendSetter { n: 4, leader_weight: 1.0, follower_weight: 0.1 }).unwrap();
    let sym = random_network(&mut rng, 5, true);
    let ma = GameSpec::new(
        complete(4),
        2,
        netgame::Family::MultiActivity {
            intercept_a: vec![1.0; 4],
            intercept_b: vec![1.5; 4],
            beta: vec![0.2; 4],
            delta: -0.3,
            mu: 0.1,
        },
        boxes(4, 2, 0.0, 4.0),
    )
    .unwrap();
    let games: Vec<(&str, GameSpec, ParamSelector)> = vec![
        (
            "symmetric substitutes",
            scalar_lq(sym, &[0.3; 5], &[1.0; 5]).unwrap().with_constraints(boxes(5, 1, 0.0, 3.0)).unwrap(),
            ParamSelector::Intercept,
        ),
        (
            "trend setter",
            scalar_lq(trend, &[-0.7; 4], &[1.0; 4]).unwrap().with_constraints(boxes(4, 1, 0.0, 20.0)).unwrap(),
            ParamSelector::Intercept,
        ),
        ("two activities", ma, ParamSelector::ActivityIntercepts),
    ];
    let mut summary = vec![];
    for (name, g, sel) in games {
        let report = certify(&g).map_err(|e| e.to_string())?;
        let eta = block_p_constant(&report, &g).ok_or_else(|| format!("{name}: no certified constant"))?;
        let bound = lipschitz_bound(&g, eta, None).map_err(|e| e.to_string())?;
        let y0 = parameters(&g, sel).unwrap();
        let x0 = find_equilibrium(&g, &default_initial_conditions(&g).unwrap()[1], 1e-13).map_err(|e| e.to_string())?;
        let mut tightest = 0.0f64;
        for e in 0..50 {
            let mut dir = DVector::from_fn(y0.len(), |_, _| rng.random_range(-1.0..1.0));
            dir *= rng.random_range(0.0..0.5) / dir.norm();
            let mut pert = with_parameters(&g, sel, &(&y0 + &dir)).unwrap();
            let (dg, allowed) = if e < 25 {
                (0.0, bound.parameter_bound(dir.norm()))
            } else {
                let net = perturb_network(&mut rng, g.network(), 0.1);
                let dg = (net.weights() - g.network().weights()).norm();
                let dg = dg.max((net.weights() - g.network().weights()).singular_values().max());
                pert = pert.with_network(net).unwrap();
                (dg, bound.network_bound(dg, dir.norm()).map_err(|e| e.to_string())?)
            };
            let x = find_equilibrium(&pert, &x0, 1e-13).map_err(|e| format!("{name}: {e}"))?;
            let moved = (&x - &x0).norm();
            ensure(moved <= allowed * (1.0 + 1e-9) + 1e-10, || {
                format!("{name}, experiment {e}: displacement {moved} exceeds bound {allowed} (ΔG {dg})")
            })?;
            tightest = tightest.max(moved / allowed.max(1e-300));
        }
        summary.push(format!("{name} η̄ = {eta:.3}, max ratio {tightest:.3}"));
    }
    Ok(summary.join("; "))
}

fn random_certified(rng: &mut rand_chacha::ChaCha8Rng, idx: usize) -> GameSpec {
    loop {
        let g = match idx % 5 {
            0 => {
                let gamma = rng.random_range(0.02..0.15);
                let b = rng.random_range(4.0..6.0);
                netgame::games::races(complete(2), gamma, &[1.0; 2], &[b; 2]).unwrap()
            }
            4 => {
                let strength = rng.random_range(0.2..1.5);
                random_lq(rng, 2, 2, strength, boxes(2, 2, 0.0, 2.0))
            }
            _ => {
                let agents = rng.random_range(2..=3);
                let strength = rng.random_range(0.2..1.5);
                random_lq(rng, agents, 1, strength, boxes(agents, 1, 0.0, 2.0))
            }
        };
        if certify(&g).unwrap().has(GuaranteeKind::ExistenceUniqueness) {
            return g;
        }
    }
}

fn oracle_equivalence() -> Check {
    let mut rng = rng(8);
    let modes = [
        DynamicsMode::DiscreteSequential,
        DynamicsMode::DiscreteSimultaneous,
        DynamicsMode::ContinuousRk4 { step: 0.05 },
        DynamicsMode::Projection { step: 0.5, adaptive: true },
    ];
    let mut runs = 0;
    let mut worst = 0.0f64;
    for idx in 0..25 {
        let g = random_certified(&mut rng, idx);
        let res = if g.dim() <= 3 { 80 } else { 30 };
        let bf = brute_force_nash(&g, &BruteForceConfig::new(res)).map_err(|e| e.to_string())?;
        ensure(bf.equilibria.len() == 1, || format!("instance {idx}: brute force found {}", bf.equilibria.len()))?;
        let xb = DVector::from_column_slice(&bf.equilibria[0].x);
        let mut converged = 0;
        for x0 in default_initial_conditions(&g).unwrap() {
            for mode in modes {
                let tr = run_dynamics(&g, &x0, &DynamicsConfig::new(mode)).map_err(|e| e.to_string())?;
                if tr.converged() {
                    converged += 1;
                    let d = (tr.final_profile() - &xb).amax();
                    worst = worst.max(d);
                    ensure(d <= 1e-5, || format!("instance {idx}, {mode:?}: distance {d:e}"))?;
                }
            }
        }
        ensure(converged > 0, || format!("instance {idx}: no solver converged"))?;
        runs += converged;
    }
    Ok(format!("25 instances, {runs} converging runs, max distance {worst:.2e}"))
}

fn simpson_path_integral(field: &dyn Fn(&DVector<f64>) -> DVector<f64>, path: &[DVector<f64>]) -> f64 {
    path.windows(2)
        .map(|w| {
            let d = &w[1] - &w[0];
            let at = |t: f64| field(&(&w[0] + &d * t)).dot(&d);
            (at(0.0) + 4.0 * at(0.5) + at(1.0)) / 6.0
        })
        .sum()
}

fn property_suites() -> Check {
    let mut rng = rng(9);
    // Margin nesting on symmetric networks.
    for s in 0..100 {
        let n = rng.random_range(2..=8);
        let net = random_network(&mut rng, n, true);
        let kb = netgame::KappaBounds::new(
            vec![rng.random_range(0.5..2.0); n],
            vec![rng.random_range(0.0..1.0); n],
            netgame::games::Exactness::Exact,
        );
        let m = alpha_margins(&kb, &net.spectral_measures(1e-12));
        let amin = m.alpha_min.ok_or("symmetric network without λ_min")?;
        ensure(amin >= m.alpha_2 - 1e-9 && m.alpha_2 >= m.alpha_inf - 1e-9, || format!("network {s}: {m:?}"))?;
    }
    // Weighted block contraction under every P_Υ certificate.
    let mut pu_games = vec![
        scalar_lq(Network::generate(&NetworkKind::AsymmetricStar { n: 6, weight: 1.0 }).unwrap(), &[0.9; 6], &[1.0; 6]).unwrap(),
        scalar_lq(Network::generate(&NetworkKind::TrendSetter { n: 4, leader_weight: 1.0, follower_weight: 0.1 }).unwrap(), &[-0.7; 4], &[1.0; 4]).unwrap(),
        race_pair(0.1),
    ];
    while pu_games.len() < 8 {
        let agents = rng.random_range(2..=5);
        let g = random_lq(&mut rng, agents, 2, 0.9, boxes(agents, 2, -1.0, 2.0));
        if certify(&g).unwrap().p_upsilon.is_certified() {
            pu_games.push(g);
        }
    }
    let mut worst_rate = 0.0f64;
    for (gi, g) in pu_games.iter().enumerate() {
        ensure(certify(g).unwrap().p_upsilon.is_certified(), || format!("game {gi}: P_Υ not certified"))?;
        let (c, rate) = contraction_weights(&build_upsilon(g, &g.kappa_bounds(None).unwrap()))
            .ok_or_else(|| format!("game {gi}: no contraction weights"))?;
        let n = g.strategy_dim();
        let wnorm = |v: &DVector<f64>| (0..g.n_agents()).map(|i| v.rows(i * n, n).norm() / c[i]).fold(0.0, f64::max);
        for _ in 0..100 {
            let x = random_feasible(&mut rng, g, -1.0, 3.0);
            let y = random_feasible(&mut rng, g, -1.0, 3.0);
            let lhs = wnorm(&(g.best_response_map(&x).unwrap() - g.best_response_map(&y).unwrap()));
            let rhs = rate * wnorm(&(&x - &y));
            ensure(lhs <= rhs + 1e-10, || format!("game {gi}: {lhs} > {rhs}"))?;
        }
        worst_rate = worst_rate.max(rate);
    }
    // Lyapunov descent along continuous best responses.
    let mut ly_games = vec![e1a(), scalar_lq(complete(10), &[0.5; 10], &[1.0; 10]).unwrap()];
    for _ in 0..3 {
        let agents = rng.random_range(2..=5);
        let cons = mixed_constraints(&mut rng, agents, 2);
        ly_games.push(random_lq(&mut rng, agents, 2, 0.8, cons));
    }
    let mut points = 0;
    for (gi, g) in ly_games.iter().enumerate() {
        ensure(certify(g).unwrap().strong_monotone.is_certified(), || format!("Lyapunov game {gi} not strongly monotone"))?;
        for x0 in default_initial_conditions(g).unwrap() {
            let mut cfg = DynamicsConfig::new(DynamicsMode::ContinuousRk4 { step: 0.02 });
            cfg.max_iters = 2000;
            let tr = run_dynamics(g, &x0, &cfg).unwrap();
            let u: Vec<f64> = tr.points.iter().map(|p| g.lyapunov(&DVector::from_column_slice(&p.x)).unwrap()).collect();
            for (k, w) in u.windows(2).enumerate() {
                ensure(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), || format!("game {gi}: Ũ rises at step {k}: {} → {}", w[0], w[1]))?;
            }
            ensure(u.iter().all(|&v| v >= -1e-12), || format!("game {gi}: negative Ũ"))?;
            points += u.len();
        }
    }
    // Path independence of the (rescaled) potential field.
    let mut k = vec![0.1; 10];
    k[9] = 0.9;
    let probes: Vec<(&str, GameSpec, bool)> = vec![
        ("exact", e1a(), true),
        ("rescaled", scalar_lq(complete(10), &k, &[1.0; 10]).unwrap(), true),
        ("none", e1b(), false),
    ];
    let mut gaps = vec![];
    for (name, g, potential) in probes {
        let verdict = check_potential(&g);
        ensure(verdict.is_potential() == potential, || format!("{name}: verdict {verdict:?}"))?;
        let beta = match &verdict {
            PotentialVerdict::Rescalable { beta } => beta.clone(),
            _ => vec![1.0; g.n_agents()],
        };
        let field = |x: &DVector<f64>| {
            let f = g.operator(x).unwrap();
            DVector::from_fn(f.len(), |i, _| f[i] / beta[i])
        };
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let d = g.dim();
            let mut pt = || DVector::from_fn(d, |_, _| rng.random_range(0.0..2.0));
            let (p, q, r) = (pt(), pt(), pt());
            let direct = simpson_path_integral(&field, &[p.clone(), q.clone()]);
            let detour = simpson_path_integral(&field, &[p, r, q]);
            worst = worst.max((direct - detour).abs());
        }
        if potential {
            ensure(worst <= 1e-9, || format!("{name}: path dependence {worst:e}"))?;
        } else {
            ensure(worst > 1e-3, || format!("{name}: probe found no path dependence"))?;
        }
        gaps.push(format!("{name} {worst:.1e}"));
    }
    Ok(format!(
        "nesting on 100 networks; contraction on {} games (max rate {worst_rate:.3}); Ũ monotone over {points} points; path gaps {}",
        pu_games.len(),
        gaps.join(", ")
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("spectral table", spectral_table),
        ("trend-setter thresholds", trend_setter),
        ("counterexample suite", counterexamples),
        ("races reproduction", races_reproduction),
        ("dynamics reproduction", dynamics_reproduction),
        ("sensitivity validation", sensitivity_validation),
        ("Lipschitz bounds", lipschitz_experiments),
        ("oracle equivalence", oracle_equivalence),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

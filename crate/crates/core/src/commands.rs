//! Experiments behind the command-line subcommands. Each writes its CSV
//! files into an [`OutputDir`] and returns a JSON value for the report.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::composite::{adiabatic_evolve, disturbance_samples, generator_split, CombinedPath};
use crate::config::RunConfig;
use crate::connection::{closed_loop_holonomy, gauge_potential_from_frames, plaquette_curvature, FrameGrid};
use crate::error::{Error, Result};
use crate::manifold::uniform_circle_path;
use crate::models::{sphere_fixture, sphere_latitude_phase, ModelSpec};
use crate::output::OutputDir;
use crate::spectral::{self, EigenFrame, HermitianOperator};
use crate::stochastic::{
    antiperiodic_check, characteristic_estimate, cumulative_variance_kernel, ensemble_final_values, euler_maruyama,
    mean_estimate, variance_estimate, write_trajectory_csv, SdeProblem, StreamSeed,
};
use crate::verify::{ensemble_average, fidelity_sweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Holonomy,
    Evolve,
    Ensemble,
    SdeCheck,
    VerifyAdiabatic,
    Curvature,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Holonomy => "holonomy",
            Command::Evolve => "evolve",
            Command::Ensemble => "ensemble",
            Command::SdeCheck => "sde-check",
            Command::VerifyAdiabatic => "verify-adiabatic",
            Command::Curvature => "curvature",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Command,
    pub version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub wall_time_s: f64,
    pub results: Value,
    pub outputs: Vec<String>,
}

/// Run `command`, write its CSV files and `report.json` under `out`.
pub fn run(command: Command, config: &RunConfig, out: &Path) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let mut dir = OutputDir::create(out)?;
    let results = match command {
        Command::Holonomy => cmd_holonomy(config, &mut dir)?,
        Command::Evolve => cmd_evolve(config, &mut dir)?,
        Command::Ensemble => cmd_ensemble(config, &mut dir)?,
        Command::SdeCheck => cmd_sde_check(config, &mut dir)?,
        Command::VerifyAdiabatic => cmd_verify_adiabatic(config, &mut dir)?,
        Command::Curvature => cmd_curvature(config, &mut dir)?,
    };
    let mut outputs = dir.written().to_vec();
    outputs.push("report.json".into());
    let report = RunReport {
        command,
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seed: config.noise.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        results,
        outputs,
    };
    dir.write_with("report.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &report).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(report)
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

fn require_phase_control(model: &ModelSpec, command: &str) -> Result<()> {
    if model.control_dim != 1 || model.two_level.is_none() {
        return Err(Error::Configuration(format!(
            "{command} needs the two_level model, got {}",
            model.name
        )));
    }
    Ok(())
}

fn transport(hams: &[HermitianOperator], config: &RunConfig) -> Result<Vec<EigenFrame>> {
    spectral::smooth_transport(
        hams,
        config.numerics.branch,
        config.numerics.degeneracy_tol,
        config.numerics.gap_min,
    )
}

/// Weight `|⟨e₀|a⟩|²` of the first basis state in a rank-1 frame; the
/// two-level Berry phase per turn is `-2π` times it.
fn first_weight(frame: &EigenFrame) -> f64 {
    frame.frame[(0, 0)].norm_sqr()
}

/// Undisturbed closed-loop geometric phase of the configured model.
pub fn cmd_holonomy(config: &RunConfig, out: &mut OutputDir) -> Result<Value> {
    let model = config.model_spec()?;
    let s = &config.schedule;
    let turns = s.loops;
    let (times, points): (Vec<f64>, Vec<Vec<f64>>) = match model.name {
        "sphere" => (0..=s.steps)
            .map(|k| {
                let f = k as f64 / s.steps as f64;
                (s.t_end * f, vec![config.sphere.latitude, TAU * turns * f])
            })
            .unzip(),
        _ => {
            let control = uniform_circle_path(s.t_end, s.steps, turns)?;
            (control.times(), control.points())
        }
    };
    let hams = points
        .iter()
        .map(|x| model.hamiltonian(x))
        .collect::<Result<Vec<_>>>()?;
    let frames = transport(&hams, config)?;
    let gauge = gauge_potential_from_frames(&frames, &points)?;
    let hol = closed_loop_holonomy(&frames, &gauge)?;

    let upper_oracle = match model.name {
        "sphere" => sphere_latitude_phase(config.sphere.latitude) * turns,
        _ => {
            let p = model.two_level.expect("two-level parameters");
            let r = p.r();
            -PI * p.omega * p.omega / (r * (r + p.delta)) * turns
        }
    };
    // The two branches of a two-level system carry opposite curvature.
    let oracle = if config.numerics.branch == 1 {
        upper_oracle
    } else {
        -upper_oracle
    };
    let phases = hol.phases();
    let deviation = if phases.len() == 1 {
        wrap(phases[0] - oracle).abs()
    } else {
        f64::NAN
    };

    let rows: Vec<Vec<f64>> = times
        .iter()
        .zip(&points)
        .zip(&frames)
        .map(|((&t, x), f)| {
            let mut row = vec![t];
            row.extend_from_slice(x);
            row.push((frames[0].frame.adjoint() * &f.frame)[(0, 0)].arg());
            row
        })
        .collect();
    let header = if model.name == "sphere" {
        "t,theta,phi,overlap_phase"
    } else {
        "t,theta,overlap_phase"
    };
    out.write_csv("holonomy.csv", &[format!("model = {}", model.name)], header, &rows)?;

    Ok(json!({
        "model": model.name,
        "branch": config.numerics.branch,
        "loops": turns,
        "holonomy": hol.summary(),
        "phase": phases.first().copied(),
        "oracle_phase": oracle,
        "abs_deviation": deviation,
        "eigenvalue": frames[0].value,
        "gap": frames[0].gap,
    }))
}

/// One disturbed trajectory: noise draw, generator split and adiabatic
/// evolution.
pub fn cmd_evolve(config: &RunConfig, out: &mut OutputDir) -> Result<Value> {
    let model = config.model_spec()?;
    require_phase_control(&model, "evolve")?;
    let s = &config.schedule;
    let control = uniform_circle_path(s.t_end, s.steps, s.loops)?;
    let problem = SdeProblem::phase_noise(config.noise.k_form, config.noise.intensity)?;
    let seed = StreamSeed::new(config.noise.seed, 0);
    let noise = euler_maruyama(&problem, &control, &[0.0], s.dt(), seed)?;
    let path = CombinedPath::from_parts(&control, &noise)?;
    let hams = path
        .x
        .iter()
        .map(|x| model.hamiltonian(x))
        .collect::<Result<Vec<_>>>()?;
    let frames = transport(&hams, config)?;
    let split = generator_split(&frames, &model.disturbance, &path)?;
    let ws = disturbance_samples(&model.disturbance, &path)?;
    let states = adiabatic_evolve(0, &split, &frames, &ws, &path.times, config.numerics.include_aty)?;

    let geometric: Vec<f64> = states
        .iter()
        .zip(&frames)
        .map(|(st, f)| ((frames[0].frame.adjoint() * &f.frame)[(0, 0)] * st.transporter.matrix[(0, 0)]).arg())
        .collect();
    let max_dev = states
        .iter()
        .enumerate()
        .map(|(k, st)| (st.dressed_amplitudes(&ws[k], &frames[k]).norm() - 1.0).abs())
        .fold(0.0, f64::max);

    let rows: Vec<Vec<f64>> = states
        .iter()
        .enumerate()
        .map(|(k, st)| {
            vec![
                st.t,
                path.x[k][0],
                path.y[k][0],
                st.psi[0].re,
                st.psi[0].im,
                st.psi[1].re,
                st.psi[1].im,
                st.dynamical_phase,
                geometric[k],
            ]
        })
        .collect();
    let comments = vec![
        format!("seed = {}", seed.master),
        format!("include_aty = {}", config.numerics.include_aty),
    ];
    out.write_csv(
        "evolve.csv",
        &comments,
        "t,theta,delta_theta,psi0_re,psi0_im,psi1_re,psi1_im,dynamical_phase,geometric_phase",
        &rows,
    )?;
    out.write_with("trajectory.csv", |w| write_trajectory_csv(w, &control, &noise))?;

    // Oracle: Berry phase of the loop plus the noise phase of the implemented
    // A_Q, which only depends on the end value of δθ.
    let weight = first_weight(&frames[0]);
    let delta_end = *noise.last().first().expect("scalar noise");
    let oracle = -TAU * s.loops * weight - 0.5 * (2.0 * weight - 1.0) * delta_end;
    let last = states.last().expect("non-empty");
    let final_geometric = *geometric.last().expect("non-empty");
    Ok(json!({
        "seed": seed,
        "include_aty": config.numerics.include_aty,
        "final_time": last.t,
        "final_delta_theta": delta_end,
        "dynamical_phase": last.dynamical_phase,
        "geometric_phase": final_geometric,
        "oracle_geometric_phase": wrap(oracle),
        "abs_deviation": wrap(final_geometric - oracle).abs(),
        "max_dressed_population_deviation": max_dev,
        "psi_final": {"re": last.psi.iter().map(|z| z.re).collect::<Vec<_>>(), "im": last.psi.iter().map(|z| z.im).collect::<Vec<_>>()},
    }))
}

/// Monte Carlo ensemble of dressed populations.
pub fn cmd_ensemble(config: &RunConfig, out: &mut OutputDir) -> Result<Value> {
    let model = config.model_spec()?;
    require_phase_control(&model, "ensemble")?;
    let summary = ensemble_average(
        &model,
        &config.ensemble_settings(),
        config.ensemble.n,
        config.noise.seed,
    )?;
    let p = model.two_level.expect("two-level parameters");
    let c_impl = summary.aq_coefficient;
    let rows: Vec<Vec<f64>> = (0..summary.times.len())
        .map(|r| {
            let d = summary.dressed_mean[r];
            let chi = summary.characteristic_mean[r];
            let mut row = vec![
                summary.times[r],
                summary.kernel[r],
                d.re,
                d.im,
                summary.dressed_modulus[r],
                summary.dressed_stderr[r],
                (-0.5 * c_impl * c_impl * summary.kernel[r]).exp(),
                chi.re,
                chi.im,
                summary.characteristic_stderr[r],
            ];
            for z in &summary.mean_psi[r] {
                row.push(z.re);
                row.push(z.im);
            }
            row
        })
        .collect();
    out.write_csv(
        "ensemble.csv",
        &[format!("seed = {}", summary.master_seed), format!("N = {}", summary.n)],
        "t,K,dressed_re,dressed_im,dressed_modulus,dressed_stderr,predicted_modulus,char_re,char_im,char_stderr,psi0_re,psi0_im,psi1_re,psi1_im",
        &rows,
    )?;

    let delta_over_r = p.delta.abs() / p.r();
    let substituted = p.delta.abs() / (2.0 * p.r());
    let fit = summary.fit;
    let rel = |target: f64| fit.map(|f| (f.c - target).abs() / target);
    Ok(json!({
        "parameters": {"omega": p.omega, "delta": p.delta, "D": config.noise.intensity, "k_form": config.noise.k_form},
        "N": summary.n,
        "master_seed": summary.master_seed,
        "fitted_exponent": fit.map(|f| f.slope),
        "exponent_stderr": fit.map(|f| f.slope_stderr),
        "fitted_c": fit.map(|f| f.c),
        "fitted_c_stderr": fit.map(|f| f.c_stderr),
        "fit_points": fit.map(|f| f.points),
        "implemented_aq_coefficient": c_impl,
        "relative_error_vs_implemented": rel(c_impl),
        "coefficient_delta_over_r": delta_over_r,
        "coefficient_delta_over_2r": substituted,
        "relative_error_vs_delta_over_r": rel(delta_over_r),
        "relative_error_vs_delta_over_2r": rel(substituted),
        "matches_delta_over_r": rel(delta_over_r).map(|e| e < 0.05),
        "matches_delta_over_2r": rel(substituted).map(|e| e < 0.05),
        "max_individual_deviation": summary.max_individual_deviation,
        "final_dressed_modulus": summary.dressed_modulus.last(),
        "abort_count": summary.abort_count,
        "include_aty": config.numerics.include_aty,
    }))
}

/// Statistics of the phase-noise driver against its Gaussian law.
pub fn cmd_sde_check(config: &RunConfig, out: &mut OutputDir) -> Result<Value> {
    let k_form = config.noise.k_form;
    let grid: Vec<f64> = (0..=1000).map(|i| TAU * i as f64 / 1000.0).collect();
    let antiperiodic = antiperiodic_check(|t| k_form.eval(t), &grid);

    let s = &config.schedule;
    let control = uniform_circle_path(s.t_end, s.steps, s.loops)?;
    let problem = SdeProblem::phase_noise(k_form, config.noise.intensity)?;
    let finals = ensemble_final_values(
        &problem,
        &control,
        &[0.0],
        s.dt(),
        config.noise.seed,
        config.sde_check.n,
        0,
    )?;
    let thetas: Vec<f64> = control.samples.iter().map(|x| x.point[0]).collect();
    let kernel = *cumulative_variance_kernel(|t| k_form.eval(t), &control.times(), &thetas, config.noise.intensity)
        .last()
        .expect("non-empty");

    let mean = mean_estimate(&finals);
    let var = variance_estimate(&finals);
    let mut rows = Vec::new();
    let mut chars = Vec::new();
    for &alpha in &config.sde_check.alphas {
        let (re, im) = characteristic_estimate(&finals, alpha);
        let expected = (-0.5 * alpha * alpha * kernel).exp();
        let pass = re.within(expected, 3.0) && im.within(0.0, 3.0);
        rows.push(vec![alpha, re.value, im.value, re.stderr, im.stderr, expected]);
        chars.push(json!({"alpha": alpha, "re": re, "im": im, "expected": expected, "pass": pass}));
    }
    out.write_csv(
        "sde_check.csv",
        &[
            format!("seed = {}", config.noise.seed),
            format!("N = {}", config.sde_check.n),
        ],
        "alpha,char_re,char_im,re_stderr,im_stderr,expected",
        &rows,
    )?;
    let sample = euler_maruyama(
        &problem,
        &control,
        &[0.0],
        s.dt(),
        StreamSeed::new(config.noise.seed, 0),
    )?;
    out.write_with("trajectory.csv", |w| write_trajectory_csv(w, &control, &sample))?;

    Ok(json!({
        "k_form": k_form,
        "antiperiodic": antiperiodic,
        "N": config.sde_check.n,
        "kernel": kernel,
        "mean": mean,
        "mean_pass": mean.within(0.0, 3.0),
        "variance": var,
        "variance_pass": var.within(kernel, 3.0),
        "characteristic": chars,
    }))
}

/// Exact versus adiabatic propagation on noiseless loops of growing duration.
pub fn cmd_verify_adiabatic(config: &RunConfig, out: &mut OutputDir) -> Result<Value> {
    let model = config.model_spec()?;
    require_phase_control(&model, "verify-adiabatic")?;
    let rows = fidelity_sweep(
        &model,
        &config.adiabatic.durations,
        config.adiabatic.steps_per_time,
        config.schedule.loops,
        config.numerics.substeps,
        &config.numerics(),
    )?;
    let csv: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.t_end, r.steps as f64, r.fidelity, r.infidelity])
        .collect();
    out.write_csv("fidelity.csv", &[], "t_end,steps,fidelity,infidelity", &csv)?;
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].infidelity / w[1].infidelity).collect();
    Ok(json!({ "fidelity_table": rows, "infidelity_ratios": ratios }))
}

/// Plaquette curvature of the sphere fixture, and of the circle model made
/// two-dimensional with a flat extra direction.
pub fn cmd_curvature(config: &RunConfig, out: &mut OutputDir) -> Result<Value> {
    let sp = &config.sphere;
    let linspace =
        |a: f64, b: f64, n: usize| -> Vec<f64> { (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect() };
    let thetas = linspace(sp.theta_min, sp.theta_max, sp.n_theta);
    let phis = linspace(0.0, TAU, sp.n_phi);
    let (branch, tol, gap_min) = (
        config.numerics.branch,
        config.numerics.degeneracy_tol,
        config.numerics.gap_min,
    );
    let grid = FrameGrid::build(
        thetas.clone(),
        phis.clone(),
        |x| sphere_fixture(x[0], x[1]),
        branch,
        tol,
        gap_min,
    )?;
    let sign = if branch == 1 { -1.0 } else { 1.0 };
    let mut rows = Vec::new();
    let (mut max_f, mut max_err): (f64, f64) = (0.0, 0.0);
    for i in 0..thetas.len() - 1 {
        for j in 0..phis.len() - 1 {
            let f = plaquette_curvature(&grid, (i, j))?[(0, 0)];
            let (tc, pc) = (0.5 * (thetas[i] + thetas[i + 1]), 0.5 * (phis[j] + phis[j + 1]));
            let expected = sign * 0.5 * tc.sin();
            max_f = max_f.max(f.norm());
            max_err = max_err.max((f.im - expected).abs() + f.re.abs());
            rows.push(vec![tc, pc, f.re, f.im, expected]);
        }
    }
    out.write_csv(
        "curvature.csv",
        &["model = sphere".into()],
        "theta,phi,f_re,f_im,expected_im",
        &rows,
    )?;

    let p = crate::models::TwoLevelParams::new(config.model.omega, config.model.delta)?;
    let circle = FrameGrid::build(
        linspace(0.0, TAU, 33),
        linspace(0.0, 1.0, 5),
        |x| Ok(crate::models::rwa_hamiltonian(&p, x[0])),
        branch,
        tol,
        gap_min,
    )?;
    let mut circle_max: f64 = 0.0;
    for i in 0..32 {
        for j in 0..4 {
            circle_max = circle_max.max(plaquette_curvature(&circle, (i, j))?.norm());
        }
    }
    Ok(json!({
        "branch": branch,
        "cells": rows.len(),
        "max_abs_curvature": max_f,
        "max_abs_error_vs_half_sin": max_err,
        "non_flat": max_f > 1e-3,
        "circle_model_max_abs_curvature": circle_max,
    }))
}

/// Rows of a CSV produced by these commands, skipping comments and header.
pub fn read_csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

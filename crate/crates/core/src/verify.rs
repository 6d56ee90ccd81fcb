//! Independent checks: direct integration of the Schrödinger equation,
//! adiabatic fidelity, and Monte Carlo ensembles over noise realizations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composite::{adiabatic_evolve, conjugate, disturbance_samples, CombinedPath, SplitPlan};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::manifold::{uniform_circle_path, ChartedPath};
use crate::models::{KForm, ModelSpec};
use crate::spectral::{self, EigenFrame, HermitianOperator};
use crate::stochastic::{cumulative_variance_kernel, euler_maruyama, SdeProblem, StreamSeed};

/// Largest allowed `dt · ‖H‖` for one propagator step.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;
/// Trajectories reduced together, in index order, before chunks are merged.
pub const REDUCTION_CHUNK: usize = 64;
/// Fraction of aborted trajectories that fails an ensemble run.
pub const MAX_ABORT_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CVector>,
}

impl ExactTrajectory {
    pub fn last(&self) -> &CVector {
        self.states.last().expect("trajectory has at least one sample")
    }
}

/// Integrate `i dψ/dt = H(t) ψ` with `exp(-i H(t_mid) dt)` per sub-step,
/// recording the state on `times`. Each grid interval is split into
/// `substeps` equal pieces.
pub fn exact_propagate<F>(hamiltonian: F, psi0: &CVector, times: &[f64], substeps: usize) -> Result<ExactTrajectory>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    if substeps == 0 {
        return Err(Error::validation("substeps must be at least 1"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("time grid must increase strictly"));
    }
    let mut psi = psi0.clone();
    let mut states = Vec::with_capacity(times.len());
    states.push(psi.clone());
    for (k, w) in times.windows(2).enumerate() {
        let dt = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            let tm = w[0] + (s as f64 + 0.5) * dt;
            let h = hamiltonian(tm)?;
            let norm = linalg::operator_norm(h.matrix());
            if dt * norm >= MAX_PHASE_PER_STEP {
                return Err(Error::validation(format!(
                    "time step {dt:.3e} too large for |H| = {norm:.3e} at step {k}: dt*|H| must stay below {MAX_PHASE_PER_STEP}"
                )));
            }
            let u = linalg::exp_hermitian(h.matrix(), dt);
            debug_assert!(linalg::unitarity_defect(&u) < 1e-12);
            psi = u * psi;
        }
        states.push(psi.clone());
    }
    let drift = (psi.norm() - psi0.norm()).abs();
    if !(drift < 1e-8) {
        return Err(Error::NumericalBlowup {
            step: times.len().saturating_sub(1),
        });
    }
    Ok(ExactTrajectory {
        times: times.to_vec(),
        states,
    })
}

/// `|⟨ψ_exact(T)|ψ_adiabatic(T)⟩|` for runs on the same grid.
pub fn adiabatic_fidelity(exact: &ExactTrajectory, adiabatic: &[crate::composite::AdiabaticState]) -> Result<f64> {
    if exact.times.len() != adiabatic.len()
        || exact
            .times
            .iter()
            .zip(adiabatic)
            .any(|(a, b)| (a - b.t).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::validation("exact and adiabatic runs are on different grids"));
    }
    let last = adiabatic.last().ok_or_else(|| Error::validation("empty trajectory"))?;
    Ok(exact.last().dotc(&last.psi).norm().min(1.0))
}

/// `H₊(t)` by linear interpolation of `x` and `y` between the path samples.
pub fn interpolated_hamiltonian<'a>(
    model: &'a ModelSpec,
    path: &'a CombinedPath,
) -> impl Fn(f64) -> Result<HermitianOperator> + 'a {
    move |t: f64| {
        let n = path.times.len();
        let k = path.times.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let s = ((t - path.times[k]) / (path.times[k + 1] - path.times[k])).clamp(0.0, 1.0);
        let lerp = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p + s * (q - p)).collect::<Vec<f64>>();
        let x = lerp(&path.x[k], &path.x[k + 1]);
        let y = lerp(&path.y[k], &path.y[k + 1]);
        conjugate(&model.hamiltonian(&x)?, &model.disturbance.check_unitary(&x, &y)?)
    }
}

/// Numerical settings shared by the adiabatic comparisons and ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    pub branch: usize,
    pub degeneracy_tol: f64,
    pub gap_min: f64,
    pub include_aty: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            branch: 1,
            degeneracy_tol: spectral::DEFAULT_DEGENERACY_TOL,
            gap_min: 1e-3,
            include_aty: true,
        }
    }
}

fn transported_frames(model: &ModelSpec, path: &CombinedPath, numerics: &Numerics) -> Result<Vec<EigenFrame>> {
    let hams = path
        .x
        .iter()
        .map(|x| model.hamiltonian(x))
        .collect::<Result<Vec<_>>>()?;
    spectral::smooth_transport(&hams, numerics.branch, numerics.degeneracy_tol, numerics.gap_min)
}

/// Exact versus adiabatic propagation along one combined path, both started
/// in the dressed state; the exact run sees the same noise samples.
pub fn fidelity_on_path(model: &ModelSpec, path: &CombinedPath, numerics: &Numerics, substeps: usize) -> Result<f64> {
    let frames = transported_frames(model, path, numerics)?;
    let split = SplitPlan::new(&frames)?.split(&model.disturbance, path)?;
    let ws = disturbance_samples(&model.disturbance, path)?;
    let adiabatic = adiabatic_evolve(0, &split, &frames, &ws, &path.times, numerics.include_aty)?;
    let exact = exact_propagate(
        interpolated_hamiltonian(model, path),
        &adiabatic[0].psi,
        &path.times,
        substeps,
    )?;
    adiabatic_fidelity(&exact, &adiabatic)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub t_end: f64,
    pub steps: usize,
    pub fidelity: f64,
    pub infidelity: f64,
}

/// Noiseless closed loops of duration `t_end`, one row per duration.
pub fn fidelity_sweep(
    model: &ModelSpec,
    durations: &[f64],
    steps_per_unit_time: f64,
    turns: f64,
    substeps: usize,
    numerics: &Numerics,
) -> Result<Vec<FidelityRow>> {
    durations
        .iter()
        .map(|&t_end| {
            let steps = ((t_end * steps_per_unit_time).ceil() as usize).max(16);
            let control = uniform_circle_path(t_end, steps, turns)?;
            let path = CombinedPath::undisturbed(&control, 1)?;
            let fidelity = fidelity_on_path(model, &path, numerics, substeps)?;
            Ok(FidelityRow {
                t_end,
                steps,
                fidelity,
                infidelity: 1.0 - fidelity,
            })
        })
        .collect()
}

/// Settings of a Monte Carlo ensemble over phase-noise realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub k_form: KForm,
    /// Noise intensity `D`.
    pub intensity: f64,
    pub t_end: f64,
    pub steps: usize,
    pub turns: f64,
    /// Statistics are recorded every `record_every` steps and at the end.
    pub record_every: usize,
    pub numerics: Numerics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuationFit {
    /// Slope of `-2 log|E|` against `K`, i.e. `c²`.
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub c: f64,
    pub c_stderr: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub master_seed: u64,
    pub times: Vec<f64>,
    /// `K(t, 0)` at the recorded times.
    pub kernel: Vec<f64>,
    /// `E[ψ(t)]` components.
    pub mean_psi: Vec<Vec<C64>>,
    pub psi_stderr: Vec<Vec<f64>>,
    /// `E[⟨a, x(t)|W⁻¹|ψ(t)⟩]`
    pub dressed_mean: Vec<C64>,
    pub dressed_modulus: Vec<f64>,
    pub dressed_stderr: Vec<f64>,
    /// `E[exp(-iδθ(t))]`
    pub characteristic_mean: Vec<C64>,
    pub characteristic_stderr: Vec<f64>,
    /// Largest `| |⟨a|W⁻¹|ψ⟩| - 1 |` over all trajectories and times.
    pub max_individual_deviation: f64,
    /// `|A_Qx| / |Δy|` of the implemented generator at the start of the path.
    pub aq_coefficient: f64,
    pub fit: Option<AttenuationFit>,
    pub abort_count: usize,
}

#[derive(Debug, Clone)]
struct Accumulator {
    count: usize,
    aborts: usize,
    d: Vec<C64>,
    d2: Vec<f64>,
    psi: Vec<Vec<C64>>,
    psi2: Vec<Vec<f64>>,
    chi: Vec<C64>,
    chi2: Vec<f64>,
    max_dev: f64,
}

impl Accumulator {
    fn new(records: usize, dim: usize) -> Self {
        Self {
            count: 0,
            aborts: 0,
            d: vec![C64::new(0.0, 0.0); records],
            d2: vec![0.0; records],
            psi: vec![vec![C64::new(0.0, 0.0); dim]; records],
            psi2: vec![vec![0.0; dim]; records],
            chi: vec![C64::new(0.0, 0.0); records],
            chi2: vec![0.0; records],
            max_dev: 0.0,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.count += other.count;
        self.aborts += other.aborts;
        for r in 0..self.d.len() {
            self.d[r] += other.d[r];
            self.d2[r] += other.d2[r];
            self.chi[r] += other.chi[r];
            self.chi2[r] += other.chi2[r];
            for j in 0..self.psi[r].len() {
                self.psi[r][j] += other.psi[r][j];
                self.psi2[r][j] += other.psi2[r][j];
            }
        }
        self.max_dev = self.max_dev.max(other.max_dev);
    }
}

fn mean_and_stderr(sum: C64, sum_sq: f64, n: usize) -> (C64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean.norm_sqr()).max(0.0) * nf / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// Shared, noise-independent ingredients of an ensemble run.
struct EnsemblePlan {
    control: ChartedPath,
    frames: Vec<EigenFrame>,
    plan: SplitPlan,
    problem: SdeProblem,
    records: Vec<usize>,
    dt: f64,
    points: Vec<Vec<f64>>,
}

fn record_indices(steps: usize, every: usize) -> Vec<usize> {
    let mut r: Vec<usize> = (0..=steps).step_by(every.max(1)).collect();
    if *r.last().expect("non-empty") != steps {
        r.push(steps);
    }
    r
}

/// One noise realization, evolved step by step without storing the split.
/// `W` is evaluated and checked for unitarity at every recorded sample.
fn run_trajectory(
    model: &ModelSpec,
    plan: &EnsemblePlan,
    settings: &EnsembleSettings,
    seed: StreamSeed,
    acc: &mut Accumulator,
) -> Result<()> {
    let noise = euler_maruyama(&plan.problem, &plan.control, &[0.0], plan.dt, seed)?;
    let (xs, ys, times) = (&plan.points, &noise.values, &noise.times);
    let rank = plan.frames[0].frame.ncols();
    let a_p = plan.plan.a_p();
    let mut u = CMatrix::identity(rank, rank);
    let mut phase = 0.0;
    let mut next = 0;
    let mut local_dev: f64 = 0.0;
    for k in 0..xs.len() {
        if next < plan.records.len() && plan.records[next] == k {
            let w = model.disturbance.check_unitary(&xs[k], &ys[k])?;
            let frame = &plan.frames[k].frame;
            let psi = (&w * (frame * u.column(0))) * C64::from_polar(1.0, -phase);
            if (psi.norm() - 1.0).abs() > 1e-9 || !psi.iter().all(|z| z.is_finite()) {
                return Err(Error::NumericalBlowup { step: k });
            }
            let d = (frame.adjoint() * (w.adjoint() * &psi))[0];
            local_dev = local_dev.max((d.norm() - 1.0).abs());
            let chi = C64::from_polar(1.0, -ys[k][0]);
            acc.d[next] += d;
            acc.d2[next] += d.norm_sqr();
            acc.chi[next] += chi;
            acc.chi2[next] += 1.0;
            for (j, z) in psi.iter().enumerate() {
                acc.psi[next][j] += z;
                acc.psi2[next][j] += z.norm_sqr();
            }
            next += 1;
        }
        if k + 1 == xs.len() {
            break;
        }
        phase += 0.5 * (plan.frames[k].value + plan.frames[k + 1].value) * (times[k + 1] - times[k]);
        let (qx, ty) = plan
            .plan
            .step_parts(k, &model.disturbance, (&xs[k], &xs[k + 1]), (&ys[k], &ys[k + 1]));
        let mut generator = &a_p[k] + qx;
        if settings.numerics.include_aty {
            generator += ty;
        }
        u = linalg::exp_anti_hermitian(&(-generator)) * u;
    }
    acc.max_dev = acc.max_dev.max(local_dev);
    acc.count += 1;
    Ok(())
}

/// Ordinary least squares of `ys` on `xs` with slope and intercept.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, intercept, se)
}

/// Regress `-2 log|E|` on `K` over the samples with `0.1 < |E| < 0.9`.
pub fn fit_attenuation(kernel: &[f64], modulus: &[f64]) -> Option<AttenuationFit> {
    if kernel.iter().all(|&k| k == 0.0) {
        return Some(AttenuationFit {
            slope: 0.0,
            slope_stderr: 0.0,
            intercept: 0.0,
            c: 0.0,
            c_stderr: 0.0,
            points: kernel.len(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = kernel
        .iter()
        .zip(modulus)
        .filter(|(_, &m)| m > 0.1 && m < 0.9)
        .map(|(&k, &m)| (k, -2.0 * m.ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    let (slope, intercept, se) = ols(&xs, &ys);
    let c = slope.max(0.0).sqrt();
    let c_stderr = if c > 0.0 { se / (2.0 * c) } else { f64::NAN };
    Some(AttenuationFit {
        slope,
        slope_stderr: se,
        intercept,
        c,
        c_stderr,
        points: xs.len(),
    })
}

/// Magnitude of the implemented noise generator per unit `Δy` at `x`.
fn probe_aq(model: &ModelSpec, frame: &EigenFrame, x: &[f64]) -> Result<f64> {
    let h = 1e-4;
    let frames = [frame.clone(), frame.clone()];
    let path = CombinedPath::new(
        vec![0.0, 1.0],
        vec![x.to_vec(), x.to_vec()],
        vec![vec![-0.5 * h], vec![0.5 * h]],
    )?;
    let split = SplitPlan::new(&frames)?.split(&model.disturbance, &path)?;
    Ok(linalg::max_abs(&split.a_qx[0]) / h)
}

/// Monte Carlo average over `n` noise realizations of the adiabatic state
/// along `θ(t) = 2π turns t / T`, with noise `dδθ = k(θ) dW`.
pub fn ensemble_average(
    model: &ModelSpec,
    settings: &EnsembleSettings,
    n: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    if n < 100 {
        return Err(Error::validation(format!(
            "ensemble needs at least 100 trajectories, got {n}"
        )));
    }
    if model.control_dim != 1 {
        return Err(Error::Configuration(format!(
            "model {} has no scalar phase control",
            model.name
        )));
    }
    if settings.steps == 0 || !(settings.t_end > 0.0) {
        return Err(Error::validation("ensemble needs t_end > 0 and steps > 0"));
    }
    let control = uniform_circle_path(settings.t_end, settings.steps, settings.turns)?;
    let undisturbed = CombinedPath::undisturbed(&control, 1)?;
    let frames = transported_frames(model, &undisturbed, &settings.numerics)?;
    if frames[0].multiplicity != 1 {
        return Err(Error::Configuration(
            "ensemble statistics need a non-degenerate branch".into(),
        ));
    }
    let plan = EnsemblePlan {
        plan: SplitPlan::new(&frames)?,
        problem: SdeProblem::phase_noise(settings.k_form, settings.intensity)?,
        records: record_indices(settings.steps, settings.record_every),
        dt: settings.t_end / settings.steps as f64,
        frames,
        points: control.points(),
        control,
    };
    let dim = model.disturbance.dim();
    let records = plan.records.len();

    let chunks: Vec<Accumulator> = (0..n)
        .step_by(REDUCTION_CHUNK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let mut acc = Accumulator::new(records, dim);
            for i in start..(start + REDUCTION_CHUNK).min(n) {
                let mut local = Accumulator::new(records, dim);
                match run_trajectory(
                    model,
                    &plan,
                    settings,
                    StreamSeed::new(master_seed, i as u64),
                    &mut local,
                ) {
                    Ok(()) => acc.merge(&local),
                    Err(Error::GapViolation { .. }) => acc.aborts += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = Accumulator::new(records, dim);
    for c in &chunks {
        total.merge(c);
    }
    if total.aborts as f64 > MAX_ABORT_FRACTION * n as f64 {
        return Err(Error::TooManyAborts {
            aborted: total.aborts,
            total: n,
        });
    }
    let m = total.count;
    if m < 2 {
        return Err(Error::TooManyAborts {
            aborted: total.aborts,
            total: n,
        });
    }

    let times_all = plan.control.times();
    let thetas: Vec<f64> = plan.control.samples.iter().map(|s| s.point[0]).collect();
    let k_form = settings.k_form;
    let kernel_all = cumulative_variance_kernel(|t| k_form.eval(t), &times_all, &thetas, settings.intensity);

    let mut summary = EnsembleSummary {
        n,
        master_seed,
        times: plan.records.iter().map(|&k| times_all[k]).collect(),
        kernel: plan.records.iter().map(|&k| kernel_all[k]).collect(),
        mean_psi: Vec::with_capacity(records),
        psi_stderr: Vec::with_capacity(records),
        dressed_mean: Vec::with_capacity(records),
        dressed_modulus: Vec::with_capacity(records),
        dressed_stderr: Vec::with_capacity(records),
        characteristic_mean: Vec::with_capacity(records),
        characteristic_stderr: Vec::with_capacity(records),
        max_individual_deviation: total.max_dev,
        aq_coefficient: probe_aq(model, &plan.frames[0], &plan.control.samples[0].point)?,
        fit: None,
        abort_count: total.aborts,
    };
    for r in 0..records {
        let (d, se) = mean_and_stderr(total.d[r], total.d2[r], m);
        summary.dressed_mean.push(d);
        summary.dressed_modulus.push(d.norm());
        summary.dressed_stderr.push(se);
        let (chi, se) = mean_and_stderr(total.chi[r], total.chi2[r], m);
        summary.characteristic_mean.push(chi);
        summary.characteristic_stderr.push(se);
        let (row, row_se): (Vec<C64>, Vec<f64>) = (0..dim)
            .map(|j| mean_and_stderr(total.psi[r][j], total.psi2[r][j], m))
            .unzip();
        summary.mean_psi.push(row);
        summary.psi_stderr.push(row_se);
    }
    summary.fit = fit_attenuation(&summary.kernel, &summary.dressed_modulus);
    Ok(summary)
}

/// Convenience: `e^{-i H t} ψ0` for a constant Hamiltonian.
pub fn constant_evolution(h: &CMatrix, psi0: &CVector, t: f64) -> CVector {
    linalg::exp_hermitian(h, t) * psi0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TwoLevelParams;
    use crate::testutil::{random_hermitian, rng};

    #[test]
    fn constant_hamiltonian_matches_closed_form() {
        let mut r = rng(10);
        let h = random_hermitian(&mut r, 3, 1.0);
        let psi0 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.05).collect();
        let op = HermitianOperator::new(h.clone()).unwrap();
        let traj = exact_propagate(|_| Ok(op.clone()), &psi0, &times, 4).unwrap();
        assert!((traj.last() - constant_evolution(&h, &psi0, 5.0)).norm() < 1e-9);
    }

    #[test]
    fn coarse_step_rejected() {
        let op = HermitianOperator::new(CMatrix::identity(2, 2) * C64::new(10.0, 0.0)).unwrap();
        let psi0 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let r = exact_propagate(|_| Ok(op.clone()), &psi0, &[0.0, 0.1], 1);
        assert!(matches!(r, Err(Error::Validation(_))));
        assert!(exact_propagate(|_| Ok(op.clone()), &psi0, &[0.0, 0.1], 20).is_ok());
    }

    #[test]
    fn refinement_changes_little() {
        let model = ModelSpec::two_level(TwoLevelParams::new(1.0, 1.0).unwrap());
        // Midpoint rule: global error about dt²/4 here, so dt = 1e-4.
        let control = uniform_circle_path(1.0, 100, 1.0).unwrap();
        let path = CombinedPath::undisturbed(&control, 1).unwrap();
        let psi0 = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let a = exact_propagate(interpolated_hamiltonian(&model, &path), &psi0, &path.times, 100).unwrap();
        let b = exact_propagate(interpolated_hamiltonian(&model, &path), &psi0, &path.times, 200).unwrap();
        assert!((a.last() - b.last()).norm() < 1e-8);
    }

    #[test]
    fn fidelity_examples() {
        let model = ModelSpec::two_level(TwoLevelParams::new(1.0, 1.0).unwrap());
        let numerics = Numerics::default();
        let rows = fidelity_sweep(&model, &[1.0, 200.0], 10.0, 1.0, 4, &numerics).unwrap();
        assert!(rows[0].fidelity < 0.99, "{rows:?}");
        assert!(rows[1].fidelity > 0.995, "{rows:?}");

        let control = uniform_circle_path(5.0, 100, 1.0).unwrap();
        let path = CombinedPath::undisturbed(&control, 1).unwrap();
        let frames = transported_frames(&model, &path, &numerics).unwrap();
        let split = SplitPlan::new(&frames)
            .unwrap()
            .split(&model.disturbance, &path)
            .unwrap();
        let ws = disturbance_samples(&model.disturbance, &path).unwrap();
        let states = adiabatic_evolve(0, &split, &frames, &ws, &path.times, true).unwrap();
        let same = ExactTrajectory {
            times: path.times.clone(),
            states: states.iter().map(|s| s.psi.clone()).collect(),
        };
        assert!((adiabatic_fidelity(&same, &states).unwrap() - 1.0).abs() < 1e-12);
        assert!(adiabatic_fidelity(
            &ExactTrajectory {
                times: vec![0.0],
                states: vec![states[0].psi.clone()]
            },
            &states
        )
        .is_err());
    }

    fn settings(intensity: f64) -> EnsembleSettings {
        EnsembleSettings {
            k_form: KForm::CosHalf,
            intensity,
            t_end: 40.0,
            steps: 400,
            turns: 1.0,
            record_every: 20,
            numerics: Numerics::default(),
        }
    }

    #[test]
    fn noiseless_ensemble_has_unit_modulus() {
        let model = ModelSpec::two_level(TwoLevelParams::new(1.0, 1.0).unwrap());
        let s = ensemble_average(&model, &settings(0.0), 100, 1).unwrap();
        assert!(s.dressed_modulus.iter().all(|m| (m - 1.0).abs() < 1e-9));
        assert_eq!(s.fit.unwrap().slope, 0.0);
        assert!(ensemble_average(&model, &settings(0.0), 99, 1).is_err());
        assert!(ensemble_average(&ModelSpec::sphere(), &settings(0.0), 100, 1).is_err());
    }

    #[test]
    fn ensemble_is_reproducible_and_individually_unit() {
        let model = ModelSpec::two_level(TwoLevelParams::new(1.0, 1.0).unwrap());
        let a = ensemble_average(&model, &settings(0.5), 300, 7).unwrap();
        let b = ensemble_average(&model, &settings(0.5), 300, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.max_individual_deviation < 1e-9);
        assert!(*a.dressed_modulus.last().unwrap() < 0.95);
        let expected = 1.0 / (2.0 * 2f64.sqrt());
        assert!((a.aq_coefficient - expected).abs() < 1e-9);
    }

    #[test]
    fn stderr_scales_with_sqrt_n() {
        let model = ModelSpec::two_level(TwoLevelParams::new(1.0, 1.0).unwrap());
        let a = ensemble_average(&model, &settings(1.0), 400, 3).unwrap();
        let b = ensemble_average(&model, &settings(1.0), 1600, 4).unwrap();
        let r = a.dressed_stderr.last().unwrap() / b.dressed_stderr.last().unwrap();
        assert!((r / 2.0 - 1.0).abs() < 0.3, "ratio {r}");
    }

    #[test]
    fn fit_recovers_known_slope() {
        let kernel: Vec<f64> = (0..50).map(|k| k as f64 * 0.5).collect();
        let modulus: Vec<f64> = kernel.iter().map(|k| (-0.3 * k / 2.0).exp()).collect();
        let fit = fit_attenuation(&kernel, &modulus).unwrap();
        assert!((fit.slope - 0.3).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!(fit_attenuation(&[0.0, 1.0], &[1.0, 1.0]).is_none());
    }
}

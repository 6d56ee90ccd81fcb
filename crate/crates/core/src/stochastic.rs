//! Stochastic driving of the disturbance coordinates.
//!
//! `dy = f(x, y) dt + k(x, y) dW` with `E[dW dWᵀ] = D dt`, integrated with
//! Euler-Maruyama in the Itô reading. Every trajectory draws from its own
//! ChaCha8 stream selected by `(master seed, trajectory index)`, so ensembles
//! are reproducible and independent of evaluation order.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::manifold::ChartedPath;
use crate::models::KForm;
use crate::output::fmt_f64;

pub type DriftFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// Returns a `dim x noise_dim` matrix.
pub type DiffusionFn = Arc<dyn Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpretation {
    Ito,
}

#[derive(Clone)]
pub struct SdeProblem {
    pub dim: usize,
    pub noise_dim: usize,
    pub drift: DriftFn,
    pub diffusion: DiffusionFn,
    /// White-noise intensity `D`.
    pub intensity: f64,
    pub interpretation: Interpretation,
}

impl std::fmt::Debug for SdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SdeProblem")
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .field("intensity", &self.intensity)
            .finish()
    }
}

impl SdeProblem {
    pub fn new(dim: usize, noise_dim: usize, drift: DriftFn, diffusion: DiffusionFn, intensity: f64) -> Result<Self> {
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(Error::validation(format!(
                "noise intensity must be finite and >= 0, got {intensity}"
            )));
        }
        Ok(Self {
            dim,
            noise_dim,
            drift,
            diffusion,
            intensity,
            interpretation: Interpretation::Ito,
        })
    }

    /// Driftless scalar phase noise `dδθ = k(θ) dW`.
    pub fn phase_noise(k: KForm, intensity: f64) -> Result<Self> {
        Self::new(
            1,
            1,
            Arc::new(|_x: &[f64], _y: &[f64]| vec![0.0]),
            Arc::new(move |x: &[f64], _y: &[f64]| DMatrix::from_element(1, 1, k.eval(x[0]))),
            intensity,
        )
    }
}

/// Identifies one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSeed {
    pub master: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// One realization of `y(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory {
    pub seed: StreamSeed,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Standard normal draws, one vector per step.
    pub increments: Vec<Vec<f64>>,
}

impl NoiseTrajectory {
    /// First component of `y` at every time.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[i]).collect()
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().expect("trajectory has at least one sample")
    }
}

fn check_grid(control: &ChartedPath, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::validation(format!("dt must be positive, got {dt}")));
    }
    if control.samples.is_empty() {
        return Err(Error::validation("control path is empty"));
    }
    for w in control.samples.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::validation(format!(
                "control grid spacing {} does not match dt = {dt}",
                w[1].t - w[0].t
            )));
        }
    }
    Ok(())
}

fn check_state(y: &[f64], step: usize) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalBlowup { step })
    }
}

/// `y_{n+1} = y_n + f(x_n, y_n) dt + k(x_n, y_n) sqrt(D dt) ξ_n` on the time
/// grid of `control`.
pub fn euler_maruyama(
    problem: &SdeProblem,
    control: &ChartedPath,
    y0: &[f64],
    dt: f64,
    seed: StreamSeed,
) -> Result<NoiseTrajectory> {
    check_grid(control, dt)?;
    if y0.len() != problem.dim {
        return Err(Error::validation("initial value has the wrong dimension"));
    }
    let mut rng = seed.rng();
    let scale = (problem.intensity * dt).sqrt();
    let n = control.samples.len();
    let mut values = Vec::with_capacity(n);
    let mut increments = Vec::with_capacity(n.saturating_sub(1));
    let mut y = y0.to_vec();
    values.push(y.clone());
    for step in 0..n - 1 {
        let x = &control.samples[step].point;
        let xi: Vec<f64> = (0..problem.noise_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let f = (problem.drift)(x, &y);
        let k = (problem.diffusion)(x, &y);
        for i in 0..problem.dim {
            let noise: f64 = (0..problem.noise_dim).map(|j| k[(i, j)] * xi[j]).sum();
            y[i] += f[i] * dt + noise * scale;
        }
        check_state(&y, step + 1)?;
        values.push(y.clone());
        increments.push(xi);
    }
    Ok(NoiseTrajectory {
        seed,
        times: control.times(),
        values,
        increments,
    })
}

/// Stratonovich Heun predictor-corrector, driven by the same normal draws as
/// [`euler_maruyama`] for a given seed. Used to confirm that both readings
/// agree when the diffusion does not depend on `y`.
pub fn heun_stratonovich(
    problem: &SdeProblem,
    control: &ChartedPath,
    y0: &[f64],
    dt: f64,
    seed: StreamSeed,
) -> Result<NoiseTrajectory> {
    check_grid(control, dt)?;
    let mut rng = seed.rng();
    let scale = (problem.intensity * dt).sqrt();
    let n = control.samples.len();
    let mut values = Vec::with_capacity(n);
    let mut increments = Vec::with_capacity(n.saturating_sub(1));
    let mut y = y0.to_vec();
    values.push(y.clone());
    let apply = |y: &[f64], f: &[f64], k: &DMatrix<f64>, xi: &[f64], w: f64, out: &mut Vec<f64>| {
        for i in 0..problem.dim {
            let noise: f64 = (0..problem.noise_dim).map(|j| k[(i, j)] * xi[j]).sum();
            out[i] = y[i] + w * (f[i] * dt + noise * scale);
        }
    };
    for step in 0..n - 1 {
        let (x0, x1) = (&control.samples[step].point, &control.samples[step + 1].point);
        let xi: Vec<f64> = (0..problem.noise_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let (f0, k0) = ((problem.drift)(x0, &y), (problem.diffusion)(x0, &y));
        let mut pred = vec![0.0; problem.dim];
        apply(&y, &f0, &k0, &xi, 1.0, &mut pred);
        let (f1, k1) = ((problem.drift)(x1, &pred), (problem.diffusion)(x1, &pred));
        let fm: Vec<f64> = f0.iter().zip(&f1).map(|(a, b)| 0.5 * (a + b)).collect();
        let km = (k0 + k1) * 0.5;
        let mut next = vec![0.0; problem.dim];
        apply(&y, &fm, &km, &xi, 1.0, &mut next);
        y = next;
        check_state(&y, step + 1)?;
        values.push(y.clone());
        increments.push(xi);
    }
    Ok(NoiseTrajectory {
        seed,
        times: control.times(),
        values,
        increments,
    })
}

/// Trajectories `0..n` of an ensemble, in index order.
pub fn simulate_ensemble(
    problem: &SdeProblem,
    control: &ChartedPath,
    y0: &[f64],
    dt: f64,
    master_seed: u64,
    n: usize,
) -> Result<Vec<NoiseTrajectory>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| euler_maruyama(problem, control, y0, dt, StreamSeed::new(master_seed, i)))
        .collect()
}

/// Final values of component `component` for trajectories `0..n`, without
/// keeping the paths.
pub fn ensemble_final_values(
    problem: &SdeProblem,
    control: &ChartedPath,
    y0: &[f64],
    dt: f64,
    master_seed: u64,
    n: usize,
    component: usize,
) -> Result<Vec<f64>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| euler_maruyama(problem, control, y0, dt, StreamSeed::new(master_seed, i)).map(|t| t.last()[component]))
        .collect()
}

/// `K(t, t0) = D ∫_{t0}^{t} k(θ(s))² ds` by the composite trapezoid rule.
pub fn variance_kernel<K, S>(k: K, theta: S, intensity: f64, t0: f64, t: f64, intervals: usize) -> Result<f64>
where
    K: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    if t < t0 {
        return Err(Error::validation(format!(
            "variance kernel needs t >= t0, got t = {t}, t0 = {t0}"
        )));
    }
    if intervals == 0 {
        return Err(Error::validation("quadrature needs at least one interval"));
    }
    let h = (t - t0) / intervals as f64;
    let g = |s: f64| {
        let v = k(theta(s));
        v * v
    };
    let inner: f64 = (1..intervals).map(|i| g(t0 + i as f64 * h)).sum();
    Ok(intensity * h * (0.5 * (g(t0) + g(t)) + inner))
}

/// Running `K(t_n, t_0)` on a sampled schedule.
pub fn cumulative_variance_kernel<K>(k: K, times: &[f64], thetas: &[f64], intensity: f64) -> Vec<f64>
where
    K: Fn(f64) -> f64,
{
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            let (a, b) = (k(thetas[i - 1]), k(thetas[i]));
            acc += 0.5 * (a * a + b * b) * (times[i] - times[i - 1]);
        }
        out.push(intensity * acc);
    }
    out
}

/// `E[exp(-iαδθ)] = exp(-α² K / 2)` for `δθ ~ N(0, K)`.
pub fn gaussian_characteristic(alpha: f64, kernel: f64) -> Result<C64> {
    if kernel < 0.0 {
        return Err(Error::validation(format!("variance kernel must be >= 0, got {kernel}")));
    }
    Ok(C64::new((-0.5 * alpha * alpha * kernel).exp(), 0.0))
}

/// Gaussian transition density with mean `delta0` and variance `kernel`.
pub fn conditional_density(delta: f64, t: f64, delta0: f64, t0: f64, kernel: f64) -> Result<f64> {
    if t < t0 {
        return Err(Error::validation("conditional density needs t >= t0"));
    }
    if kernel < 0.0 {
        return Err(Error::validation(format!("variance kernel must be >= 0, got {kernel}")));
    }
    if kernel == 0.0 {
        return Err(Error::DegenerateDensity);
    }
    let u = delta - delta0;
    Ok((-(u * u) / (2.0 * kernel)).exp() / (2.0 * std::f64::consts::PI * kernel).sqrt())
}

/// True when `|k(θ + 2π) + k(θ)| < 1e-9` on every grid point.
pub fn antiperiodic_check<K: Fn(f64) -> f64>(k: K, grid: &[f64]) -> bool {
    grid.iter().all(|&t| (k(t + std::f64::consts::TAU) + k(t)).abs() < 1e-9)
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `|value - target| <= sigmas * stderr`
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.stderr
    }
}

pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

/// Unbiased sample variance with the standard error of the estimator
/// `sqrt((m4 - (n-3)/(n-1) s⁴) / n)`.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let se = ((m4 - (n - 3.0) / (n - 1.0) * var * var) / n).max(0.0).sqrt();
    Estimate { value: var, stderr: se }
}

/// Monte Carlo estimate of `E[exp(-iαx)]`; real and imaginary parts.
pub fn characteristic_estimate(xs: &[f64], alpha: f64) -> (Estimate, Estimate) {
    let re: Vec<f64> = xs.iter().map(|x| (alpha * x).cos()).collect();
    let im: Vec<f64> = xs.iter().map(|x| -(alpha * x).sin()).collect();
    (mean_estimate(&re), mean_estimate(&im))
}

/// Write `t, theta, delta_theta` with the stream seed in a comment header.
pub fn write_trajectory_csv<W: Write>(out: &mut W, control: &ChartedPath, traj: &NoiseTrajectory) -> Result<()> {
    writeln!(out, "# seed = {}", traj.seed.master)?;
    writeln!(out, "# stream = {}", traj.seed.stream)?;
    writeln!(out, "t,theta,delta_theta")?;
    for (s, y) in control.samples.iter().zip(&traj.values) {
        writeln!(out, "{},{},{}", fmt_f64(s.t), fmt_f64(s.point[0]), fmt_f64(y[0]))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use super::*;
    use crate::manifold::{chart_route, circle_atlas};

    pub(crate) fn schedule(t_end: f64, steps: usize, theta: impl Fn(f64) -> f64) -> ChartedPath {
        let atlas = circle_atlas(0.1).unwrap();
        let path: Vec<(f64, Vec<f64>)> = (0..=steps)
            .map(|k| {
                let t = t_end * k as f64 / steps as f64;
                (t, vec![theta(t)])
            })
            .collect();
        chart_route(&path, &atlas).unwrap()
    }

    #[test]
    fn noiseless_stays_put() {
        let control = schedule(1.0, 100, |t| t);
        let p = SdeProblem::new(
            1,
            1,
            Arc::new(|_: &[f64], _: &[f64]| vec![0.0]),
            Arc::new(|_: &[f64], _: &[f64]| DMatrix::zeros(1, 1)),
            1.0,
        )
        .unwrap();
        let traj = euler_maruyama(&p, &control, &[0.3], 0.01, StreamSeed::new(1, 0)).unwrap();
        assert!(traj.values.iter().all(|v| v[0] == 0.3));
    }

    #[test]
    fn deterministic_decay() {
        let control = schedule(1.0, 1000, |t| t);
        let p = SdeProblem::new(
            1,
            1,
            Arc::new(|_: &[f64], y: &[f64]| vec![-y[0]]),
            Arc::new(|_: &[f64], _: &[f64]| DMatrix::zeros(1, 1)),
            1.0,
        )
        .unwrap();
        let traj = euler_maruyama(&p, &control, &[2.0], 1e-3, StreamSeed::new(1, 0)).unwrap();
        let exact = 2.0 * (-1.0f64).exp();
        assert!((traj.last()[0] - exact).abs() < 2.0 * 1e-3);
    }

    #[test]
    fn rejects_bad_dt_and_mismatched_grid() {
        let control = schedule(1.0, 10, |t| t);
        let p = SdeProblem::phase_noise(KForm::One, 1.0).unwrap();
        assert!(matches!(
            euler_maruyama(&p, &control, &[0.0], 0.0, StreamSeed::new(1, 0)),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            euler_maruyama(&p, &control, &[0.0], -0.1, StreamSeed::new(1, 0)),
            Err(Error::Validation(_))
        ));
        assert!(euler_maruyama(&p, &control, &[0.0], 0.2, StreamSeed::new(1, 0)).is_err());
    }

    #[test]
    fn blowup_is_reported_with_step() {
        let control = schedule(1.0, 100, |t| t);
        let p = SdeProblem::new(
            1,
            1,
            Arc::new(|_: &[f64], y: &[f64]| vec![y[0] * y[0] * 1e200]),
            Arc::new(|_: &[f64], _: &[f64]| DMatrix::zeros(1, 1)),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            euler_maruyama(&p, &control, &[1.0], 0.01, StreamSeed::new(1, 0)),
            Err(Error::NumericalBlowup { .. })
        ));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let control = schedule(TAU, 500, |t| t);
        let p = SdeProblem::phase_noise(KForm::CosHalf, 0.5).unwrap();
        let dt = TAU / 500.0;
        let a = euler_maruyama(&p, &control, &[0.0], dt, StreamSeed::new(9, 4)).unwrap();
        let b = euler_maruyama(&p, &control, &[0.0], dt, StreamSeed::new(9, 4)).unwrap();
        assert_eq!(a, b);
        let c = euler_maruyama(&p, &control, &[0.0], dt, StreamSeed::new(9, 5)).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn wiener_variance_grows_linearly() {
        let t_end = 2.0;
        let control = schedule(t_end, 50, |t| t);
        let p = SdeProblem::phase_noise(KForm::One, 1.0).unwrap();
        let finals = ensemble_final_values(&p, &control, &[0.0], t_end / 50.0, 11, 100_000, 0).unwrap();
        let v = variance_estimate(&finals);
        assert!(v.within(t_end, 3.0), "variance {v:?}");
    }

    #[test]
    fn ito_and_stratonovich_agree_for_state_independent_noise() {
        // Pathwise gap between the two readings, RMS over 200 streams. It is
        // O(dt) when the diffusion does not depend on the state.
        let p = SdeProblem::phase_noise(KForm::CosHalf, 1.0).unwrap();
        let mut rms = Vec::new();
        for steps in [250, 1000, 4000] {
            let control = schedule(TAU, steps, |t| t);
            let dt = TAU / steps as f64;
            let mut acc = 0.0;
            for i in 0..200 {
                let a = euler_maruyama(&p, &control, &[0.0], dt, StreamSeed::new(3, i)).unwrap();
                let b = heun_stratonovich(&p, &control, &[0.0], dt, StreamSeed::new(3, i)).unwrap();
                assert_eq!(a.increments, b.increments);
                acc += (a.last()[0] - b.last()[0]).powi(2);
            }
            rms.push((acc / 200.0).sqrt());
        }
        assert!(rms[1] < rms[0] / 3.0 && rms[2] < rms[1] / 3.0, "{rms:?}");

        // Multiplicative noise keeps an O(1) Itô/Stratonovich drift difference.
        let mult = SdeProblem::new(
            1,
            1,
            Arc::new(|_: &[f64], _: &[f64]| vec![0.0]),
            Arc::new(|_: &[f64], y: &[f64]| DMatrix::from_element(1, 1, y[0])),
            1.0,
        )
        .unwrap();
        let control = schedule(1.0, 4000, |t| t);
        let ito = ensemble_final_values(&mult, &control, &[1.0], 1.0 / 4000.0, 5, 2000, 0).unwrap();
        let strat: Vec<f64> = (0..2000u64)
            .map(|i| {
                heun_stratonovich(&mult, &control, &[1.0], 1.0 / 4000.0, StreamSeed::new(5, i))
                    .unwrap()
                    .last()[0]
            })
            .collect();
        // E[y] = 1 (Itô) versus e^{1/2} (Stratonovich).
        assert!(mean_estimate(&ito).within(1.0, 4.0));
        assert!(mean_estimate(&strat).within(0.5f64.exp(), 4.0));
    }

    #[test]
    fn kernel_examples() {
        let one = |_: f64| 1.0;
        assert!((variance_kernel(one, |t| t, 1.0, 0.0, 3.0, 10).unwrap() - 3.0).abs() < 1e-14);
        let k = |th: f64| (0.5 * th).cos();
        let kk = variance_kernel(k, |t| t, 1.0, 0.0, TAU, 4096).unwrap();
        // Oracle: ∫₀^{2π} cos²(t/2) dt = π.
        assert!((kk - PI).abs() < 1e-6);
        assert_eq!(variance_kernel(k, |t| t, 0.0, 0.0, TAU, 64).unwrap(), 0.0);
        assert!(variance_kernel(k, |t| t, 1.0, 1.0, 0.5, 8).is_err());

        let times: Vec<f64> = (0..=400).map(|i| TAU * i as f64 / 400.0).collect();
        let cum = cumulative_variance_kernel(k, &times, &times, 1.0);
        assert!(cum.windows(2).all(|w| w[1] >= w[0]));
        assert!((cum[400] - PI).abs() < 1e-4);
    }

    #[test]
    fn characteristic_examples() {
        assert_eq!(gaussian_characteristic(0.0, 3.0).unwrap(), C64::new(1.0, 0.0));
        assert!((gaussian_characteristic(1.0, 2.0).unwrap().re - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert_eq!(gaussian_characteristic(2.0, 0.0).unwrap(), C64::new(1.0, 0.0));
        assert!(gaussian_characteristic(1.0, -1.0).is_err());

        // Monte Carlo oracle with δθ ~ N(0, 2).
        let mut rng = StreamSeed::new(77, 0).rng();
        let xs: Vec<f64> = (0..100_000)
            .map(|_| 2f64.sqrt() * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let (re, im) = characteristic_estimate(&xs, 1.0);
        assert!(re.within((-1.0f64).exp(), 3.0) && im.within(0.0, 3.0));
    }

    #[test]
    fn density_examples() {
        let k = 1.7;
        let mode = conditional_density(0.4, 1.0, 0.4, 0.0, k).unwrap();
        assert!((mode - 1.0 / (2.0 * PI * k).sqrt()).abs() < 1e-15);
        let v = conditional_density(1.5, 1.0, 0.5, 0.0, 1.0).unwrap();
        assert!((v - 0.241_970_724_519_143_37).abs() < 1e-15);
        let a = conditional_density(0.5 + 0.8, 1.0, 0.5, 0.0, k).unwrap();
        let b = conditional_density(0.5 - 0.8, 1.0, 0.5, 0.0, k).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            conditional_density(0.0, 1.0, 0.0, 0.0, 0.0),
            Err(Error::DegenerateDensity)
        );

        // Normalization by trapezoid quadrature over ±8 sqrt(K).
        let n = 20_000;
        let (lo, hi) = (0.5 - 8.0 * k.sqrt(), 0.5 + 8.0 * k.sqrt());
        let h = (hi - lo) / n as f64;
        let total: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * conditional_density(lo + i as f64 * h, 1.0, 0.5, 0.0, k).unwrap()
            })
            .sum::<f64>()
            * h;
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn antiperiodicity_examples() {
        let grid: Vec<f64> = (0..=200).map(|i| TAU * i as f64 / 200.0).collect();
        assert!(antiperiodic_check(|t| KForm::CosHalf.eval(t), &grid));
        assert!(!antiperiodic_check(|t| t.cos(), &grid));
        assert!(antiperiodic_check(|_| 0.0, &grid));
    }

    #[test]
    fn csv_has_seed_header() {
        let control = schedule(1.0, 4, |t| t);
        let p = SdeProblem::phase_noise(KForm::CosHalf, 1.0).unwrap();
        let traj = euler_maruyama(&p, &control, &[0.0], 0.25, StreamSeed::new(42, 3)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &control, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed = 42");
        assert_eq!(lines[2], "t,theta,delta_theta");
        assert_eq!(lines.len(), 3 + 5);
        let last: Vec<f64> = lines[7].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(last[2], traj.last()[0]);
    }
}

//! Disturbed Hamiltonians `H₊ = W H W†`, the split of the disturbed gauge
//! potential into control (`A_P`), noise (`A_Qx`) and cross (`A_Ty`) terms,
//! and adiabatic propagation along a combined control + noise path.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::connection::{Holonomy, Ordering};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, I};
use crate::manifold::ChartedPath;
use crate::spectral::{self, EigenFrame, HermitianOperator};
use crate::stochastic::NoiseTrajectory;

pub type DisturbanceFn = Arc<dyn Fn(&[f64], &[f64]) -> CMatrix + Send + Sync>;
/// One matrix per coordinate.
pub type DisturbanceDerivFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<CMatrix> + Send + Sync>;

pub const UNITARITY_TOL: f64 = 1e-10;
const FD_STEP: f64 = 1e-5;

/// `W(x, y)` with optional analytic partial derivatives.
#[derive(Clone)]
pub struct DisturbanceOperator {
    dim: usize,
    map: DisturbanceFn,
    dx: Option<DisturbanceDerivFn>,
    dy: Option<DisturbanceDerivFn>,
    /// `W` does not depend on the control, so `∂W/∂x = 0`.
    x_free: bool,
}

impl std::fmt::Debug for DisturbanceOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DisturbanceOperator")
            .field("dim", &self.dim)
            .field("analytic_dx", &self.dx.is_some())
            .field("analytic_dy", &self.dy.is_some())
            .finish()
    }
}

impl DisturbanceOperator {
    pub fn new(dim: usize, map: DisturbanceFn) -> Self {
        Self {
            dim,
            map,
            dx: None,
            dy: None,
            x_free: false,
        }
    }

    pub fn with_dx(mut self, dx: DisturbanceDerivFn) -> Self {
        self.dx = Some(dx);
        self
    }

    pub fn with_dy(mut self, dy: DisturbanceDerivFn) -> Self {
        self.dy = Some(dy);
        self
    }

    /// Declare `W` independent of the control coordinates.
    pub fn independent_of_x(mut self) -> Self {
        let dim = self.dim;
        self.dx = Some(Arc::new(move |x: &[f64], _: &[f64]| {
            vec![CMatrix::zeros(dim, dim); x.len()]
        }));
        self.x_free = true;
        self
    }

    pub fn is_independent_of_x(&self) -> bool {
        self.x_free
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, Arc::new(move |_: &[f64], _: &[f64]| CMatrix::identity(dim, dim)))
            .independent_of_x()
            .with_dy(Arc::new(move |_: &[f64], y: &[f64]| {
                vec![CMatrix::zeros(dim, dim); y.len()]
            }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.dx.is_some() && self.dy.is_some()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> CMatrix {
        (self.map)(x, y)
    }

    /// `∂W/∂x^μ`, analytic when supplied, else a central difference.
    pub fn partial_x(&self, x: &[f64], y: &[f64]) -> Vec<CMatrix> {
        match &self.dx {
            Some(d) => d(x, y),
            None => central_difference(|p| (self.map)(p, y), x),
        }
    }

    /// `∂W/∂y^ν`, analytic when supplied, else a central difference.
    pub fn partial_y(&self, x: &[f64], y: &[f64]) -> Vec<CMatrix> {
        match &self.dy {
            Some(d) => d(x, y),
            None => central_difference(|p| (self.map)(x, p), y),
        }
    }

    /// Evaluate `W` and require `W†W = 1` within [`UNITARITY_TOL`].
    pub fn check_unitary(&self, x: &[f64], y: &[f64]) -> Result<CMatrix> {
        let w = self.eval(x, y);
        if w.nrows() != self.dim || w.ncols() != self.dim {
            return Err(Error::validation("disturbance has the wrong dimension"));
        }
        let d = linalg::unitarity_defect(&w);
        if !(d <= UNITARITY_TOL) {
            return Err(Error::validation(format!(
                "disturbance is not unitary (defect {d:.3e})"
            )));
        }
        Ok(w)
    }
}

fn central_difference(f: impl Fn(&[f64]) -> CMatrix, at: &[f64]) -> Vec<CMatrix> {
    (0..at.len())
        .map(|mu| {
            let h = FD_STEP * at[mu].abs().max(1.0);
            let mut plus = at.to_vec();
            let mut minus = at.to_vec();
            plus[mu] += h;
            minus[mu] -= h;
            (f(&plus) - f(&minus)) / C64::new(plus[mu] - minus[mu], 0.0)
        })
        .collect()
}

/// `H₊ = W H W†` at `(x, y)`.
pub fn disturbed_hamiltonian(
    h: &HermitianOperator,
    w: &DisturbanceOperator,
    x: &[f64],
    y: &[f64],
) -> Result<HermitianOperator> {
    let wm = w.check_unitary(x, y)?;
    conjugate(h, &wm)
}

/// `W H W†` for an already evaluated unitary.
pub fn conjugate(h: &HermitianOperator, w: &CMatrix) -> Result<HermitianOperator> {
    if w.nrows() != h.dim() {
        return Err(Error::validation("disturbance and Hamiltonian dimensions differ"));
    }
    HermitianOperator::new(linalg::hermitian_part(&(w * h.matrix() * w.adjoint())))
}

/// `‖W H W⁻¹ - H - ε[i w, H]‖` with `W = exp(iεw)`, operator norm.
pub fn perturbative_consistency(h: &HermitianOperator, generator: &HermitianOperator, epsilon: f64) -> f64 {
    let w = linalg::exp_hermitian(generator.matrix(), -epsilon);
    let conj = &w * h.matrix() * w.adjoint();
    let first = linalg::commutator(&(generator.matrix() * I), h.matrix()) * C64::new(epsilon, 0.0);
    linalg::operator_norm(&(conj - h.matrix() - first))
}

/// Samples of `(x(t), y(t))` on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedPath {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

impl CombinedPath {
    pub fn new(times: Vec<f64>, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != x.len() || times.len() != y.len() {
            return Err(Error::validation("combined path components differ in length"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("combined path times must increase strictly"));
        }
        Ok(Self { times, x, y })
    }

    pub fn from_parts(control: &ChartedPath, noise: &NoiseTrajectory) -> Result<Self> {
        Self::new(control.times(), control.points(), noise.values.clone())
    }

    /// Control path with the disturbance held at zero.
    pub fn undisturbed(control: &ChartedPath, noise_dim: usize) -> Result<Self> {
        let n = control.len();
        Self::new(control.times(), control.points(), vec![vec![0.0; noise_dim]; n])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Per-step generators along a combined path.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSplit {
    pub a_p: Vec<CMatrix>,
    pub a_qx: Vec<CMatrix>,
    pub a_ty: Vec<CMatrix>,
    pub a_plus: Vec<CMatrix>,
}

impl GeneratorSplit {
    pub fn len(&self) -> usize {
        self.a_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_p.is_empty()
    }

    /// `A_P + A_Qx`, plus `A_Ty` when requested, at step `k`.
    pub fn generator(&self, k: usize, include_aty: bool) -> CMatrix {
        if include_aty {
            self.a_plus[k].clone()
        } else {
            &self.a_p[k] + &self.a_qx[k]
        }
    }
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect()
}

/// Noise-independent parts of the split for a fixed sequence of control
/// frames, reusable across many noise realizations.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    a_p: Vec<CMatrix>,
    /// Orthonormalized step-midpoint frames.
    mid_frames: Vec<CMatrix>,
}

impl SplitPlan {
    pub fn new(frames: &[EigenFrame]) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::validation("empty frame sequence"));
        };
        let shape = first.frame.shape();
        let mut a_p = Vec::with_capacity(frames.len().saturating_sub(1));
        let mut mid_frames = Vec::with_capacity(frames.len().saturating_sub(1));
        for (k, w) in frames.windows(2).enumerate() {
            if w[1].frame.shape() != shape {
                return Err(Error::validation(format!("frame shape changes at step {}", k + 1)));
            }
            let (z0, z1) = (&w[0].frame, &w[1].frame);
            a_p.push(linalg::anti_hermitian_part(&(z0.adjoint() * (z1 - z0))));
            mid_frames.push(linalg::polar_unitary(&((z0 + z1) * C64::new(0.5, 0.0))));
        }
        Ok(Self { a_p, mid_frames })
    }

    pub fn steps(&self) -> usize {
        self.a_p.len()
    }

    pub fn a_p(&self) -> &[CMatrix] {
        &self.a_p
    }

    /// `(A_Qx, A_Ty)` for step `k` between the samples `x = (x_k, x_{k+1})`
    /// and `y = (y_k, y_{k+1})`.
    pub fn step_parts(
        &self,
        k: usize,
        w: &DisturbanceOperator,
        x: (&[f64], &[f64]),
        y: (&[f64], &[f64]),
    ) -> (CMatrix, CMatrix) {
        let (xm, ym) = (midpoint(x.0, x.1), midpoint(y.0, y.1));
        let zb = &self.mid_frames[k];
        let rank = zb.ncols();
        let left = zb.adjoint() * w.eval(&xm, &ym).adjoint();
        // Contract the partials with the coordinate increments, then project.
        let project = |partials: Vec<CMatrix>, a: &[f64], b: &[f64]| {
            let mut sum: Option<CMatrix> = None;
            for (mu, d) in partials.into_iter().enumerate() {
                let step = b[mu] - a[mu];
                if step == 0.0 {
                    continue;
                }
                let term = d * C64::new(step, 0.0);
                sum = Some(match sum {
                    Some(acc) => acc + term,
                    None => term,
                });
            }
            match sum {
                Some(m) if m.iter().any(|z| *z != C64::new(0.0, 0.0)) => linalg::anti_hermitian_part(&(&left * m * zb)),
                _ => CMatrix::zeros(rank, rank),
            }
        };
        let qx = project(w.partial_y(&xm, &ym), y.0, y.1);
        let ty = if w.x_free {
            CMatrix::zeros(rank, rank)
        } else {
            project(w.partial_x(&xm, &ym), x.0, x.1)
        };
        (qx, ty)
    }

    pub fn split(&self, w: &DisturbanceOperator, path: &CombinedPath) -> Result<GeneratorSplit> {
        if path.len() != self.steps() + 1 {
            return Err(Error::validation(format!(
                "path has {} samples but the frames define {} steps",
                path.len(),
                self.steps()
            )));
        }
        let n = self.steps();
        let (mut a_qx, mut a_ty, mut a_plus) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            let (qx, ty) = self.step_parts(k, w, (&path.x[k], &path.x[k + 1]), (&path.y[k], &path.y[k + 1]));
            a_plus.push(&self.a_p[k] + &qx + &ty);
            a_qx.push(qx);
            a_ty.push(ty);
        }
        Ok(GeneratorSplit {
            a_p: self.a_p.clone(),
            a_qx,
            a_ty,
            a_plus,
        })
    }
}

/// Split the disturbed connection along `path` into
/// `A_P = Z†ΔZ`, `A_Qx = Z†W⁻¹(Δ_y W)Z` and `A_Ty = Z†W⁻¹(Δ_x W)Z`, with the
/// derivatives of `W` taken at the step midpoint.
pub fn generator_split(frames: &[EigenFrame], w: &DisturbanceOperator, path: &CombinedPath) -> Result<GeneratorSplit> {
    SplitPlan::new(frames)?.split(w, path)
}

/// `W(x_k, y_k)` along the path, each checked for unitarity.
pub fn disturbance_samples(w: &DisturbanceOperator, path: &CombinedPath) -> Result<Vec<CMatrix>> {
    path.x.iter().zip(&path.y).map(|(x, y)| w.check_unitary(x, y)).collect()
}

/// Eigenframes of `H₊` computed directly at every sample, in the gauge of
/// `W|a, x⟩`: the branch is matched to `reference[k]` by eigenvalue and the
/// frame rotated so that `Z₊† W Z` is Hermitian positive.
pub fn disturbed_frames(
    hamiltonians: &[HermitianOperator],
    w: &DisturbanceOperator,
    path: &CombinedPath,
    reference: &[EigenFrame],
    degeneracy_tol: f64,
    gap_min: f64,
) -> Result<Vec<EigenFrame>> {
    if hamiltonians.len() != path.len() || reference.len() != path.len() {
        return Err(Error::validation("Hamiltonians, frames and path differ in length"));
    }
    let mut out = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let wm = w.check_unitary(&path.x[k], &path.y[k])?;
        let hp = conjugate(&hamiltonians[k], &wm)?;
        let target = &reference[k];
        let cand = spectral::eigendecompose(&hp, degeneracy_tol)?
            .into_iter()
            .min_by(|a, b| {
                (a.value - target.value)
                    .abs()
                    .total_cmp(&(b.value - target.value).abs())
            })
            .expect("at least one eigenvalue");
        if cand.multiplicity != target.multiplicity || cand.gap < gap_min {
            return Err(Error::GapViolation {
                step: k,
                gap: cand.gap.min(target.gap),
                gap_min,
            });
        }
        let g = linalg::polar_unitary(&(cand.frame.adjoint() * &wm * &target.frame));
        out.push(cand.regauged(&g));
    }
    Ok(out)
}

/// Largest per-step deviation between `A_plus` and the generator computed
/// directly from the disturbed frames, divided by the step duration.
///
/// Both sides are midpoint rules for the same one-form, so the per-step
/// mismatch is third order and the returned rate is second order in the
/// step.
pub fn split_identity_check(split: &GeneratorSplit, disturbed: &[EigenFrame], times: &[f64]) -> Result<f64> {
    if disturbed.len() != split.len() + 1 || times.len() != disturbed.len() {
        return Err(Error::validation("split, disturbed frames and times differ in length"));
    }
    let mut worst: f64 = 0.0;
    for k in 0..split.len() {
        let (z0, z1) = (&disturbed[k].frame, &disturbed[k + 1].frame);
        let direct = linalg::anti_hermitian_part(&(z0.adjoint() * (z1 - z0)));
        let dev = linalg::max_abs(&(&split.a_plus[k] - direct)) / (times[k + 1] - times[k]);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Snapshot of an adiabatically propagated state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticState {
    pub t: f64,
    /// `∫ λ_a dt`
    pub dynamical_phase: f64,
    /// Path-ordered exponential of the disturbed generators so far.
    pub transporter: Holonomy,
    pub psi: CVector,
}

impl AdiabaticState {
    /// Frame components `Z† W† ψ` of the state on the dressed branch.
    pub fn dressed_amplitudes(&self, w: &CMatrix, frame: &EigenFrame) -> CVector {
        frame.frame.adjoint() * (w.adjoint() * &self.psi)
    }
}

/// Record of how an adiabatic run was configured, for output metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionFlags {
    pub include_aty: bool,
    pub initial_index: usize,
}

/// Visit `ψ(t_k) = e^{-i∫λ dt} Σ_j [P e^{-∫A₊}]_{j i} W(t_k) |a(j), x(t_k)⟩`
/// at every sample and return the final state. `λ_a` is read from the frames.
pub fn adiabatic_evolve_with<F>(
    index: usize,
    split: &GeneratorSplit,
    frames: &[EigenFrame],
    w_samples: &[CMatrix],
    times: &[f64],
    include_aty: bool,
    mut visit: F,
) -> Result<AdiabaticState>
where
    F: FnMut(usize, &AdiabaticState),
{
    let n = times.len();
    if frames.len() != n || w_samples.len() != n || split.len() + 1 != n {
        return Err(Error::validation("adiabatic inputs differ in length"));
    }
    let rank = frames[0].frame.ncols();
    if index >= rank {
        return Err(Error::validation(format!(
            "index {index} outside the rank-{rank} eigenspace"
        )));
    }
    let assemble = |k: usize, phase: f64, u: &CMatrix| -> Result<CVector> {
        let psi = (&w_samples[k] * (&frames[k].frame * u.column(index))) * C64::from_polar(1.0, -phase);
        if (psi.norm() - 1.0).abs() > 1e-9 || !psi.iter().all(|z| z.is_finite()) {
            return Err(Error::NumericalBlowup { step: k });
        }
        Ok(psi)
    };
    let mut u = CMatrix::identity(rank, rank);
    let mut phase = 0.0;
    let mut state = AdiabaticState {
        t: times[0],
        dynamical_phase: 0.0,
        transporter: Holonomy {
            matrix: u.clone(),
            ordering: Ordering::LaterLeft,
        },
        psi: assemble(0, 0.0, &u)?,
    };
    visit(0, &state);
    for k in 0..n - 1 {
        phase += 0.5 * (frames[k].value + frames[k + 1].value) * (times[k + 1] - times[k]);
        u = linalg::exp_anti_hermitian(&(-split.generator(k, include_aty))) * u;
        state = AdiabaticState {
            t: times[k + 1],
            dynamical_phase: phase,
            psi: assemble(k + 1, phase, &u)?,
            transporter: Holonomy {
                matrix: u.clone(),
                ordering: Ordering::LaterLeft,
            },
        };
        visit(k + 1, &state);
    }
    Ok(state)
}

/// [`adiabatic_evolve_with`] collecting every state.
pub fn adiabatic_evolve(
    index: usize,
    split: &GeneratorSplit,
    frames: &[EigenFrame],
    w_samples: &[CMatrix],
    times: &[f64],
    include_aty: bool,
) -> Result<Vec<AdiabaticState>> {
    let mut out = Vec::with_capacity(times.len());
    adiabatic_evolve_with(index, split, frames, w_samples, times, include_aty, |_, s| {
        out.push(s.clone())
    })?;
    Ok(out)
}

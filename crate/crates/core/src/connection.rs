//! Gauge potentials along sampled paths, their path-ordered exponentials,
//! holonomies across chart changes, and plaquette curvature.
//!
//! Ordering convention: a path-ordered exponential is the product of per-step
//! factors `exp(-A_k)` with later steps multiplying on the left,
//! `U = exp(-A_N) ... exp(-A_1)`. This is the map carrying the frame
//! coefficients of a parallel-transported state from the start of the path to
//! its end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::manifold::{BundleCharts, ChartedPath, Crossing};
use crate::spectral::{self, EigenFrame, HermitianOperator};

/// How a step generator was sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepConvention {
    /// `(Z_k† Z_{k+1} - Z_{k+1}† Z_k) / 2`, i.e. `Z_mid† ΔZ` with
    /// `Z_mid = (Z_k + Z_{k+1}) / 2`.
    FrameMidpoint,
    /// Field sampled at the step midpoint times the coordinate increment.
    FieldMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    LaterLeft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeStep {
    /// Parameter point at the step midpoint.
    pub midpoint: Vec<f64>,
    /// Contraction `A · Δx` for the step (anti-Hermitian).
    pub generator: CMatrix,
    /// Chart of the sample the step starts from (0 when unrouted).
    pub chart: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugePath {
    pub rank: usize,
    pub steps: Vec<GaugeStep>,
    pub crossings: Vec<Crossing>,
    pub convention: StepConvention,
}

impl GaugePath {
    /// Attach chart ids and crossing records from a routed path with the
    /// same samples.
    pub fn with_route(mut self, route: &ChartedPath) -> Result<Self> {
        if route.samples.len() != self.steps.len() + 1 {
            return Err(Error::validation(format!(
                "route has {} samples but gauge path has {} steps",
                route.samples.len(),
                self.steps.len()
            )));
        }
        for (step, sample) in self.steps.iter_mut().zip(&route.samples) {
            step.chart = sample.chart;
        }
        self.crossings = route.crossings.clone();
        Ok(self)
    }

    /// Build from a Lie-algebra valued one-form sampled at step midpoints:
    /// `field(x)` returns one anti-Hermitian component per coordinate.
    pub fn from_field<F>(points: &[Vec<f64>], field: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<CMatrix>,
    {
        let mut steps = Vec::with_capacity(points.len().saturating_sub(1));
        let mut rank = 0;
        for w in points.windows(2) {
            let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let comps = field(&mid);
            if comps.len() != mid.len() {
                return Err(Error::validation(
                    "field components do not match the parameter dimension",
                ));
            }
            rank = comps[0].nrows();
            let mut generator = CMatrix::zeros(rank, rank);
            for (mu, a) in comps.iter().enumerate() {
                generator += a * C64::new(w[1][mu] - w[0][mu], 0.0);
            }
            check_anti_hermitian(&generator)?;
            steps.push(GaugeStep {
                midpoint: mid,
                generator,
                chart: 0,
            });
        }
        Ok(Self {
            rank,
            steps,
            crossings: Vec::new(),
            convention: StepConvention::FieldMidpoint,
        })
    }
}

fn check_anti_hermitian(m: &CMatrix) -> Result<()> {
    let d = linalg::anti_hermitian_defect(m);
    if d > 1e-10 {
        return Err(Error::validation(format!(
            "step generator is not anti-Hermitian ({d:.3e})"
        )));
    }
    Ok(())
}

/// Net unitary accumulated along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct Holonomy {
    pub matrix: CMatrix,
    pub ordering: Ordering,
}

impl Holonomy {
    pub fn identity(rank: usize) -> Self {
        Self {
            matrix: CMatrix::identity(rank, rank),
            ordering: Ordering::LaterLeft,
        }
    }

    pub fn rank(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenphases in `(-pi, pi]`.
    pub fn phases(&self) -> Vec<f64> {
        linalg::unitary_eigenphases(&self.matrix)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    pub fn summary(&self) -> HolonomySummary {
        HolonomySummary {
            phases: self.phases(),
            re: self
                .matrix
                .row_iter()
                .map(|r| r.iter().map(|z| z.re).collect())
                .collect(),
            im: self
                .matrix
                .row_iter()
                .map(|r| r.iter().map(|z| z.im).collect())
                .collect(),
            unitarity_defect: self.unitarity_defect(),
        }
    }
}

/// Report form of a [`Holonomy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomySummary {
    pub phases: Vec<f64>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    pub unitarity_defect: f64,
}

/// Discretized `A = Z† dZ` along a sequence of frames.
///
/// Each step generator is `Z_k†(Z_{k+1} - Z_k)` projected onto its
/// anti-Hermitian part, which for orthonormal frames is exactly the midpoint
/// form `Z_mid† ΔZ`.
pub fn gauge_potential_from_frames(frames: &[EigenFrame], points: &[Vec<f64>]) -> Result<GaugePath> {
    if frames.len() != points.len() {
        return Err(Error::validation("frames and points differ in length"));
    }
    let Some(first) = frames.first() else {
        return Err(Error::validation("empty frame sequence"));
    };
    let (dim, rank) = (first.frame.nrows(), first.frame.ncols());
    let mut steps = Vec::with_capacity(frames.len().saturating_sub(1));
    for (k, w) in frames.windows(2).enumerate() {
        if w[1].frame.nrows() != dim || w[1].frame.ncols() != rank {
            return Err(Error::validation(format!("frame shape changes at step {}", k + 1)));
        }
        let raw = w[0].frame.adjoint() * (&w[1].frame - &w[0].frame);
        let midpoint = points[k]
            .iter()
            .zip(&points[k + 1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        steps.push(GaugeStep {
            midpoint,
            generator: linalg::anti_hermitian_part(&raw),
            chart: 0,
        });
    }
    Ok(GaugePath {
        rank,
        steps,
        crossings: Vec::new(),
        convention: StepConvention::FrameMidpoint,
    })
}

/// `U = exp(-A_N) ... exp(-A_1)`.
pub fn path_ordered_exp(gauge: &GaugePath) -> Holonomy {
    if gauge.rank == 1 {
        let total: f64 = gauge.steps.iter().map(|s| s.generator[(0, 0)].im).sum();
        return Holonomy {
            matrix: CMatrix::from_element(1, 1, C64::from_polar(1.0, -total)),
            ordering: Ordering::LaterLeft,
        };
    }
    let mut u = CMatrix::identity(gauge.rank, gauge.rank);
    for step in &gauge.steps {
        u = linalg::exp_anti_hermitian(&(-&step.generator)) * u;
    }
    Holonomy {
        matrix: u,
        ordering: Ordering::LaterLeft,
    }
}

/// Path-ordered exponential with the group transition `g^{βα}` applied to the
/// running product at every chart change `α → β`.
pub fn holonomy_with_crossings(gauge: &GaugePath, bundle: &BundleCharts) -> Result<Holonomy> {
    let rank = gauge.rank;
    let transition = |c: &Crossing| -> Result<CMatrix> {
        bundle
            .transition(c.to, c.from)
            .map(|g| g.eval(&c.point, rank))
            .ok_or_else(|| Error::Configuration(format!("no transition function for crossing {}->{}", c.from, c.to)))
    };
    let mut u = CMatrix::identity(rank, rank);
    let mut pending = gauge.crossings.iter().peekable();
    while let Some(c) = pending.next_if(|c| c.index == 0) {
        u = transition(c)? * u;
    }
    for (k, step) in gauge.steps.iter().enumerate() {
        u = linalg::exp_anti_hermitian(&(-&step.generator)) * u;
        while let Some(c) = pending.next_if(|c| c.index <= k + 1) {
            u = transition(c)? * u;
        }
    }
    for c in pending {
        u = transition(c)? * u;
    }
    Ok(Holonomy {
        matrix: u,
        ordering: Ordering::LaterLeft,
    })
}

/// Transition function relating the end frame of a closed loop to its start
/// frame: `polar(Z_0† Z_N)`.
pub fn loop_closure(frames: &[EigenFrame]) -> Result<CMatrix> {
    let (Some(first), Some(last)) = (frames.first(), frames.last()) else {
        return Err(Error::validation("empty frame sequence"));
    };
    let overlap = first.frame.adjoint() * &last.frame;
    if linalg::min_singular_value(&overlap) < 0.5 {
        return Err(Error::validation(
            "path is not closed: end frame leaves the starting eigenspace",
        ));
    }
    Ok(linalg::polar_unitary(&overlap))
}

/// Holonomy of a closed loop expressed in the starting frame: loop closure
/// times the path-ordered exponential of the frame connection. With
/// transported frames the generators vanish and the closure carries the
/// whole phase; with a single-valued gauge the closure is trivial.
pub fn closed_loop_holonomy(frames: &[EigenFrame], gauge: &GaugePath) -> Result<Holonomy> {
    let closure = loop_closure(frames)?;
    let u = path_ordered_exp(gauge);
    Ok(Holonomy {
        matrix: closure * u.matrix,
        ordering: Ordering::LaterLeft,
    })
}

/// Transport one eigenvalue branch around the closed path of Hamiltonians and
/// return its holonomy.
pub fn loop_holonomy_of(
    path: &[HermitianOperator],
    points: &[Vec<f64>],
    branch: usize,
    degeneracy_tol: f64,
    gap_min: f64,
) -> Result<Holonomy> {
    let frames = spectral::smooth_transport(path, branch, degeneracy_tol, gap_min)?;
    let gauge = gauge_potential_from_frames(&frames, points)?;
    closed_loop_holonomy(&frames, &gauge)
}

/// Frames of one eigenvalue branch on a rectangular two-parameter grid.
#[derive(Debug, Clone)]
pub struct FrameGrid {
    pub axis0: Vec<f64>,
    pub axis1: Vec<f64>,
    frames: Vec<EigenFrame>,
}

impl FrameGrid {
    /// Diagonalize `hamiltonian` at every grid node and keep frame `branch`
    /// (by ascending eigenvalue).
    pub fn build<F>(
        axis0: Vec<f64>,
        axis1: Vec<f64>,
        hamiltonian: F,
        branch: usize,
        degeneracy_tol: f64,
        gap_min: f64,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<HermitianOperator>,
    {
        let mut frames = Vec::with_capacity(axis0.len() * axis1.len());
        for (i, &a) in axis0.iter().enumerate() {
            for (j, &b) in axis1.iter().enumerate() {
                let f = select_branch(
                    &hamiltonian(&[a, b])?,
                    branch,
                    degeneracy_tol,
                    gap_min,
                    i * axis1.len() + j,
                )?;
                frames.push(f);
            }
        }
        Ok(Self { axis0, axis1, frames })
    }

    pub fn frame(&self, i: usize, j: usize) -> &EigenFrame {
        &self.frames[i * self.axis1.len() + j]
    }
}

fn select_branch(
    h: &HermitianOperator,
    branch: usize,
    degeneracy_tol: f64,
    gap_min: f64,
    step: usize,
) -> Result<EigenFrame> {
    let frame = spectral::eigendecompose(h, degeneracy_tol)?
        .into_iter()
        .nth(branch)
        .ok_or_else(|| Error::validation(format!("branch {branch} out of range")))?;
    if frame.gap < gap_min {
        return Err(Error::GapViolation {
            step,
            gap: frame.gap,
            gap_min,
        });
    }
    Ok(frame)
}

/// Link variable `polar(Z_a† Z_b)`; transport from `a` to `b` acts on frame
/// coefficients by its adjoint.
fn link(a: &EigenFrame, b: &EigenFrame) -> CMatrix {
    linalg::polar_unitary(&(a.frame.adjoint() * &b.frame))
}

/// Curvature 2-form component of one grid cell: the logarithm of the
/// holonomy around the cell boundary (traversed axis0 first, then axis1)
/// divided by the coordinate area. For a smooth gauge this is
/// `-(dA + A∧A)_{01}` at the cell centre, up to O(h).
pub fn plaquette_curvature(grid: &FrameGrid, cell: (usize, usize)) -> Result<CMatrix> {
    let (i, j) = cell;
    if i + 1 >= grid.axis0.len() || j + 1 >= grid.axis1.len() {
        return Err(Error::validation(format!("cell {cell:?} outside the grid")));
    }
    let corners = [
        grid.frame(i, j),
        grid.frame(i + 1, j),
        grid.frame(i + 1, j + 1),
        grid.frame(i, j + 1),
    ];
    let rank = corners[0].frame.ncols();
    let mut u = CMatrix::identity(rank, rank);
    for e in 0..4 {
        u = link(corners[e], corners[(e + 1) % 4]).adjoint() * u;
    }
    let area = (grid.axis0[i + 1] - grid.axis0[i]) * (grid.axis1[j + 1] - grid.axis1[j]);
    Ok(linalg::log_unitary(&u) / C64::new(area, 0.0))
}

/// `F_{01} = ∂_0 A_1 - ∂_1 A_0 + [A_0, A_1]` at `point` by central differences
/// on a 3x3 stencil of spacing `h`, all frames aligned to the centre frame.
pub fn finite_difference_curvature<F>(
    hamiltonian: F,
    point: [f64; 2],
    h: f64,
    branch: usize,
    degeneracy_tol: f64,
    gap_min: f64,
) -> Result<CMatrix>
where
    F: Fn(&[f64]) -> Result<HermitianOperator>,
{
    let mut stencil: Vec<EigenFrame> = Vec::with_capacity(9);
    for a in -1..=1 {
        for b in -1..=1 {
            let p = [point[0] + a as f64 * h, point[1] + b as f64 * h];
            stencil.push(select_branch(
                &hamiltonian(&p)?,
                branch,
                degeneracy_tol,
                gap_min,
                stencil.len(),
            )?);
        }
    }
    let centre = stencil[4].clone();
    for f in stencil.iter_mut() {
        let q = linalg::polar_unitary(&(centre.frame.adjoint() * &f.frame));
        *f = f.regauged(&q.adjoint());
    }
    let z = |a: i32, b: i32| &stencil[((a + 1) * 3 + (b + 1)) as usize].frame;
    let inv2h = C64::new(0.5 / h, 0.0);
    let potential = |a: i32, b: i32, mu: usize| -> CMatrix {
        let (fwd, back) = if mu == 0 {
            (z(a + 1, b), z(a - 1, b))
        } else {
            (z(a, b + 1), z(a, b - 1))
        };
        linalg::anti_hermitian_part(&(z(a, b).adjoint() * (fwd - back))) * inv2h
    };
    let a0 = potential(0, 0, 0);
    let a1 = potential(0, 0, 1);
    let d0a1 = (potential(1, 0, 1) - potential(-1, 0, 1)) * inv2h;
    let d1a0 = (potential(0, 1, 0) - potential(0, -1, 0)) * inv2h;
    Ok(d0a1 - d1a0 + linalg::commutator(&a0, &a1))
}

//! Hermitian eigen-decomposition, eigenprojectors, and gauge-smooth transport of
//! eigenframes along a sampled parameter path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

/// Tolerance on `|H - H†|` accepted by [`HermitianOperator::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Default absolute tolerance below which eigenvalues are merged.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// Smallest singular value of a frame overlap accepted by [`smooth_transport`].
pub const MIN_OVERLAP: f64 = 0.1;

/// A finite-dimensional self-adjoint operator (energy units, hbar = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::validation(format!(
                "operator must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("operator has non-finite entries"));
        }
        let defect = linalg::hermitian_defect(&matrix);
        if defect > HERMITICITY_TOL {
            return Err(Error::validation(format!(
                "operator is not Hermitian (|H - H^dagger| = {defect:.3e})"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// One eigenvalue together with an orthonormal frame of its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFrame {
    pub value: f64,
    pub multiplicity: usize,
    /// `dim x multiplicity`, columns are eigenvectors.
    pub frame: CMatrix,
    /// Distance to the nearest other eigenvalue (infinite if there is none).
    pub gap: f64,
}

impl EigenFrame {
    pub fn dim(&self) -> usize {
        self.frame.nrows()
    }

    /// Same eigenspace, frame right-multiplied by a unitary `g`.
    pub fn regauged(&self, g: &CMatrix) -> Self {
        Self {
            frame: &self.frame * g,
            ..self.clone()
        }
    }
}

/// Orthogonal projector onto an eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector(pub CMatrix);

impl Projector {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.trace().re.round() as usize
    }
}

/// Diagonalize `h`, grouping eigenvalues closer than `degeneracy_tol` into one
/// frame. Frames come out sorted by ascending eigenvalue.
pub fn eigendecompose(h: &HermitianOperator, degeneracy_tol: f64) -> Result<Vec<EigenFrame>> {
    if !(degeneracy_tol > 0.0) {
        return Err(Error::validation("degeneracy_tol must be positive"));
    }
    let (values, vectors) = linalg::eigh(h.matrix());
    let n = values.len();

    // Group consecutive sorted eigenvalues.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || values[k] - values[k - 1] > degeneracy_tol {
            groups.push((start, k));
            start = k;
        }
    }

    let means: Vec<f64> = groups
        .iter()
        .map(|&(a, b)| values[a..b].iter().sum::<f64>() / (b - a) as f64)
        .collect();

    let frames = groups
        .iter()
        .enumerate()
        .map(|(g, &(a, b))| {
            let below = if g > 0 { means[g] - means[g - 1] } else { f64::INFINITY };
            let above = if g + 1 < means.len() {
                means[g + 1] - means[g]
            } else {
                f64::INFINITY
            };
            EigenFrame {
                value: means[g],
                multiplicity: b - a,
                frame: vectors.columns(a, b - a).into_owned(),
                gap: below.min(above),
            }
        })
        .collect();
    Ok(frames)
}

/// `P = Z Z†`.
pub fn projector(frame: &EigenFrame) -> Projector {
    Projector(&frame.frame * frame.frame.adjoint())
}

/// Follow one eigenvalue branch along `path` and return frames that are
/// gauge-aligned step to step: after alignment `Z_k† Z_{k+1}` is Hermitian
/// positive-definite.
///
/// The branch is selected by index at the first sample and afterwards by
/// eigenvalue continuity (closest eigenvalue with the same multiplicity).
pub fn smooth_transport(
    path: &[HermitianOperator],
    branch: usize,
    degeneracy_tol: f64,
    gap_min: f64,
) -> Result<Vec<EigenFrame>> {
    if !(gap_min > 0.0) {
        return Err(Error::validation("gap_min must be positive"));
    }
    let Some(first) = path.first() else {
        return Ok(Vec::new());
    };
    let initial = eigendecompose(first, degeneracy_tol)?;
    let Some(start) = initial.into_iter().nth(branch) else {
        return Err(Error::validation(format!("branch index {branch} out of range")));
    };
    check_gap(&start, 0, gap_min)?;

    let mut frames = Vec::with_capacity(path.len());
    frames.push(start);
    for (step, h) in path.iter().enumerate().skip(1) {
        if h.dim() != path[0].dim() {
            return Err(Error::validation("dimension changes along the path"));
        }
        let prev = frames.last().expect("non-empty");
        let candidates = eigendecompose(h, degeneracy_tol)?;
        let next = candidates
            .into_iter()
            .min_by(|a, b| (a.value - prev.value).abs().total_cmp(&(b.value - prev.value).abs()))
            .expect("at least one eigenvalue");
        if next.multiplicity != prev.multiplicity {
            return Err(Error::GapViolation {
                step,
                gap: 0.0,
                gap_min,
            });
        }
        check_gap(&next, step, gap_min)?;

        let overlap = prev.frame.adjoint() * &next.frame;
        let smin = linalg::min_singular_value(&overlap);
        if smin < MIN_OVERLAP {
            return Err(Error::StepTooCoarse {
                step,
                reason: format!("frame overlap singular value {smin:.3e} < {MIN_OVERLAP}"),
            });
        }
        let q = linalg::polar_unitary(&overlap);
        frames.push(next.regauged(&q.adjoint()));
    }
    Ok(frames)
}

fn check_gap(frame: &EigenFrame, step: usize, gap_min: f64) -> Result<()> {
    if frame.gap < gap_min {
        return Err(Error::GapViolation {
            step,
            gap: frame.gap,
            gap_min,
        });
    }
    Ok(())
}

/// `Σ_a λ_a P_a`.
pub fn reconstruct(frames: &[EigenFrame]) -> CMatrix {
    let dim = frames.first().map_or(0, EigenFrame::dim);
    frames.iter().fold(CMatrix::zeros(dim, dim), |acc, f| {
        acc + projector(f).0 * C64::new(f.value, 0.0)
    })
}

/// Serializable summary of a frame, used in reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameSummary {
    pub value: f64,
    pub multiplicity: usize,
    pub gap: f64,
}

impl From<&EigenFrame> for FrameSummary {
    fn from(f: &EigenFrame) -> Self {
        Self {
            value: f.value,
            multiplicity: f.multiplicity,
            gap: f.gap,
        }
    }
}

//! Built-in model fixtures.
//!
//! * `two_level`: a two-level atom driven in the rotating-wave approximation by
//!   a laser whose phase `θ` is the control, with phase noise `δθ` entering
//!   through the disturbance `W(δθ) = diag(e^{iδθ/2}, e^{-iδθ/2})`.
//! * `sphere`: a spin-½ in a unit field pointing at polar angles `(θ, φ)`, a
//!   two-parameter fixture whose eigenbundle is curved.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::composite::DisturbanceOperator;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, C64, I};
use crate::spectral::HermitianOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelParams {
    pub omega: f64,
    pub delta: f64,
}

impl TwoLevelParams {
    pub fn new(omega: f64, delta: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() || !delta.is_finite() {
            return Err(Error::validation(format!(
                "two-level model needs finite omega > 0 and finite delta, got omega = {omega}, delta = {delta}"
            )));
        }
        Ok(Self { omega, delta })
    }

    /// `r = sqrt(Ω² + Δ²)`
    pub fn r(&self) -> f64 {
        self.omega.hypot(self.delta)
    }

    /// Upper dressed energy `(Δ + r) / 2`.
    pub fn upper_eigenvalue(&self) -> f64 {
        0.5 * (self.delta + self.r())
    }

    pub fn gap(&self) -> f64 {
        self.r()
    }
}

/// `H(θ) = ½ [[0, Ω e^{iθ}], [Ω e^{-iθ}, 2Δ]]`
pub fn rwa_hamiltonian(p: &TwoLevelParams, theta: f64) -> HermitianOperator {
    let off = C64::from_polar(0.5 * p.omega, theta);
    HermitianOperator::new(CMatrix::from_row_slice(
        2,
        2,
        &[c(0.0, 0.0), off, off.conj(), c(p.delta, 0.0)],
    ))
    .expect("RWA Hamiltonian is Hermitian")
}

/// Single-valued upper dressed state `(Ω e^{iθ}, Δ + r) / sqrt(2r(r + Δ))`.
pub fn plus_eigenvector(p: &TwoLevelParams, theta: f64) -> CVector {
    let r = p.r();
    // r + Δ without cancellation when Δ < 0.
    let r_plus_delta = if p.delta >= 0.0 {
        r + p.delta
    } else {
        p.omega * p.omega / (r - p.delta)
    };
    let norm = (2.0 * r * r_plus_delta).sqrt();
    CVector::from_vec(vec![
        C64::from_polar(p.omega / norm, theta),
        c(r_plus_delta / norm, 0.0),
    ])
}

/// Coefficient of `dθ` in `A_P = ⟨+,θ|d|+,θ⟩`: `iΩ² / (2r(r + Δ))`.
pub fn analytic_ap_coefficient(p: &TwoLevelParams) -> C64 {
    let r = p.r();
    I * (p.omega * p.omega / (2.0 * r * (r + p.delta)))
}

/// Coefficient of `dδθ` in `⟨+,θ|W⁻¹ ∂_δθ W|+,θ⟩` for [`disturbance_w`]:
/// `(i/2)(|v₁|² - |v₂|²) = -iΔ / (2r)`.
pub fn analytic_aq_coefficient(p: &TwoLevelParams) -> C64 {
    -I * (p.delta / (2.0 * p.r()))
}

/// `W(δθ) = diag(e^{iδθ/2}, e^{-iδθ/2})`, the sign for which
/// `W(φ) H(θ) W(φ)† = H(θ + φ)`.
pub fn disturbance_w(delta_theta: f64) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_vec(vec![
        C64::from_polar(1.0, 0.5 * delta_theta),
        C64::from_polar(1.0, -0.5 * delta_theta),
    ]))
}

/// `∂W/∂δθ`
pub fn disturbance_w_derivative(delta_theta: f64) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_vec(vec![
        C64::from_polar(0.5, 0.5 * delta_theta) * I,
        -C64::from_polar(0.5, -0.5 * delta_theta) * I,
    ]))
}

/// Disturbance of the two-level model as a function of `(x = [θ], y = [δθ])`,
/// with analytic derivatives.
pub fn two_level_disturbance() -> DisturbanceOperator {
    DisturbanceOperator::new(2, Arc::new(|_x: &[f64], y: &[f64]| disturbance_w(y[0])))
        .independent_of_x()
        .with_dy(Arc::new(|_x: &[f64], y: &[f64]| vec![disturbance_w_derivative(y[0])]))
}

/// `½ [[cosθ, sinθ e^{-iφ}], [sinθ e^{iφ}, -cosθ]]` for `θ ∈ (0, π)`.
pub fn sphere_fixture(theta: f64, phi: f64) -> Result<HermitianOperator> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::validation(format!("polar angle {theta} outside (0, pi)")));
    }
    let off = C64::from_polar(0.5 * theta.sin(), -phi);
    HermitianOperator::new(CMatrix::from_row_slice(
        2,
        2,
        &[c(0.5 * theta.cos(), 0.0), off, off.conj(), c(-0.5 * theta.cos(), 0.0)],
    ))
}

/// Phase of the upper sphere state around the latitude `θ₀`: `-π(1 - cos θ₀)`.
pub fn sphere_latitude_phase(theta0: f64) -> f64 {
    -PI * (1.0 - theta0.cos())
}

/// Noise amplitude `k(θ)` in `dδθ = k(θ) η dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KForm {
    /// `cos(θ/2)`, antiperiodic.
    CosHalf,
    /// `sin(θ/2)`, antiperiodic.
    SinHalf,
    /// `1`, periodic.
    One,
    /// `cos θ`, periodic.
    Cos,
}

impl KForm {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            KForm::CosHalf => (0.5 * theta).cos(),
            KForm::SinHalf => (0.5 * theta).sin(),
            KForm::One => 1.0,
            KForm::Cos => theta.cos(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KForm::CosHalf => "cos_half",
            KForm::SinHalf => "sin_half",
            KForm::One => "one",
            KForm::Cos => "cos",
        }
    }
}

/// A model by name: Hamiltonian on the control manifold, disturbance, and the
/// analytic oracles it offers.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: &'static str,
    pub control_dim: usize,
    hamiltonian: Arc<dyn Fn(&[f64]) -> Result<HermitianOperator> + Send + Sync>,
    pub disturbance: DisturbanceOperator,
    pub two_level: Option<TwoLevelParams>,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("control_dim", &self.control_dim)
            .field("two_level", &self.two_level)
            .finish()
    }
}

impl ModelSpec {
    pub fn two_level(params: TwoLevelParams) -> Self {
        Self {
            name: "two_level",
            control_dim: 1,
            hamiltonian: Arc::new(move |x: &[f64]| Ok(rwa_hamiltonian(&params, x[0]))),
            disturbance: two_level_disturbance(),
            two_level: Some(params),
        }
    }

    pub fn sphere() -> Self {
        Self {
            name: "sphere",
            control_dim: 2,
            hamiltonian: Arc::new(|x: &[f64]| sphere_fixture(x[0], x[1])),
            disturbance: DisturbanceOperator::identity(2),
            two_level: None,
        }
    }

    pub fn by_name(name: &str, omega: f64, delta: f64) -> Result<Self> {
        match name {
            "two_level" => Ok(Self::two_level(TwoLevelParams::new(omega, delta)?)),
            "sphere" => Ok(Self::sphere()),
            other => Err(Error::Configuration(format!("unknown model '{other}'"))),
        }
    }

    pub fn hamiltonian(&self, x: &[f64]) -> Result<HermitianOperator> {
        if x.len() != self.control_dim {
            return Err(Error::validation(format!(
                "model {} expects {} control coordinates, got {}",
                self.name,
                self.control_dim,
                x.len()
            )));
        }
        (self.hamiltonian)(x)
    }

    /// Check Hermiticity of `H` and unitarity of `W` on the given samples.
    pub fn validate_on(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<()> {
        for x in xs {
            self.hamiltonian(x)?;
            for y in ys {
                self.disturbance.check_unitary(x, y)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use super::*;
    use crate::linalg::max_abs;
    use crate::spectral::eigendecompose;

    #[test]
    fn rwa_examples() {
        let p = TwoLevelParams::new(1.0, 0.0).unwrap();
        let h = rwa_hamiltonian(&p, 0.0);
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        assert!(max_abs(&(h.matrix() - expected)) < 1e-16);

        let p = TwoLevelParams::new(1.0, 1.0).unwrap();
        let h = rwa_hamiltonian(&p, PI);
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-0.5, 0.0), c(-0.5, 0.0), c(1.0, 0.0)]);
        assert!(max_abs(&(h.matrix() - expected)) < 1e-15);

        let a = rwa_hamiltonian(&p, 0.7);
        let b = rwa_hamiltonian(&p, 0.7 + 2.0 * PI);
        assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-15);
    }

    #[test]
    fn invalid_params() {
        assert!(TwoLevelParams::new(0.0, 0.0).is_err());
        assert!(TwoLevelParams::new(-1.0, 0.0).is_err());
        let p = TwoLevelParams::new(0.3, -2.0).unwrap();
        assert!(p.r() >= p.delta.abs() && p.r() >= p.omega);
    }

    #[test]
    fn plus_eigenvector_examples() {
        let p = TwoLevelParams::new(1.0, 0.0).unwrap();
        let v = plus_eigenvector(&p, 0.0);
        assert!((v[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((v[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);

        let p = TwoLevelParams::new(1.0, 1.0).unwrap();
        let theta = 0.9;
        let v = plus_eigenvector(&p, theta);
        let s2 = 2f64.sqrt();
        let n = (2.0 * s2 * (s2 + 1.0)).sqrt();
        assert!((v[0] - C64::from_polar(1.0 / n, theta)).norm() < 1e-15);
        assert!((v[1] - c((1.0 + s2) / n, 0.0)).norm() < 1e-15);

        let h = rwa_hamiltonian(&p, theta);
        let hv = h.matrix() * &v;
        assert!((hv - &v * c(p.upper_eigenvalue(), 0.0)).norm() < 1e-12);
        let frames = eigendecompose(&h, 1e-9).unwrap();
        let overlap = (frames[1].frame.adjoint() * &v)[(0, 0)];
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_norm_for_many_params() {
        for k in 0..50 {
            let p = TwoLevelParams::new(0.1 + 0.13 * k as f64, -3.0 + 0.17 * k as f64).unwrap();
            let v = plus_eigenvector(&p, 0.37 * k as f64);
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ap_coefficient_values() {
        let p = TwoLevelParams::new(1.0, 0.0).unwrap();
        assert!((analytic_ap_coefficient(&p) - c(0.0, 0.5)).norm() < 1e-15);
        let p = TwoLevelParams::new(1.0, 1.0).unwrap();
        assert!((analytic_ap_coefficient(&p).im - 0.146_446_609_406_726_24).abs() < 1e-12);
        let p = TwoLevelParams::new(1.0, 1e3).unwrap();
        assert!(analytic_ap_coefficient(&p).norm() < 6e-7);
    }

    #[test]
    fn ap_coefficient_matches_finite_difference() {
        // Oracle: ⟨+,θ|(|+,θ+h⟩ - |+,θ-h⟩)/2h.
        for (omega, delta) in [(1.0, 0.0), (1.0, 1.0), (0.4, -0.7)] {
            let p = TwoLevelParams::new(omega, delta).unwrap();
            let h = 1e-5;
            let v = plus_eigenvector(&p, 0.3);
            let dv = (plus_eigenvector(&p, 0.3 + h) - plus_eigenvector(&p, 0.3 - h)) / c(2.0 * h, 0.0);
            let fd = v.dotc(&dv);
            assert!((fd - analytic_ap_coefficient(&p)).norm() < 1e-9);
        }
    }

    #[test]
    fn aq_coefficient_matches_finite_difference() {
        for (omega, delta) in [(1.0, 1.0), (0.5, 2.0), (1.0, -0.3)] {
            let p = TwoLevelParams::new(omega, delta).unwrap();
            let (y, h) = (0.4, 1e-5);
            let v = plus_eigenvector(&p, 1.1);
            let w_inv = disturbance_w(y).adjoint();
            let dw = (disturbance_w(y + h) - disturbance_w(y - h)) / c(2.0 * h, 0.0);
            let fd = v.dotc(&(w_inv * dw * &v));
            assert!((fd - analytic_aq_coefficient(&p)).norm() < 1e-9);
        }
        let p = TwoLevelParams::new(1.0, 1.0).unwrap();
        assert!((analytic_aq_coefficient(&p).im + 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn disturbance_examples() {
        assert!(max_abs(&(disturbance_w(0.0) - CMatrix::identity(2, 2))) < 1e-16);
        assert!(max_abs(&(disturbance_w(2.0 * PI) + CMatrix::identity(2, 2))) < 1e-15);
        let p = TwoLevelParams::new(1.0, 0.6).unwrap();
        for k in 0..20 {
            let (theta, phi) = (0.31 * k as f64, -1.7 + 0.23 * k as f64);
            let w = disturbance_w(phi);
            let lhs = &w * rwa_hamiltonian(&p, theta).matrix() * w.adjoint();
            assert!(max_abs(&(lhs - rwa_hamiltonian(&p, theta + phi).matrix())) < 1e-15);
        }
    }

    #[test]
    fn sphere_examples() {
        let h = sphere_fixture(PI / 2.0, 0.0).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        assert!(max_abs(&(h.matrix() - expected)) < 1e-16);
        assert!(sphere_fixture(0.0, 0.0).is_err());
        assert!(sphere_fixture(PI, 0.0).is_err());
        for k in 1..20 {
            let f = eigendecompose(&sphere_fixture(0.15 * k as f64, 0.4 * k as f64).unwrap(), 1e-9).unwrap();
            assert!((f[0].value + 0.5).abs() < 1e-14 && (f[1].value - 0.5).abs() < 1e-14);
            assert!((f[1].gap - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn k_forms() {
        assert!((KForm::CosHalf.eval(0.3 + 2.0 * PI) + KForm::CosHalf.eval(0.3)).abs() < 1e-15);
        assert_eq!(KForm::One.eval(3.0), 1.0);
        let parsed: KForm = serde_json::from_str("\"cos_half\"").unwrap();
        assert_eq!(parsed, KForm::CosHalf);
    }
}

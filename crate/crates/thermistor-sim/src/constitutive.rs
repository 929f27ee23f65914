//! Constitutive laws: electrical conductivity prototypes, thermal
//! coefficients, the Joule source, and their regularizations.
//!
//! The conductivity has the form sigma(u, tau) * grad(phi) with tau the
//! gradient magnitude. Two prototypes are provided:
//!
//!   regularized: sigma(u, tau) = sigma0(u) * (delta + tau^2)^((p-2)/2),
//!                delta > 0, p >= 1 (p = 1 only for current-voltage curves),
//!   pure:        sigma(u, tau) = sigma0(u) * tau^(p-2),  p >= 2,
//!
//! with 0 < sigma_lo <= sigma0(u) <= sigma_hi. Construction derives
//! conservative coercivity/growth constants
//!
//!   c1 * tau^p - c2 <= sigma(u, tau) * tau^2,
//!   sigma(u, tau) <= c3 * (1 + tau^2)^((p-2)/2),
//!
//! and the Joule source f = alpha(x, t, u) * sigma(u, |xi|) * |xi|^2 obeys
//! 0 <= f <= c4 * (1 + |xi|^p) with c4 = alpha_max * c3 * 2^(p/2).
//!
//! The solver-facing regularizations are the p-Laplacian augmentation
//! sigma_eps(u, tau) = eps * tau^(p-2) + sigma(u, tau) (tau > 0; at tau = 0
//! it equals sigma(u, 0)) and the source truncation f_eps = f / (1 + eps*f),
//! which keeps 0 <= f_eps <= min(f, 1/eps) and |f_eps - f| <= eps * f^2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::Invalid(msg.into())
}

/// Scalar coefficient shapes in the temperature variable, with exact bounds.
#[derive(Clone, Debug, PartialEq)]
pub enum TempShape {
    Constant {
        value: f64,
    },
    /// intercept + slope * u, clamped to [lo, hi].
    AffineClamped {
        intercept: f64,
        slope: f64,
        lo: f64,
        hi: f64,
    },
    /// base + amplitude * exp(-((u - center) / width)^2).
    GaussianBump {
        base: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl TempShape {
    pub fn constant(value: f64) -> Self {
        TempShape::Constant { value }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            TempShape::Constant { value } => value,
            TempShape::AffineClamped {
                intercept,
                slope,
                lo,
                hi,
            } => (intercept + slope * u).clamp(lo, hi),
            TempShape::GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => {
                let z = (u - center) / width;
                base + amplitude * (-z * z).exp()
            }
        }
    }

    /// Inclusive bounds attained or approached by `eval` over all of R.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            TempShape::Constant { value } => (value, value),
            TempShape::AffineClamped { lo, hi, .. } => (lo, hi),
            TempShape::GaussianBump {
                base, amplitude, ..
            } => (base, base + amplitude),
        }
    }

    fn validate(&self, what: &str) -> Result<(), ModelError> {
        let ok = match *self {
            TempShape::Constant { value } => value.is_finite(),
            TempShape::AffineClamped {
                intercept,
                slope,
                lo,
                hi,
            } => intercept.is_finite() && slope.is_finite() && lo.is_finite() && hi >= lo,
            TempShape::GaussianBump {
                base,
                amplitude,
                width,
                center,
            } => base.is_finite() && amplitude >= 0.0 && width > 0.0 && center.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("{what}: malformed shape {self:?}")))
        }
    }
}

/// Joule-efficiency factor alpha(x, t, u) in [0, alpha_max].
#[derive(Clone, Debug, PartialEq)]
pub enum AlphaShape {
    Constant {
        value: f64,
    },
    /// Periodic on/off tiling of the plane with square cells of size `cell`,
    /// emulating regions where Joule heat is lost rather than absorbed.
    Checkerboard {
        value_on: f64,
        value_off: f64,
        cell: f64,
    },
}

impl AlphaShape {
    pub fn constant(value: f64) -> Self {
        AlphaShape::Constant { value }
    }

    pub fn eval(&self, x: f64, y: f64, _t: f64, _u: f64) -> f64 {
        match *self {
            AlphaShape::Constant { value } => value,
            AlphaShape::Checkerboard {
                value_on,
                value_off,
                cell,
            } => {
                let ix = (x / cell).floor() as i64;
                let iy = (y / cell).floor() as i64;
                if (ix + iy).rem_euclid(2) == 0 {
                    value_on
                } else {
                    value_off
                }
            }
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            AlphaShape::Constant { value } => (value, value),
            AlphaShape::Checkerboard {
                value_on,
                value_off,
                ..
            } => (value_on.min(value_off), value_on.max(value_off)),
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let (lo, hi) = self.bounds();
        if !(lo >= 0.0) || !hi.is_finite() {
            return Err(invalid(format!(
                "alpha must satisfy 0 <= alpha < infinity, got bounds [{lo}, {hi}]"
            )));
        }
        if let AlphaShape::Checkerboard { cell, .. } = *self {
            if !(cell > 0.0) {
                return Err(invalid(format!("checkerboard cell must be positive, got {cell}")));
            }
        }
        Ok(())
    }
}

/// Initial-temperature shapes in space.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceShape {
    Constant {
        value: f64,
    },
    /// base + amplitude * exp(-(r / width)^2) around (cx, cy).
    GaussianBump {
        base: f64,
        amplitude: f64,
        cx: f64,
        cy: f64,
        width: f64,
    },
}

impl SpaceShape {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            SpaceShape::Constant { value } => value,
            SpaceShape::GaussianBump {
                base,
                amplitude,
                cx,
                cy,
                width,
            } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                base + amplitude * (-r2 / (width * width)).exp()
            }
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = match *self {
            SpaceShape::Constant { value } => value.is_finite(),
            SpaceShape::GaussianBump {
                base,
                amplitude,
                cx,
                cy,
                width,
            } => {
                base.is_finite()
                    && amplitude.is_finite()
                    && cx.is_finite()
                    && cy.is_finite()
                    && width > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("malformed initial shape {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConductivityKind {
    RegularizedPLap,
    PurePLap,
}

/// Electrical conductivity model with derived structural constants.
#[derive(Clone, Debug)]
pub struct ConductivityModel {
    kind: ConductivityKind,
    p: f64,
    delta: f64,
    sigma0: TempShape,
    sigma_lo: f64,
    sigma_hi: f64,
    c1: f64,
    c2: f64,
    c3: f64,
}

impl ConductivityModel {
    /// Regularized prototype; requires delta > 0 and p >= 1. The p = 1
    /// endpoint is the current-saturation law and is accepted for
    /// current-voltage evaluation only; the PDE solvers enforce their own
    /// exponent range at problem setup.
    pub fn regularized(sigma0: TempShape, delta: f64, p: f64) -> Result<Self, ModelError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(invalid(format!(
                "regularized_plap requires delta > 0, got {delta}"
            )));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(invalid(format!("regularized_plap requires p >= 1, got {p}")));
        }
        Self::build(ConductivityKind::RegularizedPLap, p, delta, sigma0)
    }

    /// Pure power prototype; requires p >= 2 (at p < 2 the law is singular
    /// at zero gradient and only the regularized kind is meaningful).
    pub fn pure(sigma0: TempShape, p: f64) -> Result<Self, ModelError> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(invalid(format!("pure_plap requires p >= 2, got {p}")));
        }
        Self::build(ConductivityKind::PurePLap, p, 0.0, sigma0)
    }

    fn build(
        kind: ConductivityKind,
        p: f64,
        delta: f64,
        sigma0: TempShape,
    ) -> Result<Self, ModelError> {
        sigma0.validate("sigma0")?;
        let (sigma_lo, sigma_hi) = sigma0.bounds();
        if !(sigma_lo > 0.0) {
            return Err(invalid(format!(
                "sigma0 must have a positive lower bound, got {sigma_lo}"
            )));
        }
        if !sigma_hi.is_finite() {
            return Err(invalid("sigma0 must be bounded above".to_string()));
        }
        sampled_bounds_check(&sigma0, sigma_lo, sigma_hi)?;

        let (c1, c2, c3) = match kind {
            ConductivityKind::PurePLap => (sigma_lo, 0.0, sigma_hi),
            ConductivityKind::RegularizedPLap => {
                if p >= 2.0 {
                    let c3 = sigma_hi * delta.max(1.0).powf((p - 2.0) / 2.0);
                    (sigma_lo, 0.0, c3)
                } else {
                    let c1 = sigma_lo * 2f64.powf((p - 2.0) / 2.0);
                    let c2 = sigma_lo * delta.powf(p / 2.0);
                    let c3 = sigma_hi * delta.min(1.0).powf((p - 2.0) / 2.0);
                    (c1, c2, c3)
                }
            }
        };

        Ok(ConductivityModel {
            kind,
            p,
            delta,
            sigma0,
            sigma_lo,
            sigma_hi,
            c1,
            c2,
            c3,
        })
    }

    /// Same prototype and sigma0 with a different exponent; used by the
    /// p-continuation in the potential solver.
    pub fn with_exponent(&self, p: f64) -> Result<Self, ModelError> {
        match self.kind {
            ConductivityKind::RegularizedPLap => {
                Self::regularized(self.sigma0.clone(), self.delta, p)
            }
            ConductivityKind::PurePLap => Self::pure(self.sigma0.clone(), p),
        }
    }

    pub fn kind(&self) -> ConductivityKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma0_at(&self, u: f64) -> f64 {
        self.sigma0.eval(u)
    }

    pub fn sigma0_shape(&self) -> &TempShape {
        &self.sigma0
    }

    /// (sigma_lo, sigma_hi) bounds of sigma0.
    pub fn sigma_bounds(&self) -> (f64, f64) {
        (self.sigma_lo, self.sigma_hi)
    }

    /// Derived coercivity/growth constants (c1, c2, c3).
    pub fn growth_constants(&self) -> (f64, f64, f64) {
        (self.c1, self.c2, self.c3)
    }

    /// Derived source growth constant c4 for a given alpha bound.
    pub fn source_growth_constant(&self, alpha_max: f64) -> f64 {
        alpha_max * self.c3 * 2f64.powf(self.p / 2.0)
    }

    /// sigma(u, tau) for tau = |grad phi| >= 0.
    pub fn sigma(&self, u: f64, tau: f64) -> f64 {
        assert!(tau >= 0.0, "sigma requires tau >= 0, got {tau}");
        let s0 = self.sigma0.eval(u);
        match self.kind {
            ConductivityKind::RegularizedPLap => {
                s0 * (self.delta + tau * tau).powf((self.p - 2.0) / 2.0)
            }
            ConductivityKind::PurePLap => s0 * tau.powf(self.p - 2.0),
        }
    }

    /// eps-augmented conductivity: eps * tau^(p-2) + sigma(u, tau) for
    /// tau > 0, and exactly sigma(u, 0) at tau = 0.
    pub fn sigma_eps(&self, u: f64, tau: f64, eps: f64) -> f64 {
        assert!(tau >= 0.0, "sigma_eps requires tau >= 0, got {tau}");
        assert!(eps >= 0.0, "sigma_eps requires eps >= 0, got {eps}");
        if eps == 0.0 || tau == 0.0 {
            return self.sigma(u, tau);
        }
        eps * tau.powf(self.p - 2.0) + self.sigma(u, tau)
    }

    /// Physical current flux J = -sigma(u, |grad phi|) * grad phi.
    pub fn flux(&self, u: f64, grad_phi: [f64; 2]) -> [f64; 2] {
        let tau = (grad_phi[0] * grad_phi[0] + grad_phi[1] * grad_phi[1]).sqrt();
        let s = self.sigma(u, tau);
        [-s * grad_phi[0], -s * grad_phi[1]]
    }

    /// Monotonicity gap (sigma(u,|xi|) xi - sigma(u,|eta|) eta) . (xi - eta);
    /// nonnegative for every model this type can construct.
    pub fn monotonicity_gap(&self, u: f64, xi: [f64; 2], eta: [f64; 2]) -> f64 {
        let txi = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let teta = (eta[0] * eta[0] + eta[1] * eta[1]).sqrt();
        let sxi = self.sigma(u, txi);
        let seta = self.sigma(u, teta);
        (sxi * xi[0] - seta * eta[0]) * (xi[0] - eta[0])
            + (sxi * xi[1] - seta * eta[1]) * (xi[1] - eta[1])
    }

    /// eps-augmented monotonicity gap; bounded below by eps times the pure
    /// p-Laplacian gap, hence strictly positive for xi != eta when eps > 0.
    pub fn monotonicity_gap_eps(&self, u: f64, xi: [f64; 2], eta: [f64; 2], eps: f64) -> f64 {
        self.monotonicity_gap(u, xi, eta) + eps * plap_monotonicity_gap(self.p, xi, eta)
    }

    /// Current-voltage samples I(V) = sigma(u, V) * V at the given voltages.
    /// All voltages must be nonnegative.
    pub fn iv_curve(&self, u: f64, voltages: &[f64]) -> Result<Vec<(f64, f64)>, ModelError> {
        let mut curve = Vec::with_capacity(voltages.len());
        for &v in voltages {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(format!("iv_curve requires V >= 0, got {v}")));
            }
            curve.push((v, self.sigma(u, v) * v));
        }
        Ok(curve)
    }
}

/// Deterministic spot check that the declared bounds really contain sampled
/// shape values; guards against future shape variants with stale bound
/// formulas.
fn sampled_bounds_check(shape: &TempShape, lo: f64, hi: f64) -> Result<(), ModelError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_b0d5);
    let slack = 1e-12 * (1.0 + hi.abs());
    for k in 0..512 {
        let u = if k < 8 {
            // Hit a few deterministic extremes alongside the random draws.
            [-1e6, -1e3, -1.0, 0.0, 1.0, 1e3, 1e6, 0.5][k]
        } else {
            rng.gen_range(-1e3..1e3)
        };
        let v = shape.eval(u);
        if !(v >= lo - slack && v <= hi + slack) {
            return Err(invalid(format!(
                "shape value {v} at u={u} escapes declared bounds [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

/// |v|^(p-2) v with the zero-gradient convention: the field vanishes where
/// v does, for every p > 1.
pub fn plap_vector(p: f64, v: [f64; 2]) -> [f64; 2] {
    let tau = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if tau == 0.0 {
        return [0.0, 0.0];
    }
    let s = tau.powf(p - 2.0);
    [s * v[0], s * v[1]]
}

/// Monotonicity gap of the pure p-Laplacian field.
pub fn plap_monotonicity_gap(p: f64, xi: [f64; 2], eta: [f64; 2]) -> f64 {
    let a = plap_vector(p, xi);
    let b = plap_vector(p, eta);
    (a[0] - b[0]) * (xi[0] - eta[0]) + (a[1] - b[1]) * (xi[1] - eta[1])
}

/// Sharp lower bound for the p-Laplacian monotonicity gap:
///
///   1 < p <= 2:  (p-1) |xi-eta|^2 / (1 + |xi| + |eta|)^(2-p)
///   p > 2:       min(1/2, 2^(2-p)) |xi-eta|^p
pub fn plap_monotonicity_lower_bound(p: f64, xi: [f64; 2], eta: [f64; 2]) -> f64 {
    assert!(p > 1.0, "lower bound defined for p > 1, got {p}");
    let dsq = (xi[0] - eta[0]).powi(2) + (xi[1] - eta[1]).powi(2);
    if p <= 2.0 {
        let txi = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let teta = (eta[0] * eta[0] + eta[1] * eta[1]).sqrt();
        (p - 1.0) * dsq / (1.0 + txi + teta).powf(2.0 - p)
    } else {
        0.5f64.min(2f64.powf(2.0 - p)) * dsq.powf(p / 2.0)
    }
}

/// Rational truncation f / (1 + eps f); maps [0, inf) into [0, 1/eps)
/// for eps > 0 and is the identity at eps = 0.
pub fn truncate_source(f: f64, eps: f64) -> f64 {
    assert!(f >= 0.0, "truncate_source requires f >= 0, got {f}");
    assert!(eps >= 0.0, "truncate_source requires eps >= 0, got {eps}");
    f / (1.0 + eps * f)
}

/// Thermal model: conductivity kappa(u), Robin exchange (g, h), and the
/// Joule efficiency alpha.
#[derive(Clone, Debug)]
pub struct HeatModel {
    kappa: TempShape,
    kappa_lo: f64,
    kappa_hi: f64,
    pub g: f64,
    pub h: f64,
    alpha: AlphaShape,
    alpha_max: f64,
}

impl HeatModel {
    pub fn new(kappa: TempShape, g: f64, h: f64, alpha: AlphaShape) -> Result<Self, ModelError> {
        kappa.validate("kappa")?;
        let (kappa_lo, kappa_hi) = kappa.bounds();
        if !(kappa_lo > 0.0) || !kappa_hi.is_finite() {
            return Err(invalid(format!(
                "kappa must satisfy 0 < kappa_lo <= kappa <= kappa_hi < infinity, got [{kappa_lo}, {kappa_hi}]"
            )));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(invalid(format!("Robin coefficient g must be positive, got {g}")));
        }
        if !h.is_finite() {
            return Err(invalid(format!("ambient temperature h must be finite, got {h}")));
        }
        alpha.validate()?;
        let alpha_max = alpha.bounds().1;
        Ok(HeatModel {
            kappa,
            kappa_lo,
            kappa_hi,
            g,
            h,
            alpha,
            alpha_max,
        })
    }

    pub fn kappa_at(&self, u: f64) -> f64 {
        self.kappa.eval(u)
    }

    pub fn kappa_bounds(&self) -> (f64, f64) {
        (self.kappa_lo, self.kappa_hi)
    }

    pub fn alpha_at(&self, x: f64, y: f64, t: f64, u: f64) -> f64 {
        self.alpha.eval(x, y, t, u)
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    pub fn alpha_shape(&self) -> &AlphaShape {
        &self.alpha
    }
}

/// Joule source f = alpha(x, t, u) * sigma(u, |xi|) * |xi|^2; nonnegative by
/// construction.
pub fn joule_source(
    cond: &ConductivityModel,
    heat: &HeatModel,
    x: f64,
    y: f64,
    t: f64,
    u: f64,
    grad_phi: [f64; 2],
) -> f64 {
    let tau_sq = grad_phi[0] * grad_phi[0] + grad_phi[1] * grad_phi[1];
    if tau_sq == 0.0 {
        return 0.0;
    }
    heat.alpha_at(x, y, t, u) * cond.sigma(u, tau_sq.sqrt()) * tau_sq
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_sigma0() -> TempShape {
        TempShape::constant(1.0)
    }

    fn reg(delta: f64, p: f64) -> ConductivityModel {
        ConductivityModel::regularized(unit_sigma0(), delta, p).unwrap()
    }

    fn default_heat() -> HeatModel {
        HeatModel::new(
            TempShape::constant(1.0),
            1.0,
            0.0,
            AlphaShape::constant(1.0),
        )
        .unwrap()
    }

    #[test]
    fn sigma_regularized_samples() {
        // (delta + tau^2)^((p-2)/2) at delta = 1, p = 4, tau = 1 is 2.
        assert!((reg(1.0, 4.0).sigma(0.3, 1.0) - 2.0).abs() < 1e-15);
        // p = 2 collapses to sigma0 for every tau.
        let m = reg(1.0, 2.0);
        for tau in [0.0, 0.5, 2.0, 100.0] {
            assert_eq!(m.sigma(-1.0, tau), 1.0);
        }
    }

    #[test]
    fn sigma_pure_samples() {
        let m = ConductivityModel::pure(TempShape::constant(2.0), 3.0).unwrap();
        assert!((m.sigma(0.0, 0.5) - 1.0).abs() < 1e-15);
        assert_eq!(m.sigma(0.0, 0.0), 0.0);
        // p = 2 pure at tau = 0 is sigma0, not 0.
        let m2 = ConductivityModel::pure(TempShape::constant(2.0), 2.0).unwrap();
        assert_eq!(m2.sigma(0.0, 0.0), 2.0);
    }

    #[test]
    fn sigma_eps_samples() {
        let m = reg(1.0, 2.0);
        // eps = 0 reduces to sigma exactly.
        assert_eq!(m.sigma_eps(0.0, 3.0, 0.0), m.sigma(0.0, 3.0));
        // eps tau^(p-2) + sigma: 0.5 * 1 + 1 = 1.5 at p = 2.
        assert!((m.sigma_eps(0.0, 3.0, 0.5) - 1.5).abs() < 1e-15);
        let m4 = ConductivityModel::pure(unit_sigma0(), 4.0).unwrap();
        // 0.1 * 2^2 + 2^2 = 4.4.
        assert!((m4.sigma_eps(0.0, 2.0, 0.1) - 4.4).abs() < 1e-14);
        // At tau = 0 the augmentation vanishes by definition.
        let m15 = reg(1.0, 1.5);
        assert_eq!(m15.sigma_eps(0.0, 0.0, 0.3), m15.sigma(0.0, 0.0));
    }

    #[test]
    fn flux_is_ohmic_at_p2() {
        let m = ConductivityModel::regularized(TempShape::constant(3.0), 1.0, 2.0).unwrap();
        let j = m.flux(0.0, [1.0, -2.0]);
        assert!((j[0] + 3.0).abs() < 1e-14);
        assert!((j[1] - 6.0).abs() < 1e-14);
        // Zero gradient gives zero flux for p >= 2.
        let m3 = ConductivityModel::pure(unit_sigma0(), 3.0).unwrap();
        assert_eq!(m3.flux(0.0, [0.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn monotonicity_gap_frozen_values() {
        let m = reg(1.0, 4.0);
        // sigma(_, 1) = 2 on both arguments: (2-(-2), 0).(2, 0) = 8.
        assert!((m.monotonicity_gap(0.0, [1.0, 0.0], [-1.0, 0.0]) - 8.0).abs() < 1e-14);
        // Equal arguments give a zero gap exactly.
        assert_eq!(m.monotonicity_gap(0.5, [0.3, -0.7], [0.3, -0.7]), 0.0);
        // p = 2, sigma0 = 1: the gap is |xi - eta|^2.
        let m2 = reg(1.0, 2.0);
        assert!((m2.monotonicity_gap(0.0, [1.0, 0.0], [0.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn plap_lower_bound_frozen_values() {
        // p = 2: the bound is exactly |xi - eta|^2.
        assert!((plap_monotonicity_lower_bound(2.0, [1.0, 0.0], [0.0, 0.0]) - 1.0).abs() < 1e-15);
        // p = 3: min(1/2, 1/2) * 2^3 = 4.
        assert!((plap_monotonicity_lower_bound(3.0, [2.0, 0.0], [0.0, 0.0]) - 4.0).abs() < 1e-14);
        assert_eq!(plap_monotonicity_lower_bound(1.5, [1.0, 1.0], [1.0, 1.0]), 0.0);
    }

    #[test]
    fn truncation_frozen_values() {
        assert_eq!(truncate_source(5.0, 0.0), 5.0);
        assert!((truncate_source(1.0, 1.0) - 0.5).abs() < 1e-16);
        // 1e6 / (1 + 1e4) stays below the 1/eps = 100 cap.
        let v = truncate_source(1e6, 0.01);
        assert!((v - 99.99000099990001).abs() < 1e-11);
        assert!(v <= 100.0);
    }

    #[test]
    fn saturation_curve_frozen_values() {
        let m = reg(1.0, 1.0);
        let curve = m.iv_curve(0.0, &[0.0, 1.0, 10.0, 1000.0]).unwrap();
        assert_eq!(curve[0].1, 0.0);
        assert!((curve[1].1 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((curve[2].1 - 10.0 / 101f64.sqrt()).abs() < 1e-12);
        assert!((curve[2].1 - 0.9950371902099892).abs() < 1e-12);
        assert!((curve[3].1 - 0.9999995000003750).abs() < 1e-12);

        let m2 = ConductivityModel::regularized(TempShape::constant(2.0), 1.0, 1.0).unwrap();
        let i = m2.iv_curve(0.0, &[1e6]).unwrap()[0].1;
        assert!((i - 2.0).abs() <= 2.0 * 1e-11);

        // p = 2 gives the linear law I = sigma0 V.
        let lin = reg(1.0, 2.0).iv_curve(0.0, &[3.5]).unwrap()[0].1;
        assert!((lin - 3.5).abs() < 1e-14);
    }

    #[test]
    fn iv_curve_rejects_negative_voltage() {
        assert!(reg(1.0, 1.0).iv_curve(0.0, &[-1.0]).is_err());
    }

    #[test]
    fn joule_source_samples() {
        let heat = default_heat();
        let m = reg(1.0, 2.0);
        assert_eq!(joule_source(&m, &heat, 0.5, 0.5, 0.0, 0.0, [0.0, 0.0]), 0.0);
        // alpha = 1, sigma = 1, |xi|^2 = 25.
        assert!((joule_source(&m, &heat, 0.5, 0.5, 0.0, 0.0, [3.0, 4.0]) - 25.0).abs() < 1e-13);
        let off = HeatModel::new(
            TempShape::constant(1.0),
            1.0,
            0.0,
            AlphaShape::constant(0.0),
        )
        .unwrap();
        assert_eq!(joule_source(&m, &off, 0.5, 0.5, 0.0, 0.0, [3.0, 4.0]), 0.0);
    }

    #[test]
    fn construction_gates() {
        assert!(ConductivityModel::pure(unit_sigma0(), 1.5).is_err());
        assert!(ConductivityModel::regularized(unit_sigma0(), 0.0, 2.0).is_err());
        assert!(ConductivityModel::regularized(unit_sigma0(), 1.0, 0.5).is_err());
        // p = 1 is accepted for the regularized kind (saturation curves).
        assert!(ConductivityModel::regularized(unit_sigma0(), 1.0, 1.0).is_ok());
        // Nonpositive sigma0 lower bound is rejected.
        assert!(ConductivityModel::regularized(TempShape::constant(0.0), 1.0, 2.0).is_err());
        assert!(ConductivityModel::regularized(
            TempShape::AffineClamped {
                intercept: 1.0,
                slope: 1.0,
                lo: -0.5,
                hi: 2.0
            },
            1.0,
            2.0
        )
        .is_err());
    }

    #[test]
    fn heat_model_gates() {
        assert!(HeatModel::new(TempShape::constant(0.0), 1.0, 0.0, AlphaShape::constant(1.0)).is_err());
        assert!(HeatModel::new(TempShape::constant(1.0), 0.0, 0.0, AlphaShape::constant(1.0)).is_err());
        assert!(HeatModel::new(TempShape::constant(1.0), 1.0, 0.0, AlphaShape::constant(-1.0)).is_err());
        let m = HeatModel::new(
            TempShape::AffineClamped {
                intercept: 1.0,
                slope: 2.0,
                lo: 0.5,
                hi: 4.0,
            },
            2.0,
            0.25,
            AlphaShape::Checkerboard {
                value_on: 1.0,
                value_off: 0.25,
                cell: 0.5,
            },
        )
        .unwrap();
        assert_eq!(m.kappa_bounds(), (0.5, 4.0));
        assert_eq!(m.alpha_max(), 1.0);
    }

    #[test]
    fn checkerboard_alternates() {
        let a = AlphaShape::Checkerboard {
            value_on: 1.0,
            value_off: 0.0,
            cell: 0.5,
        };
        assert_eq!(a.eval(0.25, 0.25, 0.0, 0.0), 1.0);
        assert_eq!(a.eval(0.75, 0.25, 0.0, 0.0), 0.0);
        assert_eq!(a.eval(0.75, 0.75, 0.0, 0.0), 1.0);
        // Negative coordinates keep the tiling consistent.
        assert_eq!(a.eval(-0.25, 0.25, 0.0, 0.0), 0.0);
    }

    fn suite_models() -> Vec<ConductivityModel> {
        let mut models = Vec::new();
        for &delta in &[0.1, 1.0] {
            for &p in &[1.5, 2.0, 3.0, 4.0] {
                models.push(reg(delta, p));
            }
        }
        for &p in &[2.0, 3.0, 4.0] {
            models.push(ConductivityModel::pure(unit_sigma0(), p).unwrap());
        }
        // A temperature-dependent sigma0 exercises the u argument too.
        models.push(
            ConductivityModel::regularized(
                TempShape::AffineClamped {
                    intercept: 1.0,
                    slope: 0.02,
                    lo: 0.5,
                    hi: 3.0,
                },
                1.0,
                3.0,
            )
            .unwrap(),
        );
        models
    }

    #[test]
    fn monotonicity_gap_is_nonnegative_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for model in suite_models() {
            for _ in 0..10_000 {
                let u = rng.gen_range(-50.0..150.0);
                let xi = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let eta = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let gap = model.monotonicity_gap(u, xi, eta);
                assert!(
                    gap >= -1e-12,
                    "negative gap {gap} for p={}, xi={xi:?}, eta={eta:?}",
                    model.p()
                );
            }
        }
    }

    #[test]
    fn plap_gap_dominates_lower_bound_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for &p in &[1.5, 2.0, 3.0, 4.0] {
            for _ in 0..10_000 {
                let xi = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let eta = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let gap = plap_monotonicity_gap(p, xi, eta);
                let bound = plap_monotonicity_lower_bound(p, xi, eta);
                assert!(
                    gap - bound >= -1e-12,
                    "bound violated at p={p}: gap={gap}, bound={bound}, xi={xi:?}, eta={eta:?}"
                );
            }
        }
    }

    #[test]
    fn eps_gap_dominates_eps_times_plap_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for model in suite_models() {
            if model.p() < 1.0 + 1e-9 {
                continue;
            }
            for &eps in &[1e-3, 0.1, 1.0] {
                for _ in 0..2_000 {
                    let u = rng.gen_range(-50.0..150.0);
                    let xi = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                    let eta = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                    let gap_eps = model.monotonicity_gap_eps(u, xi, eta, eps);
                    let plap = plap_monotonicity_gap(model.p(), xi, eta);
                    assert!(
                        gap_eps - eps * plap >= -1e-12,
                        "strict augmentation failed for p={}", model.p()
                    );
                }
            }
        }
    }

    #[test]
    fn growth_bounds_hold_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for model in suite_models() {
            let (c1, c2, c3) = model.growth_constants();
            let p = model.p();
            for _ in 0..10_000 {
                let u = rng.gen_range(-50.0..150.0);
                let tau = rng.gen_range(0.0..10.0);
                let s = model.sigma(u, tau);
                let coercive = s * tau * tau - (c1 * tau.powf(p) - c2);
                assert!(
                    coercive >= -1e-9,
                    "coercivity failed: p={p}, tau={tau}, margin={coercive}"
                );
                let growth = c3 * (1.0 + tau * tau).powf((p - 2.0) / 2.0) - s;
                assert!(
                    growth >= -1e-9 * (1.0 + s.abs()),
                    "upper growth failed: p={p}, tau={tau}, margin={growth}"
                );
            }
        }
    }

    #[test]
    fn source_growth_bound_holds_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let heat = default_heat();
        for model in suite_models() {
            let c4 = model.source_growth_constant(heat.alpha_max());
            for _ in 0..10_000 {
                let u = rng.gen_range(-50.0..150.0);
                let xi = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
                let f = joule_source(&model, &heat, 0.3, 0.7, 0.0, u, xi);
                assert!(f >= 0.0);
                let tau = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                let cap = c4 * (1.0 + tau.powf(model.p()));
                assert!(
                    f <= cap * (1.0 + 1e-12),
                    "source growth failed: p={}, f={f}, cap={cap}",
                    model.p()
                );
            }
        }
    }

    #[test]
    fn truncation_properties_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..20_000 {
            let f = rng.gen_range(0.0..1e4);
            let eps = rng.gen_range(0.0..2.0);
            let fe = truncate_source(f, eps);
            assert!(fe >= 0.0 && fe <= f + 1e-15);
            if eps > 0.0 {
                assert!(fe < 1.0 / eps + 1e-12);
            }
            assert!((fe - f).abs() <= eps * f * f * (1.0 + 1e-12) + 1e-300);
            // Monotone in f for fixed eps.
            let f2 = f + rng.gen_range(0.0..10.0);
            assert!(truncate_source(f2, eps) >= fe - 1e-12);
        }
    }

    #[test]
    fn iv_curve_is_monotone_for_p_at_least_one() {
        let voltages: Vec<f64> = (0..200).map(|k| k as f64 * 0.5).collect();
        for &p in &[1.0, 1.5, 2.0, 3.0] {
            let m = reg(1.0, p);
            let curve = m.iv_curve(20.0, &voltages).unwrap();
            for w in curve.windows(2) {
                assert!(
                    w[1].1 >= w[0].1 - 1e-12,
                    "I(V) not monotone at p={p}: {:?} -> {:?}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn exponent_swap_preserves_kind_and_shape() {
        let m = reg(0.5, 3.0);
        let m2 = m.with_exponent(2.5).unwrap();
        assert_eq!(m2.p(), 2.5);
        assert_eq!(m2.delta(), 0.5);
        assert_eq!(m2.kind(), ConductivityKind::RegularizedPLap);
        // Pure kind still refuses exponents below 2 on swap.
        let pure = ConductivityModel::pure(unit_sigma0(), 3.0).unwrap();
        assert!(pure.with_exponent(1.5).is_err());
    }
}

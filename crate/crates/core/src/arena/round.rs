use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metric `c * gbar` where `gbar` is a fixed Einstein background with
/// `Rc(gbar) = -(sigma/2) gbar`. Every curvature quantity is a closed-form
/// function of `(n, sigma, c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundFamilyState {
    pub n: usize,
    pub sigma: i8,
    pub c: f64,
    /// Volume of the background metric.
    pub omega_bar: f64,
}

/// Volume of the unit n-sphere.
pub fn unit_sphere_volume(n: usize) -> f64 {
    // |S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2), via the recursion |S^n| = 2 pi |S^{n-2}| / (n-1)
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI * unit_sphere_volume(n - 2) / (n as f64 - 1.0),
    }
}

/// Default background volume: the round sphere with `Rc = gbar/2` for
/// shrinkers, the `2 pi`-periodic cube torus for steady, and a genus-two
/// hyperbolic surface (or the cube volume when `n > 2`) for expanders.
pub fn default_background_volume(n: usize, sigma: i8) -> f64 {
    match sigma {
        -1 => {
            let r2 = 2.0 * (n as f64 - 1.0);
            unit_sphere_volume(n) * r2.powf(n as f64 / 2.0)
        }
        1 if n == 2 => 8.0 * PI,
        _ => (2.0 * PI).powi(n as i32),
    }
}

impl RoundFamilyState {
    pub fn new(n: usize, sigma: i8, c: f64) -> Result<Self> {
        let s = RoundFamilyState {
            n,
            sigma,
            c,
            omega_bar: default_background_volume(n, sigma),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidState(format!("dimension {} < 2", self.n)));
        }
        if !(-1..=1).contains(&self.sigma) {
            return Err(Error::InvalidState(format!("sigma {} not in {{-1,0,1}}", self.sigma)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::DegenerateMetric { node: 0, det: self.c });
        }
        if !(self.omega_bar > 0.0) {
            return Err(Error::InvalidState("background volume must be positive".into()));
        }
        Ok(())
    }

    pub fn sigma_f(&self) -> f64 {
        self.sigma as f64
    }

    /// Constant sectional curvature of `c * gbar`.
    pub fn sectional(&self) -> f64 {
        -self.sigma_f() / (2.0 * self.c * (self.n as f64 - 1.0))
    }

    pub fn scalar_curvature(&self) -> f64 {
        -(self.n as f64) * self.sigma_f() / (2.0 * self.c)
    }

    pub fn volume(&self) -> f64 {
        self.c.powf(self.n as f64 / 2.0) * self.omega_bar
    }

    /// `S = s g` with `s = sigma (c - 1) / (2c)`.
    pub fn soliton_defect_factor(&self) -> f64 {
        self.sigma_f() * (self.c - 1.0) / (2.0 * self.c)
    }

    /// Closed-form entropy (the minimizer is the constant `log Vol`).
    pub fn entropy(&self) -> f64 {
        self.scalar_curvature() - self.sigma_f() * self.volume().ln()
    }

    /// `E = n sigma^2 (c-1)^2 / (4 c^2)`.
    pub fn energy(&self) -> f64 {
        let s = self.soliton_defect_factor();
        self.n as f64 * s * s
    }

    /// `N = sigma / c`.
    pub fn quotient(&self) -> f64 {
        self.sigma_f() / self.c
    }

    /// Exact flow of `c' = -sigma (c - 1)`.
    pub fn exact_scale(sigma: f64, c0: f64, t: f64) -> f64 {
        1.0 + (c0 - 1.0) * (-sigma * t).exp()
    }

    /// Lowest nonzero eigenvalue of `-Laplacian` where a closed form exists.
    pub fn first_eigenvalue(&self) -> Option<f64> {
        let n = self.n as f64;
        match self.sigma {
            -1 => Some(n / (2.0 * (n - 1.0) * self.c)),
            0 => Some(1.0 / self.c),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_volumes() {
        assert!((unit_sphere_volume(2) - 4.0 * PI).abs() < 1e-12);
        assert!((unit_sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-12);
        // n = 2 shrinker background: radius sqrt(2), area 8 pi
        assert!((default_background_volume(2, -1) - 8.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        let s = RoundFamilyState::new(2, -1, 2.0).unwrap();
        assert!((s.scalar_curvature() - 0.5).abs() < 1e-15);
        assert!((s.volume() - 16.0 * PI).abs() < 1e-12);
        let s4 = RoundFamilyState::new(2, -1, 4.0).unwrap();
        assert!((s4.energy() - 9.0 / 32.0).abs() < 1e-15);
        assert!((s4.quotient() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(RoundFamilyState::new(2, 1, 0.0).is_err());
        assert!(RoundFamilyState::new(2, 2, 1.0).is_err());
    }
}

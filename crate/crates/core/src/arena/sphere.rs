use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::pole_values;

/// Axisymmetric metric `a dtheta^2 + sin^2(theta) beta dphi^2` sampled at the
/// staggered colatitudes `theta_j = (j + 1/2) pi / m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisymSphereState {
    pub m: usize,
    pub sigma: i8,
    pub stencil_order: usize,
    pub a: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Allowed mismatch `|a - beta|` at a pole before a state is rejected.
pub const POLE_TOLERANCE: f64 = 1e-3;

impl AxisymSphereState {
    /// Round metric of constant curvature `1 / (2 scale)`: `scale * 2 * g_unit`.
    pub fn round(m: usize, sigma: i8, stencil_order: usize, scale: f64) -> Self {
        AxisymSphereState {
            m,
            sigma,
            stencil_order,
            a: vec![2.0 * scale; m],
            beta: vec![2.0 * scale; m],
        }
    }

    pub fn spacing(&self) -> f64 {
        PI / self.m as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.spacing()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.theta(j)).collect()
    }

    /// `(a - beta)` extrapolated to the north and south poles.
    pub fn pole_mismatch(&self) -> (f64, f64) {
        let (an, as_) = pole_values(&self.a);
        let (bn, bs) = pole_values(&self.beta);
        (an - bn, as_ - bs)
    }

    /// Re-impose `a = beta` at both poles by a smooth correction of the form
    /// `(d/2) cos^4(theta/2)` (north) and `(d/2) sin^4(theta/2)` (south).
    /// Returns the largest mismatch removed.
    pub fn project_poles(&mut self) -> f64 {
        let (dn, ds) = self.pole_mismatch();
        for j in 0..self.m {
            let t = self.theta(j);
            let wn = (0.5 * t).cos().powi(4);
            let ws = (0.5 * t).sin().powi(4);
            let d = dn * wn + ds * ws;
            self.a[j] -= 0.5 * d;
            self.beta[j] += 0.5 * d;
        }
        dn.abs().max(ds.abs())
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 8 {
            return Err(Error::InvalidState(format!("sphere resolution {} < 8", self.m)));
        }
        if !(-1..=1).contains(&self.sigma) {
            return Err(Error::InvalidState(format!("sigma {} not in {{-1,0,1}}", self.sigma)));
        }
        if self.stencil_order != 2 && self.stencil_order != 4 {
            return Err(Error::InvalidState(format!("stencil order {}", self.stencil_order)));
        }
        if self.a.len() != self.m || self.beta.len() != self.m {
            return Err(Error::InvalidState("metric arrays do not match the grid".into()));
        }
        for j in 0..self.m {
            if !self.a[j].is_finite() || !self.beta[j].is_finite() {
                return Err(Error::NonFinite("sphere metric"));
            }
            let det = self.a[j] * self.beta[j];
            if self.a[j] <= 0.0 || self.beta[j] <= 0.0 || det < super::torus::DEGENERATE_DET {
                return Err(Error::DegenerateMetric { node: j, det });
            }
        }
        let (dn, ds) = self.pole_mismatch();
        if dn.abs() > POLE_TOLERANCE || ds.abs() > POLE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "pole regularity violated: a - beta = {dn:e} (north), {ds:e} (south)"
            )));
        }
        Ok(())
    }
}

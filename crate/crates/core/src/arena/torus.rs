use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic `n x n` grid of side `l` carrying the components `g11, g12, g22`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGridState {
    pub n: usize,
    pub l: f64,
    pub sigma: i8,
    pub stencil_order: usize,
    pub g11: Vec<f64>,
    pub g12: Vec<f64>,
    pub g22: Vec<f64>,
}

pub const DEGENERATE_DET: f64 = 1e-10;

impl TorusGridState {
    pub fn flat(n: usize, l: f64, sigma: i8, stencil_order: usize) -> Self {
        let nn = n * n;
        TorusGridState {
            n,
            l,
            sigma,
            stencil_order,
            g11: vec![1.0; nn],
            g12: vec![0.0; nn],
            g22: vec![1.0; nn],
        }
    }

    /// Metric `exp(2u) * identity` for a conformal factor given node-wise.
    pub fn conformal(n: usize, l: f64, sigma: i8, stencil_order: usize, u: impl Fn(f64, f64) -> f64) -> Self {
        let mut s = Self::flat(n, l, sigma, stencil_order);
        let h = s.spacing();
        for iy in 0..n {
            for ix in 0..n {
                let e = (2.0 * u(ix as f64 * h, iy as f64 * h)).exp();
                s.g11[iy * n + ix] = e;
                s.g22[iy * n + ix] = e;
            }
        }
        s
    }

    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        let h = self.spacing();
        ((node % self.n) as f64 * h, (node / self.n) as f64 * h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::InvalidState(format!("torus resolution {} < 8", self.n)));
        }
        if !(self.l > 0.0) {
            return Err(Error::InvalidState("torus period must be positive".into()));
        }
        if !(-1..=1).contains(&self.sigma) {
            return Err(Error::InvalidState(format!("sigma {} not in {{-1,0,1}}", self.sigma)));
        }
        if self.stencil_order != 2 && self.stencil_order != 4 {
            return Err(Error::InvalidState(format!("stencil order {}", self.stencil_order)));
        }
        let nn = self.n * self.n;
        if self.g11.len() != nn || self.g12.len() != nn || self.g22.len() != nn {
            return Err(Error::InvalidState("metric arrays do not match the grid".into()));
        }
        for k in 0..nn {
            let det = self.g11[k] * self.g22[k] - self.g12[k] * self.g12[k];
            if !det.is_finite() || !self.g11[k].is_finite() {
                return Err(Error::NonFinite("torus metric"));
            }
            if self.g11[k] <= 0.0 || det < DEGENERATE_DET {
                return Err(Error::DegenerateMetric { node: k, det });
            }
        }
        Ok(())
    }
}

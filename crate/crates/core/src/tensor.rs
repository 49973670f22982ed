//! Component storage for covariant tensor fields sampled on an arena.
//!
//! A field of rank `r` in dimension `n` keeps `n^r` component arrays, indexed
//! row-major by the multi-index `(i_1, ..., i_r)`. Every component array has
//! one entry per arena node. Components are taken in the arena's frame, which
//! is the coordinate frame on the torus, the frame `{d_theta, d_phi / sin theta}`
//! on the axisymmetric sphere and a background-orthonormal frame on the round
//! family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArenaKind {
    Round,
    Torus,
    Sphere,
}

impl ArenaKind {
    pub fn name(self) -> &'static str {
        match self {
            ArenaKind::Round => "round",
            ArenaKind::Torus => "torus",
            ArenaKind::Sphere => "sphere",
        }
    }
}

/// Shape shared by every field living on one arena instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub kind: ArenaKind,
    pub dim: usize,
    pub nodes: usize,
}

impl Layout {
    pub fn check(&self, other: &Layout) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ArenaMismatch {
                left: format!("{}:{}x{}", self.kind.name(), self.dim, self.nodes),
                right: format!("{}:{}x{}", other.kind.name(), other.dim, other.nodes),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    layout: Layout,
    rank: usize,
    comps: Vec<Vec<f64>>,
}

/// Rank-0 field.
pub type ScalarField = Tensor;
/// Rank-1 covariant field.
pub type CovectorField = Tensor;
/// Rank-2 field kept symmetric by the operations that produce it.
pub type SymTensorField = Tensor;

impl Tensor {
    pub fn zeros(layout: Layout, rank: usize) -> Self {
        let ncomp = layout.dim.pow(rank as u32);
        Tensor {
            layout,
            rank,
            comps: vec![vec![0.0; layout.nodes]; ncomp],
        }
    }

    pub fn scalar(layout: Layout, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), layout.nodes, "scalar field length");
        Tensor {
            layout,
            rank: 0,
            comps: vec![values],
        }
    }

    pub fn constant(layout: Layout, value: f64) -> Self {
        Tensor::scalar(layout, vec![value; layout.nodes])
    }

    pub fn from_components(layout: Layout, rank: usize, comps: Vec<Vec<f64>>) -> Self {
        assert_eq!(comps.len(), layout.dim.pow(rank as u32));
        assert!(comps.iter().all(|c| c.len() == layout.nodes));
        Tensor {
            layout,
            rank,
            comps,
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn nodes(&self) -> usize {
        self.layout.nodes
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.layout.dim + i)
    }

    /// Multi-index of a flat component position.
    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let n = self.layout.dim;
        let mut idx = vec![0; self.rank];
        for slot in (0..self.rank).rev() {
            idx[slot] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn c(&self, idx: &[usize]) -> &[f64] {
        &self.comps[self.flat(idx)]
    }

    pub fn c_mut(&mut self, idx: &[usize]) -> &mut Vec<f64> {
        let k = self.flat(idx);
        &mut self.comps[k]
    }

    pub fn comp(&self, flat: usize) -> &[f64] {
        &self.comps[flat]
    }

    pub fn comp_mut(&mut self, flat: usize) -> &mut Vec<f64> {
        &mut self.comps[flat]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    /// Values of a rank-0 field.
    pub fn values(&self) -> &[f64] {
        debug_assert_eq!(self.rank, 0);
        &self.comps[0]
    }

    pub fn values_mut(&mut self) -> &mut Vec<f64> {
        debug_assert_eq!(self.rank, 0);
        &mut self.comps[0]
    }

    fn same_shape(&self, other: &Tensor) -> Result<()> {
        self.layout.check(&other.layout)?;
        if self.rank != other.rank {
            return Err(Error::InvalidState(format!(
                "rank mismatch: {} vs {}",
                self.rank, other.rank
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Tensor {
            layout: self.layout,
            rank: self.rank,
            comps,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            layout: self.layout,
            rank: self.rank,
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|&x| f(x)).collect())
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Tensor {
        self.map(|x| s * x)
    }

    /// `self += s * other`, shapes assumed equal.
    pub fn axpy(&mut self, s: f64, other: &Tensor) {
        debug_assert_eq!(self.rank, other.rank);
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    /// Multiply every component by a scalar field node-wise.
    pub fn mul_scalar_field(&self, u: &[f64]) -> Tensor {
        Tensor {
            layout: self.layout,
            rank: self.rank,
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().zip(u).map(|(&x, &y)| x * y).collect())
                .collect(),
        }
    }

    /// `(T + T^t) / 2` for a rank-2 field; exact symmetry of the result.
    pub fn symmetrize(&self) -> Tensor {
        assert_eq!(self.rank, 2);
        let n = self.layout.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let a = self.c(&[i, j]);
                let b = self.c(&[j, i]);
                let s: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                *out.c_mut(&[i, j]) = s.clone();
                *out.c_mut(&[j, i]) = s;
            }
        }
        out
    }

    /// Largest absolute component difference between the two index orders.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rank, 2);
        let n = self.layout.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for (a, b) in self.c(&[i, j]).iter().zip(self.c(&[j, i])) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m: f64, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flat_map(|c| c.iter()).all(|x| x.is_finite())
    }

    /// Tensor product `self ⊗ other`.
    pub fn outer(&self, other: &Tensor) -> Tensor {
        let rank = self.rank + other.rank;
        let mut comps = Vec::with_capacity(self.ncomp() * other.ncomp());
        for a in &self.comps {
            for b in &other.comps {
                comps.push(a.iter().zip(b).map(|(x, y)| x * y).collect());
            }
        }
        Tensor {
            layout: self.layout,
            rank,
            comps,
        }
    }

    /// Move slot `from` to the front, shifting the slots before it back.
    pub fn move_slot_to_front(&self, from: usize) -> Tensor {
        let mut out = Tensor::zeros(self.layout, self.rank);
        for flat in 0..self.ncomp() {
            let idx = self.multi(flat);
            let mut perm = Vec::with_capacity(self.rank);
            perm.push(idx[from]);
            for (s, &i) in idx.iter().enumerate() {
                if s != from {
                    perm.push(i);
                }
            }
            let k = out.flat(&perm);
            out.comps[k] = self.comps[flat].clone();
        }
        out
    }

    /// Swap two slots.
    pub fn swap_slots(&self, a: usize, b: usize) -> Tensor {
        let mut out = Tensor::zeros(self.layout, self.rank);
        for flat in 0..self.ncomp() {
            let mut idx = self.multi(flat);
            idx.swap(a, b);
            let k = out.flat(&idx);
            out.comps[k] = self.comps[flat].clone();
        }
        out
    }

    /// Contract slot `a` against slot `b` using the (inverse-)metric `pairing`,
    /// which must be a rank-2 field of the same layout.
    pub fn contract_with(&self, pairing: &Tensor, a: usize, b: usize) -> Tensor {
        assert!(a < b && b < self.rank);
        let n = self.layout.dim;
        let rank = self.rank - 2;
        let mut out = Tensor::zeros(self.layout, rank);
        for flat_out in 0..out.ncomp() {
            let rest = out.multi(flat_out);
            let acc = &mut vec![0.0; self.layout.nodes];
            for p in 0..n {
                for q in 0..n {
                    let mut idx = Vec::with_capacity(self.rank);
                    let mut it = rest.iter();
                    for s in 0..self.rank {
                        if s == a {
                            idx.push(p);
                        } else if s == b {
                            idx.push(q);
                        } else {
                            idx.push(*it.next().unwrap());
                        }
                    }
                    let src = self.c(&idx);
                    let w = pairing.c(&[p, q]);
                    for ((o, x), y) in acc.iter_mut().zip(src).zip(w) {
                        *o += x * y;
                    }
                }
            }
            out.comps[flat_out] = acc.clone();
        }
        out
    }

    /// Apply a rank-2 field `m` to slot `slot`: `out_{..i..} = m_i^p T_{..p..}`
    /// with `m` given as `m[i][p]` components.
    pub fn act_on_slot(&self, m: &Tensor, slot: usize) -> Tensor {
        let n = self.layout.dim;
        let mut out = Tensor::zeros(self.layout, self.rank);
        for flat in 0..self.ncomp() {
            let idx = self.multi(flat);
            let acc = &mut out.comps[flat];
            for p in 0..n {
                let mut src_idx = idx.clone();
                src_idx[slot] = p;
                let src = self.c(&src_idx);
                let w = m.c(&[idx[slot], p]);
                for ((o, x), y) in acc.iter_mut().zip(src).zip(w) {
                    *o += x * y;
                }
            }
        }
        out
    }
}

//! Random conductance laws.
//!
//! Every draw comes from its own ChaCha stream keyed by the edge (or cell
//! and boundary pair), so results do not depend on iteration order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    /// Every weight equals `a`.
    Constant,
    IidUniform,
    /// Log-normal with median `sqrt(ab)` and `sigma = ln(b/a)/4`, clipped
    /// to `[a, b]`.
    IidLognormalClipped,
    /// One uniform `[a, b]` weight per boundary pair per cell.
    CellSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightLaw {
    pub kind: WeightKind,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
}

const CELL_TAG: u64 = 1 << 63;

impl WeightLaw {
    pub fn constant(value: f64) -> Self {
        WeightLaw {
            kind: WeightKind::Constant,
            a: value,
            b: value,
            seed: 0,
        }
    }

    pub fn uniform(a: f64, b: f64, seed: u64) -> Self {
        WeightLaw {
            kind: WeightKind::IidUniform,
            a,
            b,
            seed,
        }
    }

    pub fn cell_symmetric(a: f64, b: f64, seed: u64) -> Self {
        WeightLaw {
            kind: WeightKind::CellSymmetric,
            a,
            b,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= self.b && self.b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight bounds must satisfy 0 < a <= b < inf, got [{}, {}]",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// Draw for stream `key`.
    pub fn draw(&self, key: u64) -> f64 {
        if self.kind == WeightKind::Constant || self.a == self.b {
            return self.a;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(key);
        match self.kind {
            WeightKind::IidLognormalClipped => {
                let mu = 0.5 * (self.a.ln() + self.b.ln());
                let sigma = 0.25 * (self.b / self.a).ln();
                let ln = LogNormal::new(mu, sigma).expect("sigma is positive");
                ln.sample(&mut rng).clamp(self.a, self.b)
            }
            _ => {
                let u = Uniform::new_inclusive(self.a, self.b).expect("a <= b");
                rng.sample(u)
            }
        }
    }
}

pub fn edge_key(u: usize, v: usize) -> u64 {
    ((u as u64) << 32) | v as u64
}

pub fn cell_key(cell: usize, pair: usize) -> u64 {
    CELL_TAG | ((cell as u64) << 16) | pair as u64
}

/// Reassigns every conductance according to `law`.
pub fn assign_weights(g: &WeightedGraph, law: &WeightLaw) -> Result<WeightedGraph> {
    law.validate()?;
    let weights: Vec<f64> = match law.kind {
        WeightKind::CellSymmetric => {
            let cells = g
                .cells()
                .ok_or_else(|| Error::InvalidArgument("cell-symmetric weights need a graph with cells".into()))?;
            let mut w = vec![0.0; g.num_edges()];
            let find = |a: usize, b: usize| -> Option<usize> {
                let key = (a.min(b), a.max(b));
                g.edges().binary_search_by(|e| (e.u, e.v).cmp(&key)).ok()
            };
            for (c, ids) in cells.iter().enumerate() {
                let mut pair = 0;
                for i in 0..ids.len() {
                    for j in i + 1..ids.len() {
                        if ids[i] != ids[j] {
                            let e = find(ids[i], ids[j])
                                .ok_or_else(|| Error::Construction(format!("cell {c} pair ({i},{j}) has no edge")))?;
                            w[e] += law.draw(cell_key(c, pair));
                        }
                        pair += 1;
                    }
                }
            }
            w
        }
        _ => g.edges().par_iter().map(|e| law.draw(edge_key(e.u, e.v))).collect(),
    };
    g.reweighted(&weights)
}

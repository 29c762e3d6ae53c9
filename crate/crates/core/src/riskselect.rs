//! Entropy-thresholded weight selection and costmap generation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayes::Marginal;
use crate::envmodel::{Cell, Environment};
use crate::error::{Error, Result};
use crate::maxent::RewardVector;

/// Added to every traversal cost so that costs are strictly positive.
pub const COST_FLOOR: f64 = 0.001;

/// Divisor used to normalize marginal entropies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EntropyNormalization {
    /// `log2 |W|`: a uniform marginal has entropy exactly 1.
    #[default]
    WeightSet,
    /// `log2 |R| = D log2 |W|`.
    RewardSpace,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub normalization: EntropyNormalization,
}

impl SelectionConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        let cfg = SelectionConfig {
            epsilon,
            normalization: EntropyNormalization::WeightSet,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Entropy at or above which a feature gets the lowest weight.
    pub fn threshold(&self) -> f64 {
        1.0 - self.epsilon
    }
}

fn shannon_bits(probs: &[f64]) -> f64 {
    let k = probs.len();
    if k > 1 && probs.iter().all(|&p| (p - 1.0 / k as f64).abs() <= 1e-15) {
        return (k as f64).log2();
    }
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Normalized Shannon entropy of a marginal, in `[0, 1]` (divisor `log2 |W|`).
pub fn normalized_entropy(m: &Marginal) -> f64 {
    normalized_entropy_with(m, EntropyNormalization::WeightSet, 1)
}

/// Normalized entropy with an explicit divisor. `dim` is only used by
/// [`EntropyNormalization::RewardSpace`].
pub fn normalized_entropy_with(m: &Marginal, norm: EntropyNormalization, dim: usize) -> f64 {
    let k = m.probs.len() as f64;
    let divisor = match norm {
        EntropyNormalization::WeightSet => k.log2(),
        EntropyNormalization::RewardSpace => dim as f64 * k.log2(),
    };
    if divisor <= 0.0 {
        return 0.0;
    }
    (shannon_bits(&m.probs) / divisor).clamp(0.0, 1.0)
}

/// Picks one weight per feature: the lowest admissible weight when the
/// marginal's entropy reaches `1 - epsilon`, its expectation otherwise.
pub fn select_weights(
    marginals: &[Marginal],
    cfg: &SelectionConfig,
    weight_set: &[f64],
) -> Result<RewardVector> {
    if marginals.is_empty() {
        return Err(Error::InvalidParameter("no marginals to select from".into()));
    }
    cfg.validate()?;
    let lowest = weight_set
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| Error::InvalidParameter("empty weight set".into()))?;
    let dim = marginals.len();
    Ok(RewardVector(
        marginals
            .iter()
            .map(|m| {
                if normalized_entropy_with(m, cfg.normalization, dim) >= cfg.threshold() {
                    lowest
                } else {
                    m.expectation()
                }
            })
            .collect(),
    ))
}

/// Per-cell traversal cost; `None` marks an impassable cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Costmap {
    pub width: usize,
    pub height: usize,
    pub cost: Vec<Option<f64>>,
    /// Weights the costs were derived from.
    pub weights: RewardVector,
}

/// Scale for the 16-bit raster: `cost = min_cost + value * scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterScale {
    pub min_cost: f64,
    pub scale: f64,
    pub impassable: u16,
}

const IMPASSABLE_PIXEL: u16 = u16::MAX;

impl Costmap {
    pub fn cost_at(&self, c: Cell) -> Option<f64> {
        if c.x >= self.width || c.y >= self.height {
            return None;
        }
        self.cost[c.y * self.width + c.x]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("costmap serializes")
    }

    /// Binary 16-bit PGM (big-endian, row-major) plus its value scale.
    pub fn to_pgm(&self) -> (Vec<u8>, RasterScale) {
        let open = self.cost.iter().flatten().copied();
        let min = open.clone().fold(f64::INFINITY, f64::min);
        let max = open.fold(f64::NEG_INFINITY, f64::max);
        let levels = f64::from(IMPASSABLE_PIXEL - 1);
        let scale = if max > min { (max - min) / levels } else { 0.0 };

        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for c in &self.cost {
            let px = match c {
                None => IMPASSABLE_PIXEL,
                Some(_) if scale == 0.0 => 0,
                Some(v) => ((v - min) / scale).round() as u16,
            };
            out.extend_from_slice(&px.to_be_bytes());
        }
        let scale = RasterScale {
            min_cost: if min.is_finite() { min } else { 0.0 },
            scale,
            impassable: IMPASSABLE_PIXEL,
        };
        (out, scale)
    }

    /// Writes `<stem>.json`, `<stem>.pgm` and the `<stem>.pgm.json` sidecar.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))?;
        let (pgm, scale) = self.to_pgm();
        let raster = dir.join(format!("{stem}.pgm"));
        std::fs::write(&raster, pgm).map_err(|e| Error::io(&raster, e))?;
        let sidecar = dir.join(format!("{stem}.pgm.json"));
        std::fs::write(&sidecar, serde_json::to_string_pretty(&scale)?)
            .map_err(|e| Error::io(&sidecar, e))
    }
}

/// `cost(c) = max_c' r(c') - r(c) + COST_FLOOR` with `r(c) = w . phi(c)`,
/// maximized over open cells. Obstacles are impassable.
pub fn build_costmap(env: &Environment, weights: &[f64]) -> Result<Costmap> {
    RewardVector::check(weights, env)?;
    let rewards = env.cell_rewards(weights)?;
    let open = |i: &usize| env.is_open(env.cell_at(*i));
    let best = (0..env.num_cells())
        .filter(open)
        .map(|i| rewards[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let cost = (0..env.num_cells())
        .map(|i| open(&i).then(|| best - rewards[i] + COST_FLOOR))
        .collect();
    Ok(Costmap {
        width: env.width(),
        height: env.height(),
        cost,
        weights: RewardVector(weights.to_vec()),
    })
}

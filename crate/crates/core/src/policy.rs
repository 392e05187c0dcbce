//! Radial-basis value function and Gaussian step policy over the apex state.
//!
//! Features are isotropic Gaussian bumps on a regular grid plus a bias term at
//! index 0. Evaluation only visits centers inside a cutoff radius; the dense
//! [`RbfGrid::features`] is kept as the reference.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc, erfc_inv};
use thiserror::Error;

use crate::lipm::{ApexState, StepAction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("parameter vector has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("action component {index} = {value} is outside [{lo}, {hi}]")]
    OutOfSupport {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("non-finite input")]
    NonFinite,
}

/// Regular grid of RBF centers over the 3-D apex state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfGrid {
    /// Lowest center per axis (y, ẋ, ẏ).
    pub lo: [f64; 3],
    pub counts: [usize; 3],
    pub spacing: [f64; 3],
    /// Gaussian width per axis.
    pub widths: [f64; 3],
    /// Centers further than this many widths (normalized distance) contribute
    /// nothing.
    pub cutoff: f64,
}

impl Default for RbfGrid {
    fn default() -> Self {
        RbfGrid {
            lo: [-0.14, 0.03, -0.55],
            counts: [18, 30, 56],
            spacing: [0.02; 3],
            widths: [0.02; 3],
            cutoff: 3.5,
        }
    }
}

/// Active features of one state: indices ascending, bias first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseFeatures {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseFeatures {
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| v * w[i as usize])
            .sum()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

impl RbfGrid {
    pub fn validate(&self) -> Result<(), PolicyError> {
        for a in 0..3 {
            if self.counts[a] == 0 {
                return Err(PolicyError::InvalidGrid(format!("axis {a} has no centers")));
            }
            if !(self.spacing[a].is_finite() && self.spacing[a] > 0.0) {
                return Err(PolicyError::InvalidGrid(format!(
                    "axis {a} spacing must be positive"
                )));
            }
            if !(self.widths[a].is_finite() && self.widths[a] > 0.0) {
                return Err(PolicyError::InvalidGrid(format!(
                    "axis {a} width must be positive"
                )));
            }
            if !self.lo[a].is_finite() {
                return Err(PolicyError::InvalidGrid(format!(
                    "axis {a} origin is not finite"
                )));
            }
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(PolicyError::InvalidGrid("cutoff must be positive".into()));
        }
        Ok(())
    }

    /// Highest center per axis.
    pub fn hi(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.lo[a] + (self.counts[a] - 1) as f64 * self.spacing[a])
    }

    pub fn n_centers(&self) -> usize {
        self.counts.iter().product()
    }

    /// Feature dimension including the bias.
    pub fn dim(&self) -> usize {
        1 + self.n_centers()
    }

    pub fn center_index(&self, i: [usize; 3]) -> usize {
        1 + (i[0] * self.counts[1] + i[1]) * self.counts[2] + i[2]
    }

    pub fn center(&self, i: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|a| self.lo[a] + i[a] as f64 * self.spacing[a])
    }

    /// Dense feature vector (bias, then every center).
    pub fn features(&self, s: &ApexState) -> Vec<f64> {
        let x = s.to_array();
        let mut out = Vec::with_capacity(self.dim());
        out.push(1.0);
        for i in 0..self.counts[0] {
            for j in 0..self.counts[1] {
                for k in 0..self.counts[2] {
                    let c = self.center([i, j, k]);
                    let d2: f64 = (0..3)
                        .map(|a| ((x[a] - c[a]) / self.widths[a]).powi(2))
                        .sum();
                    out.push((-0.5 * d2).exp());
                }
            }
        }
        out
    }

    /// Features within the cutoff radius.
    pub fn sparse_features(&self, s: &ApexState) -> SparseFeatures {
        let x = s.to_array();
        let mut out = SparseFeatures {
            indices: vec![0],
            values: vec![1.0],
        };
        if !s.is_finite() {
            return out;
        }
        // Per-axis index ranges and 1-D factors; the Gaussian factorizes.
        let mut ranges = [(0usize, 0usize); 3];
        let mut factors: [Vec<(f64, f64)>; 3] = Default::default();
        for a in 0..3 {
            let u = (x[a] - self.lo[a]) / self.spacing[a];
            let reach = self.cutoff * self.widths[a] / self.spacing[a];
            let first = (u - reach).ceil().max(0.0);
            let last = (u + reach).floor().min((self.counts[a] - 1) as f64);
            if first > last {
                return out;
            }
            ranges[a] = (first as usize, last as usize);
            factors[a] = (ranges[a].0..=ranges[a].1)
                .map(|i| {
                    let d = (x[a] - (self.lo[a] + i as f64 * self.spacing[a])) / self.widths[a];
                    (d * d, (-0.5 * d * d).exp())
                })
                .collect();
        }
        let r2 = self.cutoff * self.cutoff;
        for (ii, &(d0, f0)) in factors[0].iter().enumerate() {
            for (jj, &(d1, f1)) in factors[1].iter().enumerate() {
                if d0 + d1 > r2 {
                    continue;
                }
                for (kk, &(d2, f2)) in factors[2].iter().enumerate() {
                    if d0 + d1 + d2 > r2 {
                        continue;
                    }
                    let idx =
                        self.center_index([ranges[0].0 + ii, ranges[1].0 + jj, ranges[2].0 + kk]);
                    out.indices.push(idx as u32);
                    out.values.push(f0 * f1 * f2);
                }
            }
        }
        out
    }
}

/// Linear value function over the RBF features.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub grid: RbfGrid,
    pub weights: Vec<f64>,
}

impl ValueNet {
    pub fn zeros(grid: RbfGrid) -> Result<Self, PolicyError> {
        grid.validate()?;
        let n = grid.dim();
        Ok(ValueNet {
            grid,
            weights: vec![0.0; n],
        })
    }

    pub fn from_weights(grid: RbfGrid, weights: Vec<f64>) -> Result<Self, PolicyError> {
        grid.validate()?;
        if weights.len() != grid.dim() {
            return Err(PolicyError::ShapeMismatch {
                expected: grid.dim(),
                got: weights.len(),
            });
        }
        Ok(ValueNet { grid, weights })
    }

    pub fn value(&self, s: &ApexState) -> f64 {
        self.grid.sparse_features(s).dot(&self.weights)
    }

    pub fn value_with(&self, f: &SparseFeatures) -> f64 {
        f.dot(&self.weights)
    }
}

/// Action box and the mapping from raw outputs to means and standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpace {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    /// Standard deviation at zero raw output, as a fraction of the range.
    pub std_init_frac: f64,
    /// Floor on the standard deviation, as a fraction of the range.
    pub std_min_frac: f64,
}

impl Default for ActionSpace {
    fn default() -> Self {
        ActionSpace {
            lo: [0.1, 0.03, -0.25],
            hi: [0.5, 0.37, 0.25],
            std_init_frac: 0.25,
            std_min_frac: 1e-3,
        }
    }
}

impl ActionSpace {
    pub fn validate(&self) -> Result<(), PolicyError> {
        for a in 0..3 {
            if !(self.lo[a].is_finite() && self.hi[a].is_finite() && self.hi[a] > self.lo[a]) {
                return Err(PolicyError::InvalidGrid(format!(
                    "action bound {a} is empty"
                )));
            }
        }
        if !(self.std_init_frac > 0.0
            && self.std_min_frac > 0.0
            && self.std_min_frac < self.std_init_frac)
        {
            return Err(PolicyError::InvalidGrid(
                "std fractions must satisfy 0 < min < init".into(),
            ));
        }
        Ok(())
    }

    fn range(&self, a: usize) -> f64 {
        self.hi[a] - self.lo[a]
    }

    pub fn contains(&self, a: &StepAction) -> bool {
        let v = a.to_array();
        (0..3).all(|i| v[i] >= self.lo[i] && v[i] <= self.hi[i])
    }
}

const LN2: f64 = std::f64::consts::LN_2;

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean and standard deviation of each action component plus the derivative
/// of each with respect to its raw output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyHead {
    pub mean: [f64; 3],
    pub std: [f64; 3],
    pub dmean: [f64; 3],
    pub dstd: [f64; 3],
}

/// Policy with raw outputs `θᵀφ(s)`; `theta` is feature-major with six outputs
/// per feature (three means, then three standard deviations).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub grid: RbfGrid,
    pub actions: ActionSpace,
    pub theta: Vec<f64>,
}

pub const N_OUTPUTS: usize = 6;

impl PolicyNet {
    pub fn zeros(grid: RbfGrid, actions: ActionSpace) -> Result<Self, PolicyError> {
        grid.validate()?;
        actions.validate()?;
        let n = grid.dim() * N_OUTPUTS;
        Ok(PolicyNet {
            grid,
            actions,
            theta: vec![0.0; n],
        })
    }

    pub fn from_theta(
        grid: RbfGrid,
        actions: ActionSpace,
        theta: Vec<f64>,
    ) -> Result<Self, PolicyError> {
        grid.validate()?;
        actions.validate()?;
        if theta.len() != grid.dim() * N_OUTPUTS {
            return Err(PolicyError::ShapeMismatch {
                expected: grid.dim() * N_OUTPUTS,
                got: theta.len(),
            });
        }
        Ok(PolicyNet {
            grid,
            actions,
            theta,
        })
    }

    pub fn raw_outputs(&self, f: &SparseFeatures) -> [f64; N_OUTPUTS] {
        let mut o = [0.0; N_OUTPUTS];
        for (&i, &v) in f.indices.iter().zip(&f.values) {
            let row = &self.theta[i as usize * N_OUTPUTS..(i as usize + 1) * N_OUTPUTS];
            for j in 0..N_OUTPUTS {
                o[j] += v * row[j];
            }
        }
        o
    }

    pub fn head(&self, f: &SparseFeatures) -> PolicyHead {
        let o = self.raw_outputs(f);
        let mut h = PolicyHead {
            mean: [0.0; 3],
            std: [0.0; 3],
            dmean: [0.0; 3],
            dstd: [0.0; 3],
        };
        for a in 0..3 {
            let (lo, hi) = (self.actions.lo[a], self.actions.hi[a]);
            let half = 0.5 * (hi - lo);
            let raw = 0.5 * (lo + hi) + half * o[a];
            if raw < lo {
                h.mean[a] = lo;
            } else if raw > hi {
                h.mean[a] = hi;
            } else {
                h.mean[a] = raw;
                h.dmean[a] = half;
            }
            let scale = self.actions.std_init_frac * self.actions.range(a) / LN2;
            let floor = self.actions.std_min_frac * self.actions.range(a);
            let s = scale * softplus(o[3 + a]);
            if s > floor {
                h.std[a] = s;
                h.dstd[a] = scale * sigmoid(o[3 + a]);
            } else {
                h.std[a] = floor;
            }
        }
        h
    }

    pub fn distribution_with(&self, f: &SparseFeatures) -> TruncatedNormal3 {
        let h = self.head(f);
        TruncatedNormal3 {
            components: std::array::from_fn(|a| TruncatedNormal {
                mean: h.mean[a],
                std: h.std[a],
                lo: self.actions.lo[a],
                hi: self.actions.hi[a],
            }),
        }
    }

    pub fn distribution(&self, s: &ApexState) -> TruncatedNormal3 {
        self.distribution_with(&self.grid.sparse_features(s))
    }

    /// Deterministic action: the distribution means.
    pub fn mean_action(&self, s: &ApexState) -> StepAction {
        let d = self.distribution(s);
        StepAction::from_array(std::array::from_fn(|a| d.components[a].mean))
    }

    pub fn sample<R: Rng + ?Sized>(&self, s: &ApexState, rng: &mut R) -> StepAction {
        self.distribution(s).sample(rng)
    }

    /// Gradient of `ln π(a | s)` with respect to the raw outputs.
    pub fn output_grad(
        &self,
        f: &SparseFeatures,
        a: &StepAction,
    ) -> Result<[f64; N_OUTPUTS], PolicyError> {
        let h = self.head(f);
        let v = a.to_array();
        let mut g = [0.0; N_OUTPUTS];
        for i in 0..3 {
            let d = TruncatedNormal {
                mean: h.mean[i],
                std: h.std[i],
                lo: self.actions.lo[i],
                hi: self.actions.hi[i],
            };
            let (gm, gs) = d.score(v[i]).ok_or(PolicyError::OutOfSupport {
                index: i,
                value: v[i],
                lo: d.lo,
                hi: d.hi,
            })?;
            g[i] = gm * h.dmean[i];
            g[3 + i] = gs * h.dstd[i];
        }
        Ok(g)
    }

    /// Dense gradient of `ln π(a | s)` with respect to `theta`.
    pub fn log_prob_grad(&self, s: &ApexState, a: &StepAction) -> Result<Vec<f64>, PolicyError> {
        if !s.is_finite() || !a.is_finite() {
            return Err(PolicyError::NonFinite);
        }
        let f = self.grid.sparse_features(s);
        let g = self.output_grad(&f, a)?;
        let mut out = vec![0.0; self.theta.len()];
        for (&i, &v) in f.indices.iter().zip(&f.values) {
            for j in 0..N_OUTPUTS {
                out[i as usize * N_OUTPUTS + j] = v * g[j];
            }
        }
        Ok(out)
    }

    pub fn log_prob(&self, s: &ApexState, a: &StepAction) -> Result<f64, PolicyError> {
        let d = self.distribution(s);
        d.log_prob(a)
    }
}

fn std_normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `Φ(b) − Φ(a)` without cancellation in either tail.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        0.5 * (erfc(a / SQRT2) - erfc(b / SQRT2))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / SQRT2) - erfc(-a / SQRT2))
    } else {
        0.5 * (erf(b / SQRT2) - erf(a / SQRT2))
    }
}

/// Normal distribution restricted to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub std: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedNormal {
    fn alpha_beta(&self) -> (f64, f64) {
        (
            (self.lo - self.mean) / self.std,
            (self.hi - self.mean) / self.std,
        )
    }

    pub fn mass(&self) -> f64 {
        let (a, b) = self.alpha_beta();
        normal_mass(a, b)
    }

    pub fn log_prob(&self, x: f64) -> Option<f64> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let z = (x - self.mean) / self.std;
        Some(
            -0.5 * z * z
                - self.std.ln()
                - 0.5 * (2.0 * std::f64::consts::PI).ln()
                - self.mass().ln(),
        )
    }

    /// Partial derivatives of the log density with respect to mean and std.
    pub fn score(&self, x: f64) -> Option<(f64, f64)> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let s = self.std;
        let z = (x - self.mean) / s;
        let (a, b) = self.alpha_beta();
        let zm = self.mass();
        let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
        let apa = if a.is_infinite() { 0.0 } else { a * pa };
        let bpb = if b.is_infinite() { 0.0 } else { b * pb };
        let dmean = z / s + (pb - pa) / (s * zm);
        let dstd = (z * z - 1.0) / s + (bpb - apa) / (s * zm);
        Some((dmean, dstd))
    }

    /// Inverse-CDF transform of a uniform variate in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let (a, b) = self.alpha_beta();
        let zm = normal_mass(a, b);
        // Lower-tail mass below the sample, computed from whichever end keeps
        // it small so the inverse stays accurate.
        let below = normal_mass(f64::NEG_INFINITY, a) + u * zm;
        let z = if below <= 0.5 {
            -SQRT2 * erfc_inv(2.0 * below)
        } else {
            let above = normal_mass(b, f64::INFINITY) + (1.0 - u) * zm;
            SQRT2 * erfc_inv(2.0 * above)
        };
        (self.mean + self.std * z.clamp(a, b)).clamp(self.lo, self.hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }
}

/// Independent truncated normals over the three action components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal3 {
    pub components: [TruncatedNormal; 3],
}

impl TruncatedNormal3 {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StepAction {
        StepAction::from_array(std::array::from_fn(|a| self.components[a].sample(rng)))
    }

    pub fn log_prob(&self, a: &StepAction) -> Result<f64, PolicyError> {
        let v = a.to_array();
        let mut total = 0.0;
        for (i, d) in self.components.iter().enumerate() {
            total += d.log_prob(v[i]).ok_or(PolicyError::OutOfSupport {
                index: i,
                value: v[i],
                lo: d.lo,
                hi: d.hi,
            })?;
        }
        Ok(total)
    }

    pub fn mean_std(&self) -> f64 {
        self.components.iter().map(|c| c.std).sum::<f64>() / 3.0
    }
}

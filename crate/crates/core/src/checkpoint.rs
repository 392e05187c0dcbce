//! Binary checkpoint for a critic/actor pair. Every number is little-endian.
//!
//! ```text
//! magic        8 bytes   "LOCOCKPT"
//! version      u32       1
//! tag_len      u64       then tag_len bytes of UTF-8 (the config hash)
//! grid.lo      3 × f64
//! grid.counts  3 × u64
//! grid.spacing 3 × f64
//! grid.widths  3 × f64
//! grid.cutoff  f64
//! actions.lo   3 × f64
//! actions.hi   3 × f64
//! std_init_frac, std_min_frac   2 × f64
//! n_weights    u64       then n_weights × f64 (critic)
//! n_theta      u64       then n_theta × f64 (actor, feature-major, 6 per feature)
//! ```

use thiserror::Error;

use crate::policy::{ActionSpace, PolicyError, PolicyNet, RbfGrid, ValueNet};

pub const MAGIC: &[u8; 8] = b"LOCOCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("{0} trailing bytes after checkpoint")]
    Trailing(usize),
    #[error("checkpoint tag is not UTF-8")]
    Tag,
    #[error("critic and actor grids differ")]
    GridMismatch,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Free-form provenance, typically the hash of the run configuration.
    pub tag: String,
    pub value: ValueNet,
    pub policy: PolicyNet,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or(CheckpointError::Truncated(self.data.len()))?;
        let s = &self.data[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64x3(&mut self) -> Result<[f64; 3], CheckpointError> {
        Ok([self.f64()?, self.f64()?, self.f64()?])
    }

    fn len(&mut self) -> Result<usize, CheckpointError> {
        let n = self.u64()?;
        // Cheap sanity bound: a length can never exceed the bytes left.
        usize::try_from(n)
            .ok()
            .filter(|&n| n <= self.data.len() - self.at)
            .ok_or(CheckpointError::Truncated(self.data.len()))
    }

    fn f64_vec(&mut self) -> Result<Vec<f64>, CheckpointError> {
        let n = self.len()?;
        let raw = self.take(n.checked_mul(8).ok_or(CheckpointError::Truncated(self.data.len()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

impl Checkpoint {
    pub fn new(tag: impl Into<String>, value: ValueNet, policy: PolicyNet) -> Result<Self, CheckpointError> {
        if value.grid != policy.grid {
            return Err(CheckpointError::GridMismatch);
        }
        Ok(Checkpoint {
            tag: tag.into(),
            value,
            policy,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.0.extend_from_slice(&VERSION.to_le_bytes());
        w.u64(self.tag.len() as u64);
        w.0.extend_from_slice(self.tag.as_bytes());
        let g = &self.policy.grid;
        w.f64s(&g.lo);
        g.counts.iter().for_each(|&c| w.u64(c as u64));
        w.f64s(&g.spacing);
        w.f64s(&g.widths);
        w.f64s(&[g.cutoff]);
        let a = &self.policy.actions;
        w.f64s(&a.lo);
        w.f64s(&a.hi);
        w.f64s(&[a.std_init_frac, a.std_min_frac]);
        w.u64(self.value.weights.len() as u64);
        w.f64s(&self.value.weights);
        w.u64(self.policy.theta.len() as u64);
        w.f64s(&self.policy.theta);
        w.0
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { data, at: 0 };
        if r.take(8)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let n = r.len()?;
        let tag = String::from_utf8(r.take(n)?.to_vec()).map_err(|_| CheckpointError::Tag)?;
        let lo = r.f64x3()?;
        let mut counts = [0usize; 3];
        for c in &mut counts {
            *c = usize::try_from(r.u64()?).map_err(|_| CheckpointError::Truncated(data.len()))?;
        }
        let grid = RbfGrid {
            lo,
            counts,
            spacing: r.f64x3()?,
            widths: r.f64x3()?,
            cutoff: r.f64()?,
        };
        let actions = ActionSpace {
            lo: r.f64x3()?,
            hi: r.f64x3()?,
            std_init_frac: r.f64()?,
            std_min_frac: r.f64()?,
        };
        let weights = r.f64_vec()?;
        let theta = r.f64_vec()?;
        if r.at != data.len() {
            return Err(CheckpointError::Trailing(data.len() - r.at));
        }
        Ok(Checkpoint {
            tag,
            value: ValueNet::from_weights(grid.clone(), weights)?,
            policy: PolicyNet::from_theta(grid, actions, theta)?,
        })
    }
}

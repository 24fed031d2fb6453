use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRID_COUNT: usize = 2001;
pub const DEFAULT_ZONE_MARGIN: f64 = 1e-6;

/// Uniform, odd-sized grid over `[-1/2 + δ, 1/2 - δ]` that contains `z = 0` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BrillouinGrid {
    count: usize,
    margin: f64,
    spacing: f64,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub count: usize,
    pub margin: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            count: DEFAULT_GRID_COUNT,
            margin: DEFAULT_ZONE_MARGIN,
        }
    }
}

impl BrillouinGrid {
    pub fn new(count: usize, margin: f64) -> Result<Self> {
        if count < 3 || count % 2 == 0 {
            return Err(Error::invalid(format!("grid count must be odd and ≥ 3, got {count}")));
        }
        if !(margin > 0.0 && margin < 0.5) {
            return Err(Error::invalid(format!("zone margin must lie in (0, 1/2), got {margin}")));
        }
        let center = (count - 1) / 2;
        let spacing = (0.5 - margin) / center as f64;
        // k·Δz for both signs so the grid is exactly symmetric.
        let values = (0..count)
            .map(|i| {
                let k = i as i64 - center as i64;
                k as f64 * spacing
            })
            .collect();
        Ok(BrillouinGrid {
            count,
            margin,
            spacing,
            values,
        })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        Self::new(spec.count, spec.margin)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            count: self.count,
            margin: self.margin,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn z(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Index of `z = 0`. This sample stands for the right limit `z → 0⁺`
    /// wherever a quantity is discontinuous at the zone center.
    pub fn center_index(&self) -> usize {
        (self.count - 1) / 2
    }

    /// Largest `|z|` on the grid.
    pub fn extent(&self) -> f64 {
        self.values[self.count - 1]
    }

    /// Grid with twice the intervals over the same range.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.count - 1, self.margin).expect("refining a valid grid")
    }
}

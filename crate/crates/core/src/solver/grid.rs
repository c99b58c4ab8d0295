use crate::error::{Error, Result};

/// `N + 1` uniformly spaced values of `pi(1)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BeliefGrid {
    intervals: usize,
}

impl BeliefGrid {
    pub const DEFAULT_INTERVALS: usize = 1000;

    pub fn new(intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::invalid("belief grid needs at least one interval"));
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.intervals {
            1.0
        } else {
            i as f64 / self.intervals as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Cell containing `pi1` and the weight on its upper end.
    pub fn locate(&self, pi1: f64) -> (usize, f64) {
        let x = pi1.clamp(0.0, 1.0) * self.intervals as f64;
        let i = (x.floor() as usize).min(self.intervals - 1);
        (i, (x - i as f64).clamp(0.0, 1.0))
    }

    pub fn nearest(&self, pi1: f64) -> usize {
        ((pi1.clamp(0.0, 1.0) * self.intervals as f64).round() as usize).min(self.intervals)
    }

    /// Piecewise-linear interpolation of grid values.
    pub fn interpolate(&self, values: &[f64], pi1: f64) -> f64 {
        let (i, w) = self.locate(pi1);
        if w == 0.0 {
            values[i]
        } else {
            (1.0 - w) * values[i] + w * values[i + 1]
        }
    }
}

impl Default for BeliefGrid {
    fn default() -> Self {
        Self { intervals: Self::DEFAULT_INTERVALS }
    }
}

//! Positive magnitudes beyond `f64` range, stored as an exponential tower
//! `exp^[height](top)`.
//!
//! Iterated-logarithm asymptotics only become visible at arguments such as
//! `exp(exp(100))`; the damping-rate estimator and the cutoff level of the
//! logarithmic interpolation inequality both work with such numbers.

use crate::error::{Error, Result};
use crate::math;

/// `ln(f64::MAX)`
const LN_MAX: f64 = 709.782712893384;

/// The value `exp^[height](top)`, kept in canonical form: `height` is the
/// smallest for which `top` is finite.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tower {
    height: u32,
    top: f64,
}

impl Tower {
    pub fn from_f64(x: f64) -> Self {
        Self { height: 0, top: x }
    }

    /// `exp` applied `height` times to `top`.
    pub fn exp_iter(height: u32, top: f64) -> Self {
        let mut t = Self { height, top };
        while t.height > 0 && t.top <= LN_MAX {
            t.top = math::exp(t.top);
            t.height -= 1;
        }
        t
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    /// The value as `f64`; `+∞` when out of range.
    pub fn to_f64(&self) -> f64 {
        if self.height == 0 {
            self.top
        } else {
            f64::INFINITY
        }
    }

    pub fn is_representable(&self) -> bool {
        self.height == 0
    }

    /// Natural logarithm. The value must be positive.
    pub fn ln(&self) -> Result<Tower> {
        if self.height > 0 {
            Ok(Tower {
                height: self.height - 1,
                top: self.top,
            })
        } else if self.top > 0.0 {
            Ok(Tower::from_f64(math::ln(self.top)))
        } else {
            Err(Error::Domain {
                iterate: 1,
                value: self.top,
            })
        }
    }

    /// `ln^[i]` of the value, failing if an intermediate argument is
    /// nonpositive.
    pub fn iter_ln(&self, i: u32) -> Result<Tower> {
        let mut t = *self;
        for j in 0..i {
            t = t.ln().map_err(|_| Error::Domain {
                iterate: j + 1,
                value: t.top,
            })?;
        }
        Ok(t)
    }

    /// `ln ln` of the value as `f64`, defined for values `> 1`.
    pub fn ln_ln(&self) -> Result<f64> {
        Ok(self.iter_ln(2)?.to_f64())
    }
}

impl PartialOrd for Tower {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        // values ≥ e^709 only occur at height ≥ 1, so heights order first
        match self.height.cmp(&other.height) {
            core::cmp::Ordering::Equal => self.top.partial_cmp(&other.top),
            o if self.top >= 0.0 && other.top >= 0.0 => Some(o),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_to_f64_when_possible() {
        let t = Tower::exp_iter(2, 1.0);
        assert!(t.is_representable());
        assert!((t.to_f64() - 1f64.exp().exp()).abs() < 1e-12);
        let big = Tower::exp_iter(2, 100.0);
        assert_eq!(big.height(), 1);
        assert!((big.top() - 100f64.exp()).abs() < 1e30);
        assert_eq!(big.to_f64(), f64::INFINITY);
    }

    #[test]
    fn logs_peel_layers() {
        let t = Tower::exp_iter(3, 5.0);
        assert!((t.ln_ln().unwrap() - 5f64.exp()).abs() < 1e-9);
        assert!((t.iter_ln(3).unwrap().to_f64() - 5.0).abs() < 1e-12);
        assert!(Tower::from_f64(0.5).iter_ln(2).is_err());
    }

    #[test]
    fn ordering() {
        assert!(Tower::exp_iter(2, 800.0) > Tower::exp_iter(1, 800.0));
        assert!(Tower::from_f64(3.0) < Tower::from_f64(4.0));
        assert!(Tower::exp_iter(1, 800.0) > Tower::from_f64(f64::MAX));
    }
}

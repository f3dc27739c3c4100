//! Lazily tabulated radial profiles.
//!
//! A profile f: [0, ∞) → ℝ that is expensive to evaluate (each value is a
//! disk integral, say) is sampled panel by panel at Chebyshev points the
//! first time a panel is touched and evaluated afterwards by barycentric
//! interpolation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::RwLock;

use crate::error::{Result, WfockError};

const DEGREE: usize = 24;

type Source = Box<dyn Fn(f64) -> Result<f64> + Send + Sync>;

pub struct LazyProfile {
    width: f64,
    source: Source,
    panels: RwLock<HashMap<usize, Vec<f64>>>,
}

impl fmt::Debug for LazyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazyProfile")
            .field("width", &self.width)
            .field("panels", &self.len())
            .finish()
    }
}

fn cheb_point(j: usize) -> f64 {
    (PI * j as f64 / DEGREE as f64).cos()
}

impl LazyProfile {
    /// Panels are [k·width, (k+1)·width]; place known kinks on panel edges.
    pub fn new<F>(width: f64, source: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        if !(width > 0.0 && width.is_finite()) {
            return Err(WfockError::invalid("profile panel width must be positive"));
        }
        Ok(LazyProfile {
            width,
            source: Box::new(source),
            panels: RwLock::new(HashMap::new()),
        })
    }

    /// Number of materialized panels.
    pub fn len(&self) -> usize {
        self.panels.read().map(|p| p.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn panel(&self, k: usize) -> Result<Vec<f64>> {
        if let Some(v) = self.panels.read().ok().and_then(|p| p.get(&k).cloned()) {
            return Ok(v);
        }
        let a = k as f64 * self.width;
        let values = (0..=DEGREE)
            .map(|j| (self.source)(a + 0.5 * self.width * (1.0 + cheb_point(j))))
            .collect::<Result<Vec<f64>>>()?;
        if let Ok(mut p) = self.panels.write() {
            p.insert(k, values.clone());
        }
        Ok(values)
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(WfockError::invalid(format!("profile argument {r} outside [0, ∞)")));
        }
        let k = (r / self.width).floor() as usize;
        let values = self.panel(k)?;
        let a = k as f64 * self.width;
        let x = 2.0 * (r - a) / self.width - 1.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, v) in values.iter().enumerate() {
            let d = x - cheb_point(j);
            if d == 0.0 {
                return Ok(*v);
            }
            let mut c = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == DEGREE {
                c *= 0.5;
            }
            num += c * v / d;
            den += c / d;
        }
        Ok(num / den)
    }
}

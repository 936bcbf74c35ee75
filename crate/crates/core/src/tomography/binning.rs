use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne::QuadratureRecord;

/// Histogram resolution. Phases are folded into `[0, π)` using
/// `X_{θ+π} = −X_θ`, which is exact for every state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinSpec {
    pub theta_bins: usize,
    pub x_width: f64,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self {
            theta_bins: 60,
            x_width: 0.1,
        }
    }
}

impl BinSpec {
    pub fn validate(&self) -> Result<()> {
        if self.theta_bins == 0 {
            return Err(Error::Config("theta_bins must be at least 1".into()));
        }
        if !(self.x_width > 0.0 && self.x_width.is_finite()) {
            return Err(Error::Config(format!("x_width must be positive, got {}", self.x_width)));
        }
        Ok(())
    }

    pub fn theta_width(&self) -> f64 {
        PI / self.theta_bins as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub theta: f64,
    pub x: f64,
    pub count: u64,
}

/// Occupied cells of a `(θ, x)` histogram, ordered by phase bin then by x.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinnedData {
    pub bins: Vec<Bin>,
    pub theta_width: f64,
    pub x_width: f64,
    pub total: u64,
}

/// Bins phase-tagged quadrature values. x cells are centred on multiples of
/// the width.
pub fn bin(thetas: &[f64], xs: &[f64], spec: &BinSpec) -> Result<BinnedData> {
    spec.validate()?;
    if thetas.len() != xs.len() {
        return Err(Error::Shape(format!("{} phases for {} values", thetas.len(), xs.len())));
    }
    let tw = spec.theta_width();
    let mut cells: Vec<(usize, i64)> = Vec::with_capacity(xs.len());
    for (&t, &x) in thetas.iter().zip(xs) {
        if !t.is_finite() || !x.is_finite() {
            return Err(Error::Degenerate(format!("non-finite sample ({t}, {x})")));
        }
        let turns = (t / PI).floor();
        let folded = t - turns * PI;
        let x = if (turns as i64).rem_euclid(2) == 1 { -x } else { x };
        let k = ((folded / tw) as usize).min(spec.theta_bins - 1);
        let j = (x / spec.x_width).round() as i64;
        cells.push((k, j));
    }
    cells.sort_unstable();
    let mut bins: Vec<Bin> = Vec::new();
    let mut last = None;
    for c in cells {
        if last == Some(c) {
            bins.last_mut().unwrap().count += 1;
        } else {
            bins.push(Bin {
                theta: (c.0 as f64 + 0.5) * tw,
                x: c.1 as f64 * spec.x_width,
                count: 1,
            });
            last = Some(c);
        }
    }
    Ok(BinnedData {
        bins,
        theta_width: tw,
        x_width: spec.x_width,
        total: xs.len() as u64,
    })
}

/// [`bin`] over exported records; every record needs an assigned phase.
pub fn bin_records(records: &[QuadratureRecord], spec: &BinSpec) -> Result<BinnedData> {
    let mut thetas = Vec::with_capacity(records.len());
    let mut xs = Vec::with_capacity(records.len());
    for r in records {
        let t = r.theta_assigned.ok_or_else(|| {
            Error::Degenerate(format!("record (trace {}, pulse {}) has no phase", r.trace_id, r.pulse_index))
        })?;
        thetas.push(t);
        xs.push(r.x_value);
    }
    bin(&thetas, &xs, spec)
}

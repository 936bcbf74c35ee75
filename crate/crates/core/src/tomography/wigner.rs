use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::math::{laguerre, ln_factorials};

/// Largest accepted grid spacing of a Wigner surface.
pub const MAX_WIGNER_SPACING: f64 = 0.1;

/// Wigner function sampled on a rectangular `(x, p)` grid. `values[i][j]` is
/// `W(xs[i], ps[j])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WignerSurface {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl WignerSurface {
    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        let dx = self.xs[1] - self.xs[0];
        let dp = self.ps[1] - self.ps[0];
        let nx = self.xs.len();
        let np = self.ps.len();
        let mut s = 0.0;
        for (i, row) in self.values.iter().enumerate() {
            let wi = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
            for (j, v) in row.iter().enumerate() {
                let wj = if j == 0 || j == np - 1 { 0.5 } else { 1.0 };
                s += wi * wj * v;
            }
        }
        s * dx * dp
    }

    /// `∫ W dp` at every x.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = self.ps[1] - self.ps[0];
        let np = self.ps.len();
        self.values
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| if j == 0 || j == np - 1 { 0.5 * v } else { *v })
                    .sum::<f64>()
                    * dp
            })
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.len() < 3 {
        return Err(Error::GridTooCoarse(format!("{name} grid has {} points", g.len())));
    }
    let d = g[1] - g[0];
    if !(d > 0.0) || d > MAX_WIGNER_SPACING * (1.0 + 1e-9) {
        return Err(Error::GridTooCoarse(format!("{name} spacing {d:.4} (max {MAX_WIGNER_SPACING})")));
    }
    if g.windows(2).any(|w| ((w[1] - w[0]) - d).abs() > 1e-9 * d.max(1.0)) {
        return Err(Error::GridTooCoarse(format!("{name} grid is not uniform")));
    }
    Ok(())
}

struct Series {
    lnf: Vec<f64>,
    lag: Vec<f64>,
}

impl Series {
    fn new(n: usize) -> Self {
        Self {
            lnf: ln_factorials(n),
            lag: vec![0.0; n],
        }
    }

    /// `W(x, p)` with `X = (a + a†)/√2`, so the vacuum peaks at `1/π`:
    /// `W = (1/π) e^{−r²} Σ_{m≥n} c ρ_mn (−1)ⁿ √(n!/m!) (√2(x − ip))^{m−n} L_n^{m−n}(2r²)`
    /// with `c = 1` on the diagonal and the real part doubled off it.
    fn eval(&mut self, rho: &DensityOperator, x: f64, p: f64) -> f64 {
        let n = rho.cutoff();
        let r2 = x * x + p * p;
        let z = 2.0 * r2;
        let ln_amp = 0.5 * (2.0 * r2).ln();
        let phase = -p.atan2(x);
        let mut acc = 0.0;
        for d in 0..n {
            laguerre(d as f64, z, n - d, &mut self.lag);
            let rot = C64::from_polar(1.0, d as f64 * phase);
            let mut part = C64::new(0.0, 0.0);
            for k in 0..n - d {
                let e = rho.entry(k + d, k);
                if e.norm() == 0.0 {
                    continue;
                }
                let radial = if d == 0 { 0.0 } else { d as f64 * ln_amp };
                let mag = (0.5 * (self.lnf[k] - self.lnf[k + d]) + radial - r2).exp();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                part += e * (sign * mag * self.lag[k]);
            }
            let term = (part * rot).re;
            acc += if d == 0 { term } else { 2.0 * term };
        }
        acc / PI
    }
}

/// Wigner function at one phase-space point.
pub fn wigner_at(rho: &DensityOperator, x: f64, p: f64) -> Result<f64> {
    rho.require_modes(1)?;
    let tr = rho.trace();
    Ok(Series::new(rho.cutoff()).eval(rho, x, p) / tr)
}

/// Wigner function on a uniform grid with spacing at most
/// [`MAX_WIGNER_SPACING`].
pub fn wigner(rho: &DensityOperator, xs: &[f64], ps: &[f64]) -> Result<WignerSurface> {
    rho.require_modes(1)?;
    check_grid("x", xs)?;
    check_grid("p", ps)?;
    let tr = rho.trace();
    let mut s = Series::new(rho.cutoff());
    let values = xs
        .iter()
        .map(|&x| ps.iter().map(|&p| s.eval(rho, x, p) / tr).collect())
        .collect();
    Ok(WignerSurface {
        xs: xs.to_vec(),
        ps: ps.to_vec(),
        values,
    })
}

/// CSV with columns `x,p,W`, x-major.
pub fn write_wigner_csv<W: Write>(surface: &WignerSurface, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["x", "p", "W"])?;
    for (i, x) in surface.xs.iter().enumerate() {
        for (j, p) in surface.ps.iter().enumerate() {
            w.write_record([x.to_string(), p.to_string(), surface.values[i][j].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

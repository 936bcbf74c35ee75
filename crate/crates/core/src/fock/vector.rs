use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{check_modes, DensityOperator, TRUNCATION_LIMIT};
use crate::error::{Error, Result};

/// Pure state over a truncated Fock basis of one or two modes.
///
/// Two-mode amplitudes are stored row-major in `(n_signal, n_idler)`, i.e. the
/// amplitude of `|n_s, n_i⟩` lives at index `n_s * cutoff + n_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    cutoff: usize,
    modes: usize,
    amps: DVector<C64>,
}

impl FockVector {
    pub fn new(cutoff: usize, modes: usize, amps: Vec<C64>) -> Result<Self> {
        check_modes(cutoff, modes)?;
        let dim = cutoff.pow(modes as u32);
        if amps.len() != dim {
            return Err(Error::Shape(format!(
                "{} amplitudes for cutoff {cutoff} and {modes} modes (want {dim})",
                amps.len()
            )));
        }
        Ok(Self {
            cutoff,
            modes,
            amps: DVector::from_vec(amps),
        })
    }

    /// Two-mode state from a real amplitude table `f(n_s, n_i)`.
    pub fn two_mode_from_fn(cutoff: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        check_modes(cutoff, 2)?;
        let mut amps = Vec::with_capacity(cutoff * cutoff);
        for s in 0..cutoff {
            for i in 0..cutoff {
                amps.push(C64::new(f(s, i), 0.0));
            }
        }
        Self::new(cutoff, 2, amps)
    }

    pub fn vacuum(cutoff: usize, modes: usize) -> Result<Self> {
        check_modes(cutoff, modes)?;
        let mut amps = vec![C64::new(0.0, 0.0); cutoff.pow(modes as u32)];
        amps[0] = C64::new(1.0, 0.0);
        Self::new(cutoff, modes, amps)
    }

    pub fn number_state(cutoff: usize, n: usize) -> Result<Self> {
        check_modes(cutoff, 1)?;
        if n >= cutoff {
            return Err(Error::param("photon number", n as f64, "must be below the cutoff"));
        }
        let mut amps = vec![C64::new(0.0, 0.0); cutoff];
        amps[n] = C64::new(1.0, 0.0);
        Self::new(cutoff, 1, amps)
    }

    pub fn two_mode_number(cutoff: usize, n_signal: usize, n_idler: usize) -> Result<Self> {
        check_modes(cutoff, 2)?;
        if n_signal >= cutoff || n_idler >= cutoff {
            return Err(Error::param(
                "photon number",
                n_signal.max(n_idler) as f64,
                "must be below the cutoff",
            ));
        }
        let mut amps = vec![C64::new(0.0, 0.0); cutoff * cutoff];
        amps[n_signal * cutoff + n_idler] = C64::new(1.0, 0.0);
        Self::new(cutoff, 2, amps)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    /// Amplitude of `|n⟩` (one mode).
    pub fn amp(&self, n: usize) -> C64 {
        self.amps[n]
    }

    /// Amplitude of `|n_s, n_i⟩` (two modes).
    pub fn amp2(&self, n_signal: usize, n_idler: usize) -> C64 {
        self.amps[n_signal * self.cutoff + n_idler]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.amps.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero vector".into()));
        }
        self.amps.unscale_mut(n);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        self.same_space(other)?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub(crate) fn same_space(&self, other: &FockVector) -> Result<()> {
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch(self.cutoff, other.cutoff));
        }
        if self.modes != other.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                got: other.modes,
            });
        }
        Ok(())
    }

    pub fn to_density(&self) -> DensityOperator {
        let m: DMatrix<C64> = &self.amps * self.amps.adjoint();
        DensityOperator::from_parts(self.cutoff, self.modes, m)
    }

    /// Re-expresses the state at a different cutoff: zero-padding when growing,
    /// dropping amplitudes when shrinking (no renormalization).
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        check_modes(cutoff, self.modes)?;
        let keep = self.cutoff.min(cutoff);
        let zero = C64::new(0.0, 0.0);
        let amps = match self.modes {
            1 => (0..cutoff).map(|n| if n < keep { self.amps[n] } else { zero }).collect(),
            _ => {
                let mut v = vec![zero; cutoff * cutoff];
                for s in 0..keep {
                    for i in 0..keep {
                        v[s * cutoff + i] = self.amp2(s, i);
                    }
                }
                v
            }
        };
        Self::new(cutoff, self.modes, amps)
    }

    /// Photon-number distribution of one mode.
    pub fn populations(&self, mode: usize) -> Result<Vec<f64>> {
        if mode >= self.modes {
            return Err(Error::InvalidModeIndex(mode));
        }
        let n = self.cutoff;
        let mut p = vec![0.0; n];
        if self.modes == 1 {
            for (k, a) in self.amps.iter().enumerate() {
                p[k] = a.norm_sqr();
            }
        } else {
            for s in 0..n {
                for i in 0..n {
                    let w = self.amp2(s, i).norm_sqr();
                    p[if mode == 0 { s } else { i }] += w;
                }
            }
        }
        Ok(p)
    }

    /// Largest population found in the top two Fock levels of any mode,
    /// relative to the total norm.
    pub fn top_population(&self) -> f64 {
        let total = self.norm_sqr().max(f64::MIN_POSITIVE);
        (0..self.modes)
            .map(|m| {
                let p = self.populations(m).expect("mode in range");
                p[p.len() - 2..].iter().sum::<f64>() / total
            })
            .fold(0.0, f64::max)
    }

    /// Errors if the top two Fock levels carry population at or above the
    /// truncation limit.
    pub fn check_truncation(&self) -> Result<()> {
        let top = self.top_population();
        if top >= TRUNCATION_LIMIT {
            return Err(Error::Truncation {
                cutoff: self.cutoff,
                population: top,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_cutoff_and_bad_length() {
        assert!(FockVector::vacuum(1, 1).is_err());
        assert!(FockVector::new(3, 1, vec![C64::new(1.0, 0.0); 4]).is_err());
        assert!(FockVector::vacuum(3, 3).is_err());
    }

    #[test]
    fn normalize_hits_unit_norm() {
        let mut v =
            FockVector::new(3, 1, vec![C64::new(1.0, 2.0), C64::new(0.0, -3.0), C64::new(0.5, 0.0)]).unwrap();
        v.normalize().unwrap();
        assert!((v.norm_sqr() - 1.0).abs() < 1e-12);
        let mut z = FockVector::new(2, 1, vec![C64::new(0.0, 0.0); 2]).unwrap();
        assert!(z.normalize().is_err());
    }

    #[test]
    fn cutoff_change_round_trips() {
        let v = FockVector::two_mode_number(3, 2, 1).unwrap();
        let big = v.with_cutoff(6).unwrap();
        assert_eq!(big.amp2(2, 1), C64::new(1.0, 0.0));
        assert_eq!(big.with_cutoff(3).unwrap(), v);
    }

    #[test]
    fn flags_population_at_the_edge() {
        let v = FockVector::number_state(4, 3).unwrap();
        assert!(matches!(v.check_truncation(), Err(Error::Truncation { .. })));
        FockVector::number_state(4, 1).unwrap().check_truncation().unwrap();
    }
}

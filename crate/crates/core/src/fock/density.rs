use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{check_modes, EIGEN_CLIP, HERMITIAN_TOL, TRUNCATION_LIMIT};
use crate::error::{Error, Result};

/// Hermitian, positive semidefinite operator over a truncated Fock basis of one
/// or two modes. Two-mode indices follow the same `(n_signal, n_idler)`
/// row-major layout as [`super::FockVector`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    cutoff: usize,
    modes: usize,
    mat: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates shape and Hermiticity (elementwise within 1e-10).
    pub fn new(cutoff: usize, modes: usize, mat: DMatrix<C64>) -> Result<Self> {
        check_modes(cutoff, modes)?;
        let dim = cutoff.pow(modes as u32);
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::Shape(format!(
                "{}x{} matrix for cutoff {cutoff} and {modes} modes (want {dim}x{dim})",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { cutoff, modes, mat })
    }

    /// Trusted constructor for matrices built Hermitian by construction; the
    /// lower triangle is mirrored from the upper to remove rounding asymmetry.
    pub(crate) fn from_parts(cutoff: usize, modes: usize, mut mat: DMatrix<C64>) -> Self {
        let d = mat.nrows();
        for i in 0..d {
            mat[(i, i)].im = 0.0;
            for j in i + 1..d {
                mat[(j, i)] = mat[(i, j)].conj();
            }
        }
        Self { cutoff, modes, mat }
    }

    pub fn vacuum(cutoff: usize) -> Result<Self> {
        check_modes(cutoff, 1)?;
        let mut m = DMatrix::zeros(cutoff, cutoff);
        m[(0, 0)] = C64::new(1.0, 0.0);
        Ok(Self::from_parts(cutoff, 1, m))
    }

    pub fn number(cutoff: usize, n: usize) -> Result<Self> {
        Ok(super::FockVector::number_state(cutoff, n)?.to_density())
    }

    /// Thermal state with the given mean photon number, renormalized after truncation.
    pub fn thermal(cutoff: usize, mean_photons: f64) -> Result<Self> {
        check_modes(cutoff, 1)?;
        if !(mean_photons >= 0.0) {
            return Err(Error::param("mean photon number", mean_photons, "must be non-negative"));
        }
        let q = mean_photons / (1.0 + mean_photons);
        let mut m = DMatrix::zeros(cutoff, cutoff);
        let mut p = 1.0 / (1.0 + mean_photons);
        for n in 0..cutoff {
            m[(n, n)] = C64::new(p, 0.0);
            p *= q;
        }
        Self::from_parts(cutoff, 1, m).normalized()
    }

    /// Diagonal operator `diag(weights)` (normalized).
    pub fn diagonal(cutoff: usize, weights: &[f64]) -> Result<Self> {
        check_modes(cutoff, 1)?;
        if weights.len() != cutoff || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Shape("diagonal weights must be non-negative, one per level".into()));
        }
        let m = DMatrix::from_fn(cutoff, cutoff, |i, j| {
            if i == j {
                C64::new(weights[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::from_parts(cutoff, 1, m).normalized()
    }

    pub fn maximally_mixed(cutoff: usize) -> Result<Self> {
        Self::diagonal(cutoff, &vec![1.0; cutoff])
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let t = self.trace();
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Degenerate(format!("cannot normalize operator with trace {t}")));
        }
        self.mat.unscale_mut(t);
        Ok(self)
    }

    pub(crate) fn same_space(&self, other: &DensityOperator) -> Result<()> {
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

    pub(crate) fn require_modes(&self, modes: usize) -> Result<()> {
        if self.modes != modes {
            return Err(Error::ModeMismatch {
                expected: modes,
                got: self.modes,
            });
        }
        Ok(())
    }

    /// `tr(ρ A)`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        // tr(ρA) = Σ_ij ρ_ij A_ji
        self.mat.iter().zip(op.transpose().iter()).map(|(a, b)| a * b).sum()
    }

    /// Weighted sum `Σ w_k ρ_k` of operators on the same space.
    pub fn mix(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::Degenerate("empty mixture".into()))?;
        let mut m = DMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            first.same_space(rho)?;
            if *w < 0.0 {
                return Err(Error::param("mixture weight", *w, "must be non-negative"));
            }
            m += rho.matrix() * C64::new(*w, 0.0);
        }
        Ok(Self::from_parts(first.cutoff, first.modes, m))
    }

    /// Eigenvalues (ascending) after clipping drift in `[-1e-9, 0)` to zero;
    /// anything more negative is an error.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (vals, _) = self.clipped_eigen()?;
        Ok(vals)
    }

    pub(crate) fn clipped_eigen(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        for v in vals.iter_mut() {
            if *v < -EIGEN_CLIP {
                return Err(Error::NotPositive(*v));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mut idx: Vec<usize> = (0..vals.len()).collect();
        idx.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]));
        let sorted: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
        let vecs = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, idx[c])]);
        Ok((sorted, vecs))
    }

    /// Principal square root using clipped eigenvalues.
    pub(crate) fn sqrt_matrix(&self) -> Result<DMatrix<C64>> {
        let (vals, vecs) = self.clipped_eigen()?;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            vals.len(),
            vals.iter().map(|v| C64::new(v.sqrt(), 0.0)),
        ));
        Ok(&vecs * d * vecs.adjoint())
    }

    /// Photon-number distribution of one mode.
    pub fn populations(&self, mode: usize) -> Result<Vec<f64>> {
        if mode >= self.modes {
            return Err(Error::InvalidModeIndex(mode));
        }
        let n = self.cutoff;
        let mut p = vec![0.0; n];
        if self.modes == 1 {
            for (k, pk) in p.iter_mut().enumerate() {
                *pk = self.mat[(k, k)].re;
            }
        } else {
            for s in 0..n {
                for i in 0..n {
                    let w = self.mat[(s * n + i, s * n + i)].re;
                    p[if mode == 0 { s } else { i }] += w;
                }
            }
        }
        Ok(p)
    }

    pub fn mean_photons(&self) -> f64 {
        self.populations(0)
            .expect("mode 0 always exists")
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Largest population in the top two Fock levels of any mode.
    pub fn top_population(&self) -> f64 {
        let t = self.trace().max(f64::MIN_POSITIVE);
        (0..self.modes)
            .map(|m| {
                let p = self.populations(m).expect("mode in range");
                p[p.len() - 2..].iter().sum::<f64>() / t
            })
            .fold(0.0, f64::max)
    }

    /// Logs a warning when the top two Fock levels carry population above the
    /// truncation limit; returns the offending population.
    pub fn warn_if_truncated(&self, context: &str) -> f64 {
        let top = self.top_population();
        if top >= TRUNCATION_LIMIT {
            log::warn!(
                "{context}: {top:.3e} of the population sits in the top two Fock levels (cutoff {})",
                self.cutoff
            );
        }
        top
    }

    /// Single-mode operator at a different cutoff: zero-padding when growing,
    /// dropping the tail when shrinking. Shrinking renormalizes.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        self.require_modes(1)?;
        check_modes(cutoff, 1)?;
        let keep = cutoff.min(self.cutoff);
        let m = DMatrix::from_fn(cutoff, cutoff, |i, j| {
            if i < keep && j < keep {
                self.mat[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let out = Self::from_parts(cutoff, 1, m);
        if cutoff < self.cutoff {
            out.normalized()
        } else {
            Ok(out)
        }
    }

    /// Phase-space rotation `e^{iφn} ρ e^{-iφn}` (single mode): a coherent
    /// amplitude `α` becomes `α e^{iφ}`.
    pub fn rotated(&self, phi: f64) -> Result<Self> {
        self.require_modes(1)?;
        let m = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.mat[(i, j)] * C64::from_polar(1.0, phi * (i as f64 - j as f64))
        });
        Ok(Self::from_parts(self.cutoff, 1, m))
    }
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Wire format shared by the CLI and tomography outputs.
#[derive(Serialize, Deserialize)]
struct DensityJson {
    dim: usize,
    modes: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for DensityOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.mat[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        DensityJson {
            dim: self.cutoff,
            modes: self.modes,
            entries,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = DensityJson::deserialize(d)?;
        let size = raw
            .dim
            .checked_pow(raw.modes as u32)
            .ok_or_else(|| serde::de::Error::custom("dimension overflow"))?;
        if raw.entries.len() != size * size {
            return Err(serde::de::Error::custom(format!(
                "expected {} entries, found {}",
                size * size,
                raw.entries.len()
            )));
        }
        let m = DMatrix::from_fn(size, size, |i, j| {
            let [re, im] = raw.entries[i * size + j];
            C64::new(re, im)
        });
        DensityOperator::new(raw.dim, raw.modes, m).map_err(serde::de::Error::custom)
    }
}

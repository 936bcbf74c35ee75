use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{DensityOperator, FockVector};
use crate::error::{Error, Result};
use crate::math::{binomial, ln_factorials};

/// Kronecker product of two single-mode objects into a two-mode one.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Tensor for FockVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        single_pair(self.modes(), other.modes(), self.cutoff(), other.cutoff())?;
        let n = self.cutoff();
        let mut amps = Vec::with_capacity(n * n);
        for s in 0..n {
            for i in 0..n {
                amps.push(self.amp(s) * other.amp(i));
            }
        }
        FockVector::new(n, 2, amps)
    }
}

impl Tensor for DensityOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        single_pair(self.modes(), other.modes(), self.cutoff(), other.cutoff())?;
        Ok(DensityOperator::from_parts(
            self.cutoff(),
            2,
            self.matrix().kronecker(other.matrix()),
        ))
    }
}

fn single_pair(ma: usize, mb: usize, ca: usize, cb: usize) -> Result<()> {
    if ca != cb {
        return Err(Error::CutoffMismatch(ca, cb));
    }
    for m in [ma, mb] {
        if m != 1 {
            return Err(Error::ModeMismatch { expected: 1, got: m });
        }
    }
    Ok(())
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Two-mode beam splitter with real amplitude transmissivity `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitter {
    t: f64,
    r: f64,
}

impl BeamSplitter {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::param("transmissivity amplitude", t, "must lie in [0, 1]"));
        }
        Ok(Self {
            t,
            r: (1.0 - t * t).max(0.0).sqrt(),
        })
    }

    /// 50:50 splitter.
    pub fn balanced() -> Self {
        Self::new(std::f64::consts::FRAC_1_SQRT_2).expect("1/√2 is in range")
    }

    pub fn transmissivity(&self) -> f64 {
        self.t
    }

    pub fn reflectivity(&self) -> f64 {
        self.r
    }

    /// Output amplitudes of `|n_s, n_i⟩`: entry `k` is the coefficient of
    /// `|k, n_s + n_i − k⟩`.
    pub fn column(&self, ns: usize, ni: usize, lnf: &[f64]) -> Vec<f64> {
        let total = ns + ni;
        let mut out = vec![0.0; total + 1];
        for k in 0..=ns {
            let a = binomial(ns, k) * self.t.powi(k as i32) * self.r.powi((ns - k) as i32);
            if a == 0.0 {
                continue;
            }
            for l in 0..=ni {
                let b = binomial(ni, l) * (-self.r).powi(l as i32) * self.t.powi((ni - l) as i32);
                if b == 0.0 {
                    continue;
                }
                let pa = k + l;
                let pb = total - pa;
                let norm = (0.5 * (lnf[pa] + lnf[pb] - lnf[ns] - lnf[ni])).exp();
                out[pa] += a * b * norm;
            }
        }
        out
    }

    /// Unitary image of a two-mode pure state. Components pushed beyond the
    /// cutoff are an error when they carry more than 1e-9 of the norm.
    pub fn apply(&self, state: &FockVector) -> Result<FockVector> {
        require_two(state.modes())?;
        let n = state.cutoff();
        let lnf = ln_factorials(2 * n);
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for ns in 0..n {
            for ni in 0..n {
                let c = state.amp2(ns, ni);
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let col = self.column(ns, ni, &lnf);
                let total = ns + ni;
                for (pa, coef) in col.iter().enumerate() {
                    let pb = total - pa;
                    if pa < n && pb < n {
                        out[pa * n + pb] += c * *coef;
                    }
                }
            }
        }
        let out = FockVector::new(n, 2, out)?;
        let before = state.norm_sqr();
        let lost = before - out.norm_sqr();
        if lost > 1e-9 * before.max(1.0) {
            return Err(Error::Truncation {
                cutoff: n,
                population: lost / before,
            });
        }
        Ok(out)
    }

    /// Dense unitary on the truncated two-mode space (rows/cols `n_s * N + n_i`).
    pub fn unitary(&self, cutoff: usize) -> DMatrix<f64> {
        let n = cutoff;
        let lnf = ln_factorials(2 * n);
        let mut u = DMatrix::zeros(n * n, n * n);
        for ns in 0..n {
            for ni in 0..n {
                let col = self.column(ns, ni, &lnf);
                let total = ns + ni;
                for (pa, coef) in col.iter().enumerate() {
                    let pb = total - pa;
                    if pa < n && pb < n {
                        u[(pa * n + pb, ns * n + ni)] = *coef;
                    }
                }
            }
        }
        u
    }

    /// `U ρ U†` for a two-mode density operator.
    pub fn apply_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        rho.require_modes(2)?;
        let n = rho.cutoff();
        let u = self.unitary(n).map(|x| C64::new(x, 0.0));
        let out = &u * rho.matrix() * u.transpose();
        let out = DensityOperator::from_parts(n, 2, out);
        let lost = rho.trace() - out.trace();
        if lost > 1e-9 {
            return Err(Error::Truncation {
                cutoff: n,
                population: lost,
            });
        }
        Ok(out)
    }
}

fn require_two(modes: usize) -> Result<()> {
    if modes != 2 {
        return Err(Error::ModeMismatch { expected: 2, got: modes });
    }
    Ok(())
}

pub fn beam_splitter(state: &FockVector, t: f64) -> Result<FockVector> {
    BeamSplitter::new(t)?.apply(state)
}

/// Partial trace of a two-mode operator; `keep` selects the surviving mode.
pub fn partial_trace(rho: &DensityOperator, keep: usize) -> Result<DensityOperator> {
    rho.require_modes(2)?;
    if keep > 1 {
        return Err(Error::InvalidModeIndex(keep));
    }
    let n = rho.cutoff();
    let m = rho.matrix();
    let idx = |kept: usize, traced: usize| if keep == 0 { kept * n + traced } else { traced * n + kept };
    let out = DMatrix::from_fn(n, n, |a, b| (0..n).map(|t| m[(idx(a, t), idx(b, t))]).sum::<C64>());
    Ok(DensityOperator::from_parts(n, 1, out))
}

/// Reduced single-mode state of a two-mode pure state, without forming the
/// two-mode density operator.
pub fn reduced_state(state: &FockVector, keep: usize) -> Result<DensityOperator> {
    require_two(state.modes())?;
    if keep > 1 {
        return Err(Error::InvalidModeIndex(keep));
    }
    let n = state.cutoff();
    let psi = DMatrix::from_fn(n, n, |s, i| state.amp2(s, i));
    let psi = if keep == 0 { psi } else { psi.transpose() };
    // ρ[a,b] = Σ_t ψ(a,t) ψ*(b,t)
    let out = &psi * psi.adjoint();
    Ok(DensityOperator::from_parts(n, 1, out))
}

/// Pure-loss channel: beam splitter of energy transmission `η` against vacuum,
/// with the reflected port traced out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossChannel {
    efficiency: f64,
}

impl LossChannel {
    pub fn new(efficiency: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::param("efficiency", efficiency, "must lie in [0, 1]"));
        }
        Ok(Self { efficiency })
    }

    pub fn lossless() -> Self {
        Self { efficiency: 1.0 }
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Sequential composition: efficiencies multiply.
    pub fn then(&self, other: &LossChannel) -> LossChannel {
        LossChannel {
            efficiency: self.efficiency * other.efficiency,
        }
    }

    /// Closed form of the dilation,
    /// `ρ'_{mn} = Σ_k √(C(m+k,k) C(n+k,k)) η^{(m+n)/2} (1−η)^k ρ_{m+k,n+k}`.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        rho.require_modes(1)?;
        let eta = self.efficiency;
        let d = rho.cutoff();
        if eta == 1.0 {
            return Ok(rho.clone());
        }
        let lnf = ln_factorials(2 * d);
        let ln_eta = eta.ln();
        let ln_loss = (1.0 - eta).ln();
        let m = rho.matrix();
        let mut out = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d - j {
                    // log of √(C(i+k,k) C(j+k,k)) η^{(i+j)/2} (1−η)^k
                    let lb = 0.5 * (lnf[i + k] - lnf[i] - lnf[k] + lnf[j + k] - lnf[j] - lnf[k]);
                    let w = if eta == 0.0 {
                        if i + j == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        let lk = if k == 0 { 0.0 } else { k as f64 * ln_loss };
                        (lb + 0.5 * (i + j) as f64 * ln_eta + lk).exp()
                    };
                    acc += m[(i + k, j + k)] * w;
                }
                out[(i, j)] = acc;
            }
        }
        Ok(DensityOperator::from_parts(d, 1, out))
    }
}

pub fn apply_loss(rho: &DensityOperator, channel: &LossChannel) -> Result<DensityOperator> {
    channel.apply(rho)
}

/// `tr(ρ²)` from the clipped spectrum.
pub fn purity(rho: &DensityOperator) -> Result<f64> {
    let vals = rho.eigenvalues()?;
    Ok(vals.iter().map(|v| v * v).sum())
}

const FIDELITY_FLOOR: f64 = 1e-13;

/// Uhlmann fidelity `(tr √(√a b √a))²`.
pub fn fidelity(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    a.same_space(b)?;
    let sa = a.sqrt_matrix()?;
    let inner = &sa * b.matrix() * &sa;
    let inner = DensityOperator::from_parts(a.cutoff(), a.modes(), inner);
    let vals = inner.eigenvalues()?;
    // eigenvalues at the rounding floor would otherwise add ~1e-8 each
    let s: f64 = vals.iter().filter(|v| **v > FIDELITY_FLOOR).map(|v| v.sqrt()).sum();
    Ok((s * s).min(1.0))
}

/// `|⟨a|b⟩|²` for pure states.
pub fn overlap(a: &FockVector, b: &FockVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::DensityOperator;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn random_vector(rng: &mut ChaCha8Rng, cutoff: usize, modes: usize, support: usize) -> FockVector {
        let dim = cutoff.pow(modes as u32);
        let amps: Vec<C64> = (0..dim)
            .map(|k| {
                let (s, i) = if modes == 2 { (k / cutoff, k % cutoff) } else { (k, 0) };
                if s + i < support {
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        FockVector::new(cutoff, modes, amps).unwrap().normalized().unwrap()
    }

    fn random_density(rng: &mut ChaCha8Rng, cutoff: usize, support: usize) -> DensityOperator {
        let parts: Vec<DensityOperator> = (0..3)
            .map(|_| random_vector(rng, cutoff, 1, support).to_density())
            .collect();
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
        let tot: f64 = w.iter().sum();
        DensityOperator::mix(&[(w[0] / tot, &parts[0]), (w[1] / tot, &parts[1]), (w[2] / tot, &parts[2])])
            .unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> DensityOperator {
        let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        DensityOperator::from_parts(d, 1, &a + a.adjoint())
    }

    #[test]
    fn vacuum_tensor_vacuum() {
        let v = FockVector::vacuum(3, 1).unwrap();
        let vv = tensor(&v, &v).unwrap();
        assert_eq!(vv.dim(), 9);
        assert_eq!(vv, FockVector::two_mode_number(3, 0, 0).unwrap());
    }

    #[test]
    fn tensor_trace_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let a = random_hermitian(&mut rng, 4);
            let b = random_hermitian(&mut rng, 4);
            let ab = tensor(&a, &b).unwrap();
            // direct multiplication oracle
            let mut ta = C64::new(0.0, 0.0);
            let mut tb = C64::new(0.0, 0.0);
            for k in 0..4 {
                ta += a.entry(k, k);
                tb += b.entry(k, k);
            }
            assert!((ab.trace() - (ta * tb).re).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_rejects_mismatch() {
        let a = FockVector::vacuum(3, 1).unwrap();
        let b = FockVector::vacuum(4, 1).unwrap();
        assert!(matches!(tensor(&a, &b), Err(Error::CutoffMismatch(3, 4))));
    }

    #[test]
    fn single_photon_splits_symmetrically() {
        let psi = FockVector::two_mode_number(3, 1, 0).unwrap();
        let out = beam_splitter(&psi, S).unwrap();
        assert!((out.amp2(1, 0).re - S).abs() < 1e-14);
        assert!((out.amp2(0, 1).re - S).abs() < 1e-14);
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let psi = FockVector::two_mode_number(4, 1, 1).unwrap();
        let out = beam_splitter(&psi, S).unwrap();
        assert!(out.amp2(1, 1).norm() < 1e-14);
        assert!((out.amp2(2, 0).norm_sqr() - 0.5).abs() < 1e-12);
        assert!((out.amp2(0, 2).norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unit_transmission_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi = random_vector(&mut rng, 5, 2, 5);
        let out = beam_splitter(&psi, 1.0).unwrap();
        assert!((out.amplitudes() - psi.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn rejects_out_of_range_transmissivity() {
        assert!(BeamSplitter::new(1.2).is_err());
        assert!(BeamSplitter::new(-0.1).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        // |2,2⟩ at cutoff 3 sends population to |4,0⟩.
        let psi = FockVector::two_mode_number(3, 2, 2).unwrap();
        assert!(matches!(beam_splitter(&psi, S), Err(Error::Truncation { .. })));
    }

    #[test]
    fn density_and_vector_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = random_vector(&mut rng, 5, 2, 5);
        let bs = BeamSplitter::new(0.6).unwrap();
        let a = bs.apply(&psi).unwrap().to_density();
        let b = bs.apply_density(&psi.to_density()).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_vacuum() {
        let v = DensityOperator::vacuum(3).unwrap();
        let vv = tensor(&v, &v).unwrap();
        assert_eq!(partial_trace(&vv, 0).unwrap(), v);
        assert!(matches!(partial_trace(&vv, 2), Err(Error::InvalidModeIndex(2))));
        assert!(partial_trace(&v, 0).is_err());
    }

    #[test]
    fn reduced_state_matches_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_vector(&mut rng, 4, 2, 7);
        for keep in 0..2 {
            let a = reduced_state(&psi, keep).unwrap();
            let b = partial_trace(&psi.to_density(), keep).unwrap();
            assert!((a.matrix() - b.matrix()).norm() < 1e-13);
        }
    }

    #[test]
    fn loss_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(&mut rng, 6, 5);
        let same = apply_loss(&rho, &LossChannel::new(1.0).unwrap()).unwrap();
        assert!((same.matrix() - rho.matrix()).norm() < 1e-14);
        let vac = apply_loss(&rho, &LossChannel::new(0.0).unwrap()).unwrap();
        assert!((vac.matrix() - DensityOperator::vacuum(6).unwrap().matrix()).norm() < 1e-12);
        assert!(LossChannel::new(1.5).is_err());
    }

    #[test]
    fn loss_matches_beam_splitter_dilation() {
        // Independent route: ρ ⊗ |0⟩⟨0| → splitter with t = √η → trace the reflected port.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(&mut rng, 6, 4);
        for eta in [0.0, 0.3, 0.428, 0.9] {
            let closed = apply_loss(&rho, &LossChannel::new(eta).unwrap()).unwrap();
            let dilated = tensor(&rho, &DensityOperator::vacuum(6).unwrap()).unwrap();
            let mixed = BeamSplitter::new(f64::sqrt(eta)).unwrap().apply_density(&dilated).unwrap();
            let kept = partial_trace(&mixed, 0).unwrap();
            assert!((closed.matrix() - kept.matrix()).norm() < 1e-12, "eta={eta}");
        }
    }

    #[test]
    fn purity_examples() {
        let pure = FockVector::number_state(3, 1).unwrap().to_density();
        assert!((purity(&pure).unwrap() - 1.0).abs() < 1e-12);
        let mixed = DensityOperator::diagonal(2, &[0.5, 0.5]).unwrap();
        assert!((purity(&mixed).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_density(&mut rng, 5, 5);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
        let a = DensityOperator::number(4, 0).unwrap();
        let b = DensityOperator::number(4, 2).unwrap();
        assert!(fidelity(&a, &b).unwrap() < 1e-12);
        for _ in 0..5 {
            let x = random_vector(&mut rng, 5, 1, 5);
            let y = random_vector(&mut rng, 5, 1, 5);
            let f = fidelity(&x.to_density(), &y.to_density()).unwrap();
            let o = overlap(&x, &y).unwrap();
            assert!((f - o).abs() < 1e-8, "{f} vs {o}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn beam_splitter_is_unitary(seed in any::<u64>(), t in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random_vector(&mut rng, 6, 2, 6);
            let out = beam_splitter(&psi, t).unwrap();
            prop_assert!((out.norm_sqr() - psi.norm_sqr()).abs() < 1e-10);
        }

        #[test]
        fn loss_is_trace_preserving_and_positive(seed in any::<u64>(), eta in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(&mut rng, 7, 6);
            let out = apply_loss(&rho, &LossChannel::new(eta).unwrap()).unwrap();
            prop_assert!((out.trace() - 1.0).abs() < 1e-9);
            prop_assert!(out.eigenvalues().unwrap().iter().all(|v| *v >= -1e-9));
        }

        #[test]
        fn losses_compose(seed in any::<u64>(), e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(&mut rng, 7, 7);
            let c1 = LossChannel::new(e1).unwrap();
            let c2 = LossChannel::new(e2).unwrap();
            let twice = apply_loss(&apply_loss(&rho, &c1).unwrap(), &c2).unwrap();
            let once = apply_loss(&rho, &c1.then(&c2)).unwrap();
            prop_assert!((twice.matrix() - once.matrix()).norm() < 1e-9);
        }

        #[test]
        fn partial_trace_inverts_tensor(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_density(&mut rng, 4, 4);
            let b = random_density(&mut rng, 4, 4);
            let ab = tensor(&a, &b).unwrap();
            prop_assert!((partial_trace(&ab, 0).unwrap().matrix() - a.matrix()).norm() < 1e-10);
            prop_assert!((partial_trace(&ab, 1).unwrap().matrix() - b.matrix()).norm() < 1e-10);
        }

        #[test]
        fn fidelity_is_symmetric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_density(&mut rng, 5, 5);
            let b = random_density(&mut rng, 5, 5);
            let f1 = fidelity(&a, &b).unwrap();
            let f2 = fidelity(&b, &a).unwrap();
            prop_assert!((f1 - f2).abs() < 1e-8);
            prop_assert!((0.0..=1.0).contains(&f1));
        }
    }
}

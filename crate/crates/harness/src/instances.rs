//! Random problem generators for the compressed-sensing and logistic
//! regression experiments.

use nalgebra::{DMatrix, DVector};
use partialreg_core::{LinearSystem, LogRegData};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{HarnessError, Result};
use crate::rng::instance_rng;

/// Shape, sparsity and noise of one compressed-sensing instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsInstanceSpec {
    pub m: usize,
    pub n: usize,
    /// Number of nonzeros in the ground truth.
    pub k: usize,
    /// Standard deviation of the additive noise; zero for a noiseless instance.
    pub noise_std: f64,
    pub seed: u64,
    pub stream: u64,
}

impl CsInstanceSpec {
    pub fn noiseless(m: usize, n: usize, k: usize, seed: u64) -> Self {
        CsInstanceSpec {
            m,
            n,
            k,
            noise_std: 0.0,
            seed,
            stream: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > self.n {
            return Err(HarnessError::Domain(format!(
                "need 1 <= m <= n, got m = {}, n = {}",
                self.m, self.n
            )));
        }
        if self.k == 0 || self.k > self.n {
            return Err(HarnessError::Domain(format!(
                "need 1 <= K <= n, got K = {}, n = {}",
                self.k, self.n
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(HarnessError::Domain(format!(
                "noise_std must be >= 0, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsInstance {
    /// `sigma` is `||A x_true - b||`, zero for noiseless instances.
    pub system: LinearSystem,
    pub x_true: DVector<f64>,
}

/// Gaussian sensing matrix with orthonormal rows and a `K`-sparse Gaussian
/// signal on a uniformly random support.
pub fn gen_cs_instance(spec: &CsInstanceSpec) -> Result<CsInstance> {
    spec.validate()?;
    let mut rng = instance_rng(spec.seed, spec.stream);
    let support = rand::seq::index::sample(&mut rng, spec.n, spec.k);
    let mut x_true = DVector::zeros(spec.n);
    for i in support.iter() {
        x_true[i] = rng.sample(StandardNormal);
    }
    let raw = DMatrix::<f64>::from_fn(spec.n, spec.m, |_, _| rng.sample(StandardNormal));
    let a = raw.qr().q().transpose();
    let mut b = &a * &x_true;
    if spec.noise_std == 0.0 {
        return Ok(CsInstance {
            system: LinearSystem::noiseless(a, b)?,
            x_true,
        });
    }
    b += DVector::<f64>::from_fn(spec.m, |_, _| {
        spec.noise_std * rng.sample::<f64, _>(StandardNormal)
    });
    let system = LinearSystem::noiseless(a, b)?;
    // measured through the solver's own residual so the truth is exactly feasible
    let sigma = system.residual(&x_true)?.norm();
    Ok(CsInstance {
        system: system.with_sigma(sigma)?,
        x_true,
    })
}

/// Unit-norm frame of `n` columns in `R^m` with small mutual coherence.
///
/// Starts from a Gaussian matrix and descends the potential
/// `sum_{i != j} |<a_i, a_j>|^p` on the product of spheres, which pushes the
/// largest inner product towards the Welch bound.
pub fn gen_incoherent_frame(m: usize, n: usize, seed: u64, stream: u64) -> Result<DMatrix<f64>> {
    const ITERS: usize = 3000;
    const POWER: i32 = 16;
    const STEP: f64 = 0.05;
    if m == 0 || n == 0 {
        return Err(HarnessError::Domain(format!(
            "frame needs m, n >= 1, got {m} x {n}"
        )));
    }
    let mut rng = instance_rng(seed, stream);
    let mut a = DMatrix::<f64>::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    normalize_columns(&mut a);
    for _ in 0..ITERS {
        let mut gram = a.tr_mul(&a);
        gram.fill_diagonal(0.0);
        let mu = gram.amax();
        if mu == 0.0 {
            break;
        }
        let weights = gram.map(|g| (g / mu).powi(POWER - 1));
        a -= (STEP * mu) * (&a * weights);
        normalize_columns(&mut a);
    }
    Ok(a)
}

/// Largest absolute inner product between distinct columns, assuming unit columns.
pub fn coherence(a: &DMatrix<f64>) -> f64 {
    let mut gram = a.tr_mul(a);
    gram.fill_diagonal(0.0);
    gram.amax()
}

fn normalize_columns(a: &mut DMatrix<f64>) {
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
}

/// `m / 2` positive samples with features `N(mu+_j, 1)` and `m / 2` negative
/// samples with features `N(mu-_j, 1)`, where `mu+_j ~ U[0, 1]` and
/// `mu-_j ~ U[-1, 0]` are drawn once per feature. Positive rows come first.
pub fn gen_logreg_instance(m: usize, n: usize, seed: u64, stream: u64) -> Result<LogRegData> {
    if m == 0 || !m.is_multiple_of(2) {
        return Err(HarnessError::Domain(format!(
            "sample count must be even and positive, got {m}"
        )));
    }
    if n == 0 {
        return Err(HarnessError::Domain("need at least one feature".into()));
    }
    let mut rng = instance_rng(seed, stream);
    let pos = Uniform::new_inclusive(0.0, 1.0).expect("valid range");
    let neg = Uniform::new_inclusive(-1.0, 0.0).expect("valid range");
    let mu_pos: Vec<f64> = (0..n).map(|_| pos.sample(&mut rng)).collect();
    let mu_neg: Vec<f64> = (0..n).map(|_| neg.sample(&mut rng)).collect();
    let half = m / 2;
    let mut samples = DMatrix::zeros(m, n);
    for i in 0..m {
        let mu = if i < half { &mu_pos } else { &mu_neg };
        for j in 0..n {
            samples[(i, j)] = mu[j] + rng.sample::<f64, _>(StandardNormal);
        }
    }
    let outcomes = DVector::from_fn(m, |i, _| if i < half { 1.0 } else { -1.0 });
    Ok(LogRegData::new(samples, outcomes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(noise_std: f64) -> CsInstanceSpec {
        CsInstanceSpec {
            m: 8,
            n: 20,
            k: 3,
            noise_std,
            seed: 11,
            stream: 4,
        }
    }

    #[test]
    fn noiseless_instance_is_consistent() {
        let inst = gen_cs_instance(&spec(0.0)).unwrap();
        let a = inst.system.a();
        let gram = a * a.transpose();
        assert!((gram - DMatrix::identity(8, 8)).amax() < 1e-10);
        assert!(inst.system.residual(&inst.x_true).unwrap().norm() < 1e-14);
        assert_eq!(inst.x_true.iter().filter(|v| **v != 0.0).count(), 3);
        assert_eq!(inst.system.sigma(), 0.0);
    }

    #[test]
    fn noisy_instance_records_sigma() {
        let inst = gen_cs_instance(&spec(0.01)).unwrap();
        let res = inst.system.residual(&inst.x_true).unwrap().norm();
        assert!(inst.system.sigma() > 0.0);
        assert_eq!(res, inst.system.sigma());
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(
            gen_cs_instance(&spec(0.01)).unwrap(),
            gen_cs_instance(&spec(0.01)).unwrap()
        );
        let mut other = spec(0.01);
        other.stream = 5;
        assert_ne!(
            gen_cs_instance(&spec(0.01)).unwrap(),
            gen_cs_instance(&other).unwrap()
        );
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut s = spec(0.0);
        s.k = 21;
        assert!(gen_cs_instance(&s).is_err());
        s.k = 3;
        s.m = 21;
        assert!(gen_cs_instance(&s).is_err());
        s.m = 8;
        s.noise_std = -1.0;
        assert!(gen_cs_instance(&s).is_err());
    }

    #[test]
    fn frame_coherence_drops_below_random() {
        let a = gen_incoherent_frame(10, 16, 3, 0).unwrap();
        for col in a.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        // Welch bound for 16 lines in R^10 is 0.2
        let mu = coherence(&a);
        assert!(mu > 0.2 && mu < 0.25, "{mu}");
        assert_eq!(a, gen_incoherent_frame(10, 16, 3, 0).unwrap());
    }

    #[test]
    fn logreg_balanced_classes() {
        let d = gen_logreg_instance(4, 2, 3, 0).unwrap();
        let pos = d.outcomes().iter().filter(|&&v| v == 1.0).count();
        assert_eq!(pos, 2);
        assert_eq!(d.num_features(), 2);
        assert_eq!(d, gen_logreg_instance(4, 2, 3, 0).unwrap());
        assert!(gen_logreg_instance(5, 2, 3, 0).is_err());
    }

    #[test]
    fn logreg_class_means_in_range() {
        let m = 4000;
        let d = gen_logreg_instance(m, 5, 9, 1).unwrap();
        let half = m / 2;
        let slack = 3.0 / (m as f64).sqrt();
        for j in 0..5 {
            let col = d.samples().column(j);
            let pos: f64 = col.rows(0, half).sum() / half as f64;
            let neg: f64 = col.rows(half, half).sum() / half as f64;
            assert!((-slack..=1.0 + slack).contains(&pos), "feature {j}: {pos}");
            assert!((-1.0 - slack..=slack).contains(&neg), "feature {j}: {neg}");
        }
    }
}

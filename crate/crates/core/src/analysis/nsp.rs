//! Sampling falsifiers for the local and global null space properties of a
//! candidate solution `x*`.
//!
//! Both properties quantify over every null-space direction, so sampling can
//! only refute them. A `NotFalsified` verdict is evidence, not a certificate.
//!
//! For a fixed `h` the inner max/min over index sets is computed in closed
//! form: the maximizing `J` in the local margin takes the largest `phi(|h_i|)`
//! from the tie set, and the minimizing pair in the global margin takes the
//! smallest values from the zero set and the largest from the support.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{dims, domain, Result};
use crate::linalg::null_space;
use crate::regularizers::Regularizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NspKind {
    Local,
    Global,
}

/// Margin of one direction together with the index sets attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub value: f64,
    /// Positive side: `I_0(x*)` (local) or `J_0` (global).
    pub plus: Vec<usize>,
    /// Negative side: `J ∪ I^{<+}` (local) or `J_1` (global).
    pub minus: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NspStatus {
    /// A null-space direction with non-positive margin.
    Falsified {
        witness: DVector<f64>,
        margin: Margin,
    },
    NotFalsified {
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NspVerdict {
    pub kind: NspKind,
    pub status: NspStatus,
    pub samples_tested: usize,
    pub min_margin: f64,
    pub mean_margin: f64,
    /// Set when the verdict is vacuous.
    pub note: Option<String>,
}

impl NspVerdict {
    pub fn is_falsified(&self) -> bool {
        matches!(self.status, NspStatus::Falsified { .. })
    }
}

/// Index sets of `x*` relative to the `(r+1)`-th largest magnitude.
struct Partition {
    zeros: Vec<usize>,
    ties: Vec<usize>,
    below: Vec<usize>,
    support: Vec<usize>,
    tie_take: usize,
}

fn partition(x: &DVector<f64>, r: usize) -> Result<Partition> {
    let n = x.len();
    if r >= n {
        return Err(domain(format!("r = {r} must be below n = {n}")));
    }
    let nnz = x.iter().filter(|v| **v != 0.0).count();
    if nnz < r {
        return Err(domain(format!(
            "candidate has {nnz} nonzeros, fewer than r = {r}"
        )));
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let pivot = mags[r];
    let zeros: Vec<usize> = (0..n).filter(|&i| x[i] == 0.0).collect();
    let ties: Vec<usize> = (0..n).filter(|&i| x[i].abs() == pivot).collect();
    let below: Vec<usize> = (0..n)
        .filter(|&i| x[i] != 0.0 && x[i].abs() < pivot)
        .collect();
    let support: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
    let tie_take = nnz - r - below.len();
    Ok(Partition {
        zeros,
        ties,
        below,
        support,
        tie_take,
    })
}

fn phi_sum(phi: &Regularizer, h: &DVector<f64>, idx: &[usize]) -> f64 {
    idx.iter().map(|&i| phi.eval_abs(h[i].abs())).sum()
}

/// `sum_{I_0} phi(|h_i|) - max_J sum_{J ∪ I^{<+}} phi(|h_i|)`.
pub fn lnsp_margin(
    x_star: &DVector<f64>,
    r: usize,
    phi: &Regularizer,
    h: &DVector<f64>,
) -> Result<Margin> {
    if h.len() != x_star.len() {
        return Err(dims("direction and candidate differ in length"));
    }
    let p = partition(x_star, r)?;
    Ok(lnsp_margin_with(&p, phi, h))
}

fn lnsp_margin_with(p: &Partition, phi: &Regularizer, h: &DVector<f64>) -> Margin {
    let mut ties = p.ties.clone();
    ties.sort_by(|&i, &j| {
        phi.eval_abs(h[j].abs())
            .total_cmp(&phi.eval_abs(h[i].abs()))
            .then(i.cmp(&j))
    });
    let mut minus: Vec<usize> = ties[..p.tie_take].to_vec();
    minus.extend_from_slice(&p.below);
    minus.sort_unstable();
    let value = phi_sum(phi, h, &p.zeros) - phi_sum(phi, h, &minus);
    Margin {
        value,
        plus: p.zeros.clone(),
        minus,
    }
}

/// `min over (J_0, J_1)` of `sum_{J_0} phi(|h_i|) - sum_{J_1} phi(|h_i|)` with
/// `J_0 ⊆ I_0(x*)`, `J_1 ⊆ supp(x*)`, `|J_0| + |J_1| = n - r`.
pub fn gnsp_margin(
    x_star: &DVector<f64>,
    r: usize,
    phi: &Regularizer,
    h: &DVector<f64>,
) -> Result<Margin> {
    if h.len() != x_star.len() {
        return Err(dims("direction and candidate differ in length"));
    }
    let p = partition(x_star, r)?;
    Ok(gnsp_margin_with(&p, x_star.len() - r, phi, h))
}

fn gnsp_margin_with(p: &Partition, size: usize, phi: &Regularizer, h: &DVector<f64>) -> Margin {
    let key = |i: usize| phi.eval_abs(h[i].abs());
    let mut zeros = p.zeros.clone();
    zeros.sort_by(|&i, &j| key(i).total_cmp(&key(j)).then(i.cmp(&j)));
    let mut support = p.support.clone();
    support.sort_by(|&i, &j| key(j).total_cmp(&key(i)).then(i.cmp(&j)));

    let prefix = |idx: &[usize]| -> Vec<f64> {
        let mut acc = vec![0.0; idx.len() + 1];
        for (k, &i) in idx.iter().enumerate() {
            acc[k + 1] = acc[k] + key(i);
        }
        acc
    };
    let zero_sums = prefix(&zeros);
    let supp_sums = prefix(&support);
    let lo = size.saturating_sub(support.len());
    let hi = zeros.len().min(size);
    let (mut best, mut best_j0) = (f64::INFINITY, lo);
    for j0 in lo..=hi {
        let v = zero_sums[j0] - supp_sums[size - j0];
        if v < best {
            best = v;
            best_j0 = j0;
        }
    }
    let mut plus = zeros[..best_j0].to_vec();
    let mut minus = support[..size - best_j0].to_vec();
    plus.sort_unstable();
    minus.sort_unstable();
    Margin {
        value: best,
        plus,
        minus,
    }
}

/// Samples `h` in the null space of `a` with `0 < ||h|| < eps_ball` and
/// reports the first direction with non-positive local margin.
pub fn lnsp_falsify(
    a: &DMatrix<f64>,
    x_star: &DVector<f64>,
    r: usize,
    phi: &Regularizer,
    eps_ball: f64,
    n_samples: usize,
    seed: u64,
) -> Result<NspVerdict> {
    if !(eps_ball > 0.0 && eps_ball.is_finite()) {
        return Err(domain(format!(
            "ball radius must be positive, got {eps_ball}"
        )));
    }
    let p = partition(x_star, r)?;
    falsify(
        a,
        x_star,
        NspKind::Local,
        n_samples,
        seed,
        |rng| rng.random_range(0.0..1.0) * eps_ball,
        |h| lnsp_margin_with(&p, phi, h),
    )
}

/// Samples null-space directions at radii spread log-uniformly over
/// `[1e-3, 1e3]` and reports the first with non-positive global margin.
pub fn gnsp_falsify(
    a: &DMatrix<f64>,
    x_star: &DVector<f64>,
    r: usize,
    phi: &Regularizer,
    n_samples: usize,
    seed: u64,
) -> Result<NspVerdict> {
    let p = partition(x_star, r)?;
    let size = x_star.len() - r;
    falsify(
        a,
        x_star,
        NspKind::Global,
        n_samples,
        seed,
        |rng| 10f64.powf(rng.random_range(-3.0..3.0)),
        |h| gnsp_margin_with(&p, size, phi, h),
    )
}

fn falsify(
    a: &DMatrix<f64>,
    x_star: &DVector<f64>,
    kind: NspKind,
    n_samples: usize,
    seed: u64,
    mut radius: impl FnMut(&mut ChaCha8Rng) -> f64,
    margin: impl Fn(&DVector<f64>) -> Margin,
) -> Result<NspVerdict> {
    if a.ncols() != x_star.len() {
        return Err(dims(format!(
            "matrix has {} columns but candidate has length {}",
            a.ncols(),
            x_star.len()
        )));
    }
    let basis = null_space(a);
    if basis.ncols() == 0 {
        return Ok(NspVerdict {
            kind,
            status: NspStatus::NotFalsified { samples: 0 },
            samples_tested: 0,
            min_margin: f64::INFINITY,
            mean_margin: f64::NAN,
            note: Some("null space is trivial; the property holds vacuously".into()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    let mut total = 0.0;
    for s in 0..n_samples {
        let coef = DVector::from_fn(basis.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let dir = &basis * coef;
        let norm = dir.norm();
        let mut rad = radius(&mut rng);
        while rad <= 0.0 {
            rad = radius(&mut rng);
        }
        let h = dir * (rad / norm);
        let m = margin(&h);
        total += m.value;
        min_margin = min_margin.min(m.value);
        if m.value <= 0.0 {
            return Ok(NspVerdict {
                kind,
                status: NspStatus::Falsified {
                    witness: h,
                    margin: m,
                },
                samples_tested: s + 1,
                min_margin,
                mean_margin: total / (s + 1) as f64,
                note: None,
            });
        }
    }
    Ok(NspVerdict {
        kind,
        status: NspStatus::NotFalsified { samples: n_samples },
        samples_tested: n_samples,
        min_margin,
        mean_margin: if n_samples == 0 {
            f64::NAN
        } else {
            total / n_samples as f64
        },
        note: None,
    })
}

/// `||h_{-max(k)}||_q^q - ||h_{max(k)}||_q^q`: mass outside the `k` largest
/// magnitudes minus mass inside them.
pub fn tail_minus_head(h: &DVector<f64>, k: usize, q: f64) -> f64 {
    let mut mags: Vec<f64> = h.iter().map(|v| v.abs().powf(q)).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let k = k.min(mags.len());
    mags[k..].iter().sum::<f64>() - mags[..k].iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizers::RegularizerKind;
    use itertools::Itertools;

    fn example_a() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            5,
            &[
                1., -1., 0., 0., 0., 1., 0., 1., 0., 0., 1., 0., 0., 1., 0., 1., 0., 0., 0., 1.,
            ],
        )
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    /// Local margin by enumerating every admissible `J`.
    fn lnsp_enumerated(x: &DVector<f64>, r: usize, phi: &Regularizer, h: &DVector<f64>) -> f64 {
        let p = partition(x, r).unwrap();
        let best = p
            .ties
            .iter()
            .copied()
            .combinations(p.tie_take)
            .map(|j| phi_sum(phi, h, &j))
            .fold(f64::NEG_INFINITY, f64::max);
        phi_sum(phi, h, &p.zeros) - best - phi_sum(phi, h, &p.below)
    }

    /// Global margin by enumerating every admissible `(J_0, J_1)`.
    fn gnsp_enumerated(x: &DVector<f64>, r: usize, phi: &Regularizer, h: &DVector<f64>) -> f64 {
        let p = partition(x, r).unwrap();
        let size = x.len() - r;
        let mut best = f64::INFINITY;
        for j0 in 0..=p.zeros.len().min(size) {
            if size - j0 > p.support.len() {
                continue;
            }
            for a in p.zeros.iter().copied().combinations(j0) {
                for b in p.support.iter().copied().combinations(size - j0) {
                    best = best.min(phi_sum(phi, h, &a) - phi_sum(phi, h, &b));
                }
            }
        }
        best
    }

    #[test]
    fn trivial_null_space_is_vacuous() {
        let a = DMatrix::identity(3, 3);
        let x = v(&[1.0, 0.0, 2.0]);
        let l = lnsp_falsify(&a, &x, 1, &Regularizer::l1(), 0.1, 100, 1).unwrap();
        assert_eq!(l.status, NspStatus::NotFalsified { samples: 0 });
        assert!(l.note.is_some());
        let g = gnsp_falsify(&a, &x, 1, &Regularizer::l1(), 100, 1).unwrap();
        assert!(!g.is_falsified());
    }

    #[test]
    fn example_sparsest_solution_passes_local_check() {
        let x = v(&[0., 0., 1., 2., 3.]);
        let verdict =
            lnsp_falsify(&example_a(), &x, 2, &Regularizer::l1(), 0.5, 10_000, 3).unwrap();
        assert_eq!(verdict.status, NspStatus::NotFalsified { samples: 10_000 });
        assert!(verdict.min_margin > 0.0);
    }

    #[test]
    fn example_full_l1_solution_fails_local_check() {
        let x = v(&[1., 1., 0., 1., 2.]);
        let verdict = lnsp_falsify(&example_a(), &x, 2, &Regularizer::l1(), 0.5, 100, 3).unwrap();
        let NspStatus::Falsified { witness, margin } = verdict.status else {
            panic!("expected a witness");
        };
        // h = c (1, 1, -1, -1, -1): margin |c| - 2|c|
        assert!((margin.value + witness[0].abs()).abs() < 1e-12);
        assert!((example_a() * &witness).norm() <= 1e-10 * witness.norm());
        let again = lnsp_margin(&x, 2, &Regularizer::l1(), &witness).unwrap();
        assert!(again.value <= 0.0);
    }

    #[test]
    fn fully_dense_candidate_fails_global_check() {
        let x = v(&[1., 1., 1., 1., 1.]);
        let verdict = gnsp_falsify(&example_a(), &x, 0, &Regularizer::l1(), 10, 2).unwrap();
        assert!(verdict.is_falsified());
        assert_eq!(verdict.samples_tested, 1);
    }

    #[test]
    fn closed_form_margins_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for kind in RegularizerKind::ALL {
            let phi = Regularizer::with_defaults(kind);
            for _ in 0..40 {
                let n = rng.random_range(3..8);
                // small integer magnitudes create ties
                let x = DVector::from_fn(n, |_, _| {
                    let m = rng.random_range(0..4) as f64;
                    if rng.random_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                });
                let nnz = x.iter().filter(|v| **v != 0.0).count();
                if nnz == 0 {
                    continue;
                }
                let r = rng.random_range(0..=nnz.min(n - 1));
                let h = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let l = lnsp_margin(&x, r, &phi, &h).unwrap().value;
                assert!((l - lnsp_enumerated(&x, r, &phi, &h)).abs() < 1e-12);
                let g = gnsp_margin(&x, r, &phi, &h).unwrap().value;
                assert!((g - gnsp_enumerated(&x, r, &phi, &h)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_too_sparse_candidate() {
        let x = v(&[0., 0., 1., 0., 0.]);
        assert!(lnsp_falsify(&example_a(), &x, 2, &Regularizer::l1(), 0.1, 10, 0).is_err());
        assert!(gnsp_falsify(&example_a(), &x, 5, &Regularizer::l1(), 10, 0).is_err());
    }

    #[test]
    fn tail_minus_head_examples() {
        let h = v(&[3.0, -1.0, 2.0, 0.5]);
        assert_eq!(tail_minus_head(&h, 1, 1.0), 3.5 - 3.0);
        assert_eq!(tail_minus_head(&h, 0, 1.0), 6.5);
    }
}

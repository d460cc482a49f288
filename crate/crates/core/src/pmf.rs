//! Probability mass functions over nominal classes.
//!
//! Class indices are zero-based throughout the library. File formats use
//! one-based labels; conversion happens at the I/O boundary.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default tolerance on `|sum - 1|` for strict validation.
pub const DEFAULT_EPS_NORM: f64 = 1e-9;
/// Default relative tolerance for deciding that two probabilities tie for the mode.
pub const DEFAULT_EPS_MODE: f64 = 1e-9;

/// How [`Pmf::new`] treats input that does not sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormPolicy {
    /// Reject unless `|sum - 1| <= eps_norm`, then divide by the sum.
    Strict { eps_norm: f64 },
    /// Divide by the sum, which must be positive.
    Renormalize,
}

impl Default for NormPolicy {
    fn default() -> Self {
        NormPolicy::Strict {
            eps_norm: DEFAULT_EPS_NORM,
        }
    }
}

/// A validated probability vector over `K >= 2` classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    probs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    class_names: Option<Vec<String>>,
}

/// Mode analysis of a [`Pmf`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    /// Largest probability.
    pub modal_prob: f64,
    /// Indices whose probability ties with `modal_prob`, ascending.
    pub mode_indices: Vec<usize>,
    pub mode_count: usize,
    /// 0 on modal classes, 1 elsewhere.
    pub distance_from_mode: Vec<f64>,
}

impl ModeSummary {
    pub fn is_unimodal(&self) -> bool {
        self.mode_count == 1
    }

    /// `E_p[d]`, the expected distance from the mode set.
    pub fn expected_distance(&self, pmf: &Pmf) -> f64 {
        pmf.probs
            .iter()
            .zip(&self.distance_from_mode)
            .map(|(p, d)| p * d)
            .sum()
    }
}

pub(crate) fn check_tolerance(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTolerance { name, value })
    }
}

impl Pmf {
    pub fn new(values: &[f64], policy: NormPolicy) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::DegenerateLength { len: values.len() });
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if v < 0.0 {
                return Err(Error::NegativeProbability { index, value: v });
            }
        }
        let sum: f64 = values.iter().sum();
        match policy {
            NormPolicy::Strict { eps_norm } => {
                check_tolerance("eps_norm", eps_norm)?;
                if (sum - 1.0).abs() > eps_norm {
                    return Err(Error::SumOutOfTolerance {
                        sum,
                        tolerance: eps_norm,
                    });
                }
            }
            NormPolicy::Renormalize => {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::SumOutOfTolerance {
                        sum,
                        tolerance: f64::INFINITY,
                    });
                }
            }
        }
        let probs = if sum == 1.0 {
            values.to_vec()
        } else {
            values.iter().map(|v| v / sum).collect()
        };
        Ok(Pmf {
            probs,
            class_names: None,
        })
    }

    /// Attaches class identifiers; they must be `K` distinct strings.
    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        let mut sorted: Vec<&String> = names.iter().collect();
        sorted.sort();
        sorted.dedup();
        if names.len() != self.probs.len() || sorted.len() != names.len() {
            return Err(Error::InvalidClassNames {
                expected: self.probs.len(),
                got: sorted.len(),
            });
        }
        self.class_names = Some(names);
        Ok(self)
    }

    /// Degenerate PMF with all mass on class `k`.
    pub fn point_mass(num_classes: usize, k: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::DegenerateLength { len: num_classes });
        }
        if k >= num_classes {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: num_classes,
            });
        }
        let mut probs = vec![0.0; num_classes];
        probs[k] = 1.0;
        Ok(Pmf {
            probs,
            class_names: None,
        })
    }

    pub fn uniform(num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::DegenerateLength { len: num_classes });
        }
        Ok(Pmf {
            probs: vec![1.0 / num_classes as f64; num_classes],
            class_names: None,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Name of class `k`, falling back to its one-based index.
    pub fn class_name(&self, k: usize) -> String {
        match &self.class_names {
            Some(names) => names[k].clone(),
            None => (k + 1).to_string(),
        }
    }

    pub fn modal_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Classes within `eps_mode * p̂` of the modal probability count as modes.
    pub fn mode_summary(&self, eps_mode: f64) -> ModeSummary {
        let modal_prob = self.modal_prob();
        let threshold = modal_prob - eps_mode * modal_prob;
        let mode_indices: Vec<usize> = self
            .probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= threshold)
            .map(|(k, _)| k)
            .collect();
        let mut distance_from_mode = vec![1.0; self.probs.len()];
        for &k in &mode_indices {
            distance_from_mode[k] = 0.0;
        }
        ModeSummary {
            modal_prob,
            mode_count: mode_indices.len(),
            mode_indices,
            distance_from_mode,
        }
    }

    /// Expected 0/1 (Hamming) distance from a draw of this PMF to class `k`,
    /// which is `1 - p_k`.
    pub fn expected_distance_to_class(&self, k: usize) -> Result<f64> {
        let p = self.probs.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.probs.len(),
        })?;
        Ok(1.0 - p)
    }

    /// Inverse-CDF draw of a class index.
    pub fn sample_class<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut last_positive = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = k;
            }
            cum += p;
            if u < cum {
                return k;
            }
        }
        // cumulative sum fell a few ulps short of 1
        last_positive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn strict(v: &[f64]) -> Result<Pmf> {
        Pmf::new(v, NormPolicy::default())
    }

    #[test]
    fn strict_accepts_valid_vectors_unchanged() {
        let p = strict(&[0.75, 0.25]).unwrap();
        assert_eq!(p.probs(), &[0.75, 0.25]);
        let p = strict(&[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn renormalize_is_proportional() {
        let p = Pmf::new(&[2.0, 1.0, 1.0], NormPolicy::Renormalize).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(strict(&[1.0]), Err(Error::DegenerateLength { len: 1 }));
        assert!(matches!(
            strict(&[0.5, -0.1, 0.6]),
            Err(Error::NegativeProbability { index: 1, .. })
        ));
        assert!(matches!(
            strict(&[0.5, 0.6]),
            Err(Error::SumOutOfTolerance { .. })
        ));
        assert_eq!(
            strict(&[0.5, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        );
        assert!(matches!(
            Pmf::new(&[0.0, 0.0], NormPolicy::Renormalize),
            Err(Error::SumOutOfTolerance { .. })
        ));
        assert!(matches!(
            Pmf::new(&[0.5, 0.5], NormPolicy::Strict { eps_norm: 0.0 }),
            Err(Error::InvalidTolerance { .. })
        ));
    }

    #[test]
    fn strict_tolerance_boundary() {
        assert!(strict(&[0.5, 0.5 + 5e-10]).is_ok());
        assert!(strict(&[0.5, 0.5 + 5e-9]).is_err());
        let p = strict(&[0.5, 0.5 + 5e-10]).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn class_names_must_be_distinct() {
        let p = strict(&[0.5, 0.5]).unwrap();
        assert!(p.clone().with_class_names(vec!["a".into(), "a".into()]).is_err());
        assert!(p.clone().with_class_names(vec!["a".into()]).is_err());
        let named = p.with_class_names(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(named.class_name(1), "b");
        assert_eq!(Pmf::uniform(3).unwrap().class_name(0), "1");
    }

    #[test]
    fn mode_summary_examples() {
        let p = strict(&[0.5, 0.1, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let m = p.mode_summary(DEFAULT_EPS_MODE);
        assert!((m.modal_prob - 0.5).abs() < 1e-15);
        assert_eq!(m.mode_count, 1);
        assert_eq!(m.mode_indices, vec![0]);
        assert_eq!(m.distance_from_mode, vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);

        let u = Pmf::uniform(4).unwrap().mode_summary(DEFAULT_EPS_MODE);
        assert_eq!(u.modal_prob, 0.25);
        assert_eq!(u.mode_count, 4);
        assert_eq!(u.distance_from_mode, vec![0.0; 4]);
    }

    #[test]
    fn near_ties_count_as_modes_at_tolerance() {
        let p = strict(&[0.5, 0.5 - 1e-15, 1e-15]).unwrap();
        assert_eq!(p.mode_summary(1e-9).mode_count, 2);
        let p = strict(&[0.5, 0.5 - 1e-6, 1e-6]).unwrap();
        assert_eq!(p.mode_summary(1e-9).mode_count, 1);
    }

    #[test]
    fn expected_distance_examples() {
        let p = strict(&[0.75, 0.25]).unwrap();
        assert_eq!(p.expected_distance_to_class(0).unwrap(), 0.25);
        let pm = Pmf::point_mass(4, 2).unwrap();
        assert_eq!(pm.expected_distance_to_class(2).unwrap(), 0.0);
        let c = strict(&[0.5, 0.46, 0.01, 0.01, 0.01, 0.01]).unwrap();
        assert!((c.expected_distance_to_class(1).unwrap() - 0.54).abs() < 1e-15);
        assert!(matches!(
            c.expected_distance_to_class(6),
            Err(Error::IndexOutOfRange { index: 6, len: 6 })
        ));
    }

    #[test]
    fn endpoint_constructors() {
        assert_eq!(Pmf::point_mass(3, 0).unwrap().probs(), &[1.0, 0.0, 0.0]);
        assert_eq!(Pmf::uniform(6).unwrap().probs(), &[1.0 / 6.0; 6]);
        assert_eq!(Pmf::uniform(2).unwrap().probs(), &[0.5, 0.5]);
        assert!(Pmf::uniform(1).is_err());
        assert!(Pmf::point_mass(1, 0).is_err());
        assert!(Pmf::point_mass(3, 3).is_err());
    }

    #[test]
    fn sampling_point_mass_and_determinism() {
        let pm = Pmf::point_mass(5, 3).unwrap();
        let mut rng = seeded(1);
        assert!((0..1000).all(|_| pm.sample_class(&mut rng) == 3));

        let p = strict(&[0.2, 0.3, 0.5]).unwrap();
        let a: Vec<usize> = {
            let mut r = seeded(42);
            (0..100).map(|_| p.sample_class(&mut r)).collect()
        };
        let b: Vec<usize> = {
            let mut r = seeded(42);
            (0..100).map(|_| p.sample_class(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_uniform_binary_frequency() {
        let p = Pmf::uniform(2).unwrap();
        let n = 1_000_000;
        let mut rng = seeded(2024);
        let ones = (0..n).filter(|_| p.sample_class(&mut rng) == 0).count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 3.0 * (0.25f64 / n as f64).sqrt());
    }

    #[test]
    fn sampling_never_returns_zero_probability_class() {
        let p = strict(&[0.0, 0.6, 0.0, 0.4, 0.0]).unwrap();
        let mut rng = seeded(3);
        for _ in 0..10_000 {
            let k = p.sample_class(&mut rng);
            assert!(k == 1 || k == 3);
        }
    }

    fn pmf_strategy() -> impl Strategy<Value = Vec<f64>> {
        (2usize..10).prop_flat_map(|k| prop::collection::vec(0.01f64..1.0, k))
    }

    proptest! {
        #[test]
        fn renormalize_is_scale_invariant(v in pmf_strategy(), c in 0.01f64..100.0) {
            let a = Pmf::new(&v, NormPolicy::Renormalize).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let b = Pmf::new(&scaled, NormPolicy::Renormalize).unwrap();
            for (x, y) in a.probs().iter().zip(b.probs()) {
                prop_assert!((x - y).abs() <= 1e-15);
            }
        }

        #[test]
        fn expected_distance_matches_hamming_sum(v in pmf_strategy()) {
            let p = Pmf::new(&v, NormPolicy::Renormalize).unwrap();
            for k in 0..p.num_classes() {
                let hamming: f64 = p.probs().iter().enumerate()
                    .map(|(j, pj)| if j == k { 0.0 } else { *pj })
                    .sum();
                prop_assert!((p.expected_distance_to_class(k).unwrap() - hamming).abs() <= 1e-15);
                prop_assert_eq!(p.expected_distance_to_class(k).unwrap(), 1.0 - p.probs()[k]);
            }
        }

        #[test]
        fn mode_summary_is_permutation_equivariant(v in pmf_strategy(), shift in 0usize..10) {
            let p = Pmf::new(&v, NormPolicy::Renormalize).unwrap();
            let k = p.num_classes();
            let perm: Vec<usize> = (0..k).map(|i| (i + shift) % k).collect();
            let permuted: Vec<f64> = perm.iter().map(|&i| p.probs()[i]).collect();
            let q = Pmf::new(&permuted, NormPolicy::Renormalize).unwrap();
            let mp = p.mode_summary(DEFAULT_EPS_MODE);
            let mq = q.mode_summary(DEFAULT_EPS_MODE);
            let mut mapped: Vec<usize> = mq.mode_indices.iter().map(|&j| perm[j]).collect();
            mapped.sort();
            prop_assert_eq!(mapped, mp.mode_indices);
        }
    }

    #[test]
    fn sampling_frequencies_converge() {
        let p = strict(&[0.05, 0.15, 0.3, 0.5]).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 4];
        let mut rng = seeded(99);
        for _ in 0..n {
            counts[p.sample_class(&mut rng)] += 1;
        }
        for (k, &c) in counts.iter().enumerate() {
            let pk = p.probs()[k];
            let freq = c as f64 / n as f64;
            assert!((freq - pk).abs() <= 4.0 * (pk * (1.0 - pk) / n as f64).sqrt());
        }
    }
}

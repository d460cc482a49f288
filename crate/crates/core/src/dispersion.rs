//! Normalized dispersion statistics for nominal PMFs.
//!
//! Every statistic maps a PMF over `K` classes into `[0, 1]`, taking the value
//! 0 exactly on point masses and 1 on the uniform PMF.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pmf::{ModeSummary, Pmf};

/// Identifier for each statistic in an [`UncertaintyReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Wvr,
    Uvr,
    Sdm,
    Entropy,
    EntropyStar,
    AlphaQuadratic,
    Iqv,
    Cnv,
}

impl Statistic {
    pub const ALL: [Statistic; 8] = [
        Statistic::Wvr,
        Statistic::Uvr,
        Statistic::Sdm,
        Statistic::Entropy,
        Statistic::EntropyStar,
        Statistic::AlphaQuadratic,
        Statistic::Iqv,
        Statistic::Cnv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Wvr => "wvr",
            Statistic::Uvr => "uvr",
            Statistic::Sdm => "sdm",
            Statistic::Entropy => "entropy",
            Statistic::EntropyStar => "entropy_star",
            Statistic::AlphaQuadratic => "alpha_quadratic",
            Statistic::Iqv => "iqv",
            Statistic::Cnv => "cnv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub wvr: f64,
    pub uvr: f64,
    pub sdm: f64,
    pub entropy: f64,
    pub entropy_star: f64,
    pub alpha_quadratic: f64,
    pub iqv: f64,
    pub cnv: f64,
    pub alpha: f64,
}

impl UncertaintyReport {
    pub fn get(&self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Wvr => self.wvr,
            Statistic::Uvr => self.uvr,
            Statistic::Sdm => self.sdm,
            Statistic::Entropy => self.entropy,
            Statistic::EntropyStar => self.entropy_star,
            Statistic::AlphaQuadratic => self.alpha_quadratic,
            Statistic::Iqv => self.iqv,
            Statistic::Cnv => self.cnv,
        }
    }
}

/// Median, mean, interquartile range and sample standard deviation of a
/// collection of statistic values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatisticSummary {
    pub median: f64,
    pub mean: f64,
    pub iqr: f64,
    pub sd: f64,
}

fn kf(pmf: &Pmf) -> f64 {
    pmf.num_classes() as f64
}

/// Wilcox's variation ratio, `1 - (K p̂ - 1)/(K - 1)`.
pub fn wvr(pmf: &Pmf) -> f64 {
    let k = kf(pmf);
    1.0 - (k * pmf.modal_prob() - 1.0) / (k - 1.0)
}

/// Universal variation ratio, `K²/(K²-1) (1 - p̂/m)` with `m` the number of modes.
///
/// Discontinuous wherever the mode count changes; `eps_mode` decides ties.
pub fn uvr(pmf: &Pmf, eps_mode: f64) -> f64 {
    uvr_with_modes(pmf, &pmf.mode_summary(eps_mode))
}

fn uvr_with_modes(pmf: &Pmf, modes: &ModeSummary) -> f64 {
    let k2 = kf(pmf) * kf(pmf);
    k2 / (k2 - 1.0) * (1.0 - modes.modal_prob / modes.mode_count as f64)
}

/// Standard deviation from the mode, `1 - sqrt(Σ (p̂ - p_k)² / (K - 1))`.
pub fn sdm(pmf: &Pmf) -> f64 {
    1.0 - sdm_root(pmf)
}

fn sdm_root(pmf: &Pmf) -> f64 {
    let p_hat = pmf.modal_prob();
    let ss: f64 = pmf.probs().iter().map(|p| (p_hat - p).powi(2)).sum();
    (ss / (kf(pmf) - 1.0)).max(0.0).sqrt()
}

/// Large-sample variance of the SDM estimated from `n` multinomial draws.
///
/// Valid for unimodal PMFs only; `eps_mode` decides unimodality.
pub fn sdm_sampling_variance(pmf: &Pmf, n: u64, eps_mode: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    let modes = pmf.mode_summary(eps_mode);
    if !modes.is_unimodal() {
        return Err(Error::MultimodalInput {
            modes: modes.mode_count,
        });
    }
    let root = sdm_root(pmf);
    if root <= 0.0 {
        return Err(Error::DegenerateSdm);
    }
    let k = kf(pmf);
    let p_hat = modes.modal_prob;
    let n = n as f64;
    let weighted: f64 = pmf
        .probs()
        .iter()
        .map(|p| p * (p_hat - p).powi(2))
        .sum();
    let numerator = p_hat * (1.0 - k * p_hat).powi(2) + weighted;
    let root2 = root * root;
    Ok(numerator / (n * (k - 1.0).powi(2) * root2) - root2 / n)
}

/// Normalized Shannon entropy `-Σ p_k log_K p_k`, with `0 log 0 = 0`.
pub fn entropy_norm(pmf: &Pmf) -> f64 {
    let ln_k = kf(pmf).ln();
    let h: f64 = pmf
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    (h / ln_k).clamp(0.0, 1.0)
}

/// `(K^f - 1)/(K - 1)`, a compression of a normalized statistic that keeps
/// 0 and 1 fixed.
pub fn star_transform(f: f64, num_classes: usize) -> f64 {
    let k = num_classes as f64;
    (k.powf(f) - 1.0) / (k - 1.0)
}

pub fn entropy_star(pmf: &Pmf) -> f64 {
    star_transform(entropy_norm(pmf), pmf.num_classes())
}

fn quadratic_kernel(pmf: &Pmf, alpha: f64) -> f64 {
    let k = kf(pmf);
    let scale = k.powf(2.0 * alpha - 1.0) / (k - 1.0).powf(alpha);
    let sum: f64 = pmf
        .probs()
        .iter()
        .map(|&p| (p * (1.0 - p)).powf(alpha))
        .sum();
    scale * sum
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// α-quadratic entropy, `K^(2α-1)/(K-1)^α Σ p_k^α (1 - p_k)^α` for α in (0, 1].
pub fn alpha_quadratic_entropy(pmf: &Pmf, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(quadratic_kernel(pmf, alpha))
}

/// Index of qualitative variation, `K/(K-1) (1 - Σ p_k²)`.
///
/// Evaluated as `K/(K-1) Σ p_k (1 - p_k)`, which is identical for a PMF and
/// free of cancellation near point masses.
pub fn iqv(pmf: &Pmf) -> f64 {
    quadratic_kernel(pmf, 1.0)
}

/// Coefficient of nominal variation, `1 - sqrt(1 - IQV)`.
///
/// The radicand equals `K/(K-1) Σ (p_k - 1/K)²`, the normalized squared
/// distance to the uniform PMF; that form is used to avoid cancellation.
pub fn cnv(pmf: &Pmf) -> f64 {
    let k = kf(pmf);
    let u = 1.0 / k;
    let ss: f64 = pmf.probs().iter().map(|p| (p - u).powi(2)).sum();
    1.0 - (k / (k - 1.0) * ss).max(0.0).sqrt()
}

/// Every statistic on one PMF, sharing a single mode analysis.
pub fn report_all(pmf: &Pmf, alpha: f64, eps_mode: f64) -> Result<UncertaintyReport> {
    check_alpha(alpha)?;
    crate::pmf::check_tolerance("eps_mode", eps_mode)?;
    let modes = pmf.mode_summary(eps_mode);
    let entropy = entropy_norm(pmf);
    Ok(UncertaintyReport {
        wvr: wvr(pmf),
        uvr: uvr_with_modes(pmf, &modes),
        sdm: sdm(pmf),
        entropy,
        entropy_star: star_transform(entropy, pmf.num_classes()),
        alpha_quadratic: quadratic_kernel(pmf, alpha),
        iqv: iqv(pmf),
        cnv: cnv(pmf),
        alpha,
    })
}

/// Linear-interpolation quantile of sorted data (`h = (n - 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median, mean, IQR (linear-interpolation quartiles) and `n - 1` standard
/// deviation. A single value has standard deviation 0.
pub fn summarize(values: &[f64]) -> Result<StatisticSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(StatisticSummary {
        median: quantile_sorted(&sorted, 0.5),
        mean,
        iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
        sd,
    })
}

/// Per-statistic summaries over a batch of reports, in [`Statistic::ALL`] order.
pub fn summarize_reports(reports: &[UncertaintyReport]) -> Result<Vec<(Statistic, StatisticSummary)>> {
    Statistic::ALL
        .iter()
        .map(|&s| {
            let values: Vec<f64> = reports.iter().map(|r| r.get(s)).collect();
            summarize(&values).map(|summary| (s, summary))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{NormPolicy, DEFAULT_EPS_MODE};
    use proptest::prelude::*;

    fn pmf(v: &[f64]) -> Pmf {
        Pmf::new(v, NormPolicy::default()).unwrap()
    }

    fn p_a() -> Pmf {
        pmf(&[0.75, 0.25])
    }
    fn p_b() -> Pmf {
        pmf(&[0.5, 0.1, 0.1, 0.1, 0.1, 0.1])
    }
    fn p_c() -> Pmf {
        pmf(&[0.5, 0.46, 0.01, 0.01, 0.01, 0.01])
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wvr_examples() {
        assert!(close(wvr(&p_a()), 0.50, 0.005));
        assert!(close(wvr(&p_c()), 0.60, 0.005));
        assert_eq!(wvr(&Pmf::point_mass(5, 2).unwrap()), 0.0);
        assert!(close(wvr(&Pmf::uniform(5).unwrap()), 1.0, 1e-15));
    }

    #[test]
    fn uvr_examples() {
        assert!(close(uvr(&p_a(), DEFAULT_EPS_MODE), 0.33, 0.005));
        assert!(close(uvr(&p_b(), DEFAULT_EPS_MODE), 0.51, 0.005));
        assert_eq!(uvr(&Pmf::uniform(2).unwrap(), DEFAULT_EPS_MODE), 1.0);
        // binary piecewise form away from the uniform point
        let p = pmf(&[0.6, 0.4]);
        assert!(close(uvr(&p, DEFAULT_EPS_MODE), 4.0 / 3.0 * 0.4, 1e-15));
    }

    #[test]
    fn sdm_examples() {
        assert!(close(sdm(&p_c()), 0.56, 0.005));
        assert!(close(sdm(&p_a()), 0.5, 1e-15));
        assert!(close(sdm(&Pmf::uniform(7).unwrap()), 1.0, 1e-15));
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy_norm(&p_a()), 0.81, 0.005));
        assert!(close(entropy_norm(&p_c()), 0.50, 0.005));
        assert_eq!(entropy_norm(&pmf(&[1.0, 0.0])), 0.0);
    }

    #[test]
    fn star_transform_examples() {
        for k in 2..10 {
            assert_eq!(star_transform(0.0, k), 0.0);
            assert!(close(star_transform(1.0, k), 1.0, 1e-15));
        }
        assert!(close(star_transform(0.8113, 2), 0.75, 0.005));
        assert!(close(entropy_star(&p_a()), 0.75, 0.005));
        assert!(close(entropy_star(&p_c()), 0.29, 0.005));
    }

    #[test]
    fn alpha_quadratic_examples() {
        for p in [p_a(), p_b(), p_c()] {
            assert_eq!(alpha_quadratic_entropy(&p, 1.0).unwrap(), iqv(&p));
        }
        for k in 2..8 {
            let u = Pmf::uniform(k).unwrap();
            for alpha in [0.1, 0.5, 0.9, 1.0] {
                assert!(close(alpha_quadratic_entropy(&u, alpha).unwrap(), 1.0, 1e-12));
            }
        }
        // high-precision evaluation of the defining sum: sqrt(3)/2
        let v = alpha_quadratic_entropy(&p_a(), 0.5).unwrap();
        assert!(close(v, 0.866_025_403_784_438_6, 1e-14));
        assert!(matches!(
            alpha_quadratic_entropy(&p_a(), 0.0),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(alpha_quadratic_entropy(&p_a(), 1.5).is_err());
    }

    #[test]
    fn iqv_examples() {
        assert!(close(iqv(&p_a()), 0.75, 1e-15));
        assert!(close(iqv(&p_b()), 0.84, 0.005));
        assert_eq!(iqv(&Pmf::point_mass(3, 1).unwrap()), 0.0);
    }

    #[test]
    fn cnv_examples() {
        assert!(close(cnv(&p_c()), 0.40, 0.005));
        assert!(close(cnv(&p_a()), 0.5, 1e-15));
        assert!(close(cnv(&Pmf::uniform(4).unwrap()), 1.0, 1e-15));
        assert_eq!(cnv(&Pmf::point_mass(4, 0).unwrap()), 0.0);
    }

    #[test]
    fn report_matches_comparison_table() {
        let expected = [
            (p_a(), [0.50, 0.33, 0.50, 0.81, 0.75, 0.75, 0.50]),
            (p_b(), [0.60, 0.51, 0.60, 0.84, 0.69, 0.84, 0.60]),
            (p_c(), [0.60, 0.51, 0.56, 0.50, 0.29, 0.65, 0.40]),
        ];
        for (p, values) in expected {
            let r = report_all(&p, 1.0, DEFAULT_EPS_MODE).unwrap();
            let got = [r.wvr, r.uvr, r.sdm, r.entropy, r.entropy_star, r.iqv, r.cnv];
            for (g, e) in got.iter().zip(values) {
                assert!(close(*g, e, 0.005), "{g} vs {e}");
            }
        }
    }

    #[test]
    fn report_validates_parameters() {
        assert!(report_all(&p_a(), 0.0, DEFAULT_EPS_MODE).is_err());
        assert!(report_all(&p_a(), 1.0, -1.0).is_err());
    }

    #[test]
    fn sdm_variance_errors() {
        assert!(matches!(
            sdm_sampling_variance(&pmf(&[0.4, 0.4, 0.2]), 100, DEFAULT_EPS_MODE),
            Err(Error::MultimodalInput { modes: 2 })
        ));
        assert!(matches!(
            sdm_sampling_variance(&Pmf::uniform(3).unwrap(), 100, DEFAULT_EPS_MODE),
            Err(Error::MultimodalInput { .. })
        ));
        assert_eq!(
            sdm_sampling_variance(&p_a(), 0, DEFAULT_EPS_MODE),
            Err(Error::ZeroSamples)
        );
    }

    #[test]
    fn sdm_variance_scales_as_inverse_n() {
        let p = pmf(&[0.7, 0.2, 0.1]);
        let v1 = sdm_sampling_variance(&p, 100, DEFAULT_EPS_MODE).unwrap();
        let v2 = sdm_sampling_variance(&p, 100_000, DEFAULT_EPS_MODE).unwrap();
        assert!(v1 > 0.0);
        assert!(close(v1 * 100.0, v2 * 100_000.0, 1e-12));
    }

    #[test]
    fn sdm_variance_binary_matches_delta_method() {
        // K = 2: u = 2(1 - p̂), Var(p̂) = p̂(1-p̂)/n, so Var(u) = 4 p̂(1-p̂)/n.
        let p = pmf(&[0.75, 0.25]);
        let v = sdm_sampling_variance(&p, 500, DEFAULT_EPS_MODE).unwrap();
        assert!(close(v, 4.0 * 0.75 * 0.25 / 500.0, 1e-15));
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.median, 0.0);
        assert_eq!(s.mean, 0.25);
        let c = summarize(&[0.3; 7]).unwrap();
        assert_eq!(c.sd, 0.0);
        assert_eq!(c.iqr, 0.0);
        // quartiles at h = 0.75 and h = 2.25: 1.75 and 3.25
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.iqr, 1.5);
        assert!(close(s.sd, (5.0f64 / 3.0).sqrt(), 1e-15));
        assert_eq!(summarize(&[]), Err(Error::EmptyInput));
        assert_eq!(summarize(&[2.0]).unwrap().sd, 0.0);
    }

    fn random_pmf() -> impl Strategy<Value = Pmf> {
        (2usize..10)
            .prop_flat_map(|k| prop::collection::vec(0.0f64..1.0, k))
            .prop_filter("positive mass", |v| v.iter().sum::<f64>() > 1e-3)
            .prop_map(|v| Pmf::new(&v, NormPolicy::Renormalize).unwrap())
    }

    proptest! {
        #[test]
        fn statistics_lie_in_unit_interval(p in random_pmf(), alpha in 0.05f64..=1.0) {
            let r = report_all(&p, alpha, DEFAULT_EPS_MODE).unwrap();
            for s in Statistic::ALL {
                let v = r.get(s);
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{:?} = {}", s, v);
            }
        }

        #[test]
        fn statistics_are_permutation_invariant(p in random_pmf(), shift in 1usize..10) {
            let k = p.num_classes();
            let permuted: Vec<f64> = (0..k).map(|i| p.probs()[(i + shift) % k]).collect();
            let q = Pmf::new(&permuted, NormPolicy::Renormalize).unwrap();
            let a = report_all(&p, 0.7, DEFAULT_EPS_MODE).unwrap();
            let b = report_all(&q, 0.7, DEFAULT_EPS_MODE).unwrap();
            for s in Statistic::ALL {
                prop_assert!((a.get(s) - b.get(s)).abs() <= 1e-12);
            }
        }

        #[test]
        fn binary_collapse(p_hat in 0.5f64..=1.0) {
            let p = Pmf::new(&[p_hat, 1.0 - p_hat], NormPolicy::default()).unwrap();
            let expected = 2.0 * (1.0 - p.modal_prob());
            prop_assert!((wvr(&p) - expected).abs() <= 1e-12);
            prop_assert!((sdm(&p) - expected).abs() <= 1e-12);
            prop_assert!((cnv(&p) - expected).abs() <= 1e-12);
        }

        #[test]
        fn star_transform_never_increases(f in 0.0f64..=1.0, k in 2usize..50) {
            prop_assert!(star_transform(f, k) <= f + 1e-15);
        }
    }
}

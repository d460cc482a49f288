//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::Exp1;

use nominal_uq::bayes::{
    fit_posterior, posterior_predictive_closed, posterior_predictive_mc, predict_with_draws, synth_gaussian_dataset,
    ClassSpec, DatasetSpec, GaussianPosterior, McAveraging, NiwParams, PosteriorDraw, Prior,
};
use nominal_uq::dispersion::{self, report_all, sdm, sdm_sampling_variance, star_transform, Statistic};
use nominal_uq::pipeline::{run_demo, ChainConfig, DemoPreset, DEFAULT_TEST_SIZE, DEFAULT_TRAIN_SIZE};
use nominal_uq::propagate::{analytic_propagate, mc_propagate, ConditionalQuantModel, Regime, SamplerSpec};
use nominal_uq::rng::seeded;
use nominal_uq::scoring::{confusion, ebs, exe, LabeledProbabilities, TieRule, DEFAULT_EPS_CLIP};
use nominal_uq::{NormPolicy, Pmf, DEFAULT_EPS_MODE};

const TABLE_TOL: f64 = 0.005;
const ZERO_TOL: f64 = 1e-9;
const EXACT_TOL: f64 = 1e-12;
const SDM_VAR_REL_TOL: f64 = 0.10;
const PROP_MEAN_SE: f64 = 3.0;
const PROP_VAR_REL_TOL: f64 = 0.05;
const TV_TOL: f64 = 0.01;
const SKEW_RATIO: f64 = 0.1;
const SEPARATED_LOSS: f64 = 0.02;
const SEPARATED_MEDIAN: f64 = 1e-2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn pmf(v: &[f64]) -> Pmf {
    Pmf::new(v, NormPolicy::default()).unwrap()
}

fn random_pmf<R: Rng>(k: usize, rng: &mut R) -> Pmf {
    let mut v: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    // some rows with structural zeros
    if k > 2 && rng.random_bool(0.2) {
        let zeros = rng.random_range(1..k - 1);
        for slot in v.iter_mut().take(zeros) {
            *slot = 0.0;
        }
    }
    Pmf::new(&v, NormPolicy::Renormalize).unwrap()
}

fn is_point_mass(p: &Pmf) -> bool {
    p.probs().iter().filter(|&&x| x > 0.0).count() == 1
}

fn table2() -> Outcome {
    let rows = [
        ("p_A", vec![0.75, 0.25], [0.50, 0.33, 0.50, 0.81, 0.75, 0.75, 0.50]),
        ("p_B", vec![0.5, 0.1, 0.1, 0.1, 0.1, 0.1], [0.60, 0.51, 0.60, 0.84, 0.69, 0.84, 0.60]),
        ("p_C", vec![0.5, 0.46, 0.01, 0.01, 0.01, 0.01], [0.60, 0.51, 0.56, 0.50, 0.29, 0.65, 0.40]),
    ];
    let stats = [
        Statistic::Wvr,
        Statistic::Uvr,
        Statistic::Sdm,
        Statistic::Entropy,
        Statistic::EntropyStar,
        Statistic::Iqv,
        Statistic::Cnv,
    ];
    let mut worst: f64 = 0.0;
    for (_, v, expected) in &rows {
        let r = report_all(&pmf(v), 1.0, DEFAULT_EPS_MODE).unwrap();
        for (s, e) in stats.iter().zip(expected) {
            worst = worst.max((r.get(*s) - e).abs());
        }
    }
    outcome(worst <= TABLE_TOL, format!("max |deviation| {worst:.4} over 21 values"))
}

fn axioms() -> Outcome {
    let mut rng = seeded(101);
    let alphas = [0.25, 0.5, 1.0];
    let mut failures = Vec::new();
    for i in 0..10_000 {
        let k = 2 + i % 9;
        let alpha = alphas[i % 3];
        let p = random_pmf(k, &mut rng);
        let r = report_all(&p, alpha, DEFAULT_EPS_MODE).unwrap();
        let u = report_all(&Pmf::uniform(k).unwrap(), alpha, DEFAULT_EPS_MODE).unwrap();
        let point = is_point_mass(&p);
        for s in Statistic::ALL {
            let v = r.get(s);
            let ok = (0.0..=1.0).contains(&v) && v <= u.get(s) + EXACT_TOL && (point || v > ZERO_TOL);
            if !ok {
                failures.push(format!("{} on {:?}", s.name(), p.probs()));
            }
        }
    }
    for k in 2..=10 {
        for alpha in alphas {
            let u = report_all(&Pmf::uniform(k).unwrap(), alpha, DEFAULT_EPS_MODE).unwrap();
            for c in 0..k {
                let z = report_all(&Pmf::point_mass(k, c).unwrap(), alpha, DEFAULT_EPS_MODE).unwrap();
                for s in Statistic::ALL {
                    if z.get(s).abs() > ZERO_TOL {
                        failures.push(format!("{} point mass K={k}", s.name()));
                    }
                }
            }
            for s in Statistic::ALL {
                if (u.get(s) - 1.0).abs() > EXACT_TOL {
                    failures.push(format!("{} uniform K={k}", s.name()));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        match failures.first() {
            None => "1e4 random PMFs, K in 2..=10, point masses and uniforms".to_string(),
            Some(f) => format!("{} violations, first: {f}", failures.len()),
        },
    )
}

fn identities() -> Outcome {
    let mut rng = seeded(202);
    let mut worst_wvr: f64 = 0.0;
    let mut worst_uvr: f64 = 0.0;
    let mut worst_equiv: f64 = 0.0;
    let mut order_violations = 0;
    let mut unimodal_seen = 0;
    while unimodal_seen < 1000 {
        let k = rng.random_range(2..=10);
        let p = random_pmf(k, &mut rng);
        let modes = p.mode_summary(DEFAULT_EPS_MODE);
        let r = report_all(&p, 1.0, DEFAULT_EPS_MODE).unwrap();
        let kf = k as f64;
        let ed = modes.expected_distance(&p);
        if modes.is_unimodal() {
            unimodal_seen += 1;
            worst_wvr = worst_wvr.max((r.wvr - kf / (kf - 1.0) * ed).abs());
            if r.uvr > r.wvr + EXACT_TOL {
                order_violations += 1;
            }
        }
        if r.sdm > r.wvr + EXACT_TOL || r.cnv > r.iqv + EXACT_TOL {
            order_violations += 1;
        }
        for s in Statistic::ALL {
            let f = r.get(s);
            if star_transform(f, k) > f + EXACT_TOL {
                order_violations += 1;
            }
        }
    }
    // multimodal variant of the UVR identity on constructed tied PMFs
    for k in 3..=10 {
        for m in 2..k {
            let (kf, mf) = (k as f64, m as f64);
            let top = 1.0 / kf + rng.random_range(0.05..=1.0) * (1.0 / mf - 1.0 / kf);
            let rest = ((1.0 - top * mf) / (kf - mf)).max(0.0);
            let v: Vec<f64> = (0..k).map(|i| if i < m { top } else { rest }).collect();
            let p = pmf(&v);
            let modes = p.mode_summary(DEFAULT_EPS_MODE);
            assert_eq!(modes.mode_count, m);
            let c = kf * kf / (kf * kf - 1.0);
            let rhs = c / (mf * mf) * modes.expected_distance(&p) + c * (mf * mf - 1.0) / (mf * mf);
            worst_uvr = worst_uvr.max((dispersion::uvr(&p, DEFAULT_EPS_MODE) - rhs).abs());
        }
    }
    for k in 2..=10 {
        for i in 0..=100 {
            let top = 1.0 / k as f64 + (1.0 - 1.0 / k as f64) * i as f64 / 100.0;
            let rest = ((1.0 - top) / (k - 1) as f64).max(0.0);
            let v: Vec<f64> = std::iter::once(top).chain(std::iter::repeat_n(rest, k - 1)).collect();
            let p = pmf(&v);
            let w = dispersion::wvr(&p);
            worst_equiv = worst_equiv.max((w - sdm(&p)).abs()).max((w - dispersion::cnv(&p)).abs());
        }
    }
    let pass = worst_wvr <= EXACT_TOL && worst_uvr <= EXACT_TOL && worst_equiv <= EXACT_TOL && order_violations == 0;
    outcome(
        pass,
        format!(
            "WVR/E[d] {worst_wvr:.1e}, UVR multimodal {worst_uvr:.1e}, WVR=SDM=CNV {worst_equiv:.1e}, order violations {order_violations}"
        ),
    )
}

fn sdm_variance_oracle() -> Outcome {
    let p = pmf(&[0.7, 0.2, 0.1]);
    let n = 1000u64;
    let reps = 20_000;
    let predicted = sdm_sampling_variance(&p, n, DEFAULT_EPS_MODE).unwrap();
    let mut rng = seeded(303);
    let mut values = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut counts = [0.0; 3];
        for _ in 0..n {
            counts[p.sample_class(&mut rng)] += 1.0;
        }
        values.push(sdm(&Pmf::new(&counts, NormPolicy::Renormalize).unwrap()));
    }
    let mean = values.iter().sum::<f64>() / reps as f64;
    let empirical = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let rel = (empirical - predicted).abs() / predicted;
    outcome(
        rel <= SDM_VAR_REL_TOL,
        format!("formula {predicted:.4e}, empirical {empirical:.4e} over {reps} resamples, rel diff {rel:.3}"),
    )
}

fn propagation() -> Outcome {
    let model = ConditionalQuantModel::new(vec![
        Regime::from_spec("low", SamplerSpec::Gaussian { mean: -1.0, sd: 0.5 }),
        Regime::from_spec("mid", SamplerSpec::Gaussian { mean: 2.0, sd: 1.0 }),
        Regime::from_spec("high", SamplerSpec::Gaussian { mean: 5.0, sd: 2.0 }),
    ])
    .unwrap();
    let p = pmf(&[0.2, 0.5, 0.3]);
    let a = analytic_propagate(&p, &model).unwrap();
    let mc = mc_propagate(&p, &model, 100_000, 42, None).unwrap();
    let se = mc.standard_error.unwrap();
    let mean_ok = (mc.mean - a.mean).abs() <= PROP_MEAN_SE * se;
    let var_rel = (mc.variance - a.variance).abs() / a.variance;

    let two = ConditionalQuantModel::new(vec![Regime::moments("a", 1.0, 0.0), Regime::moments("b", 2.0, 0.0)]).unwrap();
    let t = analytic_propagate(&pmf(&[0.3, 0.7]), &two).unwrap();
    let two_ok = (t.mean - 1.7).abs() <= EXACT_TOL && (t.variance - 0.21).abs() <= EXACT_TOL;
    outcome(
        mean_ok && var_rel <= PROP_VAR_REL_TOL && two_ok,
        format!(
            "mean diff {:.2} SE, variance rel diff {var_rel:.4}, two-point E={} Var={:.15}",
            (mc.mean - a.mean).abs() / se,
            t.mean,
            t.variance
        ),
    )
}

fn scoring_endpoints() -> Outcome {
    let mut rng = seeded(404);
    let k = 4;
    let labels: Vec<usize> = (0..200).map(|i| if i < 4 { i } else { rng.random_range(0..k) }).collect();
    let perfect: Vec<Vec<f64>> = labels.iter().map(|&l| (0..k).map(|j| f64::from(j == l)).collect()).collect();
    let data = LabeledProbabilities::new(&perfect, &labels, NormPolicy::default()).unwrap();
    let cm = confusion(&data, TieRule::LowestIndex).unwrap();
    let (loss0, exe0, ebs0) = (cm.classification_loss, exe(&data, DEFAULT_EPS_CLIP).unwrap(), ebs(&data).unwrap());

    let mut freq = vec![0.0; k];
    for &l in &labels {
        freq[l] += 1.0 / labels.len() as f64;
    }
    let prior_rows: Vec<Vec<f64>> = labels.iter().map(|_| freq.clone()).collect();
    let data = LabeledProbabilities::new(&prior_rows, &labels, NormPolicy::Renormalize).unwrap();
    let (exe1, ebs1) = (exe(&data, DEFAULT_EPS_CLIP).unwrap(), ebs(&data).unwrap());
    let pass = loss0.abs() <= EXACT_TOL
        && exe0.abs() <= EXACT_TOL
        && ebs0.abs() <= EXACT_TOL
        && (exe1 - 1.0).abs() <= EXACT_TOL
        && (ebs1 - 1.0).abs() <= EXACT_TOL;
    outcome(
        pass,
        format!("perfect: loss {loss0}, EXE {exe0:.1e}, EBS {ebs0:.1e}; prior: EXE {exe1:.15}, EBS {ebs1:.15}"),
    )
}

fn tv(a: &Pmf, b: &Pmf) -> f64 {
    0.5 * a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn bayesian_chain() -> Outcome {
    let spec = DatasetSpec {
        classes: vec![
            ClassSpec {
                name: None,
                mean: vec![0.0, 0.0],
                cov: vec![vec![1.0, 0.3], vec![0.3, 1.0]],
                weight: 0.4,
            },
            ClassSpec {
                name: None,
                mean: vec![2.0, 0.5],
                cov: vec![vec![0.6, 0.0], vec![0.0, 1.5]],
                weight: 0.35,
            },
            ClassSpec {
                name: None,
                mean: vec![0.5, 2.5],
                cov: vec![vec![1.2, -0.4], vec![-0.4, 0.8]],
                weight: 0.25,
            },
        ],
    };
    let mut rng = seeded(505);
    let train = synth_gaussian_dataset(&spec, 150, &mut rng).unwrap();
    let post = fit_posterior(&train, &Prior::default_for(&train).unwrap()).unwrap();
    let draws: Vec<PosteriorDraw> = (0..10_000).map(|_| post.sample_parameters(&mut rng)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = DVector::from_vec(vec![rng.random_range(-2.5..4.0), rng.random_range(-2.0..4.5)]);
        let mc = predict_with_draws(&x, &post, &draws, McAveraging::Joint).unwrap();
        let closed = posterior_predictive_closed(&x, &post).unwrap();
        worst = worst.max(tv(&mc.pmf, &closed.pmf));
    }

    let niw = |x: f64, off: f64| NiwParams {
        location: DVector::from_vec(vec![x, 0.0]),
        scale_count: 10.0,
        dof: 12.0,
        scatter: nalgebra::DMatrix::from_row_slice(2, 2, &[10.0, off, off, 8.0]),
    };
    let sym = GaussianPosterior::from_parts(vec![niw(-1.5, 2.0), niw(1.5, -2.0)], vec![6.0, 6.0]).unwrap();
    let axis = DVector::from_vec(vec![0.0, 0.7]);
    let sym_mc = posterior_predictive_mc(&axis, &sym, 10_000, &mut rng).unwrap();
    let sym_dev = (sym_mc.pmf.probs()[0] - 0.5).abs();
    outcome(
        worst <= TV_TOL && sym_dev <= TV_TOL,
        format!("max TV {worst:.4} on 100 points at S=1e4; symmetric case |p1 - 0.5| = {sym_dev:.4}"),
    )
}

fn case_study() -> Outcome {
    let config = ChainConfig {
        seed: 2024,
        ..ChainConfig::default()
    };
    let sep = run_demo(&DemoPreset::Separated.spec(), DEFAULT_TRAIN_SIZE, DEFAULT_TEST_SIZE, &config).unwrap();
    let ovl = run_demo(&DemoPreset::Overlapping.spec(), DEFAULT_TRAIN_SIZE, DEFAULT_TEST_SIZE, &config).unwrap();
    let mut problems = Vec::new();
    for s in Statistic::ALL {
        let a = sep.report.summary(s);
        let b = ovl.report.summary(s);
        if a.median > SKEW_RATIO * a.mean {
            problems.push(format!("{} median/mean {:.3}", s.name(), a.median / a.mean));
        }
        if a.iqr > SKEW_RATIO * a.sd {
            problems.push(format!("{} iqr/sd {:.3}", s.name(), a.iqr / a.sd));
        }
        if a.median > SEPARATED_MEDIAN {
            problems.push(format!("{} median {:.3e}", s.name(), a.median));
        }
        if b.mean <= a.mean {
            problems.push(format!("{} overlapping mean not larger", s.name()));
        }
    }
    let medians: Vec<(Statistic, f64)> = Statistic::ALL.iter().map(|&s| (s, sep.report.summary(s).median)).collect();
    let h = sep.report.summary(Statistic::Entropy).median;
    let u = sep.report.summary(Statistic::Uvr).median;
    for (s, m) in &medians {
        if *s != Statistic::Entropy && *m >= h {
            problems.push(format!("entropy median not largest ({})", s.name()));
        }
        if *s != Statistic::Uvr && *m <= u {
            problems.push(format!("UVR median not smallest ({})", s.name()));
        }
    }
    let loss = sep.report.scores.as_ref().expect("labeled test set").confusion.classification_loss;
    if loss > SEPARATED_LOSS {
        problems.push(format!("separated loss {loss}"));
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "separated loss {loss:.4}, H median {h:.2e} (largest), UVR median {u:.2e} (smallest), overlapping means larger"
            )
        } else {
            problems.join("; ")
        },
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("Reference table reproduction", Duration::from_secs(1), table2),
        ("Axiom suite", Duration::from_secs(10), axioms),
        ("Mode-distance and equivalence identities", Duration::from_secs(5), identities),
        ("SDM variance oracle", Duration::from_secs(30), sdm_variance_oracle),
        ("Propagation consistency", Duration::from_secs(5), propagation),
        ("Scoring endpoints", Duration::from_secs(5), scoring_endpoints),
        ("Bayesian chain", Duration::from_secs(60), bayesian_chain),
        ("Case-study pattern check", Duration::from_secs(60), case_study),
    ];
    let mut all = true;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= limit;
        all &= pass;
        println!(
            "{} {name}: {} [{:.3} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

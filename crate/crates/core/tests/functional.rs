//! Curve pipeline, the three functional tests, plots and the run bundle.

mod common;

use std::fs;

use commrobust::fpca::{ad_statistic, ad_two_sample, fpca_test, marginal_fpca, pooled_covariance, trapezoid_weights};
use commrobust::generator::{generate, GeneratorSpec};
use commrobust::gp::{bayes_factor, fit_hyperparameters, gp_test, ModelClass, RatioSeries};
use commrobust::iwt::{adjust, basis_expand, iwt_test, spline_design, Basis, Combine, IWTResult, IntervalSet, RawTable};
use commrobust::pipeline::{
    build_null_curve, build_observed_curve, null_base, run_pipeline, run_pipeline_with_draws, CurveGrid, CurveSample,
    VICurveSet, Which,
};
use commrobust::plot::{curve_svg, level_bands, pvalue_svg};
use commrobust::report::{self, FpcaOptions, InputSource, IwtOptions, RunConfig, TestChoice};
use commrobust::rewire::NullMethod;
use commrobust::{DetectorChoice, RngStream};
use common::*;
use rand::Rng;

fn sample(grid: &[f64], curves: Vec<Vec<f64>>) -> CurveSample {
    CurveSample::new(grid.to_vec(), curves).unwrap()
}

fn unit_grid(t: usize) -> Vec<f64> {
    (0..t).map(|i| i as f64 / (t - 1) as f64).collect()
}

fn strong_set() -> &'static VICurveSet {
    static SET: std::sync::OnceLock<VICurveSet> = std::sync::OnceLock::new();
    SET.get_or_init(|| {
        let lg = generate(&GeneratorSpec::new(500, 5, 10.0, 0.8, 7)).unwrap();
        run_pipeline(&lg.graph, DetectorChoice::FastGreedy, &CurveGrid::equispaced(10, 5, 2), 7).unwrap()
    })
}

#[test]
fn bridged_k10_barely_moves_at_small_p() {
    let g = two_cliques(10);
    let grid = CurveGrid {
        levels: vec![0.0, 0.05],
        n_primary: 5,
        n_secondary: 4,
    };
    let m = build_observed_curve(&g, DetectorChoice::FastGreedy, &grid, 3).unwrap();
    let cells: Vec<f64> = m[1].iter().flatten().copied().collect();
    let mean = cells.iter().sum::<f64>() / cells.len() as f64;
    assert!(mean < 0.2 * 20f64.ln(), "mean VI {mean}");
}

#[test]
fn random_graph_curve_levels_off() {
    let mut r = rng(21);
    let g = erdos_renyi(200, 0.05, &mut r);
    let grid = CurveGrid {
        levels: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        n_primary: 4,
        n_secondary: 3,
    };
    let means = VICurveSet {
        vic: build_observed_curve(&g, DetectorChoice::Louvain, &grid, 4).unwrap(),
        ..dummy_set(&grid)
    }
    .level_means(Which::Observed);
    assert!((means[3] - means[4]).abs() < 0.1 * means[4], "{means:?}");
}

fn dummy_set(grid: &CurveGrid) -> VICurveSet {
    let zeros = vec![vec![Some(0.0); grid.replicates()]; grid.levels.len()];
    VICurveSet {
        grid: grid.clone(),
        method: DetectorChoice::Louvain,
        master_seed: 0,
        n_nodes: 1,
        vic: zeros.clone(),
        vic_random: zeros,
        missing: Vec::new(),
        null_method: NullMethod::Rejection,
        null_draws: 1,
    }
}

#[test]
fn null_curve_sits_above_observed_for_strong_structure() {
    let set = strong_set();
    let obs = set.level_means(Which::Observed);
    let null = set.level_means(Which::Null);
    for (l, &p) in set.grid.levels.iter().enumerate() {
        if (0.05..=0.4 + 1e-9).contains(&p) {
            assert!(null[l] > obs[l], "p={p}: obs {} null {}", obs[l], null[l]);
        }
    }
    assert!(set.vic[0].iter().chain(&set.vic_random[0]).all(|v| *v == Some(0.0)));
}

#[test]
fn null_curve_matches_pipeline_and_keeps_degrees() {
    let lg = generate(&GeneratorSpec::new(200, 4, 6.0, 0.5, 8)).unwrap();
    let grid = CurveGrid::equispaced(3, 2, 2);
    let set = run_pipeline(&lg.graph, DetectorChoice::Louvain, &grid, 5).unwrap();
    assert_eq!(build_null_curve(&lg.graph, DetectorChoice::Louvain, &grid, 5).unwrap(), set.vic_random);
    assert_eq!(build_observed_curve(&lg.graph, DetectorChoice::Louvain, &grid, 5).unwrap(), set.vic);
    let (base, _) = null_base(&lg.graph, 5).unwrap();
    assert_eq!(base.degree_sequence(), lg.graph.degree_sequence());
}

#[test]
fn null_draws_spread_over_primaries() {
    let lg = generate(&GeneratorSpec::new(200, 4, 6.0, 0.5, 8)).unwrap();
    let grid = CurveGrid::equispaced(3, 4, 2);
    let one = run_pipeline(&lg.graph, DetectorChoice::Louvain, &grid, 5).unwrap();
    let same = run_pipeline_with_draws(&lg.graph, DetectorChoice::Louvain, &grid, 5, 1).unwrap();
    assert_eq!(one, same);
    let many = run_pipeline_with_draws(&lg.graph, DetectorChoice::Louvain, &grid, 5, 4).unwrap();
    assert_eq!(many.vic, one.vic);
    assert_eq!(many.null_draws, 4);
    // Primary 0 perturbs the first draw in both runs.
    for l in 0..grid.levels.len() {
        assert_eq!(many.vic_random[l][..2], one.vic_random[l][..2]);
    }
    assert_ne!(many.vic_random, one.vic_random);
    assert!(run_pipeline_with_draws(&lg.graph, DetectorChoice::Louvain, &grid, 5, 5).is_err());
    assert!(run_pipeline_with_draws(&lg.graph, DetectorChoice::Louvain, &grid, 5, 0).is_err());
}

#[test]
fn curve_json_without_draw_count_still_loads() {
    let set = dummy_set(&CurveGrid::equispaced(2, 2, 1));
    let mut v: serde_json::Value = serde_json::from_str(&set.to_json().unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("null_draws");
    assert_eq!(VICurveSet::from_json(&v.to_string()).unwrap(), set);
}

#[test]
fn gp_recovers_oscillation_scale() {
    let x: Vec<f64> = (0..80).map(|i| i as f64 / 79.0).collect();
    let mut r = rng(22);
    let y: Vec<f64> = x.iter().map(|&v| (6.0 * v).sin() + 0.01 * normal(&mut r)).collect();
    let fit = fit_hyperparameters(&RatioSeries::new(x.clone(), y.clone()).unwrap(), ModelClass::SignalPlusNoise).unwrap();
    let ell = fit.model.length_scale;
    // Quarter period, peak to zero crossing.
    let quarter = std::f64::consts::PI / 12.0;
    assert!((quarter / 2.0..=quarter * 2.0).contains(&ell), "ℓ = {ell}");
    // Brute-force profile over a log grid at the fitted noise level.
    let sn2 = fit.model.noise_variance;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..60 {
        let l = 0.05 * 1.05f64.powi(i);
        for j in 0..40 {
            let lml = gp_lml(&x, &y, 0.05 * 1.15f64.powi(j), l, sn2);
            if lml.is_finite() && lml > best.0 {
                best = (lml, l);
            }
        }
    }
    assert!((ell / best.1 - 1.0).abs() < 0.1, "ℓ = {ell}, grid {}", best.1);
}

#[test]
fn gp_white_noise_prefers_noise() {
    let x: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
    let mut below = 0;
    for seed in 0..100 {
        let mut r = rng(23_000 + seed);
        let y: Vec<f64> = (0..50).map(|_| normal(&mut r)).collect();
        let fit = fit_hyperparameters(&RatioSeries::new(x.clone(), y).unwrap(), ModelClass::SignalPlusNoise).unwrap();
        below += usize::from(fit.model.signal_variance <= fit.model.noise_variance);
    }
    assert!(below >= 90, "{below}/100");
}

#[test]
fn gp_strong_signal_has_large_bayes_factor() {
    let x: Vec<f64> = (0..60).map(|i| i as f64 / 59.0).collect();
    let mut r = rng(24);
    // Signal standard deviation about 0.7; noise 0.07 gives SNR 10.
    let y: Vec<f64> = x.iter().map(|&v| (6.0 * v).sin() + 0.07 * normal(&mut r)).collect();
    let out = bayes_factor(&RatioSeries::new(x, y).unwrap()).unwrap();
    assert!(out.log_bf > 20.0, "{}", out.log_bf);
}

#[test]
fn gp_signal_never_loses_to_noise() {
    let mut r = rng(25);
    for _ in 0..20 {
        let n = r.random_range(6..30);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
        let out = bayes_factor(&RatioSeries::new(x, y).unwrap()).unwrap();
        assert!(out.log_bf >= -1e-6, "{}", out.log_bf);
    }
}

#[test]
fn gp_on_strong_pipeline_output() {
    let out = gp_test(strong_set()).unwrap();
    assert!(out.log_bf > 20.0, "{}", out.log_bf);
    assert_eq!(out.n_points + out.dropped_cells, 10 * 10);
}

#[test]
fn fpca_rank_one_curves() {
    let grid = unit_grid(15);
    let phi: Vec<f64> = grid.iter().map(|&t| (std::f64::consts::PI * t).sin()).collect();
    let mut r = rng(26);
    let mut draw = || -> Vec<Vec<f64>> {
        (0..20)
            .map(|_| {
                let xi = normal(&mut r);
                grid.iter().zip(&phi).map(|(&t, &f)| 1.0 + t + xi * f).collect()
            })
            .collect()
    };
    let (a, b) = (sample(&grid, draw()), sample(&grid, draw()));
    let basis = marginal_fpca(&a, &b, 0.95).unwrap();
    assert_eq!(basis.k, 1);
    assert!(basis.explained() >= 0.99);
    for c in a.curves.iter().chain(&b.curves) {
        let back = basis.reconstruct(&basis.scores(c));
        assert!(back.iter().zip(c).all(|(x, y)| (x - y).abs() < 1e-8));
    }
}

#[test]
fn fpca_eigenvalues_match_dense_oracle() {
    let mut r = rng(27);
    for t in [3, 7, 12] {
        let grid: Vec<f64> = {
            let mut g: Vec<f64> = (0..t).map(|_| r.random_range(0.0..1.0)).collect();
            g.sort_by(f64::total_cmp);
            g[0] = 0.0;
            g
        };
        let curves = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..15).map(|_| (0..t).map(|_| normal(r)).collect()).collect()
        };
        let (a, b) = (sample(&grid, curves(&mut r)), sample(&grid, curves(&mut r)));
        let basis = marginal_fpca(&a, &b, 1.0).unwrap();
        let pooled: Vec<&[f64]> = a.curves.iter().chain(&b.curves).map(Vec::as_slice).collect();
        let (_, cov) = pooled_covariance(&pooled);
        let w = trapezoid_weights(&grid);
        let m: Vec<Vec<f64>> = (0..t).map(|i| (0..t).map(|j| w[i].sqrt() * cov[(i, j)] * w[j].sqrt()).collect()).collect();
        let oracle = jacobi_eigenvalues(&m);
        for (x, y) in basis.eigenvalues.iter().zip(&oracle) {
            assert!((x - y.max(0.0)).abs() < 1e-8, "t={t}: {x} vs {y}");
        }
        // The weighted trace equals the eigenvalue sum.
        let trace: f64 = (0..t).map(|i| w[i] * cov[(i, i)]).sum();
        assert!((trace - basis.eigenvalues.iter().sum::<f64>()).abs() < 1e-9);
        for (i, phi) in basis.eigenfunctions.iter().enumerate() {
            for (j, psi) in basis.eigenfunctions.iter().enumerate() {
                let ip: f64 = phi.iter().zip(psi).zip(&w).map(|((a, b), w)| a * b * w).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if basis.eigenvalues[i] > 1e-9 && basis.eigenvalues[j] > 1e-9 {
                    assert!((ip - want).abs() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn ad_statistic_matches_references() {
    let cases: [(&[f64], &[f64], f64); 3] = [
        (&[1.0, 2.0, 3.0, 4.0], &[2.5, 3.5, 5.0, 6.0, 7.0], 1.828_804_855_275_443_2),
        (&[1.0, 2.0, 2.0, 3.0, 3.0, 3.0], &[2.0, 3.0, 4.0, 4.0, 5.0], 2.388_367_071_524_966_5),
        (
            &[0.1, 0.4, 0.4, 0.9, 1.3, 2.2, 2.2],
            &[0.4, 1.3, 1.7, 2.2, 3.0, 3.1],
            1.539_066_944_337_988_5,
        ),
    ];
    for (a, b, want) in cases {
        assert!((ad_statistic(a, b) - want).abs() < 1e-12);
        assert!((ad_midrank(a, b) - want).abs() < 1e-12);
    }
    let mut r = rng(28);
    for _ in 0..50 {
        let a: Vec<f64> = (0..r.random_range(2..20)).map(|_| (normal(&mut r) * 3.0).round()).collect();
        let b: Vec<f64> = (0..r.random_range(2..20)).map(|_| (normal(&mut r) * 3.0).round()).collect();
        assert!((ad_statistic(&a, &b) - ad_midrank(&a, &b)).abs() < 1e-10);
    }
}

#[test]
fn ad_permutation_examples() {
    let same = vec![3.0; 10];
    assert_eq!(ad_two_sample(&same, &same, 999, RngStream::root(0)).unwrap().p_value, 1.0);
    let mut r = rng(29);
    let a: Vec<f64> = (0..50).map(|_| normal(&mut r)).collect();
    let b: Vec<f64> = (0..50).map(|_| 5.0 + normal(&mut r)).collect();
    assert_eq!(ad_two_sample(&a, &b, 999, RngStream::root(1)).unwrap().p_value, 0.001);
    assert!(ad_two_sample(&a, &b, 50, RngStream::root(1)).is_err());
}

#[test]
fn fpca_null_calibration() {
    let grid = unit_grid(8);
    let mut first_ok = 0;
    let mut same_ok = 0;
    for seed in 0..100u64 {
        let mut r = rng(30_000 + seed);
        let mut draw = || -> Vec<Vec<f64>> {
            (0..20)
                .map(|_| {
                    let xi = normal(&mut r);
                    grid.iter().map(|&t| xi * (1.0 + t) + 0.1 * normal(&mut r)).collect()
                })
                .collect()
        };
        let (a, b) = (sample(&grid, draw()), sample(&grid, draw()));
        let rep = fpca_test(&a, &b, 0.95, 0.05, 199, seed).unwrap();
        first_ok += usize::from(rep.raw_p[0] > 0.05);
        let same = fpca_test(&a, &a, 0.95, 0.05, 199, seed).unwrap();
        same_ok += usize::from(same.min_adjusted_p > 0.05);
    }
    assert!(first_ok >= 90, "{first_ok}/100");
    assert!(same_ok >= 95, "{same_ok}/100");
}

#[test]
fn fpca_rejects_strong_structure() {
    let set = strong_set();
    let rep = fpca_test(
        &CurveSample::from_set(set, Which::Observed),
        &CurveSample::from_set(set, Which::Null),
        0.95,
        0.05,
        999,
        1,
    )
    .unwrap();
    assert!(rep.fdr_reject && rep.min_adjusted_p <= 0.01, "{rep:?}");
}

#[test]
fn pointwise_and_spline_coefficients() {
    let grid = vec![0.0, 0.05, 0.1, 0.3, 0.35, 0.6, 0.9, 1.0];
    let mut r = rng(31);
    let curves: Vec<Vec<f64>> = (0..4).map(|_| grid.iter().map(|_| normal(&mut r)).collect()).collect();
    let s = sample(&grid, curves.clone());
    let (pa, _) = basis_expand(&s, &s, Basis::Pointwise).unwrap();
    assert_eq!(pa.coefficients, curves);

    let flat = sample(&grid, vec![vec![2.5; grid.len()]; 3]);
    let (fa, _) = basis_expand(&flat, &flat, Basis::Bspline).unwrap();
    assert!(fa.coefficients.iter().flatten().all(|&c| (c - 2.5).abs() < 1e-10));

    let (ba, _) = basis_expand(&s, &s, Basis::Bspline).unwrap();
    let design = spline_design(&grid);
    for (c, coef) in curves.iter().zip(&ba.coefficients) {
        for (i, &want) in c.iter().enumerate() {
            let got: f64 = (0..grid.len()).map(|j| design[(i, j)] * coef[j]).sum();
            assert!((got - want).abs() < 1e-8);
        }
    }
}

#[test]
fn iwt_shifted_block() {
    let grid = unit_grid(10);
    let mut r = rng(32);
    let mut draw = |shift: bool| -> Vec<Vec<f64>> {
        (0..50)
            .map(|_| (0..10).map(|k| normal(&mut r) + if shift && k < 3 { 5.0 } else { 0.0 }).collect())
            .collect()
    };
    let (a, b) = (sample(&grid, draw(true)), sample(&grid, draw(false)));
    let res = iwt_test(&a, &b, 999, 3, Basis::Pointwise, Combine::Sum).unwrap();
    let p_of = |start: usize, end: usize| {
        let i = res.raw.sets.iter().position(|s| *s == IntervalSet { start, end, complement: false }).unwrap();
        res.raw.p_values[i]
    };
    assert_eq!(p_of(0, 2), 0.001);
    assert!(res.adjusted_p[..3].iter().all(|&p| p <= 0.05));
    let inside: Vec<f64> = (3..10).flat_map(|s| (s..10).map(move |e| (s, e))).map(|(s, e)| p_of(s, e)).collect();
    assert!(inside.iter().filter(|&&p| p <= 0.05).count() <= inside.len() / 4, "{inside:?}");
}

#[test]
fn iwt_adjustment_examples() {
    let sets: Vec<IntervalSet> = (0..4)
        .flat_map(|s| (s..4).map(move |e| IntervalSet { start: s, end: e, complement: false }))
        .collect();
    let ones = adjust(RawTable {
        components: 4,
        sets: sets.clone(),
        p_values: vec![1.0; sets.len()],
    });
    assert_eq!(ones.adjusted_p, vec![1.0; 4]);
    // Small p for every interval touching {1, 2}.
    let p: Vec<f64> = sets.iter().map(|s| if s.end >= 1 && s.start <= 2 { 0.002 } else { 0.4 }).collect();
    let adj = adjust(RawTable {
        components: 4,
        sets: sets.clone(),
        p_values: p,
    });
    assert_eq!(adj.adjusted_p, vec![0.4, 0.002, 0.002, 0.4]);
    assert_eq!(adj.sig_01_mask, vec![false, true, true, false]);
    let single = adjust(RawTable {
        components: 1,
        sets: vec![IntervalSet { start: 0, end: 0, complement: false }],
        p_values: vec![0.17],
    });
    assert_eq!(single.adjusted_p, vec![0.17]);
}

#[test]
fn iwt_on_pipeline_output() {
    let set = strong_set();
    let a = CurveSample::from_set(set, Which::Observed);
    let b = CurveSample::from_set(set, Which::Null);
    let res = iwt_test(&a, &b, 999, 2, Basis::Pointwise, Combine::Sum).unwrap();
    assert_eq!(res.adjusted_p[0], 1.0);
    assert!(res.significant_fraction(0.05, true) >= 0.5);
    let max = iwt_test(&a, &b, 999, 2, Basis::Pointwise, Combine::Max).unwrap();
    assert_eq!(max.adjusted_p[0], 1.0);
}

fn flat_iwt(components: usize) -> IWTResult {
    adjust(RawTable {
        components,
        sets: vec![IntervalSet { start: 0, end: components - 1, complement: false }],
        p_values: vec![1.0],
    })
}

#[test]
fn plots_are_deterministic() {
    let grid = CurveGrid::equispaced(4, 2, 2);
    let zeros = dummy_set(&grid);
    let svg = curve_svg(&zeros);
    assert_eq!(svg, curve_svg(&zeros));
    let obs = svg.split("class=\"VIc\" points=\"").nth(1).unwrap().split('"').next().unwrap().to_string();
    let null = svg.split("class=\"VIc_random\" points=\"").nth(1).unwrap().split('"').next().unwrap().to_string();
    assert_eq!(obs, null);
    assert!(obs.split(' ').map(|p| p.split(',').nth(1).unwrap()).all(|y| y == obs.split(',').nth(1).unwrap().split(' ').next().unwrap()));
    assert!(svg.contains(">VIc<") && svg.contains(">VIc_random<"));

    let p = pvalue_svg(&grid.levels, &flat_iwt(grid.levels.len()));
    assert!(!p.contains("class=\"sig\""));
    assert!(p.contains("stroke=\"red\""));
}

#[test]
fn strong_curves_have_separated_bands() {
    let set = strong_set();
    let obs = level_bands(set, Which::Observed);
    let null = level_bands(set, Which::Null);
    for (l, &p) in set.grid.levels.iter().enumerate() {
        if p > 0.0 && p <= 0.3 + 1e-9 {
            assert!(obs[l].2 < null[l].1, "p={p}: obs {:?} null {:?}", obs[l], null[l]);
        }
    }
    let svg = curve_svg(set);
    assert_eq!(svg, curve_svg(&VICurveSet::from_json(&set.to_json().unwrap()).unwrap()));
}

#[test]
fn report_run_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        input: InputSource::Generator(GeneratorSpec::new(300, 5, 8.0, 0.8, 7)),
        method: DetectorChoice::FastGreedy,
        grid: CurveGrid::equispaced(5, 4, 2),
        tests: vec![TestChoice::Iwt, TestChoice::Gp, TestChoice::Fpca],
        seed: 7,
        null_draws: 1,
        out_dir: dir.path().join("a"),
        fpca: FpcaOptions {
            perms: 999,
            ..FpcaOptions::default()
        },
        iwt: IwtOptions {
            perms: 199,
            ..IwtOptions::default()
        },
    };
    let summary = report::run(&cfg).unwrap();
    assert!(summary.gp.as_ref().unwrap().log_bf > 20.0);
    assert!(summary.fpca.as_ref().unwrap().fdr_reject);
    assert_eq!(summary.provenance.config_hash, cfg.hash());
    for name in &summary.artifacts {
        assert!(cfg.out_dir.join(name).is_file(), "{name}");
    }

    let mut again = cfg.clone();
    again.out_dir = dir.path().join("b");
    report::run(&again).unwrap();
    for name in ["summary.json", "curves.json", "gp.json", "fpca.json", "iwt.json", "curves.svg", "pvalues.svg"] {
        assert_eq!(fs::read(cfg.out_dir.join(name)).unwrap(), fs::read(again.out_dir.join(name)).unwrap(), "{name}");
    }

    // Plots rebuild from the JSON artifacts alone.
    let curves = report::read_curves(&cfg.out_dir.join("curves.json")).unwrap();
    let iwt = report::read_iwt(&cfg.out_dir.join("iwt.json")).unwrap();
    let (c, p) = report::render_plots(&curves, Some(&iwt));
    assert_eq!(c.as_bytes(), fs::read(cfg.out_dir.join("curves.svg")).unwrap());
    assert_eq!(p.unwrap().as_bytes(), fs::read(cfg.out_dir.join("pvalues.svg")).unwrap());
}

#[test]
fn report_stage_errors_keep_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    fs::write(&edges, "0 1\n1 2\n2 0\n").unwrap();
    let cfg = RunConfig {
        input: InputSource::EdgeList {
            path: edges,
            delimiter: None,
        },
        method: DetectorChoice::Louvain,
        grid: CurveGrid::equispaced(3, 2, 2),
        tests: vec![TestChoice::Gp],
        seed: 0,
        null_draws: 1,
        out_dir: dir.path().join("out"),
        fpca: FpcaOptions::default(),
        iwt: IwtOptions::default(),
    };
    let err = report::run(&cfg).unwrap_err();
    assert!(err.to_string().starts_with("curve stage failed"), "{err}");
    assert_eq!(err.exit_code(), 4);
    assert!(cfg.out_dir.join("config.json").is_file());
    assert!(cfg.out_dir.join("partition.json").is_file());
    assert!(!cfg.out_dir.join("summary.json").exists());

    let missing = dir.path().join("broken.json");
    fs::write(&missing, r#"{"grid": {"levels": [0.0], "n_primary": 1, "n_secondary": 1}}"#).unwrap();
    let err = report::read_curves(&missing).unwrap_err();
    assert!(err.to_string().contains("method"), "{err}");
}

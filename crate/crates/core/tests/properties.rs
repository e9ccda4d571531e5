use gsa_core::analyzers::{
    analyze_delta, analyze_dgsm, analyze_fast, analyze_morris, analyze_rbd, analyze_sobol, Warning,
};
use gsa_core::samplers::{
    curve_parameter, fast_sample, finite_difference_sample, hybrid_fast_rbd_sample,
    latin_hypercube_sample, morris_sample, rbd_sample, saltelli_sample, search_curve, FastConfig,
    MorrisConfig,
};
use gsa_core::{evaluate_model, model_fn, Layout, ProblemSpec, SampleMatrix};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = ProblemSpec> {
    prop::collection::vec((-50.0f64..50.0, 0.01f64..20.0), 1..6).prop_map(|b| {
        let names = (0..b.len()).map(|i| format!("f{i}")).collect();
        ProblemSpec::new(names, b.into_iter().map(|(lo, w)| (lo, lo + w)).collect()).unwrap()
    })
}

fn all_designs(spec: &ProblemSpec, seed: u64) -> Vec<SampleMatrix> {
    let k = spec.num_factors();
    let mut out = vec![
        saltelli_sample(spec, 16, true, seed).unwrap(),
        fast_sample(spec, &FastConfig::new(160)).unwrap(),
        rbd_sample(spec, 64, seed).unwrap(),
        morris_sample(
            spec,
            &MorrisConfig {
                trajectories: 4,
                levels: 4,
            },
            seed,
        )
        .unwrap(),
        finite_difference_sample(spec, 8, 1e-3, seed).unwrap(),
        latin_hypercube_sample(spec, 32, seed).unwrap(),
    ];
    if k >= 2 {
        out.push(hybrid_fast_rbd_sample(spec, 256, 2, seed).unwrap());
    }
    out
}

fn in_bounds(spec: &ProblemSpec, m: &SampleMatrix) -> bool {
    (0..m.rows()).all(|r| {
        m.row(r)
            .iter()
            .zip(spec.bounds())
            .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    })
}

/// Smooth test model: weighted sum plus one interaction term.
fn mixed_model(spec: &ProblemSpec, w: Vec<f64>) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |x: &[f64]| {
        let u: Vec<f64> = (0..x.len()).map(|i| spec.normalize(i, x[i])).collect();
        let mut y: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum();
        if u.len() > 1 {
            y += w[0] * u[0] * u[1];
        }
        y
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn samplers_respect_bounds(spec in spec_strategy(), seed in any::<u64>()) {
        for m in all_designs(&spec, seed) {
            prop_assert!(in_bounds(&spec, &m), "{:?} left the bounds", m.kind());
            prop_assert_eq!(m.cols(), spec.num_factors());
        }
    }

    #[test]
    fn samplers_are_pure(spec in spec_strategy(), seed in any::<u64>()) {
        prop_assert_eq!(all_designs(&spec, seed), all_designs(&spec, seed));
    }

    #[test]
    fn morris_trajectory_structure(spec in spec_strategy(), seed in any::<u64>(), r in 2usize..6) {
        let k = spec.num_factors();
        let m = morris_sample(&spec, &MorrisConfig { trajectories: r, levels: 4 }, seed).unwrap();
        let Layout::Morris(l) = m.layout() else { panic!() };
        prop_assert_eq!(m.rows(), r * (k + 1));
        for t in 0..r {
            let mut seen = vec![false; k];
            for s in 0..k {
                let a = m.row(l.start(t) + s);
                let b = m.row(l.start(t) + s + 1);
                let changed: Vec<usize> = (0..k).filter(|&c| a[c] != b[c]).collect();
                prop_assert_eq!(changed.len(), 1);
                let c = changed[0];
                prop_assert!(!seen[c]);
                seen[c] = true;
                let step = (spec.normalize(c, b[c]) - spec.normalize(c, a[c])).abs();
                prop_assert!((step - l.delta).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rbd_columns_sort_to_the_curve(spec in spec_strategy(), seed in any::<u64>()) {
        let m = rbd_sample(&spec, 64, seed).unwrap();
        let Layout::Balanced(l) = m.layout() else { panic!() };
        for i in 0..spec.num_factors() {
            let mut col: Vec<f64> = m.column(i).collect();
            let mut curve: Vec<f64> = (0..64)
                .map(|j| spec.scale(i, search_curve(1.0, curve_parameter(j, 64), l.phase)))
                .collect();
            col.sort_by(f64::total_cmp);
            curve.sort_by(f64::total_cmp);
            prop_assert_eq!(col, curve);
        }
    }

    #[test]
    fn evaluation_commutes_with_row_order(spec in spec_strategy(), seed in any::<u64>()) {
        let m = latin_hypercube_sample(&spec, 32, seed).unwrap();
        let f = model_fn(|x: &[f64]| x.iter().map(|v| v.sin()).sum());
        let y = evaluate_model(&f, &m).unwrap();
        let mut rows: Vec<Vec<f64>> = (0..32).map(|r| m.row(r).to_vec()).collect();
        rows.reverse();
        let flipped = SampleMatrix::given_data(&spec, &rows).unwrap();
        let mut yf = evaluate_model(&f, &flipped).unwrap().values;
        yf.reverse();
        prop_assert_eq!(y.values, yf);
    }

    #[test]
    fn index_ranges(spec in spec_strategy(), seed in any::<u64>(),
                    w in prop::collection::vec(-3.0f64..3.0, 6)) {
        let k = spec.num_factors();
        let model = model_fn(mixed_model(&spec, w));

        let m = saltelli_sample(&spec, 256, false, seed).unwrap();
        let y = evaluate_model(&model, &m).unwrap();
        let s = analyze_sobol(&m, &y, 30).unwrap();
        for i in 0..k {
            prop_assert!(s.s1[i] <= s.st[i] + s.s1_conf[i] + s.st_conf[i] + 0.02,
                "S1 {} > ST {} for factor {}", s.s1[i], s.st[i], i);
            prop_assert!(s.s1[i].is_finite() && s.st[i].is_finite());
        }

        let m = fast_sample(&spec, &FastConfig::new(256)).unwrap();
        let y = evaluate_model(&model, &m).unwrap();
        let f = analyze_fast(&m, &y).unwrap();
        let st = f.st.unwrap();
        for i in 0..k {
            prop_assert!((0.0..=1.0).contains(&f.s1[i]));
            prop_assert!(f.s1[i] <= st[i] + 0.05);
        }

        let m = rbd_sample(&spec, 128, seed).unwrap();
        let y = evaluate_model(&model, &m).unwrap();
        prop_assert!(analyze_rbd(&m, &y).unwrap().s1.iter().all(|v| (0.0..=1.0).contains(v)));

        let m = finite_difference_sample(&spec, 16, 1e-3, seed).unwrap();
        let y = evaluate_model(&model, &m).unwrap();
        prop_assert!(analyze_dgsm(&m, &y).unwrap().v.iter().all(|&v| v >= 0.0));

        let m = latin_hypercube_sample(&spec, 256, seed).unwrap();
        let y = evaluate_model(&model, &m).unwrap();
        let d = analyze_delta(&m, &y, 16, 0).unwrap();
        prop_assert!(d.delta.iter().all(|v| (0.0..=1.0).contains(v)));

        let m = morris_sample(&spec, &MorrisConfig { trajectories: 6, levels: 4 }, seed).unwrap();
        let y = evaluate_model(&model, &m).unwrap();
        let r = analyze_morris(&m, &y).unwrap();
        for i in 0..k {
            prop_assert!(r.mu_star[i] >= r.mu[i].abs() - 1e-12 && r.sigma[i] >= 0.0);
        }
    }

    #[test]
    fn constant_model_gives_zero_indices(spec in spec_strategy(), seed in any::<u64>(), c in -5.0f64..5.0) {
        let model = model_fn(move |_: &[f64]| c);
        let warned = Some(Warning::ConstantOutput);

        let m = saltelli_sample(&spec, 16, true, seed).unwrap();
        let s = analyze_sobol(&m, &evaluate_model(&model, &m).unwrap(), 10).unwrap();
        prop_assert_eq!(s.warning, warned);
        prop_assert!(s.s1.iter().chain(&s.st).all(|&v| v == 0.0));

        let m = fast_sample(&spec, &FastConfig::new(160)).unwrap();
        let f = analyze_fast(&m, &evaluate_model(&model, &m).unwrap()).unwrap();
        prop_assert_eq!(f.warning, warned);
        prop_assert!(f.s1.iter().all(|&v| v == 0.0));

        let m = rbd_sample(&spec, 64, seed).unwrap();
        let r = analyze_rbd(&m, &evaluate_model(&model, &m).unwrap()).unwrap();
        prop_assert_eq!(r.warning, warned);
        prop_assert!(r.s1.iter().all(|&v| v == 0.0));

        let m = morris_sample(&spec, &MorrisConfig { trajectories: 3, levels: 4 }, seed).unwrap();
        let mo = analyze_morris(&m, &evaluate_model(&model, &m).unwrap()).unwrap();
        prop_assert_eq!(mo.warning, warned);
        prop_assert!(mo.mu_star.iter().chain(&mo.sigma).all(|&v| v == 0.0));

        let m = finite_difference_sample(&spec, 4, 1e-3, seed).unwrap();
        let d = analyze_dgsm(&m, &evaluate_model(&model, &m).unwrap()).unwrap();
        prop_assert_eq!(d.warning, warned);
        prop_assert!(d.v.iter().all(|&v| v == 0.0));

        let m = latin_hypercube_sample(&spec, 64, seed).unwrap();
        let dl = analyze_delta(&m, &evaluate_model(&model, &m).unwrap(), 4, 0).unwrap();
        prop_assert_eq!(dl.warning, warned);
        prop_assert!(dl.delta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn additive_models(spec in spec_strategy(), seed in any::<u64>(),
                       c in prop::collection::vec(-4.0f64..4.0, 6)) {
        let k = spec.num_factors();
        let c = c[..k].to_vec();
        let cc = c.clone();
        let model = model_fn(move |x: &[f64]| x.iter().zip(&cc).map(|(a, b)| a * b).sum());

        let m = morris_sample(&spec, &MorrisConfig { trajectories: 5, levels: 4 }, seed).unwrap();
        let r = analyze_morris(&m, &evaluate_model(&model, &m).unwrap()).unwrap();
        for i in 0..k {
            let scale = (c[i] * spec.range(i)).abs().max(1.0);
            prop_assert!(r.sigma[i] <= 1e-9 * scale, "sigma {}", r.sigma[i]);
        }

        let m = finite_difference_sample(&spec, 8, 1e-3, seed).unwrap();
        let d = analyze_dgsm(&m, &evaluate_model(&model, &m).unwrap()).unwrap();
        for i in 0..k {
            let expect = (c[i] * spec.range(i)).powi(2);
            prop_assert!((d.v[i] - expect).abs() <= 1e-6 * expect.max(1.0), "v {} vs {}", d.v[i], expect);
        }
    }
}

#[test]
fn bootstrap_half_widths_shrink_with_more_samples() {
    let spec = ProblemSpec::uniform(3, 0.0, 1.0).unwrap();
    let model = model_fn(|x: &[f64]| x[0] + 2.0 * x[1] * x[1] + x[0] * x[2]);
    let width = |n: usize| {
        let m = saltelli_sample(&spec, n, false, 4).unwrap();
        let s = analyze_sobol(&m, &evaluate_model(&model, &m).unwrap(), 100).unwrap();
        s.s1_conf.iter().chain(&s.st_conf).sum::<f64>()
    };
    assert!(width(2048) < width(256));
    let dwidth = |n: usize| {
        let m = latin_hypercube_sample(&spec, n, 4).unwrap();
        let d = analyze_delta(&m, &evaluate_model(&model, &m).unwrap(), 16, 40).unwrap();
        d.conf.iter().sum::<f64>()
    };
    assert!(dwidth(4096) < dwidth(512));
}

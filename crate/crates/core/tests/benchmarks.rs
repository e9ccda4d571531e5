use gsa_core::analyzers::{
    analyze_delta, analyze_dgsm, analyze_fast, analyze_morris, analyze_rbd, analyze_sobol,
    default_classes,
};
use gsa_core::samplers::{
    fast_sample, finite_difference_sample, hybrid_fast_rbd_sample, latin_hypercube_sample,
    morris_sample, rbd_sample, saltelli_sample, FastConfig, MorrisConfig,
};
use gsa_core::testfuncs::Benchmark;
use gsa_core::{evaluate_model, model_fn, ProblemSpec};

fn within(label: &str, got: &[f64], want: &[f64], tol: f64) {
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!(
            (g - w).abs() <= tol,
            "{label}[{i}] = {g}, expected {w} +/- {tol}; all {got:?}"
        );
    }
}

#[test]
fn sobol_on_ishigami() {
    let b = Benchmark::ishigami(7.0, 0.1);
    let m = saltelli_sample(b.spec(), 1024, false, 1).unwrap();
    let y = evaluate_model(b.evaluator(), &m).unwrap();
    let s = analyze_sobol(&m, &y, 100).unwrap();
    eprintln!("sobol {s:?}");
    within("S1", &s.s1, b.reference_s1(), 0.03);
    assert!(s.st[0] > s.st[2] && s.st[2] > s.s1[2] && s.st[2] > 0.2);
}

#[test]
fn fast_on_ishigami() {
    let b = Benchmark::ishigami(7.0, 0.1);
    let m = fast_sample(b.spec(), &FastConfig::new(1024)).unwrap();
    let y = evaluate_model(b.evaluator(), &m).unwrap();
    let f = analyze_fast(&m, &y).unwrap();
    eprintln!("fast {f:?}");
    within("S1", &f.s1, b.reference_s1(), 0.05);
    let st = f.st.unwrap();
    for i in 0..3 {
        assert!(f.s1[i] <= st[i] + 0.05);
    }
}

#[test]
fn rbd_on_ishigami() {
    let b = Benchmark::ishigami(7.0, 0.1);
    let m = rbd_sample(b.spec(), 1024, 3).unwrap();
    let y = evaluate_model(b.evaluator(), &m).unwrap();
    let r = analyze_rbd(&m, &y).unwrap();
    eprintln!("rbd {r:?}");
    within("S1", &r.s1, b.reference_s1(), 0.07);
    assert!(r.s1[2] <= 0.05);
    let h = hybrid_fast_rbd_sample(b.spec(), 1024, 1, 3).unwrap();
    let yh = evaluate_model(b.evaluator(), &h).unwrap();
    within("hybrid", &analyze_rbd(&h, &yh).unwrap().s1, &r.s1, 0.02);
}

#[test]
fn hybrid_on_g_function() {
    let b = Benchmark::sobol_g(&[0.0, 1.0, 4.5, 9.0]);
    let m = hybrid_fast_rbd_sample(b.spec(), 1024, 2, 5).unwrap();
    let y = evaluate_model(b.evaluator(), &m).unwrap();
    let r = analyze_rbd(&m, &y).unwrap();
    eprintln!("hybrid {r:?}");
    within("S1", &r.s1, b.reference_s1(), 0.07);
}

#[test]
fn morris_on_g_function_and_linear() {
    let b = Benchmark::sobol_g(&[0.0, 1.0, 4.5, 9.0]);
    let m = morris_sample(b.spec(), &MorrisConfig::default(), 2).unwrap();
    let y = evaluate_model(b.evaluator(), &m).unwrap();
    let r = analyze_morris(&m, &y).unwrap();
    eprintln!("morris {r:?}");
    assert!(r.mu_star.windows(2).all(|w| w[0] > w[1]), "{r:?}");

    let lin = Benchmark::linear(&[2.0, 1.0], &[(0.0, 1.0); 2]);
    let m = morris_sample(lin.spec(), &MorrisConfig::default(), 2).unwrap();
    let y = evaluate_model(lin.evaluator(), &m).unwrap();
    let r = analyze_morris(&m, &y).unwrap();
    within("mu_star", &r.mu_star, &[2.0, 1.0], 1e-9);
    within("sigma", &r.sigma, &[0.0, 0.0], 1e-9);
}

#[test]
fn dgsm_on_linear_and_bound() {
    let lin = Benchmark::linear(&[3.0, 0.0], &[(0.0, 1.0); 2]);
    let m = finite_difference_sample(lin.spec(), 256, 1e-3, 0).unwrap();
    let y = evaluate_model(lin.evaluator(), &m).unwrap();
    within("v", &analyze_dgsm(&m, &y).unwrap().v, &[9.0, 0.0], 1e-6);

    // the Poincare bound ST_i <= v_i / (pi^2 V) on normalized coordinates
    let b = Benchmark::ishigami(7.0, 0.1);
    let m = finite_difference_sample(b.spec(), 4096, 1e-3, 0).unwrap();
    let y = evaluate_model(b.evaluator(), &m).unwrap();
    let d = analyze_dgsm(&m, &y).unwrap();
    eprintln!("dgsm {d:?}");
    let total_variance = 13.8446;
    for i in 0..3 {
        let bound = d.v[i] / (std::f64::consts::PI.powi(2) * total_variance);
        assert!(b.reference_st()[i] <= bound, "factor {i}: {bound}");
    }
}

#[test]
fn delta_given_data() {
    let spec = ProblemSpec::uniform(2, 0.0, 1.0).unwrap();
    let m = latin_hypercube_sample(&spec, 2048, 6).unwrap();
    let y = evaluate_model(&model_fn(|x| x[0]), &m).unwrap();
    let d = analyze_delta(&m, &y, default_classes(2048), 50).unwrap();
    eprintln!("delta {d:?}");
    assert!(d.delta[0] > 0.3 && d.delta[0] >= 5.0 * d.delta[1] && d.delta[1] <= 0.05);

    let b = Benchmark::ishigami(7.0, 0.1);
    let m = latin_hypercube_sample(b.spec(), 4096, 6).unwrap();
    let y = evaluate_model(b.evaluator(), &m).unwrap();
    let d = analyze_delta(&m, &y, default_classes(4096), 0).unwrap();
    eprintln!("delta ishigami {d:?}");
    assert!(d.delta[1] > d.delta[2]);
}

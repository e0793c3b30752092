use flowmap::gp::{fit_hyperparameters, SearchConfig};
use flowmap::linalg::Matrix;
use flowmap::rff::draw_realisation;
use flowmap::seeding::child_seed;
use flowmap::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[test]
fn probe_acceptance3_synthetic() {
    // y ~ GP(0, K(0.7)) on a 1-d grid, plus linear trend 1 + 0.3x
    let n = 40;
    let points = Matrix::from_fn(n, 1, |i, _| 8.0 * i as f64 / (n - 1) as f64);
    let delta = 0.7f64;
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    // crude GP draw via cholesky of K
    let mut k = Matrix::zeros(n, n);
    for i in 0..n { for j in 0..n {
        let z: f64 = (points.get(i,0)-points.get(j,0))/delta;
        k.set(i, j, (-0.5*z*z).exp() + if i==j {1e-10} else {0.0});
    }}
    let chol = flowmap::linalg::Cholesky::new(&k).unwrap();
    let zs: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
    let y: Vec<f64> = (0..n).map(|i| {
        1.0 + 0.3*points.get(i,0) + (0..=i).map(|q| chol.lower().get(i,q)*zs[q]).sum::<f64>()
    }).collect();
    let model = fit_hyperparameters(&points, &y, &SearchConfig::default()).unwrap();
    println!("fitted delta {:?} sigma2 {:.3}", model.kernel().length_scales(), model.kernel().signal_variance());
    let draws = 200;
    let mut ok = 0;
    for p in 0..50 {
        let x = [8.0 * (p as f64 + 0.5) / 50.0];
        let exact = model.predict_mean(&x).unwrap();
        let vals: Vec<f64> = (0..draws).map(|s| draw_realisation(&model, 2000, child_seed(4242, 0, s)).unwrap().eval(&x).unwrap()).collect();
        let mean = vals.iter().sum::<f64>() / draws as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        if (mean - exact).abs() <= 2.0 * se { ok += 1; }
        if p < 5 { println!("p{p}: bias={:.2e} 2se={:.2e}", (mean-exact).abs(), 2.0*se); }
    }
    println!("within 2se: {ok}/50");
}

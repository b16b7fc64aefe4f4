//! Central finite differences against the analytic gradients.
//!
//! The weight profile is a stop-gradient quantity, so every difference
//! quotient here is taken with the profile frozen at the base point.

use dwmd_core::discrepancy::{dwmd, dwmd_from_moments, dwmd_gradient, smd_gradient, DwmdConfig};
use dwmd_core::moments::raw_moments;
use dwmd_core::nettrain::{Activation, Network, NetworkSpec};
use dwmd_core::regularizer::{Regularizer, RegularizerKind};
use dwmd_core::weighting::weight_profile;
use dwmd_core::{Matrix, SampleMatrix, WeightProfile};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const STEP: f64 = 1e-6;

fn random_samples(rng: &mut StdRng, m: usize, d: usize, lo: f64, hi: f64) -> SampleMatrix {
    let data = (0..m * d).map(|_| rng.random_range(lo..hi)).collect();
    SampleMatrix::from_vec(m, d, data).unwrap()
}

fn frozen_value(s: &SampleMatrix, t: &SampleMatrix, profile: &WeightProfile, cfg: &DwmdConfig) -> f64 {
    let ms = raw_moments(s, cfg.n).unwrap();
    let mt = raw_moments(t, cfg.n).unwrap();
    dwmd_from_moments(&ms, &mt, profile, cfg).unwrap().total
}

fn nudged(base: &SampleMatrix, i: usize, j: usize, h: f64) -> SampleMatrix {
    let mut m = base.matrix().clone();
    m.set(i, j, m.get(i, j) + h);
    SampleMatrix::new(m).unwrap()
}

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n) * (a - n)).sum();
    let norm: f64 = numeric.iter().map(|n| n * n).sum();
    (diff / norm.max(1e-300)).sqrt()
}

/// Finite-difference gradients of the frozen-weight series w.r.t. both inputs.
fn numeric_gradient(s: &SampleMatrix, t: &SampleMatrix, profile: &WeightProfile, cfg: &DwmdConfig) -> (Vec<f64>, Vec<f64>) {
    let mut gs = Vec::new();
    for i in 0..s.samples() {
        for j in 0..s.dim() {
            let f = |h| frozen_value(&nudged(s, i, j, h), t, profile, cfg);
            gs.push((f(STEP) - f(-STEP)) / (2.0 * STEP));
        }
    }
    let mut gt = Vec::new();
    for i in 0..t.samples() {
        for j in 0..t.dim() {
            let f = |h| frozen_value(s, &nudged(t, i, j, h), profile, cfg);
            gt.push((f(STEP) - f(-STEP)) / (2.0 * STEP));
        }
    }
    (gs, gt)
}

fn min_gap(s: &SampleMatrix, t: &SampleMatrix, n: usize) -> f64 {
    let ms = raw_moments(s, n).unwrap();
    let mt = raw_moments(t, n).unwrap();
    ms.values().iter().zip(mt.values()).map(|(a, b)| (a - b).abs()).fold(f64::INFINITY, f64::min)
}

#[test]
fn dwmd_gradient_matches_differences() {
    let mut rng = StdRng::seed_from_u64(21);
    let mut checked = 0;
    for beta in [1.0, 0.8, 0.5] {
        let tol = if beta == 1.0 { 1e-5 } else { 1e-4 };
        let mut trial = 0;
        while trial < 10 {
            let s = random_samples(&mut rng, 3, 2, -1.0, 1.0);
            let t = random_samples(&mut rng, 3, 2, -0.5, 1.5);
            let cfg = DwmdConfig { n: 2, beta, alpha: 0.0, ..DwmdConfig::default() };
            if beta < 1.0 && min_gap(&s, &t, cfg.n) <= 1e-3 {
                continue;
            }
            trial += 1;
            let profile = dwmd(&s, &t, &cfg).unwrap().weight_profile;
            let (gs, gt) = dwmd_gradient(&s, &t, &cfg).unwrap();
            let (ns, nt) = numeric_gradient(&s, &t, &profile, &cfg);
            let err = relative_error(&[gs.as_slice(), gt.as_slice()].concat(), &[ns, nt].concat());
            assert!(err < tol, "beta {beta}: relative error {err}");
            checked += 1;
        }
    }
    assert_eq!(checked, 30);
}

#[test]
fn smd_gradient_uses_averaged_weights() {
    let mut rng = StdRng::seed_from_u64(5);
    let s = random_samples(&mut rng, 30, 3, -1.0, 1.0);
    let t = random_samples(&mut rng, 30, 3, -0.2, 1.8);
    let cfg = DwmdConfig { n: 4, ..DwmdConfig::default() };
    let profile = dwmd(&s, &t, &cfg).unwrap().weight_profile.averaged();
    let (gs, gt) = smd_gradient(&s, &t, &cfg).unwrap();
    let (ns, nt) = numeric_gradient(&s, &t, &profile, &cfg);
    let err = relative_error(&[gs.as_slice(), gt.as_slice()].concat(), &[ns, nt].concat());
    assert!(err < 1e-5, "{err}");
}

#[test]
fn gradient_is_zero_on_identical_inputs_and_symmetric() {
    let mut rng = StdRng::seed_from_u64(1);
    let s = random_samples(&mut rng, 25, 2, -1.0, 1.0);
    let t = random_samples(&mut rng, 25, 2, 0.0, 2.0);
    let cfg = DwmdConfig::default();
    let (a, b) = dwmd_gradient(&s, &s, &cfg).unwrap();
    assert_eq!(a.max_abs(), 0.0);
    assert_eq!(b.max_abs(), 0.0);
    // swapping the roles swaps the gradient blocks
    let (gs, gt) = dwmd_gradient(&s, &t, &cfg).unwrap();
    let (gt2, gs2) = dwmd_gradient(&t, &s, &cfg).unwrap();
    assert_eq!(gs, gs2);
    assert_eq!(gt, gt2);
}

#[test]
fn standardized_gradient_scales_by_pooled_std() {
    // with standardization the pooled statistics are held fixed, so the
    // gradient equals the plain gradient on the standardized inputs over std
    let mut rng = StdRng::seed_from_u64(13);
    let s = random_samples(&mut rng, 30, 2, -3.0, 3.0);
    let t = random_samples(&mut rng, 30, 2, -1.0, 5.0);
    let cfg = DwmdConfig { standardize: true, ..DwmdConfig::default() };
    let (gs, _) = dwmd_gradient(&s, &t, &cfg).unwrap();
    let stats = dwmd_core::moments::PooledStats::compute(&s, &t).unwrap();
    let (zs, zt) = (stats.apply(&s).unwrap(), stats.apply(&t).unwrap());
    let (plain, _) = dwmd_gradient(&zs, &zt, &DwmdConfig::default()).unwrap();
    for i in 0..30 {
        for j in 0..2 {
            assert!((gs.get(i, j) - plain.get(i, j) / stats.scale(j)).abs() < 1e-15);
        }
    }
}

/// Objective with each matched layer's profile frozen.
fn network_objective(
    net: &Network,
    xs: &Matrix,
    ys: &[usize],
    xt: &Matrix,
    profiles: &[WeightProfile],
    cfg: &DwmdConfig,
    lambda: f64,
) -> f64 {
    let ps = net.forward(xs).unwrap();
    let pt = net.forward(xt).unwrap();
    let ce = -ys.iter().enumerate().map(|(i, &y)| ps.probs.get(i, y).ln()).sum::<f64>() / ys.len() as f64;
    let reg: f64 = net
        .spec
        .matched_layers
        .iter()
        .zip(profiles)
        .map(|(&l, p)| {
            let a = SampleMatrix::new(ps.hidden[l].clone()).unwrap();
            let b = SampleMatrix::new(pt.hidden[l].clone()).unwrap();
            frozen_value(&a, &b, p, cfg)
        })
        .sum();
    ce + lambda * reg
}

fn check_network(sizes: Vec<usize>, acts: Vec<Activation>, matched: Vec<usize>, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let spec = NetworkSpec::new(sizes.clone(), acts, matched).unwrap();
    let mut net = Network::init(spec, &mut rng).unwrap();
    for layer in &mut net.layers {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.3..0.3);
        }
    }
    let m = 8;
    let xs = random_samples(&mut rng, m, sizes[0], -1.0, 1.0).into_matrix();
    let xt = random_samples(&mut rng, m, sizes[0], -0.5, 1.5).into_matrix();
    let classes = *sizes.last().unwrap();
    let ys: Vec<usize> = (0..m).map(|i| i % classes).collect();
    let cfg = DwmdConfig { alpha: 0.0, ..DwmdConfig::default() };
    let reg = Regularizer {
        kind: RegularizerKind::Dwmd,
        dwmd: cfg,
        cmd_width: Default::default(),
        mmd_bandwidth: Default::default(),
    };
    let lambda = 1.0;
    let eval = net.objective(&xs, &ys, &xt, &reg, lambda).unwrap();

    let ps = net.forward(&xs).unwrap();
    let pt = net.forward(&xt).unwrap();
    let profiles: Vec<WeightProfile> = net
        .spec
        .matched_layers
        .iter()
        .map(|&l| {
            let a = SampleMatrix::new(ps.hidden[l].clone()).unwrap();
            let b = SampleMatrix::new(pt.hidden[l].clone()).unwrap();
            weight_profile(&a, &b, cfg.alpha, cfg.c_policy).unwrap()
        })
        .collect();
    let base = network_objective(&net, &xs, &ys, &xt, &profiles, &cfg, lambda);
    assert!((base - eval.objective).abs() < 1e-12);

    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for li in 0..net.layers.len() {
        let n_w = net.layers[li].weights.as_slice().len();
        for p in 0..n_w + net.layers[li].bias.len() {
            let f = |h: f64| {
                let mut probe = net.clone();
                if p < n_w {
                    probe.layers[li].weights.as_mut_slice()[p] += h;
                } else {
                    probe.layers[li].bias[p - n_w] += h;
                }
                network_objective(&probe, &xs, &ys, &xt, &profiles, &cfg, lambda)
            };
            numeric.push((f(STEP) - f(-STEP)) / (2.0 * STEP));
            let g = &eval.gradients[li];
            analytic.push(if p < n_w { g.weights.as_slice()[p] } else { g.bias[p - n_w] });
        }
    }
    relative_error(&analytic, &numeric)
}

#[test]
fn total_objective_gradient_tiny_network() {
    let err = check_network(vec![2, 4, 2], vec![Activation::Sigmoid], vec![0], 3);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn total_objective_gradient_two_matched_layers() {
    let err = check_network(vec![2, 8, 4, 2], vec![Activation::Relu, Activation::Sigmoid], vec![0, 1], 4);
    assert!(err < 1e-5, "{err}");
    let err = check_network(vec![2, 8, 4, 2], vec![Activation::Sigmoid, Activation::Sigmoid], vec![1], 6);
    assert!(err < 1e-5, "{err}");
}

mod common;

use common::*;
use smdenoise::metrics::rmse;
use smdenoise::sampler::{chain_rng, GibbsChain};
use smdenoise::synth::{generate_pair, SynthConfig};
use smdenoise::*;

/// Per-pixel threshold computed the slow way: collect the clipped window,
/// two-pass mean and population deviation.
fn threshold_oracle(f: &Raster, h: f64, window: usize) -> Vec<u8> {
    let (n1, n2) = f.shape();
    let r = (window / 2) as isize;
    let mut out = Vec::new();
    for i in 0..n1 as isize {
        for j in 0..n2 as isize {
            let mut patch = Vec::new();
            for k in i - r..=i + r {
                for l in j - r..=j + r {
                    if k >= 0 && l >= 0 && (k as usize) < n1 && (l as usize) < n2 {
                        patch.push(f.get(k as usize, l as usize));
                    }
                }
            }
            let v = f.get(i as usize, j as usize);
            let spot = if patch.iter().all(|&p| p == patch[0]) {
                true
            } else {
                let mu = patch.iter().sum::<f64>() / patch.len() as f64;
                let sd = (patch.iter().map(|p| (p - mu) * (p - mu)).sum::<f64>() / patch.len() as f64).sqrt();
                v >= mu + h * sd
            };
            out.push(spot as u8);
        }
    }
    out
}

#[test]
fn single_bright_pixel_threshold_by_hand() {
    let f = Raster::from_fn(5, 5, |i, j| if (i, j) == (2, 2) { 1.0 } else { 0.0 }).unwrap();
    let e = get_binary_image(&f, 0.1, 3).unwrap();
    #[rustfmt::skip]
    let expected = vec![
        1, 1, 1, 1, 1,
        1, 0, 0, 0, 1,
        1, 0, 1, 0, 1,
        1, 0, 0, 0, 1,
        1, 1, 1, 1, 1,
    ];
    assert_eq!(e.data(), expected.as_slice());

    // off-centre bright pixel: the windows touching it are clipped at the top edge
    let f = Raster::from_fn(5, 5, |i, j| if (i, j) == (0, 3) { 1.0 } else { 0.0 }).unwrap();
    let e = get_binary_image(&f, 0.1, 3).unwrap();
    #[rustfmt::skip]
    let expected = vec![
        1, 1, 0, 1, 0,
        1, 1, 0, 0, 0,
        1, 1, 1, 1, 1,
        1, 1, 1, 1, 1,
        1, 1, 1, 1, 1,
    ];
    assert_eq!(e.data(), expected.as_slice());
}

#[test]
fn threshold_matches_slow_oracle() {
    let mut rng = chain_rng(51);
    for window in [3, 5, 7, 9] {
        for (n1, n2) in [(5, 5), (4, 9), (12, 7)] {
            let f = random_raster(n1, n2, &mut rng);
            for h in [-0.5, 0.0, 0.1, 1.0] {
                let e = get_binary_image(&f, h, window).unwrap();
                assert_eq!(e.data(), threshold_oracle(&f, h, window).as_slice(), "{n1}x{n2} w={window} h={h}");
            }
        }
    }
}

#[test]
fn constant_image_is_all_spot() {
    let f = Raster::filled(5, 5, 0.3).unwrap();
    assert_eq!(get_binary_image(&f, 0.1, 3).unwrap().spot_count(), 25);
}

#[test]
fn constant_input_recovered() {
    // A noise-free constant normalizes to zero. The exact posterior mean is
    // zero by symmetry; the estimate is a Monte Carlo average whose per-pixel
    // spread is set by the posterior noise level (about 0.1 here), so the
    // level is checked at the default length and every pixel on a longer run.
    let y = Raster::filled(12, 10, 0.5).unwrap();
    for variant in [PriorVariant::Igmrf, PriorVariant::Higmrf] {
        for (iterations, check_pixels) in [(100, false), (1000, true)] {
            let hp = HyperParams::default().with_iterations(iterations);
            let out = denoise(&y, &hp, variant).unwrap();
            let z = out.normalization.forward(&out.posterior_mean);
            let level = z.mean();
            let rms = (z.data().iter().map(|v| v * v).sum::<f64>() / z.len() as f64).sqrt();
            assert!(level.abs() < 1e-2, "{variant} T={iterations}: level {level}");
            if check_pixels {
                assert!(rms < 1e-2, "{variant} T={iterations}: rms {rms}");
            }
        }
    }
}

#[test]
fn deterministic_under_seed() {
    let pair = generate_pair(&SynthConfig { n1: 16, n2: 14, ..SynthConfig::default() }, 0).unwrap();
    let hp = HyperParams::default().with_iterations(20).with_seed(9);
    for variant in [PriorVariant::Igmrf, PriorVariant::Higmrf] {
        let a = denoise(&pair.noisy, &hp, variant).unwrap();
        let b = denoise(&pair.noisy, &hp, variant).unwrap();
        assert_eq!(a, b);
        let bits = |r: &DenoiseResult| r.posterior_mean.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = denoise(&pair.noisy, &hp.clone().with_seed(10), variant).unwrap();
        assert_ne!(a.posterior_mean, c.posterior_mean);
    }
}

#[test]
fn posterior_mean_averages_post_burn_in_signal_draws() {
    let y = Raster::from_fn(9, 11, |i, j| ((i * 11 + j) as f64 * 0.61).sin() + if (i, j) == (4, 5) { 3.0 } else { 0.0 })
        .unwrap();
    let hp = HyperParams::default().with_iterations(12).with_seed(3);
    for variant in [PriorVariant::Igmrf, PriorVariant::Higmrf] {
        let out = denoise(&y, &hp, variant).unwrap();
        let norm = Normalization::fit(&y);
        let mut chain = GibbsChain::new(norm.forward(&y), &hp, variant).unwrap();
        let mut signal = vec![0.0; y.len()];
        let mut field = vec![0.0; y.len()];
        for t in 1..=hp.iterations {
            chain.step().unwrap();
            let st = chain.state();
            assert_eq!(out.theta_trace[t - 1], (st.noise.kappa_l(), st.noise.kappa_f()));
            assert_eq!(out.gamma_trace[t - 1], st.gamma);
            if t > hp.burn_in {
                for (s, v) in signal.iter_mut().zip(chain.signal()) {
                    *s += v;
                }
                for (s, v) in field.iter_mut().zip(st.f.data()) {
                    *s += v;
                }
            }
        }
        let k = (hp.iterations - hp.burn_in) as f64;
        let expect_signal = norm.inverse(&Raster::new(9, 11, signal.iter().map(|s| s / k).collect()).unwrap());
        let expect_field = norm.inverse(&Raster::new(9, 11, field.iter().map(|s| s / k).collect()).unwrap());
        assert_eq!(out.posterior_mean, expect_signal);
        assert_eq!(out.field_mean, expect_field);
        assert_eq!(out.final_mask, chain.state().mask);
        assert_eq!(out.accepted_iterations, hp.iterations - hp.burn_in);
        assert_eq!(out.post_burn_in_theta().len(), out.accepted_iterations);
    }
}

#[test]
fn table_one_configuration_on_thirty_by_thirty() {
    let pair = generate_pair(&SynthConfig::default(), 3).unwrap();
    let hp = HyperParams::default();
    assert_eq!(hp.iterations, 100);
    for variant in [PriorVariant::Igmrf, PriorVariant::Higmrf] {
        let out = denoise(&pair.noisy, &hp, variant).unwrap();
        assert_eq!(out.posterior_mean.shape(), (30, 30));
        assert_eq!(out.theta_trace.len(), 100);
        assert_eq!(out.gamma_trace.len(), 100);
        assert_eq!(out.accepted_iterations, 50);
        assert!(out.theta_trace.iter().all(|&(a, b)| a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()));
        let before = rmse(&pair.noisy, &pair.truth).unwrap();
        let after = rmse(&out.posterior_mean, &pair.truth).unwrap();
        assert!(after < before, "{variant}: {after} >= {before}");
        if variant == PriorVariant::Igmrf {
            assert_eq!(out.final_mask.spot_count(), 0);
        }
    }
}

#[test]
fn chains_use_consecutive_seeds() {
    let y = Raster::from_fn(7, 6, |i, j| ((i + 2 * j) as f64 * 0.3).cos()).unwrap();
    let hp = HyperParams::default().with_iterations(8).with_seed(100);
    let runs = denoise_chains(&y, &hp, PriorVariant::Higmrf, 3).unwrap();
    assert_eq!(runs.len(), 3);
    for (k, run) in runs.iter().enumerate() {
        let single = denoise(&y, &hp.clone().with_seed(100 + k as u64), PriorVariant::Higmrf).unwrap();
        assert_eq!(run, &single);
    }
}

#[test]
fn heterogeneous_precision_tracks_mask() {
    let pair = generate_pair(&SynthConfig { n1: 12, n2: 15, ..SynthConfig::default() }, 1).unwrap();
    let hp = HyperParams::default();
    let y = Normalization::fit(&pair.noisy).forward(&pair.noisy);
    let mut chain = GibbsChain::new(y, &hp, PriorVariant::Higmrf).unwrap();
    assert_eq!(chain.state().mask.spot_count(), 0);
    assert_eq!(chain.state().precision, build_igmrf_precision(12, 15).unwrap());
    for _ in 0..15 {
        chain.step().unwrap();
        let st = chain.state();
        let rebuilt = build_higmrf_precision(12, 15, &st.mask, LatticeWeights::default()).unwrap();
        assert_eq!(rebuilt, st.precision);
        assert_eq!(get_binary_image(&st.f, hp.h, hp.window).unwrap(), st.mask);
    }
}

#[test]
fn invalid_inputs_rejected() {
    let y = Raster::filled(4, 4, 1.0).unwrap();
    let bad = HyperParams { burn_in: 100, iterations: 100, ..HyperParams::default() };
    assert!(denoise(&y, &bad, PriorVariant::Igmrf).is_err());
    assert!(Raster::new(2, 2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    assert!(Raster::new(2, 2, vec![0.0; 3]).is_err());
}

//! Full-model gradient check: every analytic parameter gradient must
//! match a central finite difference of the loss.

use pktimg_core::nn::{CnnModel, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const EPS: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Sweeps every parameter of a seeded random instance. Pixels stay off
/// zero so no ReLU pre-activation sits exactly on its kink.
fn check_instance(seed: u64, classes: u16) {
    let config = ModelConfig {
        width: 12,
        height: 12,
        classes,
        pixel_max: 255,
    };
    let mut model = CnnModel::new(config, seed).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5EED);
    let pixels: Vec<u8> = (0..144).map(|_| rng.random_range(1..=255)).collect();
    let label: u16 = rng.random_range(0..classes);

    let (loss, analytic) = model.grads(&pixels, label);
    assert!(loss > 0.0 && loss.is_finite());

    let mut checked = 0usize;
    let mut worst = 0.0f64;
    let lens: Vec<usize> = analytic.slices().iter().map(|s| s.len()).collect();
    for (slice_idx, &len) in lens.iter().enumerate() {
        for i in 0..len {
            let orig = model.params.slices()[slice_idx][i];
            model.params.slices_mut()[slice_idx][i] = orig + EPS;
            let hi = model.loss(&pixels, label);
            model.params.slices_mut()[slice_idx][i] = orig - EPS;
            let lo = model.loss(&pixels, label);
            model.params.slices_mut()[slice_idx][i] = orig;

            let numeric = (hi - lo) / (2.0 * EPS);
            let a = analytic.slices()[slice_idx][i];
            let rel = relative_error(a, numeric);
            worst = worst.max(rel);
            assert!(
                rel <= TOLERANCE,
                "seed {seed}: tensor {} index {i}: analytic {a} vs numeric {numeric} (rel {rel})",
                pktimg_core::nn::Params::names()[slice_idx],
            );
            checked += 1;
        }
    }
    assert_eq!(checked, model.params.count(), "swept every parameter");
    println!("seed {seed}: {checked} parameters, worst relative error {worst:.2e}");
}

#[test]
fn gradients_match_finite_differences_instance_a() {
    check_instance(3, 3);
}

#[test]
fn gradients_match_finite_differences_instance_b() {
    check_instance(104_729, 4);
}

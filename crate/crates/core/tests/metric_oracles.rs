mod support;

use image::{Rgb, RgbImage};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mshidden::metrics::quality::psnr_from_mse;
use mshidden::metrics::{ber, mae, psnr, ssim};
use mshidden::synth::synth_image;

use support::oracles::{direct_ssim, fixture_pairs, loop_psnr_mae};

#[test]
fn psnr_and_mae_match_loop_oracle() {
    for (a, b) in fixture_pairs() {
        let (p, m) = loop_psnr_mae(&a, &b);
        assert!((psnr(&a, &b).unwrap() - p).abs() < 1e-6);
        assert!((mae(&a, &b).unwrap() - m).abs() < 1e-6);
    }
}

#[test]
fn ssim_matches_direct_formula() {
    for (a, b) in fixture_pairs() {
        let fast = ssim(&a, &b).unwrap();
        let slow = direct_ssim(&a, &b);
        assert!((fast - slow).abs() < 1e-4, "{fast} vs {slow}");
    }
}

#[test]
fn closed_forms() {
    assert_eq!(format!("{:.2}", psnr_from_mse(1.0, 255.0)), "48.13");
    assert_eq!(psnr_from_mse(1.0, 255.0), 20.0 * 255f64.log10());
    let a = synth_image(20, 20, 9);
    assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    let b = RgbImage::from_fn(20, 20, |x, y| {
        let p = a.get_pixel(x, y);
        Rgb([p[0] ^ 1, p[1] ^ 1, p[2] ^ 1])
    });
    assert_eq!(format!("{:.2}", psnr(&a, &b).unwrap()), "48.13");
}

fn image_strategy() -> impl Strategy<Value = (RgbImage, RgbImage)> {
    (11u32..24, 11u32..24, any::<u64>(), 0i32..80).prop_map(|(w, h, seed, amp)| {
        let a = synth_image(w, h, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut b = a.clone();
        for p in b.pixels_mut() {
            for c in 0..3 {
                p[c] = (p[c] as i32 + rng.gen_range(-amp..=amp)).clamp(0, 255) as u8;
            }
        }
        (a, b)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_invariants((a, b) in image_strategy()) {
        let p = psnr(&a, &b).unwrap();
        prop_assert_eq!(p, psnr(&b, &a).unwrap());
        prop_assert!(p > 0.0);
        let m = mae(&a, &b).unwrap();
        prop_assert_eq!(m, mae(&b, &a).unwrap());
        // MAE ≤ RMSE.
        let rmse = if p.is_infinite() { 0.0 } else { 255.0 / 10f64.powf(p / 20.0) };
        prop_assert!(m <= rmse + 1e-9);
        let s = ssim(&a, &b).unwrap();
        prop_assert!(s <= 1.0 + 1e-12 && s > -1.0);
        prop_assert!((s - ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert_eq!(a == b, p.is_infinite());
    }

    #[test]
    fn ber_counts_flips(bits in proptest::collection::vec(0u8..2, 1..200), flips in proptest::collection::vec(any::<prop::sample::Index>(), 0..20)) {
        let mut other = bits.clone();
        let mut flipped = std::collections::BTreeSet::new();
        for f in flips {
            let i = f.index(bits.len());
            if flipped.insert(i) {
                other[i] ^= 1;
            }
        }
        prop_assert_eq!(ber(&bits, &other).unwrap(), flipped.len() as f64 / bits.len() as f64);
    }
}

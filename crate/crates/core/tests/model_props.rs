use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mshidden::model::capacity::param_count_from_specs;
use mshidden::model::{bits_per_pixel, decode_bits, feature_capacity, model_complexity, ModelConfig, StegoModels};
use mshidden::tensor::Tensor;
use mshidden::train::{train_step, TrainState};

fn config() -> impl Strategy<Value = ModelConfig> {
    (1usize..=3, 1usize..=2, 1usize..=12, any::<u64>())
        .prop_map(|(k, mult, bits, seed)| ModelConfig::new(mult << k, k, bits).unwrap().with_seed(seed))
}

fn random_batch(cfg: &ModelConfig, n: usize, seed: u64) -> (Tensor, Tensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = cfg.block;
    let cover = Tensor::uniform(&[n, 3, b, b], 0.0, 1.0, &mut rng);
    let bits = Tensor::uniform(&[n, cfg.msg_bits], 0.0, 1.0, &mut rng).map(|v| (v > 0.5) as u8 as f32);
    (cover, bits)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn network_shapes(cfg in config(), n in 1usize..3) {
        let models = StegoModels::new(cfg).unwrap();
        let (cover, msg) = random_batch(&cfg, n, cfg.seed);
        let stego = models.embedder.forward(&cover, &msg).unwrap();
        prop_assert_eq!(stego.shape(), cover.shape());
        prop_assert!(stego.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let s = cfg.bottleneck_size();
        prop_assert_eq!(
            models.embedder.bottleneck_shape(&cover, &msg).unwrap(),
            vec![n, cfg.feature_channels() + cfg.msg_bits, s, s]
        );
        let logits = models.extractor.forward(&stego).unwrap();
        prop_assert_eq!(logits.shape(), &[n, cfg.msg_bits][..]);
        let p = models.discriminator.forward(&stego).unwrap();
        prop_assert_eq!(p.shape(), &[n, 1][..]);
        prop_assert!(p.data().iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn layer_formula_matches_instantiated_params(cfg in config()) {
        let cx = model_complexity(&cfg).unwrap();
        prop_assert_eq!(cx.param_count(), param_count_from_specs(&cfg));
        prop_assert_eq!(cx.param_count(), StegoModels::new(cfg).unwrap().param_count());
    }

    #[test]
    fn rho_scaling(k in 1usize..8, m in 1usize..512, c in 1usize..8) {
        let base = feature_capacity(k, m);
        prop_assert_eq!(base.feature_channels, 1usize << (2 * k));
        // Linear in |M|.
        prop_assert_eq!(feature_capacity(k, c * m).rho(), c as f64 * base.rho());
        // One more downsampling step quarters ρ.
        prop_assert_eq!(feature_capacity(k + 1, m).rho() * 4.0, base.rho());
        let (n, d) = base.rho_fraction();
        prop_assert_eq!(n as f64 / d as f64, base.rho());
    }

    #[test]
    fn bpp_formula(b in 1usize..256, m in 1usize..256) {
        prop_assert_eq!(bits_per_pixel(b, m), m as f64 / (3 * b * b) as f64);
    }
}

#[test]
fn untrained_extractor_is_at_chance() {
    let cfg = ModelConfig::new(16, 2, 32).unwrap();
    let models = StegoModels::new(cfg).unwrap();
    let (cover, msg) = random_batch(&cfg, 64, 11);
    let stego = models.embedder.forward(&cover, &msg).unwrap();
    let bits = decode_bits(&models.extractor.forward(&stego).unwrap());
    let wrong = bits.iter().zip(msg.data()).filter(|(&b, &m)| b as f32 != m).count();
    let ber = wrong as f64 / bits.len() as f64;
    assert!((ber - 0.5).abs() < 0.1, "untrained BER {ber}");
}

#[test]
fn image_loss_alone_decreases() {
    let mut cfg = ModelConfig::new(8, 2, 4).unwrap();
    cfg.lambda_m = 0.0;
    cfg.lambda_g = 0.0;
    let mut state = TrainState::from_config(cfg).unwrap();
    let (cover, msg) = random_batch(&cfg, 4, 5);
    let first = train_step(&mut state, &cover, &msg).unwrap().image;
    let mut last = first;
    for _ in 0..100 {
        last = train_step(&mut state, &cover, &msg).unwrap().image;
    }
    assert!(last < 0.5 * first, "L_I {first} -> {last}");
}

#[test]
fn init_is_seeded() {
    let cfg = ModelConfig::new(16, 2, 8).unwrap();
    assert_eq!(StegoModels::new(cfg).unwrap(), StegoModels::new(cfg).unwrap());
    assert_ne!(
        StegoModels::new(cfg).unwrap(),
        StegoModels::new(cfg.with_seed(cfg.seed + 1)).unwrap()
    );
}

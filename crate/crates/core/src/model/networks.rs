//! Embedder, extractor and discriminator.
//!
//! All three share the same encoder shape: `k` stride-2 3×3 convs, each
//! halving the resolution and doubling the channels, ending at `(2^k)²`
//! feature channels on a `(B/2^k)²` grid. The embedder appends the message
//! (each bit tiled over a full bottleneck plane) and decodes back to a
//! residual with `k` stride-2 transposed convs; a final stride-1 conv blends
//! `cover + residual` into the stego block.

use rand::Rng;

use super::{ModelConfig, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{ops::KERNEL, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Conv { stride: usize },
    ConvTranspose,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub cin: usize,
    pub cout: usize,
}

impl LayerSpec {
    fn new(name: String, kind: LayerKind, cin: usize, cout: usize) -> Self {
        Self { name, kind, cin, cout }
    }

    pub fn weight_shape(&self) -> Vec<usize> {
        match self.kind {
            LayerKind::Conv { .. } => vec![self.cout, self.cin, KERNEL, KERNEL],
            LayerKind::ConvTranspose => vec![self.cin, self.cout, KERNEL, KERNEL],
            LayerKind::Linear => vec![self.cout, self.cin],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight_shape().iter().product::<usize>() + self.cout
    }

    fn fan_in(&self) -> usize {
        match self.kind {
            LayerKind::Conv { .. } | LayerKind::ConvTranspose => self.cin * KERNEL * KERNEL,
            LayerKind::Linear => self.cin,
        }
    }
}

fn encoder_specs(prefix: &str, cfg: &ModelConfig) -> Vec<LayerSpec> {
    let mut cin = 3;
    cfg.encoder_channels()
        .into_iter()
        .enumerate()
        .map(|(i, cout)| {
            let s = LayerSpec::new(format!("{prefix}.enc.{i}"), LayerKind::Conv { stride: 2 }, cin, cout);
            cin = cout;
            s
        })
        .collect()
}

pub fn embedder_specs(cfg: &ModelConfig) -> Vec<LayerSpec> {
    let mut specs = encoder_specs("embedder", cfg);
    let mut cin = cfg.bottleneck_channels();
    for (i, cout) in cfg.decoder_channels().into_iter().enumerate() {
        specs.push(LayerSpec::new(format!("embedder.dec.{i}"), LayerKind::ConvTranspose, cin, cout));
        cin = cout;
    }
    specs.push(LayerSpec::new("embedder.blend".into(), LayerKind::Conv { stride: 1 }, 3, 3));
    specs
}

pub fn extractor_specs(cfg: &ModelConfig) -> Vec<LayerSpec> {
    let mut specs = encoder_specs("extractor", cfg);
    specs.push(LayerSpec::new(
        "extractor.head".into(),
        LayerKind::Linear,
        cfg.feature_channels(),
        cfg.msg_bits,
    ));
    specs
}

pub fn discriminator_specs(cfg: &ModelConfig) -> Vec<LayerSpec> {
    let mut specs = encoder_specs("discriminator", cfg);
    specs.push(LayerSpec::new(
        "discriminator.head".into(),
        LayerKind::Linear,
        cfg.feature_channels(),
        1,
    ));
    specs
}

/// Kaiming fan-in normal weights and zero biases.
fn init_store<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> ParamStore {
    let mut store = ParamStore::new();
    for s in specs {
        let std = (2.0 / s.fan_in() as f32).sqrt();
        store.insert(format!("{}.weight", s.name), Tensor::randn(&s.weight_shape(), std, rng));
        store.insert(format!("{}.bias", s.name), Tensor::zeros(&[s.cout]));
    }
    store
}

fn check_store(specs: &[LayerSpec], store: &ParamStore) -> Result<()> {
    if store.len() != 2 * specs.len() {
        return Err(Error::dim(format!(
            "parameter store has {} tensors, architecture needs {}",
            store.len(),
            2 * specs.len()
        )));
    }
    for s in specs {
        let w = format!("{}.weight", s.name);
        let b = format!("{}.bias", s.name);
        match (store.get(&w), store.get(&b)) {
            (Some(wt), Some(bt)) if wt.shape() == s.weight_shape() && bt.shape() == [s.cout] => {}
            _ => return Err(Error::dim(format!("missing or misshapen parameters for {}", s.name))),
        }
    }
    Ok(())
}

/// Parameter leaves of one network on a tape, in layer order.
pub struct Bound {
    vars: Vec<(Var, Var)>,
}

impl Bound {
    /// Rebuilds a binding from vars in store order, e.g. leaves created by a
    /// gradient check.
    pub fn from_vars(vars: &[Var]) -> Self {
        assert!(vars.len().is_multiple_of(2), "parameter vars come in weight/bias pairs");
        Self {
            vars: vars.chunks(2).map(|p| (p[0], p[1])).collect(),
        }
    }

    /// All parameter vars in store order (weight, bias, weight, bias, ...).
    pub fn vars(&self) -> Vec<Var> {
        self.vars.iter().flat_map(|&(w, b)| [w, b]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Network {
    cfg: ModelConfig,
    specs: Vec<LayerSpec>,
    params: ParamStore,
}

impl Network {
    fn new<R: Rng + ?Sized>(cfg: ModelConfig, specs: Vec<LayerSpec>, rng: &mut R) -> Self {
        let params = init_store(&specs, rng);
        Self { cfg, specs, params }
    }

    fn from_params(cfg: ModelConfig, specs: Vec<LayerSpec>, params: ParamStore) -> Result<Self> {
        check_store(&specs, &params)?;
        Ok(Self { cfg, specs, params })
    }

    fn bind(&self, tape: &mut Tape) -> Bound {
        let vars = self
            .specs
            .iter()
            .map(|s| {
                let w = tape.leaf(self.params.get(&format!("{}.weight", s.name)).unwrap().clone());
                let b = tape.leaf(self.params.get(&format!("{}.bias", s.name)).unwrap().clone());
                (w, b)
            })
            .collect();
        Bound { vars }
    }

    fn check_image(&self, tape: &Tape, x: Var) -> Result<()> {
        let (_, c, h, w) = tape.value(x).dims4()?;
        let b = self.cfg.block;
        if (c, h, w) != (3, b, b) {
            return Err(Error::dim(format!(
                "expected [n, 3, {b}, {b}] image batch, got {:?}",
                tape.value(x).shape()
            )));
        }
        Ok(())
    }

    /// Runs the encoder convs and returns the bottleneck features.
    fn encode(&self, tape: &mut Tape, bound: &Bound, mut x: Var) -> Result<Var> {
        for (i, _) in self.specs.iter().enumerate().take(self.cfg.k) {
            let (w, b) = bound.vars[i];
            x = tape.conv2d(x, w, b, 2)?;
            x = tape.relu(x);
        }
        Ok(x)
    }

    /// Encoder, global average pool, linear head.
    fn head_logits(&self, tape: &mut Tape, bound: &Bound, image: Var) -> Result<Var> {
        self.check_image(tape, image)?;
        let f = self.encode(tape, bound, image)?;
        let pooled = tape.global_avg_pool(f)?;
        let (w, b) = bound.vars[self.cfg.k];
        tape.linear(pooled, w, b)
    }
}

macro_rules! network_accessors {
    ($t:ty, $specs:ident) => {
        impl $t {
            pub fn new<R: Rng + ?Sized>(cfg: ModelConfig, rng: &mut R) -> Self {
                Self(Network::new(cfg, $specs(&cfg), rng))
            }

            /// Wraps an existing store, checking names and shapes against `cfg`.
            pub fn from_params(cfg: ModelConfig, params: ParamStore) -> Result<Self> {
                Ok(Self(Network::from_params(cfg, $specs(&cfg), params)?))
            }

            pub fn config(&self) -> &ModelConfig {
                &self.0.cfg
            }

            pub fn specs(&self) -> &[LayerSpec] {
                &self.0.specs
            }

            pub fn params(&self) -> &ParamStore {
                &self.0.params
            }

            pub fn params_mut(&mut self) -> &mut ParamStore {
                &mut self.0.params
            }

            pub fn into_params(self) -> ParamStore {
                self.0.params
            }

            /// Records every parameter as a tape leaf.
            pub fn bind(&self, tape: &mut Tape) -> Bound {
                self.0.bind(tape)
            }
        }
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedder(Network);

#[derive(Clone, Debug, PartialEq)]
pub struct Extractor(Network);

#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator(Network);

network_accessors!(Embedder, embedder_specs);
network_accessors!(Extractor, extractor_specs);
network_accessors!(Discriminator, discriminator_specs);

impl Embedder {
    /// `cover: [n, 3, B, B]` in `[0, 1]`, `msg: [n, |M|]` in `{0, 1}` → stego `[n, 3, B, B]`.
    ///
    /// The output is not clamped, so gradients flow at the [0, 1] edges;
    /// [`Embedder::forward`] clamps.
    pub fn record(&self, tape: &mut Tape, bound: &Bound, cover: Var, msg: Var) -> Result<Var> {
        let net = &self.0;
        let cfg = &net.cfg;
        net.check_image(tape, cover)?;
        let (n, bits) = tape.value(msg).dims2()?;
        if bits != cfg.msg_bits || n != tape.value(cover).shape()[0] {
            return Err(Error::dim(format!(
                "message batch {:?} does not match [{}, {}]",
                tape.value(msg).shape(),
                tape.value(cover).shape()[0],
                cfg.msg_bits
            )));
        }

        let features = net.encode(tape, bound, cover)?;
        let side = cfg.bottleneck_size();
        let planes = tape.broadcast_spatial(msg, side, side)?;
        let mut x = tape.concat_channels(features, planes)?;
        for i in 0..cfg.k {
            let (w, b) = bound.vars[cfg.k + i];
            x = tape.conv_transpose2d(x, w, b)?;
            if i + 1 < cfg.k {
                x = tape.relu(x);
            }
        }
        let mixed = tape.add(cover, x)?;
        let (w, b) = bound.vars[2 * cfg.k];
        tape.conv2d(mixed, w, b, 1)
    }

    /// Inference: [`Embedder::record`] clamped to `[0, 1]`.
    pub fn forward(&self, cover: &Tensor, msg: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let c = tape.leaf(cover.clone());
        let m = tape.leaf(msg.clone());
        let out = self.record(&mut tape, &bound, c, m)?;
        Ok(tape.value(out).map(|v| v.clamp(0.0, 1.0)))
    }

    /// Sets the blend conv to the identity map (centre tap 1 on the matching
    /// channel, zero bias).
    pub fn set_blend_identity(&mut self) {
        let w = self.0.params.get_mut("embedder.blend.weight").expect("blend weight");
        w.data_mut().fill(0.0);
        for c in 0..3 {
            w.data_mut()[(c * 3 + c) * 9 + 4] = 1.0;
        }
        self.0
            .params
            .get_mut("embedder.blend.bias")
            .expect("blend bias")
            .data_mut()
            .fill(0.0);
    }

    /// Channels at the point where the message planes have been appended.
    pub fn bottleneck_shape(&self, cover: &Tensor, msg: &Tensor) -> Result<Vec<usize>> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let c = tape.leaf(cover.clone());
        let m = tape.leaf(msg.clone());
        self.0.check_image(&tape, c)?;
        let f = self.0.encode(&mut tape, &bound, c)?;
        let side = self.0.cfg.bottleneck_size();
        let p = tape.broadcast_spatial(m, side, side)?;
        let x = tape.concat_channels(f, p)?;
        Ok(tape.value(x).shape().to_vec())
    }
}

impl Extractor {
    /// `[n, 3, B, B]` → message logits `[n, |M|]`.
    pub fn record(&self, tape: &mut Tape, bound: &Bound, image: Var) -> Result<Var> {
        self.0.head_logits(tape, bound, image)
    }

    pub fn forward(&self, image: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let x = tape.leaf(image.clone());
        let out = self.record(&mut tape, &bound, x)?;
        Ok(tape.value(out).clone())
    }
}

/// Hard bit decisions: `sigmoid(logit) > 0.5`, i.e. `logit > 0`.
pub fn decode_bits(logits: &Tensor) -> Vec<u8> {
    logits.data().iter().map(|&l| u8::from(l > 0.0)).collect()
}

impl Discriminator {
    /// `[n, 3, B, B]` → probability of being a clean cover, `[n, 1]`.
    pub fn record(&self, tape: &mut Tape, bound: &Bound, image: Var) -> Result<Var> {
        let logits = self.0.head_logits(tape, bound, image)?;
        Ok(tape.sigmoid(logits))
    }

    pub fn forward(&self, image: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let x = tape.leaf(image.clone());
        let out = self.record(&mut tape, &bound, x)?;
        Ok(tape.value(out).clone())
    }
}

/// The three networks of one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct StegoModels {
    pub embedder: Embedder,
    pub extractor: Extractor,
    pub discriminator: Discriminator,
}

impl StegoModels {
    /// Initializes all three networks from `cfg.seed`. The blend conv starts
    /// as the identity so an untrained embedder passes `cover + residual`.
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        use rand::SeedableRng;
        cfg.validate()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut embedder = Embedder::new(cfg, &mut rng);
        embedder.set_blend_identity();
        let extractor = Extractor::new(cfg, &mut rng);
        let discriminator = Discriminator::new(cfg, &mut rng);
        Ok(Self {
            embedder,
            extractor,
            discriminator,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        self.embedder.config()
    }

    pub fn param_count(&self) -> usize {
        self.embedder.params().param_count() + self.extractor.params().param_count() + self.discriminator.params().param_count()
    }
}

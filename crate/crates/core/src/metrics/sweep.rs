//! Feature-capacity sweep: one model per `(B, k, |M|)` tuple and seed under a
//! shared data set and step budget, benchmarked on held-out images.
//!
//! Two observations are summarized, neither asserted: with `k` fixed, more
//! message bits should not decode better (H1); tuples with equal ρ should
//! reach similar BER (H2).

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::bench::{bench, BenchOptions};
use crate::model::{bits_per_pixel, feature_capacity, ModelConfig, StegoModels};
use crate::train::{fit_steps, BatchSampler, Dataset, TrainState};

/// BER difference still called "similar" for H2.
pub const SIMILAR_BER: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SweepTuple {
    pub block: usize,
    pub k: usize,
    pub msg_bits: usize,
}

impl fmt::Display for SweepTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.block, self.k, self.msg_bits)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("malformed {what} '{item}': {reason}")]
pub struct SpecError {
    pub what: &'static str,
    pub item: String,
    pub reason: String,
}

/// Parses `"B,k,M;B,k,M;..."`. Each triple must be a valid model config.
pub fn parse_spec(spec: &str) -> Result<Vec<SweepTuple>, SpecError> {
    let err = |item: &str, reason: String| SpecError {
        what: "sweep triple",
        item: item.trim().to_string(),
        reason,
    };
    let tuples: Vec<SweepTuple> = spec
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let nums: Vec<usize> = item
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(item, e.to_string()))?;
            let [block, k, msg_bits] = nums[..] else {
                return Err(err(item, format!("expected 3 numbers B,k,M, got {}", nums.len())));
            };
            ModelConfig::new(block, k, msg_bits).map_err(|e| err(item, e.to_string()))?;
            Ok(SweepTuple { block, k, msg_bits })
        })
        .collect::<Result<_, _>>()?;
    if tuples.is_empty() {
        return Err(err(spec, "no triples".into()));
    }
    Ok(tuples)
}

pub fn parse_seeds(seeds: &str) -> Result<Vec<u64>, SpecError> {
    let list: Vec<u64> = seeds
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim().parse::<u64>().map_err(|e| SpecError {
                what: "seed",
                item: s.trim().to_string(),
                reason: e.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err(SpecError {
            what: "seed list",
            item: seeds.to_string(),
            reason: "no seeds".into(),
        });
    }
    Ok(list)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub tuples: Vec<SweepTuple>,
    pub budget_steps: usize,
    pub seeds: Vec<u64>,
    pub batch_size: usize,
    /// Random messages per held-out image when benchmarking.
    pub eval_repeats: usize,
}

impl SweepSpec {
    pub fn new(tuples: Vec<SweepTuple>, budget_steps: usize, seeds: Vec<u64>) -> Self {
        Self {
            tuples,
            budget_steps,
            seeds,
            batch_size: 8,
            eval_repeats: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub tuple: SweepTuple,
    pub seed: u64,
    pub rho: f64,
    pub bpp: f64,
    pub ber: Option<f64>,
    pub ber_quantized: Option<f64>,
    pub psnr_db: Option<f64>,
    pub mae: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCheck {
    /// `"H1"` or `"H2"`.
    pub hypothesis: &'static str,
    pub seed: u64,
    pub a: SweepTuple,
    pub b: SweepTuple,
    pub ber_a: f64,
    pub ber_b: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub budget_steps: usize,
    pub batch_size: usize,
    pub rows: Vec<SweepRow>,
    pub hypotheses: Vec<HypothesisCheck>,
}

impl SweepReport {
    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `(holds, checked)` over the H1 pairs.
    pub fn h1_tally(&self) -> (usize, usize) {
        let h1: Vec<_> = self.hypotheses.iter().filter(|h| h.hypothesis == "H1").collect();
        (h1.iter().filter(|h| h.holds).count(), h1.len())
    }
}

fn run_one(t: SweepTuple, seed: u64, spec: &SweepSpec, train: &Dataset, val: &Dataset) -> crate::Result<SweepRow> {
    let cfg = ModelConfig::new(t.block, t.k, t.msg_bits)?.with_seed(seed);
    let mut state = TrainState::new(StegoModels::new(cfg)?);
    let sampler = BatchSampler {
        block: t.block,
        msg_bits: t.msg_bits,
        batch_size: spec.batch_size,
        seed,
    };
    fit_steps(&mut state, train, &sampler, spec.budget_steps)?;
    let opts = BenchOptions {
        repeats: spec.eval_repeats,
        seed,
        ..BenchOptions::default()
    };
    let r = bench(&state.models, val, "validation", &opts)?;
    if r.images == 0 {
        return Err(crate::Error::Dataset(format!("no held-out image holds a {0}x{0} block", t.block)));
    }
    Ok(SweepRow {
        tuple: t,
        seed,
        rho: feature_capacity(t.k, t.msg_bits).rho(),
        bpp: bits_per_pixel(t.block, t.msg_bits),
        ber: Some(r.ber),
        ber_quantized: Some(r.ber_quantized),
        psnr_db: Some(r.psnr_db),
        mae: Some(r.mae),
        error: None,
    })
}

/// Trains and benchmarks every tuple for every seed, in order. A failing
/// tuple is recorded in its row and the sweep moves on.
pub fn sweep(spec: &SweepSpec, data: &Dataset, mut on_row: impl FnMut(&SweepRow)) -> SweepReport {
    let (train, val) = data.split_validation();
    let mut rows = Vec::new();
    for &t in &spec.tuples {
        for &seed in &spec.seeds {
            let row = run_one(t, seed, spec, &train, &val).unwrap_or_else(|e| SweepRow {
                tuple: t,
                seed,
                rho: feature_capacity(t.k, t.msg_bits).rho(),
                bpp: bits_per_pixel(t.block, t.msg_bits),
                ber: None,
                ber_quantized: None,
                psnr_db: None,
                mae: None,
                error: Some(e.to_string()),
            });
            on_row(&row);
            rows.push(row);
        }
    }
    SweepReport {
        budget_steps: spec.budget_steps,
        batch_size: spec.batch_size,
        hypotheses: hypotheses(&rows),
        rows,
    }
}

fn hypotheses(rows: &[SweepRow]) -> Vec<HypothesisCheck> {
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            let (Some(ba), Some(bb)) = (a.ber, b.ber) else { continue };
            if a.seed != b.seed {
                continue;
            }
            let (ta, tb) = (a.tuple, b.tuple);
            if ta.k == tb.k && ta.block == tb.block && ta.msg_bits != tb.msg_bits {
                // Order so `a` carries more bits.
                let (big, small, bbig, bsmall) = if ta.msg_bits > tb.msg_bits {
                    (ta, tb, ba, bb)
                } else {
                    (tb, ta, bb, ba)
                };
                out.push(HypothesisCheck {
                    hypothesis: "H1",
                    seed: a.seed,
                    a: big,
                    b: small,
                    ber_a: bbig,
                    ber_b: bsmall,
                    holds: bbig >= bsmall,
                });
            }
            let (fa, fb) = (feature_capacity(ta.k, ta.msg_bits), feature_capacity(tb.k, tb.msg_bits));
            if ta.k != tb.k && fa.rho_fraction() == fb.rho_fraction() {
                out.push(HypothesisCheck {
                    hypothesis: "H2",
                    seed: a.seed,
                    a: ta,
                    b: tb,
                    ber_a: ba,
                    ber_b: bb,
                    holds: (ba - bb).abs() <= SIMILAR_BER,
                });
            }
        }
    }
    out
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or("-".into(), |v| format!("{v:.prec$}"))
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "budget {} steps, batch {}", self.budget_steps, self.batch_size)?;
        writeln!(
            f,
            "{:>5} {:>3} {:>5} {:>6} {:>7} {:>7} {:>9} {:>9} {:>8}",
            "B", "k", "|M|", "seed", "rho", "BPP", "BER", "PSNR", "MAE"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>5} {:>3} {:>5} {:>6} {:>7.4} {:>7.4} {:>9} {:>9} {:>8}{}",
                r.tuple.block,
                r.tuple.k,
                r.tuple.msg_bits,
                r.seed,
                r.rho,
                r.bpp,
                opt(r.ber, 6),
                opt(r.psnr_db, 3),
                opt(r.mae, 4),
                r.error.as_ref().map_or(String::new(), |e| format!("  failed: {e}"))
            )?;
        }
        for h in &self.hypotheses {
            let rel = if h.hypothesis == "H1" { ">=" } else { "~" };
            writeln!(
                f,
                "{} seed {}: BER({}) {:.6} {rel} BER({}) {:.6}: {}",
                h.hypothesis,
                h.seed,
                h.a,
                h.ber_a,
                h.b,
                h.ber_b,
                if h.holds { "holds" } else { "does not hold" }
            )?;
        }
        let (held, n) = self.h1_tally();
        write!(f, "H1 held in {held} of {n} comparisons")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse() {
        let t = parse_spec("128,4,64;32,3,16").unwrap();
        assert_eq!(
            t,
            vec![
                SweepTuple {
                    block: 128,
                    k: 4,
                    msg_bits: 64
                },
                SweepTuple {
                    block: 32,
                    k: 3,
                    msg_bits: 16
                },
            ]
        );
        let e = parse_spec("128,4,64;32,3").unwrap_err();
        assert_eq!(e.item, "32,3");
        let e = parse_spec("32,x,16").unwrap_err();
        assert_eq!(e.item, "32,x,16");
        assert!(parse_spec("30,3,16").is_err());
        assert_eq!(parse_seeds("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_seeds("1,a").is_err());
    }

    #[test]
    fn hypothesis_pairs() {
        let row = |b, k, m, ber| SweepRow {
            tuple: SweepTuple { block: b, k, msg_bits: m },
            seed: 1,
            rho: 0.0,
            bpp: 0.0,
            ber: Some(ber),
            ber_quantized: None,
            psnr_db: None,
            mae: None,
            error: None,
        };
        let h = hypotheses(&[row(32, 3, 16, 0.02), row(32, 3, 32, 0.01), row(64, 4, 64, 0.015)]);
        assert_eq!(h.len(), 2);
        assert_eq!((h[0].hypothesis, h[0].a.msg_bits, h[0].holds), ("H1", 32, false));
        assert_eq!((h[1].hypothesis, h[1].holds), ("H2", true));
    }
}

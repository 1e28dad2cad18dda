//! Decision-level fusion of per-modality forest outputs.
//!
//! Tree dispersion is the confidence signal: the lower a modality's std,
//! the more its prediction is trusted. Ties between equal stds resolve by
//! the fixed priority audio > text > video.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::datamodel::Modality;
use crate::error::{Error, Result};
use crate::forest::PredictionWithConfidence;

/// Guard added to every std before inverting it.
pub const WEIGHT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FusionStrategy {
    #[default]
    WinnerTakeAll,
    Average,
    ConfidenceWeighted,
}

impl FusionStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionStrategy::WinnerTakeAll => "winner_take_all",
            FusionStrategy::Average => "average",
            FusionStrategy::ConfidenceWeighted => "confidence_weighted",
        }
    }
}

impl fmt::Display for FusionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FusionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "winner_take_all" | "wta" => Ok(FusionStrategy::WinnerTakeAll),
            "average" | "mean" => Ok(FusionStrategy::Average),
            "confidence_weighted" | "weighted" => Ok(FusionStrategy::ConfidenceWeighted),
            other => Err(Error::Config(format!("unknown fusion strategy {other:?}"))),
        }
    }
}

/// Which prediction a fused value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chosen {
    Modality(Modality),
    Blend,
}

impl fmt::Display for Chosen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chosen::Modality(m) => m.fmt(f),
            Chosen::Blend => f.write_str("blend"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    /// Unclamped fused prediction.
    pub final_value: f64,
    pub chosen: Chosen,
    pub inputs: Vec<PredictionWithConfidence>,
    pub strategy: FusionStrategy,
}

impl FusionResult {
    /// The fused value on the PHQ-8 scale.
    pub fn reported(&self) -> f64 {
        crate::clamp_phq8(self.final_value)
    }
}

/// Position in the tie-break order (lower wins).
pub fn tie_priority(modality: Modality) -> u8 {
    match modality {
        Modality::Audio => 0,
        Modality::Text => 1,
        Modality::Video => 2,
    }
}

/// Inputs ordered from most to least confident.
pub fn confidence_rank(
    inputs: &[PredictionWithConfidence],
) -> Result<Vec<PredictionWithConfidence>> {
    if inputs.is_empty() {
        return Err(Error::Empty("no predictions to rank".into()));
    }
    let mut ranked = inputs.to_vec();
    ranked.sort_by(|a, b| {
        a.std
            .total_cmp(&b.std)
            .then(tie_priority(a.modality).cmp(&tie_priority(b.modality)))
    });
    Ok(ranked)
}

pub fn fuse(inputs: &[PredictionWithConfidence], strategy: FusionStrategy) -> Result<FusionResult> {
    if inputs.is_empty() {
        return Err(Error::Empty("no predictions to fuse".into()));
    }
    if let Some(bad) = inputs.iter().find(|p| p.std.is_nan() || p.std < 0.0 || !p.mean.is_finite()) {
        return Err(Error::Invalid(format!(
            "{} prediction has mean {} and std {}",
            bad.modality, bad.mean, bad.std
        )));
    }
    let (final_value, chosen) = match strategy {
        FusionStrategy::WinnerTakeAll => {
            let top = confidence_rank(inputs)?[0];
            (top.mean, Chosen::Modality(top.modality))
        }
        FusionStrategy::Average => (
            inputs.iter().map(|p| p.mean).sum::<f64>() / inputs.len() as f64,
            Chosen::Blend,
        ),
        FusionStrategy::ConfidenceWeighted => {
            let weights: Vec<f64> = inputs
                .iter()
                .map(|p| 1.0 / (p.std + WEIGHT_EPSILON))
                .collect();
            let total: f64 = weights.iter().sum();
            let value = inputs
                .iter()
                .zip(&weights)
                .map(|(p, w)| w / total * p.mean)
                .sum();
            (value, Chosen::Blend)
        }
    };
    Ok(FusionResult {
        final_value,
        chosen,
        inputs: inputs.to_vec(),
        strategy,
    })
}

/// How often each modality won a winner-take-all decision.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DominanceReport {
    pub counts: BTreeMap<Modality, usize>,
    pub total: usize,
}

impl DominanceReport {
    pub fn fraction(&self, modality: Modality) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.get(&modality).copied().unwrap_or(0) as f64 / self.total as f64
    }

    /// Modalities by descending win count, ties by the fusion priority.
    pub fn ranking(&self) -> Vec<(Modality, usize)> {
        let mut out: Vec<(Modality, usize)> = self.counts.iter().map(|(&m, &c)| (m, c)).collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(tie_priority(a.0).cmp(&tie_priority(b.0))));
        out
    }

    pub fn top(&self) -> Option<Modality> {
        self.ranking().first().map(|&(m, _)| m)
    }
}

pub fn dominance_report(results: &[FusionResult]) -> Result<DominanceReport> {
    let mut report = DominanceReport::default();
    for r in results {
        let Chosen::Modality(m) = r.chosen else {
            return Err(Error::StrategyMismatch(format!(
                "dominance needs winner_take_all results, got {}",
                r.strategy
            )));
        };
        if r.strategy != FusionStrategy::WinnerTakeAll {
            return Err(Error::StrategyMismatch(r.strategy.to_string()));
        }
        *report.counts.entry(m).or_default() += 1;
        report.total += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(modality: Modality, mean: f64, std: f64) -> PredictionWithConfidence {
        PredictionWithConfidence { mean, std, modality }
    }

    fn triple() -> Vec<PredictionWithConfidence> {
        vec![
            p(Modality::Audio, 12.0, 1.2),
            p(Modality::Video, 8.0, 3.4),
            p(Modality::Text, 10.0, 2.0),
        ]
    }

    #[test]
    fn ranking() {
        let order: Vec<Modality> = confidence_rank(&triple()).unwrap().iter().map(|x| x.modality).collect();
        assert_eq!(order, [Modality::Audio, Modality::Text, Modality::Video]);
        let tied = [p(Modality::Text, 1.0, 1.0), p(Modality::Audio, 2.0, 1.0)];
        assert_eq!(confidence_rank(&tied).unwrap()[0].modality, Modality::Audio);
        assert_eq!(confidence_rank(&tied[..1]).unwrap(), tied[..1]);
        assert!(confidence_rank(&[]).is_err());
    }

    #[test]
    fn strategies() {
        let wta = fuse(&triple(), FusionStrategy::WinnerTakeAll).unwrap();
        assert_eq!(wta.final_value, 12.0);
        assert_eq!(wta.chosen, Chosen::Modality(Modality::Audio));

        let avg = fuse(&triple(), FusionStrategy::Average).unwrap();
        assert_eq!(avg.final_value, 10.0);

        let w = [1.0 / 1.200001, 1.0 / 3.400001, 1.0 / 2.000001];
        let expected = (12.0 * w[0] + 8.0 * w[1] + 10.0 * w[2]) / w.iter().sum::<f64>();
        let cw = fuse(&triple(), FusionStrategy::ConfidenceWeighted).unwrap();
        assert!((cw.final_value - expected).abs() < 1e-12);
        assert!((cw.final_value - 10.662650275076386).abs() < 1e-12);
        assert!(fuse(&[], FusionStrategy::Average).is_err());
    }

    #[test]
    fn reported_value_is_clamped() {
        let r = fuse(&[p(Modality::Audio, 30.0, 0.0)], FusionStrategy::WinnerTakeAll).unwrap();
        assert_eq!(r.final_value, 30.0);
        assert_eq!(r.reported(), 24.0);
    }

    #[test]
    fn dominance() {
        let mut results = Vec::new();
        for i in 0..10 {
            let audio_std = if i < 7 { 0.5 } else { 5.0 };
            let inputs = [p(Modality::Audio, 1.0, audio_std), p(Modality::Video, 2.0, 1.0)];
            results.push(fuse(&inputs, FusionStrategy::WinnerTakeAll).unwrap());
        }
        let report = dominance_report(&results).unwrap();
        assert_eq!(report.fraction(Modality::Audio), 0.7);
        assert_eq!(report.top(), Some(Modality::Audio));
        let total: f64 = Modality::ALL.iter().map(|&m| report.fraction(m)).sum();
        assert!((total - 1.0).abs() < 1e-12);

        assert_eq!(dominance_report(&[]).unwrap(), DominanceReport::default());

        results.push(fuse(&triple(), FusionStrategy::Average).unwrap());
        assert!(matches!(dominance_report(&results), Err(Error::StrategyMismatch(_))));
    }

    fn any_modality_set() -> impl Strategy<Value = Vec<PredictionWithConfidence>> {
        (
            prop::collection::vec((0.0..24.0f64, prop_oneof![Just(1.0f64), 0.0..5.0f64]), 3),
            prop::sample::subsequence(Modality::ALL.to_vec(), 1..=3),
        )
            .prop_map(|(vals, mods)| {
                mods.iter().zip(vals).map(|(&m, (mean, std))| p(m, mean, std)).collect()
            })
    }

    proptest! {
        #[test]
        fn wta_is_argmin_scan(inputs in any_modality_set()) {
            let mut best = inputs[0];
            for c in &inputs[1..] {
                if c.std < best.std || (c.std == best.std && tie_priority(c.modality) < tie_priority(best.modality)) {
                    best = *c;
                }
            }
            let r = fuse(&inputs, FusionStrategy::WinnerTakeAll).unwrap();
            prop_assert_eq!(r.final_value, best.mean);
            prop_assert_eq!(r.chosen, Chosen::Modality(best.modality));
            prop_assert!(inputs.iter().all(|q| q.std >= best.std));
        }

        #[test]
        fn wta_is_permutation_invariant(inputs in any_modality_set(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = inputs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = fuse(&inputs, FusionStrategy::WinnerTakeAll).unwrap();
            let b = fuse(&shuffled, FusionStrategy::WinnerTakeAll).unwrap();
            prop_assert_eq!((a.final_value, a.chosen), (b.final_value, b.chosen));
        }

        #[test]
        fn equal_stds_weighted_equals_average(
            means in prop::collection::vec(0.0..24.0f64, 1..=3),
            std in 0.0..10.0f64,
        ) {
            let inputs: Vec<_> = means.iter().zip(Modality::ALL).map(|(&m, md)| p(md, m, std)).collect();
            let a = fuse(&inputs, FusionStrategy::Average).unwrap().final_value;
            let w = fuse(&inputs, FusionStrategy::ConfidenceWeighted).unwrap().final_value;
            prop_assert!((a - w).abs() < 1e-9);
        }
    }
}

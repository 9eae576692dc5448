//! Seeded synthetic corpora for tests, benchmarks and demos.
//!
//! Each sentence gets a latent salience curve made of a few Gaussian bumps.
//! Every synthetic method observes that curve through its own noise level and
//! smoothing width, so methods agree partially, the way real attribution
//! methods do. Annotators mark tokens near the bumps.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::profile::{
    zero_punctuation, AttributionInstance, Corpus, InstanceRecord, PunctuationSet,
};

const VOCAB: &[&str] = &[
    "a", "man", "woman", "dog", "is", "the", "in", "on", "park", "red", "shirt", "running", "sits",
    "near", "two", "children", "play", "with", "ball", "street", "old", "car", "reading", "book",
    "outside", "people", "wearing", "hat", "blue", "water", ",",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub instances: usize,
    pub methods: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub annotators: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            instances: 1000,
            methods: 6,
            min_len: 5,
            max_len: 40,
            annotators: 3,
        }
    }
}

pub fn method_name(index: usize) -> String {
    format!("synthetic_{}", index + 1)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Generates a corpus; identical configs give identical corpora.
pub fn generate(config: &SynthConfig) -> Corpus {
    assert!(
        config.min_len >= 1 && config.min_len <= config.max_len,
        "bad length range"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let punctuation = PunctuationSet::default();

    // (noise sd, smoothing half-width) per method
    let profiles: Vec<(f64, usize)> = (0..config.methods)
        .map(|j| (0.05 + 0.05 * j as f64, j % 3))
        .collect();

    let instances = (0..config.instances)
        .map(|i| {
            let n = rng.gen_range(config.min_len..=config.max_len);
            let mut tokens: Vec<String> = (0..n - 1)
                .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_owned())
                .collect();
            tokens.push(".".to_owned());

            let bumps = 1 + rng.gen_range(0..=n / 6);
            let centers: Vec<(f64, f64, f64)> = (0..bumps)
                .map(|_| {
                    (
                        rng.gen_range(0.0..n as f64),
                        rng.gen_range(0.3..1.0),
                        rng.gen_range(0.6..1.8),
                    )
                })
                .collect();
            let latent: Vec<f64> = (0..n)
                .map(|t| {
                    centers
                        .iter()
                        .map(|&(c, amp, width)| {
                            amp * (-(t as f64 - c).powi(2) / (2.0 * width * width)).exp()
                        })
                        .sum()
                })
                .collect();

            let attributions = profiles
                .iter()
                .enumerate()
                .map(|(j, &(noise, half))| {
                    let noisy: Vec<f64> = latent
                        .iter()
                        .map(|l| l + noise * unit.sample(&mut rng))
                        .collect();
                    let smoothed = (0..n)
                        .map(|t| {
                            let lo = t.saturating_sub(half);
                            let hi = (t + half).min(n - 1);
                            round6(noisy[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64)
                        })
                        .collect();
                    (method_name(j), smoothed)
                })
                .collect();

            let peak = latent.iter().cloned().fold(f64::MIN, f64::max);
            let human = (0..config.annotators)
                .map(|_| {
                    latent
                        .iter()
                        .map(|&l| {
                            let p = if l > 0.5 * peak { 0.8 } else { 0.05 };
                            u8::from(rng.gen_bool(p))
                        })
                        .collect()
                })
                .collect();

            let record = InstanceRecord {
                id: format!("synth-{i:05}"),
                tokens,
                attributions,
                human: (config.annotators > 0).then_some(human),
                gold_label: None,
                predicted_label: None,
            };
            let instance =
                AttributionInstance::try_from(record).expect("generated records are valid");
            zero_punctuation(&instance, &punctuation)
        })
        .collect();
    Corpus::new(instances).expect("generated ids are unique")
}

/// Same instances as `base` with Gaussian noise of sd `noise` added to every
/// score, standing in for another training run of the same model.
pub fn perturb(base: &Corpus, seed: u64, noise: f64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise).expect("noise sd must be finite and non-negative");
    let instances = base
        .instances()
        .iter()
        .map(|inst| {
            let mut record = inst.to_record();
            for scores in record.attributions.values_mut() {
                for s in scores.iter_mut() {
                    *s = round6(*s + jitter.sample(&mut rng));
                }
            }
            AttributionInstance::try_from(record).expect("perturbed scores stay finite")
        })
        .collect();
    Corpus::new(instances).expect("ids unchanged")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let config = SynthConfig {
            instances: 50,
            ..SynthConfig::default()
        };
        let a = generate(&config);
        assert_eq!(a, generate(&config));
        assert_eq!(a.len(), 50);
        assert_eq!(a.method_names().len(), 6);
        assert_eq!(a.annotated_count(), 50);
        for inst in a.instances() {
            assert!((5..=40).contains(&inst.len()));
            assert_eq!(inst.tokens().last().unwrap(), ".");
            for marks in inst.human().unwrap() {
                assert_eq!(*marks.last().unwrap(), 0);
            }
        }
        let other = generate(&SynthConfig { seed: 8, ..config });
        assert_ne!(a, other);
    }

    #[test]
    fn perturbed_runs_stay_aligned() {
        let base = generate(&SynthConfig {
            instances: 10,
            ..SynthConfig::default()
        });
        let run = perturb(&base, 1, 0.01);
        assert!(crate::runs::check_aligned(&base, &run, "r").is_ok());
        assert_ne!(run, base);
        assert_eq!(perturb(&base, 1, 0.01), run);
        assert_eq!(perturb(&base, 1, 0.0), base);
    }
}

use std::collections::HashMap;
use std::sync::OnceLock;

use super::tokenize;
use crate::UNDETERMINED;

/// Best language guess and its posterior probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub lang: String,
    pub confidence: f64,
}

/// A language identifier over tokenized text.
pub trait LanguageDetector: Send + Sync {
    /// Most probable language, or `None` when there is no evidence at all.
    fn classify(&self, tokens: &[String]) -> Option<Detection>;
}

/// Returns the detected language tag, or `"und"` when the token list is
/// empty or the detector's confidence is below `min_confidence`.
pub fn detect_language(
    detector: &dyn LanguageDetector,
    tokens: &[String],
    min_confidence: f64,
) -> String {
    if tokens.is_empty() {
        return UNDETERMINED.to_string();
    }
    match detector.classify(tokens) {
        Some(d) if d.confidence >= min_confidence => d.lang,
        _ => UNDETERMINED.to_string(),
    }
}

const MAX_ORDER: usize = 3;
const SMOOTHING: f64 = 0.5;

const TRAINING: &[(&str, &str)] = &[
    ("cs", include_str!("../../data/langid/cs.txt")),
    ("de", include_str!("../../data/langid/de.txt")),
    ("en", include_str!("../../data/langid/en.txt")),
    ("es", include_str!("../../data/langid/es.txt")),
    ("fr", include_str!("../../data/langid/fr.txt")),
    ("it", include_str!("../../data/langid/it.txt")),
    ("nl", include_str!("../../data/langid/nl.txt")),
    ("pt", include_str!("../../data/langid/pt.txt")),
];

/// Multinomial naive Bayes over character 1- to 3-grams of space-padded
/// tokens. The default model is trained on the samples bundled in
/// `data/langid/`.
#[derive(Debug, Clone)]
pub struct NgramDetector {
    langs: Vec<String>,
    /// n-gram → per-language log probability (index-aligned with `langs`)
    log_probs: HashMap<String, Vec<f64>>,
    /// log probability of an n-gram never seen in training, per language
    unseen: Vec<f64>,
}

impl NgramDetector {
    /// Trains a model from `(language tag, sample text)` pairs.
    pub fn train<'a>(samples: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut langs = Vec::new();
        let mut counts: Vec<HashMap<String, u64>> = Vec::new();
        for (lang, text) in samples {
            let mut c = HashMap::new();
            for gram in ngrams(&tokenize(text)) {
                *c.entry(gram).or_insert(0u64) += 1;
            }
            langs.push(lang.to_string());
            counts.push(c);
        }

        let mut vocab: Vec<&String> = counts.iter().flat_map(|c| c.keys()).collect();
        vocab.sort();
        vocab.dedup();
        let v = vocab.len() as f64 + 1.0;

        let totals: Vec<f64> = counts
            .iter()
            .map(|c| c.values().sum::<u64>() as f64)
            .collect();
        let unseen: Vec<f64> = totals
            .iter()
            .map(|t| (SMOOTHING / (t + SMOOTHING * v)).ln())
            .collect();
        let log_probs = vocab
            .iter()
            .map(|gram| {
                let row = counts
                    .iter()
                    .zip(&totals)
                    .map(|(c, t)| {
                        let n = c.get(*gram).copied().unwrap_or(0) as f64;
                        ((n + SMOOTHING) / (t + SMOOTHING * v)).ln()
                    })
                    .collect();
                ((*gram).clone(), row)
            })
            .collect();

        NgramDetector {
            langs,
            log_probs,
            unseen,
        }
    }

    pub fn languages(&self) -> &[String] {
        &self.langs
    }
}

impl NgramDetector {
    /// The model trained on the bundled samples, built once per process.
    pub fn bundled() -> &'static NgramDetector {
        static MODEL: OnceLock<NgramDetector> = OnceLock::new();
        MODEL.get_or_init(|| NgramDetector::train(TRAINING.iter().copied()))
    }
}

impl Default for NgramDetector {
    fn default() -> Self {
        Self::bundled().clone()
    }
}

impl LanguageDetector for NgramDetector {
    fn classify(&self, tokens: &[String]) -> Option<Detection> {
        let grams = ngrams(tokens);
        if grams.is_empty() || self.langs.is_empty() {
            return None;
        }
        let mut scores = vec![0.0f64; self.langs.len()];
        for gram in &grams {
            let row = self.log_probs.get(gram).unwrap_or(&self.unseen);
            for (s, lp) in scores.iter_mut().zip(row) {
                *s += lp;
            }
        }
        let (best, &best_score) = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
        // posterior under a uniform prior
        let z: f64 = scores.iter().map(|s| (s - best_score).exp()).sum();
        Some(Detection {
            lang: self.langs[best].clone(),
            confidence: 1.0 / z,
        })
    }
}

fn ngrams(tokens: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for token in tokens {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(token.chars())
            .chain(std::iter::once(' '))
            .collect();
        for n in 1..=MAX_ORDER {
            for window in padded.windows(n) {
                if n == 1 && window[0] == ' ' {
                    continue;
                }
                out.push(window.iter().collect());
            }
        }
    }
    out
}

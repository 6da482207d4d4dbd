//! Stopword-profile language identification.

use std::collections::HashSet;
use std::sync::LazyLock;

use super::Document;

const EN: &[&str] = &[
    "the", "of", "and", "to", "in", "is", "that", "for", "it", "with", "as", "was", "on", "are",
    "by", "this", "be", "from", "at", "or", "an", "which", "have", "not", "were", "we", "these",
    "has", "been", "their", "its", "over", "can", "than", "between", "into", "using", "our",
    "also", "such", "more", "both", "other", "only", "all", "there", "when", "where", "how", "new",
];
const DE: &[&str] = &[
    "der", "die", "das", "und", "ist", "nicht", "mit", "von", "zu", "den", "ein", "eine", "auf",
    "für", "im", "dem", "des", "sich", "auch", "wird", "werden", "wir", "bei", "nach", "aus",
    "oder", "sind", "durch", "wurde", "einer", "zur", "zum", "über", "wie", "dass", "diese", "als",
    "einem", "eines", "kann", "noch", "unter", "zwischen", "sowie",
];
const FR: &[&str] = &[
    "le", "les", "des", "et", "est", "une", "du", "dans", "que", "pour", "qui", "sur", "par",
    "pas", "avec", "ce", "sont", "nous", "cette", "ont", "mais", "ou", "au", "aux", "ces", "été",
    "leur", "plus", "être", "entre", "sans", "afin", "ainsi", "chez",
];
const ES: &[&str] = &[
    "el", "los", "las", "del", "y", "es", "una", "por", "con", "para", "se", "su", "al", "lo",
    "como", "más", "pero", "sus", "este", "esta", "fue", "son", "entre", "sobre", "también", "muy",
    "estos", "han", "hay", "sin",
];

const DE_CHARS: &[char] = &['ä', 'ö', 'ü', 'ß'];
const FR_CHARS: &[char] = &['é', 'è', 'ê', 'à', 'ç', 'ù', 'œ', 'â', 'î'];
const ES_CHARS: &[char] = &['ñ', 'á', 'í', 'ó', 'ú', '¿', '¡'];

const ACCENT_WEIGHT: f64 = 0.25;
const CJK_THRESHOLD: f64 = 0.3;

struct Profile {
    code: &'static str,
    stopwords: HashSet<&'static str>,
    chars: &'static [char],
}

static PROFILES: LazyLock<Vec<Profile>> = LazyLock::new(|| {
    [
        ("en", EN, &[][..]),
        ("de", DE, DE_CHARS),
        ("fr", FR, FR_CHARS),
        ("es", ES, ES_CHARS),
    ]
    .into_iter()
    .map(|(code, words, chars)| Profile {
        code,
        stopwords: words.iter().copied().collect(),
        chars,
    })
    .collect()
});

#[derive(Debug, Clone, PartialEq)]
pub enum LanguageGuess {
    Detected { code: &'static str, confidence: f64 },
    Undetermined,
}

impl LanguageGuess {
    pub fn code(&self) -> Option<&'static str> {
        match self {
            LanguageGuess::Detected { code, .. } => Some(code),
            LanguageGuess::Undetermined => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanguageDetector {
    /// Texts with fewer characters (after trimming) are undetermined.
    pub min_chars: usize,
}

impl Default for LanguageDetector {
    fn default() -> Self {
        Self { min_chars: 20 }
    }
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32, 0x4E00..=0x9FFF | 0x3400..=0x4DBF | 0xF900..=0xFAFF)
}

impl LanguageDetector {
    pub fn detect(&self, text: &str) -> LanguageGuess {
        let text = text.trim();
        if text.chars().count() < self.min_chars {
            return LanguageGuess::Undetermined;
        }

        let visible = text.chars().filter(|c| !c.is_whitespace()).count();
        let cjk = text.chars().filter(|c| is_cjk(*c)).count();
        let cjk_share = cjk as f64 / visible.max(1) as f64;
        if cjk_share > CJK_THRESHOLD {
            return LanguageGuess::Detected {
                code: "zh",
                confidence: cjk_share,
            };
        }

        let lower = text.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        let scores: Vec<f64> = PROFILES
            .iter()
            .map(|p| {
                let hits = words.iter().filter(|w| p.stopwords.contains(*w)).count() as f64;
                let accents = lower.chars().filter(|c| p.chars.contains(c)).count() as f64;
                hits + ACCENT_WEIGHT * accents
            })
            .collect();
        let total: f64 = scores.iter().sum();
        if total == 0.0 {
            return LanguageGuess::Undetermined;
        }
        // first profile wins ties, so English is preferred on equal evidence
        let (best, score) =
            scores.iter().enumerate().fold(
                (0, f64::MIN),
                |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc },
            );
        LanguageGuess::Detected {
            code: PROFILES[best].code,
            confidence: score / total,
        }
    }
}

pub fn detect_language(text: &str) -> LanguageGuess {
    LanguageDetector::default().detect(text)
}

/// English status: the language flag when present (even if wrong), else detection
/// over title and abstract.
pub fn is_english(doc: &Document) -> bool {
    match &doc.lang {
        Some(lang) => lang == "en",
        None => {
            let text = format!("{} {}", doc.title, doc.abstract_text);
            detect_language(&text).code() == Some("en")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::paper;

    #[test]
    fn english_sentence() {
        match detect_language("the quick brown fox jumps over the lazy dog repeatedly") {
            LanguageGuess::Detected { code, confidence } => {
                assert_eq!(code, "en");
                assert!(confidence >= 0.9, "{confidence}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_and_short_are_undetermined() {
        assert_eq!(detect_language(""), LanguageGuess::Undetermined);
        assert_eq!(detect_language("the of and"), LanguageGuess::Undetermined);
        let lenient = LanguageDetector { min_chars: 5 };
        assert_eq!(lenient.detect("the of and").code(), Some("en"));
    }

    #[test]
    fn german_is_not_english() {
        let text = "Die vorliegende Erfindung betrifft ein Verfahren zur Herstellung von \
                    Halbleiterbauelementen, bei dem eine Schicht auf das Substrat aufgebracht wird \
                    und die Oberfläche durch eine Wärmebehandlung geglättet wird.";
        assert_eq!(detect_language(text).code(), Some("de"));
    }

    #[test]
    fn french_and_spanish() {
        let fr = "Nous présentons une méthode pour la synthèse des nanotubes dans les conditions ambiantes et avec un rendement élevé.";
        assert_eq!(detect_language(fr).code(), Some("fr"));
        let es = "Se presenta un método para la síntesis de los nanotubos con un rendimiento más alto por el proceso del grupo.";
        assert_eq!(detect_language(es).code(), Some("es"));
    }

    #[test]
    fn chinese_characters() {
        let zh = "本发明涉及一种半导体器件的制造方法，包括在衬底上形成绝缘层的步骤。";
        assert_eq!(detect_language(zh).code(), Some("zh"));
    }

    #[test]
    fn deterministic() {
        let t = "we study the effect of temperature on the growth of crystals";
        assert_eq!(detect_language(t), detect_language(t));
    }

    #[test]
    fn flag_wins_over_detection() {
        let mut doc = paper(
            "w",
            "Die Erfindung",
            "Die Erfindung betrifft ein Verfahren und eine Vorrichtung.",
        );
        assert!(is_english(&doc));
        doc.lang = None;
        assert!(!is_english(&doc));
        let mut doc = paper(
            "w",
            "A study",
            "This is a study of the growth of crystals in the lab.",
        );
        doc.lang = None;
        assert!(is_english(&doc));
    }
}

//! Removal of structural headings, copyright statements, and markup from abstracts.

use std::sync::LazyLock;

use regex::Regex;

use super::{CorpusError, Result};

const BUILTIN_RULES: &str = include_str!("../../data/clean_rules.tsv");

static BUILTIN: LazyLock<CleaningRules> = LazyLock::new(|| {
    CleaningRules::parse(BUILTIN_RULES).expect("built-in cleaning rules are valid")
});

static WHITESPACE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+").unwrap());

#[derive(Debug, Clone)]
pub struct CleaningRule {
    pub name: String,
    pattern: Regex,
    replacement: String,
}

impl CleaningRule {
    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }
}

/// An ordered, versioned list of regex rewrites.
#[derive(Debug, Clone)]
pub struct CleaningRules {
    pub version: u32,
    rules: Vec<CleaningRule>,
}

impl CleaningRules {
    /// The rule set compiled into the crate from `data/clean_rules.tsv`.
    pub fn builtin() -> &'static CleaningRules {
        &BUILTIN
    }

    /// Parses the tab-separated rule format: a `version` line followed by
    /// `name<TAB>regex<TAB>replacement` lines. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            let err = |reason: String| CorpusError::Rule { line, reason };
            match cols.as_slice() {
                ["version", v] => {
                    version = Some(
                        v.trim()
                            .parse()
                            .map_err(|_| err(format!("bad version `{v}`")))?,
                    );
                }
                [name, pattern, replacement] => {
                    let pattern = Regex::new(pattern).map_err(|e| err(e.to_string()))?;
                    rules.push(CleaningRule {
                        name: name.to_string(),
                        pattern,
                        replacement: replacement.replace("\\s", " "),
                    });
                }
                _ => {
                    return Err(err(format!(
                        "expected 3 tab-separated columns, found {}",
                        cols.len()
                    )))
                }
            }
        }
        let version = version.ok_or(CorpusError::Rule {
            line: 0,
            reason: "missing version line".into(),
        })?;
        Ok(Self { version, rules })
    }

    pub fn rules(&self) -> &[CleaningRule] {
        &self.rules
    }

    /// Runs the rules in order, repeating until nothing changes (removing one
    /// match can expose another), then collapses whitespace.
    pub fn apply(&self, raw: &str) -> String {
        let mut text = raw.to_string();
        for _ in 0..MAX_PASSES {
            let mut next = text.clone();
            for rule in &self.rules {
                if let std::borrow::Cow::Owned(s) =
                    rule.pattern.replace_all(&next, rule.replacement.as_str())
                {
                    next = s;
                }
            }
            let next = WHITESPACE.replace_all(&next, " ").trim().to_string();
            if next == text {
                break;
            }
            text = next;
        }
        text
    }
}

const MAX_PASSES: usize = 16;

/// Cleans an abstract with the built-in rule set.
pub fn clean_abstract(raw: &str) -> String {
    BUILTIN.apply(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn heading_and_copyright() {
        assert_eq!(
            clean_abstract("BACKGROUND: We study X. © 2020 Elsevier."),
            "We study X."
        );
    }

    #[test]
    fn untouched_and_whitespace() {
        assert_eq!(clean_abstract("plain abstract"), "plain abstract");
        assert_eq!(clean_abstract("  a   b  "), "a b");
        assert_eq!(clean_abstract(""), "");
    }

    #[test]
    fn structured_abstract() {
        let raw = "Background: Lasers are useful. Methods: We built one.\nResults: It works.\n(c) 2019 The Authors. Published by Wiley.";
        assert_eq!(
            clean_abstract(raw),
            "Lasers are useful. We built one. It works."
        );
    }

    #[test]
    fn markup_is_stripped() {
        assert_eq!(
            clean_abstract("<jats:p>Graphene <i>is</i> thin.</jats:p>"),
            "Graphene is thin."
        );
        assert_eq!(clean_abstract("A &amp; B"), "A B");
    }

    #[test]
    fn copyright_only_removes_its_own_line() {
        let raw = "We report a catalyst.\nCopyright 2011 American Chemical Society";
        assert_eq!(clean_abstract(raw), "We report a catalyst.");
    }

    #[test]
    fn lowercase_words_are_not_headings() {
        assert_eq!(clean_abstract("the results: mixed"), "the results: mixed");
    }

    #[test]
    fn builtin_rules_are_versioned() {
        let rules = CleaningRules::builtin();
        assert_eq!(rules.version, 1);
        assert!(rules.rules().iter().any(|r| r.name == "copyright_sign"));
    }

    #[test]
    fn rule_file_errors() {
        assert!(CleaningRules::parse("x\t(\t\n").is_err());
        assert!(CleaningRules::parse("a\tb\tc\n").is_err());
        assert!(CleaningRules::parse("version\t2\nr\tx+\ty\n").is_ok());
        assert!(CleaningRules::parse("version\t2\nbad\n").is_err());
    }

    fn fragment() -> impl Strategy<Value = String> {
        prop::sample::select(vec![
            "BACKGROUND:",
            "Background:",
            "METHODS :",
            "Results:",
            "results:",
            "We",
            "study",
            "X.",
            "©",
            "(c)",
            "(C) 2020",
            "2020",
            "Copyright",
            "2011",
            "by",
            "<b>",
            "</b>",
            "<",
            ">",
            "&amp;",
            "All rights reserved.",
            ".",
            "!",
            "?",
            "\n",
            "  ",
            "\t",
            "Elsevier",
            "Methods:",
            "<jats:p",
            "Summary",
            ":",
            "AIMS:",
        ])
        .prop_map(str::to_string)
    }

    proptest! {
        #[test]
        fn idempotent_and_never_longer(parts in prop::collection::vec(fragment(), 0..25),
                                       seps in prop::collection::vec(prop::sample::select(vec!["", " ", "\n"]), 25)) {
            let raw: String = parts.iter().zip(&seps).map(|(p, s)| format!("{p}{s}")).collect();
            let once = clean_abstract(&raw);
            prop_assert!(once.len() <= raw.len());
            prop_assert_eq!(clean_abstract(&once), once);
        }
    }
}

use std::collections::BTreeMap;
use std::path::Path;

use super::NlError;

/// Suffix-stripping lemmatizer with an override table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    overrides: BTreeMap<String, String>,
}

const BUILTIN: &[(&str, &str)] = &[
    ("children", "child"),
    ("geese", "goose"),
    ("liked", "like"),
    ("mice", "mouse"),
    ("people", "person"),
    ("wolves", "wolf"),
];

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon {
            overrides: BUILTIN
                .iter()
                .map(|(s, l)| (s.to_string(), l.to_string()))
                .collect(),
        }
    }
}

impl Lexicon {
    /// Parses `surface=lemma` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, NlError> {
        let mut lexicon = Lexicon::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, lemma) = line
                .split_once('=')
                .map(|(s, l)| (s.trim(), l.trim()))
                .filter(|(s, l)| !s.is_empty() && !l.is_empty())
                .ok_or_else(|| NlError::Lexicon(format!("line {}: expected surface=lemma", i + 1)))?;
            lexicon
                .overrides
                .insert(surface.to_lowercase(), lemma.to_lowercase());
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self, NlError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NlError::Lexicon(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Singular noun or bare verb form of `word`.
    pub fn lemma(&self, word: &str) -> String {
        if let Some(l) = self.overrides.get(word) {
            return l.clone();
        }
        for suffix in ["sses", "shes", "ches", "xes", "zzes"] {
            if word.ends_with(suffix) {
                return word[..word.len() - 2].to_string();
            }
        }
        if word.len() > 3 && word.ends_with("ies") {
            return format!("{}y", &word[..word.len() - 3]);
        }
        if word.len() > 2 && word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") {
            return word[..word.len() - 1].to_string();
        }
        word.to_string()
    }

    /// Third-person singular form of a verb lemma.
    pub fn third_person(&self, lemma: &str) -> String {
        if ["s", "sh", "ch", "x", "z"].iter().any(|s| lemma.ends_with(s)) {
            return format!("{lemma}es");
        }
        let bytes = lemma.as_bytes();
        if bytes.len() > 1 && lemma.ends_with('y') && !b"aeiou".contains(&bytes[bytes.len() - 2]) {
            return format!("{}ies", &lemma[..lemma.len() - 1]);
        }
        format!("{lemma}s")
    }
}

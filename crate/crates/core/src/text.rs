//! Tokenisation, name normalisation and vocabularies.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Lowercase and split on every non-alphanumeric character.
///
/// Punctuation never survives as a token, so `"The Wizard's Tower."` becomes
/// `["the", "wizard", "s", "tower"]`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Case-folded, whitespace-collapsed form of an element name, used as the
/// resolution key for cross references.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Dense token index with document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    doc_freq: Vec<u32>,
    doc_count: u32,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    doc_freq: Vec<u32>,
    doc_count: u32,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens: r.tokens,
            doc_freq: r.doc_freq,
            doc_count: r.doc_count,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            tokens: v.tokens,
            doc_freq: v.doc_freq,
            doc_count: v.doc_count,
        }
    }
}

impl Vocabulary {
    /// Build from a document collection. Tokens are indexed in order of first
    /// appearance, so the result depends only on the document order.
    pub fn build<I, S>(documents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary {
            tokens: Vec::new(),
            doc_freq: Vec::new(),
            doc_count: 0,
            index: HashMap::new(),
        };
        for doc in documents {
            vocab.add_document(doc.as_ref());
        }
        vocab
    }

    fn add_document(&mut self, doc: &str) {
        self.doc_count += 1;
        let mut seen = Vec::new();
        for tok in tokenize(doc) {
            let idx = match self.index.get(&tok) {
                Some(&i) => i,
                None => {
                    let i = self.tokens.len();
                    self.index.insert(tok.clone(), i);
                    self.tokens.push(tok);
                    self.doc_freq.push(0);
                    i
                }
            };
            if !seen.contains(&idx) {
                seen.push(idx);
                self.doc_freq[idx] += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Document frequency of a token; 0 for unknown tokens.
    pub fn doc_freq(&self, token: &str) -> u32 {
        self.get(token).map_or(0, |i| self.doc_freq[i])
    }

    pub fn doc_count(&self) -> u32 {
        self.doc_count
    }

    /// Map a text to known token indices, dropping out-of-vocabulary tokens.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        tokenize(text).iter().filter_map(|t| self.get(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The Wizard's Tower."), ["the", "wizard", "s", "tower"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Town of Anoria"), ["town", "of", "anoria"]);
        assert_eq!(tokenize("  ...  "), Vec::<String>::new());
    }

    #[test]
    fn normalize_collapses_case_and_space() {
        assert_eq!(normalize_name("  Town   of\tANORIA "), "town of anoria");
        assert_eq!(normalize_name(""), "");
    }

    #[test]
    fn vocabulary_counts_documents_once_per_token() {
        let v = Vocabulary::build(["a a b", "b c", ""]);
        assert_eq!(v.len(), 3);
        assert_eq!(v.doc_count(), 3);
        assert_eq!(v.doc_freq("a"), 1);
        assert_eq!(v.doc_freq("b"), 2);
        assert_eq!(v.doc_freq("zzz"), 0);
        assert_eq!(v.encode("c a zzz"), vec![2, 0]);
    }

    #[test]
    fn vocabulary_serde_rebuilds_index() {
        let v = Vocabulary::build(["wizard tower", "fishing dock"]);
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.get("dock"), Some(3));
    }
}

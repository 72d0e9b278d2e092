use std::collections::HashMap;

use rand::Rng;

/// Order-2 word chain over whitespace tokens (punctuation stays attached).
#[derive(Debug, Default)]
pub struct MarkovChain {
    starts: Vec<(String, String)>,
    next: HashMap<(String, String), Vec<String>>,
    /// Texts too short to seed a two-word state.
    short: Vec<Vec<String>>,
}

impl MarkovChain {
    pub fn fit<S: AsRef<str>>(texts: &[S]) -> Self {
        let mut chain = MarkovChain::default();
        for text in texts {
            let words: Vec<String> = text.as_ref().split_whitespace().map(str::to_string).collect();
            if words.len() < 2 {
                if !words.is_empty() {
                    chain.short.push(words);
                }
                continue;
            }
            chain.starts.push((words[0].clone(), words[1].clone()));
            for w in words.windows(3) {
                chain
                    .next
                    .entry((w[0].clone(), w[1].clone()))
                    .or_default()
                    .push(w[2].clone());
            }
        }
        chain
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty() && self.short.is_empty()
    }

    /// Walk from a random start until a dead end or `max_tokens` words.
    pub fn generate(&self, rng: &mut impl Rng, max_tokens: usize) -> Vec<String> {
        if self.starts.is_empty() {
            return match self.short.len() {
                0 => Vec::new(),
                n => self.short[rng.gen_range(0..n)]
                    .iter()
                    .take(max_tokens)
                    .cloned()
                    .collect(),
            };
        }
        let (a, b) = self.starts[rng.gen_range(0..self.starts.len())].clone();
        let mut out = vec![a, b];
        while out.len() < max_tokens {
            let key = (out[out.len() - 2].clone(), out[out.len() - 1].clone());
            match self.next.get(&key) {
                Some(options) => out.push(options[rng.gen_range(0..options.len())].clone()),
                None => break,
            }
        }
        out.truncate(max_tokens);
        out
    }
}

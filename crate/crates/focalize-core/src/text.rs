//! Word counting and tokenization rules.

use alloc::string::String;
use alloc::vec::Vec;

/// Number of whitespace-delimited tokens that contain at least one
/// alphanumeric character. `"--"` is not a word, `"don't"` is one.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .count()
}

/// Classifier tokenizer: lowercased maximal alphanumeric runs of at least two
/// characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Lexicon tokenizer: lowercased alphanumeric runs, keeping inner
/// apostrophes and hyphens so forms like `don't` and `well-known` survive.
/// Single-character words are kept.
pub fn lexicon_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '’' || c == '-'))
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(|t| t.replace('’', "'").to_lowercase())
        .collect()
}

/// Contiguous n-grams for every `n` in `1..=max_n`, grouped by `n`, joined
/// with a single space.
pub fn extract_ngrams<S: AsRef<str>>(tokens: &[S], max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for window in tokens.windows(n) {
            let mut gram = String::new();
            for (i, t) in window.iter().enumerate() {
                if i > 0 {
                    gram.push(' ');
                }
                gram.push_str(t.as_ref());
            }
            out.push(gram);
        }
    }
    out
}

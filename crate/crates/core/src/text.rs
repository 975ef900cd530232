//! Tokenization shared by the description templates and the parser.

use alloc::string::String;
use alloc::vec::Vec;

/// Lowercases and splits on whitespace; every other non-alphanumeric
/// character becomes a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '\'' {
            word.extend(ch.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            out.push(core::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            out.push(ch.into());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_splits() {
        assert_eq!(
            tokenize("There are four Spheres, and one cylinder."),
            ["there", "are", "four", "spheres", ",", "and", "one", "cylinder", "."]
        );
        assert!(tokenize("  \t ").is_empty());
    }
}

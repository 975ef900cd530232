use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::text::tokenize;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Closed token vocabulary. Ids are dense; reserved tokens come first and
/// the rest are sorted, so the map depends only on the set of tokens seen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut seen = BTreeSet::new();
        for text in texts {
            seen.extend(tokenize(text));
        }
        seen.remove(PAD_TOKEN);
        seen.remove(UNK_TOKEN);
        Self::from_tokens(seen.into_iter())
    }

    fn from_tokens(rest: impl Iterator<Item = String>) -> Self {
        let mut tokens = alloc::vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        tokens.extend(rest);
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn id(&self, token: &str) -> usize {
        *self.index.get(token).unwrap_or(&UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn ids<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn encode_text(&self, text: &str) -> (Vec<String>, Vec<usize>) {
        let tokens = tokenize(text);
        let ids = self.ids(&tokens);
        (tokens, ids)
    }
}

impl Serialize for Vocab {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.tokens.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocab {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let tokens = Vec::<String>::deserialize(d)?;
        if tokens.first().map(String::as_str) != Some(PAD_TOKEN) || tokens.get(1).map(String::as_str) != Some(UNK_TOKEN) {
            return Err(serde::de::Error::custom("vocabulary must start with <pad>, <unk>"));
        }
        let n = tokens.len();
        let vocab = Self::from_tokens(tokens.into_iter().skip(2));
        if vocab.index.len() != n {
            return Err(serde::de::Error::custom("duplicate vocabulary entries"));
        }
        Ok(vocab)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids_and_stability() {
        let a = Vocab::build(["Draw a red cube.", "a blue sphere"]);
        let b = Vocab::build(["a blue sphere", "Draw a red cube.", "cube"]);
        assert_eq!(a, b);
        assert_eq!(a.id(PAD_TOKEN), PAD);
        assert_eq!(a.id("zebra"), UNK);
        assert_eq!(a.token(a.id("cube")), Some("cube"));
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<Vocab>(&json).unwrap(), a);
    }
}

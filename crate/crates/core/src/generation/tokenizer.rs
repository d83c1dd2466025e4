//! Whitespace-and-punctuation tokenizer and the token vocabulary.

use std::collections::{BTreeSet, HashMap};

pub const BOS_TOKEN: &str = "<bos>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

/// Lowercased alphanumeric runs; every other non-whitespace character is
/// its own token. The special tokens cannot be produced by this function,
/// so they never collide with data tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            word.extend(ch.to_lowercase());
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

pub type TokenId = u32;

pub const BOS_ID: TokenId = 0;
pub const EOS_ID: TokenId = 1;
pub const UNK_ID: TokenId = 2;

/// The closed token set, fixed from public data. Ids 0..=2 are the
/// reserved begin/end/unknown tokens; data tokens follow in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn from_tokens<'a>(data_tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let distinct: BTreeSet<&str> = data_tokens.into_iter().collect();
        let mut tokens = vec![
            BOS_TOKEN.to_string(),
            EOS_TOKEN.to_string(),
            UNK_TOKEN.to_string(),
        ];
        tokens.extend(distinct.into_iter().map(|s| s.to_string()));
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        Self { tokens, index }
    }

    pub fn from_token_list(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// Maps out-of-vocabulary tokens to the unknown id.
    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Ids a generated token may take: everything except the begin marker.
    pub fn next_token_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        1..self.tokens.len() as TokenId
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_words_and_punctuation() {
        assert_eq!(
            tokenize("Chest pain, 37.5C; stable."),
            vec!["chest", "pain", ",", "37", ".", "5c", ";", "stable", "."]
        );
    }

    #[test]
    fn empty_and_whitespace_only() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t ").is_empty());
    }

    #[test]
    fn vocabulary_reserves_specials() {
        let v = Vocabulary::from_tokens(["b", "a", "b"].into_iter());
        assert_eq!(v.token(BOS_ID), BOS_TOKEN);
        assert_eq!(v.token(EOS_ID), EOS_TOKEN);
        assert_eq!(v.token(UNK_ID), UNK_TOKEN);
        assert_eq!(v.len(), 5);
        // Sorted data tokens after the specials.
        assert_eq!(v.token(3), "a");
        assert_eq!(v.token(4), "b");
        assert_eq!(v.id_or_unk("zzz"), UNK_ID);
    }

    #[test]
    fn next_token_ids_exclude_bos() {
        let v = Vocabulary::from_tokens(["a"].into_iter());
        let ids: Vec<_> = v.next_token_ids().collect();
        assert_eq!(ids, vec![1, 2, 3]);
    }
}

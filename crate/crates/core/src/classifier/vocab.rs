use std::collections::HashMap;

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;

const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

/// Dense token ↔ id map with reserved PAD and UNK ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, u32>,
    tokens: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            ids: HashMap::new(),
            tokens: vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()],
        }
    }
}

impl Vocabulary {
    /// Assigns ids in order of first appearance.
    pub fn build<'a, I, S>(token_lists: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut vocab = Vocabulary::default();
        for tokens in token_lists {
            for token in tokens {
                vocab.insert(token.as_ref());
            }
        }
        vocab
    }

    pub(crate) fn from_tokens(regular: Vec<String>) -> Self {
        let mut vocab = Vocabulary::default();
        for token in regular {
            vocab.insert(&token);
        }
        vocab
    }

    fn insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.ids.insert(token.to_string(), id);
        self.tokens.push(token.to_string());
        id
    }

    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Size including the two reserved ids.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    /// Regular tokens (ids ≥ 2) in id order.
    pub(crate) fn regular_tokens(&self) -> &[String] {
        &self.tokens[2..]
    }

    /// Maps tokens to ids, truncating at the tail and right-padding with PAD
    /// to exactly `len` ids.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S], len: usize) -> Vec<u32> {
        let mut ids: Vec<u32> = tokens.iter().take(len).map(|t| self.id(t.as_ref())).collect();
        ids.resize(len, PAD_ID);
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids_and_dense_assignment() {
        let a = ["hi", "there", "hi"];
        let b = ["you"];
        let vocab = Vocabulary::build([&a[..], &b[..]]);
        assert_eq!(vocab.len(), 5);
        assert_eq!(vocab.id("hi"), 2);
        assert_eq!(vocab.id("there"), 3);
        assert_eq!(vocab.id("you"), 4);
        assert_eq!(vocab.id("missing"), UNK_ID);
        assert_eq!(vocab.token(PAD_ID), Some("<pad>"));
        assert_eq!(vocab.token(4), Some("you"));
    }

    #[test]
    fn encode_pads_and_truncates_tail() {
        let vocab = Vocabulary::build([&["a", "b", "c"][..]]);
        assert_eq!(vocab.encode(&["a", "zzz"], 4), vec![2, UNK_ID, PAD_ID, PAD_ID]);
        assert_eq!(vocab.encode(&["a", "b", "c"], 2), vec![2, 3]);
        assert_eq!(vocab.encode::<&str>(&[], 3), vec![PAD_ID; 3]);
    }
}

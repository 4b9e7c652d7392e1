//! Shared tokenizer for classification and retrieval.
//!
//! Text is lowercased and split on whitespace. Inside each chunk, runs of
//! alphanumeric characters form word tokens and runs of everything else form
//! punctuation tokens. An apostrophe between two alphanumerics stays inside
//! the word, so `don't` is one token while `'quoted'` yields three.

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Word,
    Punct,
}

pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lowered.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut current = String::new();
        let mut current_class = None;
        for (i, &c) in chars.iter().enumerate() {
            let class = if c.is_alphanumeric() || is_inner_apostrophe(&chars, i) {
                Class::Word
            } else {
                Class::Punct
            };
            if current_class != Some(class) && !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            current.push(c);
            current_class = Some(class);
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

fn is_inner_apostrophe(chars: &[char], i: usize) -> bool {
    matches!(chars[i], '\'' | '\u{2019}')
        && i > 0
        && i + 1 < chars.len()
        && chars[i - 1].is_alphanumeric()
        && chars[i + 1].is_alphanumeric()
}

/// True when the token contains at least one alphanumeric character.
pub fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

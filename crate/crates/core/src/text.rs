//! Caption preprocessing: tokenization, vocabulary, and id sequences framed by
//! start/end markers.

use std::collections::HashMap;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const START: usize = 1;
pub const END: usize = 2;
pub const UNK: usize = 3;
pub const NUM_RESERVED: usize = 4;

pub const PAD_TOKEN: &str = "<pad>";
pub const START_TOKEN: &str = "<start>";
pub const END_TOKEN: &str = "<end>";
pub const UNK_TOKEN: &str = "<unk>";

/// Marks split off a word into tokens of their own: the Bengali dari, basic
/// sentence punctuation and straight/curly quotes.
const PUNCTUATION: &[char] = &['।', '?', '!', ',', '"', '\'', '“', '”', '‘', '’'];

fn is_punct(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

/// NFC-normalizes `text`, splits on Unicode whitespace and peels leading and
/// trailing punctuation marks into separate tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    let mut tokens = Vec::new();
    for chunk in normalized.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let lead = chars.iter().take_while(|&&c| is_punct(c)).count();
        if lead == chars.len() {
            tokens.extend(chars.iter().map(|c| c.to_string()));
            continue;
        }
        let trail = chars.iter().rev().take_while(|&&c| is_punct(c)).count();
        tokens.extend(chars[..lead].iter().map(|c| c.to_string()));
        tokens.push(chars[lead..chars.len() - trail].iter().collect());
        tokens.extend(chars[chars.len() - trail..].iter().map(|c| c.to_string()));
    }
    tokens
}

/// The canonical single-space form of a caption: what a decode of its
/// encoding reproduces when every word is known.
pub fn normalize_caption(text: &str) -> String {
    tokenize(text).join(" ")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    word_to_id: HashMap<String, usize>,
    id_to_word: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::reserved_only()
    }
}

impl Vocabulary {
    fn reserved_only() -> Self {
        let id_to_word: Vec<String> = [PAD_TOKEN, START_TOKEN, END_TOKEN, UNK_TOKEN].iter().map(|s| s.to_string()).collect();
        let word_to_id = id_to_word.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        Vocabulary { word_to_id, id_to_word }
    }

    /// Assigns ids from 4 upwards to every word seen at least `min_count`
    /// times, in order of first appearance.
    pub fn build<S: AsRef<str>>(corpus: &[S], min_count: usize) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be at least 1".into()));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut order: Vec<String> = Vec::new();
        for caption in corpus {
            for tok in tokenize(caption.as_ref()) {
                let c = counts.entry(tok.clone()).or_insert(0);
                if *c == 0 {
                    order.push(tok);
                }
                *c += 1;
            }
        }
        let mut vocab = Self::reserved_only();
        for word in order {
            if counts[&word] >= min_count {
                vocab.insert(word);
            }
        }
        Ok(vocab)
    }

    /// Rebuilds a vocabulary from its non-reserved words in id order.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::reserved_only();
        for w in words {
            let w = w.into();
            if w.is_empty() || w.chars().any(char::is_whitespace) || vocab.word_to_id.contains_key(&w) {
                return Err(Error::InvalidConfig(format!("invalid or duplicate vocabulary word {w:?}")));
            }
            vocab.insert(w);
        }
        Ok(vocab)
    }

    fn insert(&mut self, word: String) {
        if !self.word_to_id.contains_key(&word) {
            self.word_to_id.insert(word.clone(), self.id_to_word.len());
            self.id_to_word.push(word);
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.id_to_word.get(id).map(String::as_str)
    }

    /// Non-reserved words in id order.
    pub fn words(&self) -> &[String] {
        &self.id_to_word[NUM_RESERVED..]
    }

    pub fn encode(&self, text: &str) -> TokenSequence {
        encode_caption(self, text)
    }

    pub fn decode(&self, ids: &TokenSequence) -> Result<String> {
        decode_tokens(self, ids)
    }
}

/// Token ids framed by [`START`] and [`END`], with no padding and no interior
/// end marker.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSequence(Vec<usize>);

impl TokenSequence {
    pub fn new(ids: Vec<usize>) -> Result<Self> {
        if ids.len() < 2 {
            return Err(Error::InvalidSequence(format!("needs at least start and end, got {} ids", ids.len())));
        }
        if ids[0] != START {
            return Err(Error::InvalidSequence(format!("first id is {}, expected start ({START})", ids[0])));
        }
        if ids[ids.len() - 1] != END {
            return Err(Error::InvalidSequence(format!("last id is {}, expected end ({END})", ids[ids.len() - 1])));
        }
        if let Some(pos) = ids.iter().position(|&i| i == PAD) {
            return Err(Error::InvalidSequence(format!("pad id at position {pos}")));
        }
        if let Some(pos) = ids[..ids.len() - 1].iter().position(|&i| i == END) {
            return Err(Error::InvalidSequence(format!("end id at interior position {pos}")));
        }
        Ok(TokenSequence(ids))
    }

    /// Wraps `body` in start and end markers.
    pub fn from_body(body: &[usize]) -> Result<Self> {
        let mut ids = Vec::with_capacity(body.len() + 2);
        ids.push(START);
        ids.extend_from_slice(body);
        ids.push(END);
        Self::new(ids)
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    /// The ids between the start and end markers.
    pub fn body(&self) -> &[usize] {
        &self.0[1..self.0.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same framing, body in reverse order.
    pub fn reversed_body(&self) -> TokenSequence {
        let mut ids = self.0.clone();
        let n = ids.len();
        ids[1..n - 1].reverse();
        TokenSequence(ids)
    }

    pub fn max_id(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

pub fn encode_caption(v: &Vocabulary, text: &str) -> TokenSequence {
    let mut ids = Vec::new();
    ids.push(START);
    ids.extend(tokenize(text).iter().map(|w| match v.id(w) {
        // a literal "<end>" or "<pad>" in caption text is just an unknown word
        Some(id) if id >= NUM_RESERVED || id == UNK => id,
        _ => UNK,
    }));
    ids.push(END);
    TokenSequence(ids)
}

pub fn decode_tokens(v: &Vocabulary, ids: &TokenSequence) -> Result<String> {
    let mut words = Vec::with_capacity(ids.len());
    for &id in ids.ids() {
        let word = v.word(id).ok_or(Error::InvalidToken { id, vocab_size: v.len() })?;
        if matches!(id, PAD | START | END) {
            continue;
        }
        words.push(word);
    }
    Ok(words.join(" "))
}

/// Joins tokens for display, attaching sentence and clause marks to the word
/// before them: `["নদী", "।"]` becomes `"নদী।"`.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for t in tokens {
        let t = t.as_ref();
        let closing = matches!(t, "।" | "?" | "!" | ",");
        if !out.is_empty() && !closing {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

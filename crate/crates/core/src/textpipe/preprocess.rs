use std::fmt;

/// Sentences longer than this are dropped.
pub const MAX_TOKENS: usize = 20;

/// Replacement for any token containing a digit.
pub const NUM_TOKEN: &str = "<NUM>";

const PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '"', '\'', '(', ')'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rejection {
    Empty,
    TooLong,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Empty => f.write_str("empty"),
            Rejection::TooLong => f.write_str("too_long"),
        }
    }
}

/// Lowercases, separates punctuation, and maps numbers to [`NUM_TOKEN`].
///
/// Splitting is on whitespace after padding each of `.,!?;:"'()` with
/// spaces. The literal `<num>` (any case) is read back as [`NUM_TOKEN`], which
/// makes the function idempotent on its own joined output.
pub fn tokenize(raw: &str) -> Vec<String> {
    let lowered = raw.to_lowercase();
    let mut padded = String::with_capacity(lowered.len() + 8);
    for ch in lowered.chars() {
        if PUNCTUATION.contains(&ch) {
            padded.push(' ');
            padded.push(ch);
            padded.push(' ');
        } else {
            padded.push(ch);
        }
    }
    padded
        .split_whitespace()
        .map(|tok| {
            if tok == "<num>" || tok.chars().any(|c| c.is_ascii_digit() || c.is_numeric()) {
                NUM_TOKEN.to_string()
            } else {
                tok.to_string()
            }
        })
        .collect()
}

/// [`tokenize`] plus the length rule: a line must have between 1 and
/// [`MAX_TOKENS`] tokens.
pub fn preprocess(raw: &str) -> Result<Vec<String>, Rejection> {
    length_rule(tokenize(raw))
}

/// Whitespace split plus the length rule, for text that is already
/// tokenized (cleaned corpus files, the synthetic corpus).
pub fn split_pretokenized(raw: &str) -> Result<Vec<String>, Rejection> {
    length_rule(raw.split_whitespace().map(str::to_string).collect())
}

fn length_rule(tokens: Vec<String>) -> Result<Vec<String>, Rejection> {
    if tokens.is_empty() {
        Err(Rejection::Empty)
    } else if tokens.len() > MAX_TOKENS {
        Err(Rejection::TooLong)
    } else {
        Ok(tokens)
    }
}

/// Specials such as `<unk>` and [`NUM_TOKEN`] look like `<...>`.
pub fn is_special(token: &str) -> bool {
    token.len() > 2 && token.starts_with('<') && token.ends_with('>')
}

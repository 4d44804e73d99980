//! Tokenization helpers shared by the scorers and the analytics.

/// Whitespace tokens after trimming. This is the word count used for brevity.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Strips leading and trailing punctuation from a raw whitespace token,
/// keeping inner apostrophes and hyphens ("don't", "well-known").
pub fn strip_token(raw: &str) -> &str {
    raw.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Lowercased, punctuation-stripped whitespace tokens; empties dropped.
pub fn lexical_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(strip_token).filter(|t| !t.is_empty()).map(normalize_apostrophes).collect()
}

/// Tokens for embedding: lowercase, split on anything that is not an ASCII
/// letter, digit or apostrophe, outer apostrophes removed.
pub fn embedding_tokens(text: &str) -> Vec<String> {
    let lowered = normalize_apostrophes(text);
    lowered
        .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Lowercases and folds typographic apostrophes to ASCII.
pub fn normalize_apostrophes(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '\u{2019}' | '\u{2018}' | '`' => '\'',
            other => other,
        })
        .flat_map(char::to_lowercase)
        .collect()
}

/// Number of sentences, counting terminal `.`, `!` and `?` runs. A trailing
/// fragment without a terminator counts as one more sentence.
pub fn sentence_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_terminator = false;
    let mut pending_content = false;
    for c in text.chars() {
        if matches!(c, '.' | '!' | '?') {
            if !in_terminator && pending_content {
                count += 1;
                pending_content = false;
            }
            in_terminator = true;
        } else {
            in_terminator = false;
            if c.is_alphanumeric() {
                pending_content = true;
            }
        }
    }
    if pending_content {
        count += 1;
    }
    count
}

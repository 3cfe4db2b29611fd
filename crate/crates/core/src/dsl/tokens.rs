// SPDX-License-Identifier: Apache-2.0

/// Counts tokens with a simple word/punctuation rule:
///
/// * every maximal run of ASCII letters, digits and `_` is one token,
/// * every other non-whitespace character is one token on its own,
/// * non-empty input gets one extra end-of-text token.
///
/// Only meaningful for relative comparisons (pseudocode vs. JSON).
pub fn token_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_word = false;
    for c in text.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            if !in_word {
                count += 1;
                in_word = true;
            }
        } else {
            in_word = false;
            if !c.is_whitespace() {
                count += 1;
            }
        }
    }
    if count > 0 {
        count += 1;
    }
    count
}

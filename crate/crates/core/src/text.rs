//! Label normalisation shared by linking, fuzzy matching and evaluation.

use alloc::string::String;

/// Lowercases, trims, and collapses internal whitespace runs to one space.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Equality under [`normalize`].
pub fn loosely_equal(a: &str, b: &str) -> bool {
    normalize(a) == normalize(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapses_whitespace_and_case() {
        assert_eq!(normalize("  Kanye \t  WEST "), "kanye west");
        assert_eq!(normalize(""), "");
        assert!(loosely_equal("Yeezy ", "yeezy"));
    }
}

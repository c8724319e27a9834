//! Label and text normalization shared by the corpus, tagger and baselines.

/// Normalizes a tag label or question: lowercase, punctuation removed
/// (underscores kept), surrounding whitespace trimmed and internal runs of
/// whitespace collapsed to a single space.
pub fn normalize_label(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for ch in text.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if ch.is_alphanumeric() || ch == '_' {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.extend(ch.to_lowercase());
        }
    }
    out
}

/// Tokens of the normalized form of `text`.
pub fn label_tokens(text: &str) -> Vec<String> {
    normalize_label(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

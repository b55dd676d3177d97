//! Suffix-rule lemmatizer backed by an exceptions table.

use std::collections::HashMap;
use std::sync::OnceLock;

const EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.txt");

fn exceptions() -> &'static HashMap<&'static str, &'static str> {
    static TABLE: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    TABLE.get_or_init(|| {
        data_lines(EXCEPTIONS)
            .filter_map(|line| {
                let mut it = line.split_whitespace();
                Some((it.next()?, it.next()?))
            })
            .collect()
    })
}

pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// The bundled exceptions table as `(surface, lemma)` pairs.
pub fn exception_table() -> impl Iterator<Item = (&'static str, &'static str)> {
    exceptions().iter().map(|(k, v)| (*k, *v))
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(|c| is_vowel(c) || c == b'y')
}

/// Restores the stem of an inflected form: undoubles a final consonant
/// (`runn` -> `run`), maps a trailing `i` to `y`, and re-adds a silent `e` to
/// short consonant-vowel-consonant stems (`hop` -> `hope`).
fn repair_stem(stem: &str, doubled_ok: bool) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2
        && b[n - 1] == b[n - 2]
        && !is_vowel(b[n - 1])
        && !matches!(b[n - 1], b'l' | b's' | b'z')
    {
        return stem[..n - 1].to_string();
    }
    if doubled_ok && n >= 2 && b[n - 1] == b'i' {
        return format!("{}y", &stem[..n - 1]);
    }
    if (2..=3).contains(&n) {
        let last = b[n - 1];
        if !is_vowel(last)
            && !matches!(last, b'w' | b'x' | b'y')
            && is_vowel(b[n - 2])
            && (n == 2 || !is_vowel(b[n - 3]))
        {
            return format!("{stem}e");
        }
    }
    stem.to_string()
}

fn strip_plural(w: &str) -> Option<String> {
    if w.len() < 4 || !w.is_ascii() || !w.ends_with('s') {
        return None;
    }
    if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
        return None;
    }
    if let Some(stem) = w.strip_suffix("ies") {
        if stem.len() >= 2 {
            return Some(format!("{stem}y"));
        }
    }
    for tail in ["sses", "xes", "ches", "shes", "zes"] {
        if w.ends_with(tail) {
            return Some(w[..w.len() - 2].to_string());
        }
    }
    Some(w[..w.len() - 1].to_string())
}

fn strip_inflection(w: &str) -> Option<String> {
    if !w.is_ascii() {
        return None;
    }
    if let Some(stem) = w.strip_suffix("ing") {
        if stem.len() >= 2 && has_vowel(stem) {
            return Some(repair_stem(stem, false));
        }
    }
    if let Some(stem) = w.strip_suffix("ed") {
        if stem.len() >= 2 && has_vowel(stem) {
            return Some(repair_stem(stem, true));
        }
    }
    for suffix in ["est", "er"] {
        if let Some(stem) = w.strip_suffix(suffix) {
            if w.len() >= 5 && stem.len() >= 3 && has_vowel(stem) {
                return Some(repair_stem(stem, true));
            }
        }
    }
    None
}

fn lemmatize_once(w: &str) -> String {
    if let Some(l) = exceptions().get(w) {
        return (*l).to_string();
    }
    let base = strip_plural(w).unwrap_or_else(|| w.to_string());
    if let Some(l) = exceptions().get(base.as_str()) {
        return (*l).to_string();
    }
    strip_inflection(&base).unwrap_or(base)
}

/// Maps a lowercase token to its lemma. Lemmas are fixed points:
/// `lemmatize(&lemmatize(w)) == lemmatize(w)`.
pub fn lemmatize(word: &str) -> String {
    let mut current = word.to_string();
    for _ in 0..8 {
        let next = lemmatize_once(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

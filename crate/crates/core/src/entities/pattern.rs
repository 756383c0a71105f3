//! Token pattern grammar over cooking directions.

use std::collections::HashSet;
use std::path::Path;

use super::lexer::{lex, sentences, Token};
use super::{Category, Entity, EntitySet};
use crate::error::{Error, Result};

pub const DEFAULT_PROCESS_VERBS: [&str; 18] = [
    "Bake",
    "Mix",
    "Stir",
    "Melt",
    "Dissolve",
    "Freeze",
    "Pour",
    "Cut",
    "Cook",
    "Add",
    "Spray",
    "Preheat",
    "Refrigerate",
    "Boil",
    "Beat",
    "Heat",
    "Press",
    "Fill",
];

const DURATION_UNITS: [&str; 6] = ["second", "seconds", "minute", "minutes", "hour", "hours"];
const DEGREE_WORDS: [&str; 2] = ["degrees", "degree"];
const SCALE_WORDS: [&str; 6] = ["F", "C", "f", "c", "Fahrenheit", "Celsius"];

/// Pattern extractor configured with a process-verb lexicon.
///
/// Per sentence it emits:
/// - temperatures: a number carrying a degree mark, or a number followed by
///   "degrees"; a directly preceding lexicon verb is folded into the span
///   ("bake 450°");
/// - durations: a number or "N to M" range followed by a second/minute/hour
///   unit, or "overnight", with the same verb folding ("Bake 40 minutes");
/// - pan sizes: `NxM` or `N-inch` tokens;
/// - brand or equipment names: runs of capitalized words after the first
///   word of the sentence ("Cool Whip", "Tupperware");
/// - process verbs: a capitalized sentence-initial lexicon verb that was not
///   folded into a temperature or duration, emitted when the verb is the
///   whole sentence or the sentence names a pan size, brand or equipment.
#[derive(Debug, Clone)]
pub struct PatternExtractor {
    verbs: HashSet<String>,
}

impl Default for PatternExtractor {
    fn default() -> Self {
        PatternExtractor::with_verbs(DEFAULT_PROCESS_VERBS)
    }
}

struct Found {
    first: usize,
    last: usize,
    category: Category,
}

impl PatternExtractor {
    pub fn with_verbs<I, S>(verbs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        PatternExtractor {
            verbs: verbs
                .into_iter()
                .map(|v| v.as_ref().trim().to_lowercase())
                .filter(|v| !v.is_empty())
                .collect(),
        }
    }

    /// Loads a lexicon file with one verb per line. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_lexicon_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let verbs: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        if verbs.is_empty() {
            return Err(Error::validation(format!("verb lexicon {} is empty", path.display())));
        }
        Ok(PatternExtractor::with_verbs(verbs))
    }

    pub fn is_verb(&self, word: &str) -> bool {
        self.verbs.contains(&word.to_lowercase())
    }

    pub fn extract(&self, text: &str) -> EntitySet {
        let tokens = lex(text);
        let mut out = EntitySet::new();
        for sentence in sentences(&tokens) {
            for f in self.scan_sentence(sentence) {
                let surface = &text[sentence[f.first].start..sentence[f.last].end];
                if let Some(e) = Entity::new(surface, f.category) {
                    out.insert(e);
                }
            }
        }
        out
    }

    fn scan_sentence(&self, toks: &[Token<'_>]) -> Vec<Found> {
        let n = toks.len();
        let mut claimed = vec![false; n];
        let mut found: Vec<Found> = Vec::new();

        let mut i = 0;
        while i < n {
            let hit = match_temperature(toks, i)
                .map(|end| (end, Category::Temperature))
                .or_else(|| match_duration(toks, i).map(|end| (end, Category::Duration)));
            if let Some((end, category)) = hit {
                let mut first = i;
                if i > 0 && toks[i].joined && !claimed[i - 1] && self.is_verb(toks[i - 1].text) {
                    first = i - 1;
                }
                claimed[first..=end].iter_mut().for_each(|c| *c = true);
                found.push(Found {
                    first,
                    last: end,
                    category,
                });
                i = end + 1;
                continue;
            }
            if is_size(toks[i].text) {
                claimed[i] = true;
                found.push(Found {
                    first: i,
                    last: i,
                    category: Category::Equipment,
                });
            }
            i += 1;
        }

        let mut i = 1;
        while i < n {
            if claimed[i] || !is_name_word(toks[i].text) {
                i += 1;
                continue;
            }
            let first = i;
            while i + 1 < n && toks[i + 1].joined && !claimed[i + 1] && is_name_word(toks[i + 1].text) {
                i += 1;
            }
            claimed[first..=i].iter_mut().for_each(|c| *c = true);
            found.push(Found {
                first,
                last: i,
                category: Category::Equipment,
            });
            i += 1;
        }

        if n > 0 && !claimed[0] && starts_upper(toks[0].text) && self.is_verb(toks[0].text) {
            let anchored = n == 1 || found.iter().any(|f| f.category == Category::Equipment);
            if anchored {
                found.push(Found {
                    first: 0,
                    last: 0,
                    category: Category::Process,
                });
            }
        }

        found.sort_by_key(|f| f.first);
        found
    }
}

/// Runs the pattern grammar with the default verb lexicon.
pub fn extract_pattern(direction: &str) -> EntitySet {
    PatternExtractor::default().extract(direction)
}

fn starts_upper(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

/// Candidate brand/equipment word: capitalized, alphabetic start, more than
/// one character, and not the pronoun "I".
fn is_name_word(word: &str) -> bool {
    let mut chars = word.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    first.is_uppercase() && first.is_alphabetic() && chars.next().is_some()
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// Plain number: `12`, `1/2`, `1.5`, or a hyphenated range `10-12`.
fn is_number(word: &str) -> bool {
    for sep in ['/', '.', '-'] {
        if let Some((a, b)) = word.split_once(sep) {
            return is_digits(a) && is_digits(b);
        }
    }
    is_digits(word)
}

/// Strips a trailing degree mark (glyph or escape) and optional scale letter.
fn strip_degree(word: &str) -> Option<&str> {
    let w = word
        .strip_suffix('F')
        .or_else(|| word.strip_suffix('C'))
        .unwrap_or(word);
    for mark in ["\\\\u00b0", "\\u00b0", "°"] {
        if let Some(rest) = w.strip_suffix(mark) {
            return Some(rest);
        }
    }
    None
}

fn match_temperature(toks: &[Token<'_>], i: usize) -> Option<usize> {
    let word = toks[i].text;
    if let Some(num) = strip_degree(word) {
        if is_number(num) {
            return Some(i);
        }
        if num.is_empty() {
            return None;
        }
    }
    if !is_number(word) {
        return None;
    }
    let next = toks.get(i + 1).filter(|t| t.joined)?;
    if strip_degree(next.text).is_some_and(str::is_empty) {
        return Some(i + 1);
    }
    if DEGREE_WORDS.contains(&next.text.to_lowercase().as_str()) {
        if let Some(scale) = toks.get(i + 2).filter(|t| t.joined) {
            if SCALE_WORDS.contains(&scale.text) {
                return Some(i + 2);
            }
        }
        return Some(i + 1);
    }
    None
}

fn match_duration(toks: &[Token<'_>], i: usize) -> Option<usize> {
    if toks[i].text.eq_ignore_ascii_case("overnight") {
        return Some(i);
    }
    if !is_number(toks[i].text) {
        return None;
    }
    let mut j = i;
    if let (Some(to), Some(upper)) = (toks.get(i + 1), toks.get(i + 2)) {
        if to.joined && upper.joined && to.text.eq_ignore_ascii_case("to") && is_number(upper.text) {
            j = i + 2;
        }
    }
    let unit = toks.get(j + 1).filter(|t| t.joined)?;
    DURATION_UNITS
        .contains(&unit.text.to_lowercase().as_str())
        .then_some(j + 1)
}

/// `9x13` or `13-inch`.
fn is_size(word: &str) -> bool {
    let lower = word.to_ascii_lowercase();
    if let Some(n) = lower.strip_suffix("-inch") {
        return is_digits(n);
    }
    if let Some((a, b)) = lower.split_once('x') {
        return is_digits(a) && is_digits(b);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE2: &str = "Put flour in bowl first. Then sugar then yeast. Next add water 1 egg beaten and oil. Mix together with wooden spoon. Spray muffin pan with Pam. Fill 1/2 full. bake 450\\u00b0 for 10 to 12 minutes. Pour rest of mixture in Tupperware container and refrigerate. Stir well each time you use. No rising necessary.";

    fn listed(set: &EntitySet) -> Vec<(String, Category)> {
        set.iter().map(|e| (e.surface.clone(), e.category)).collect()
    }

    #[test]
    fn table2_entities() {
        let set = extract_pattern(TABLE2);
        let got = listed(&set);
        assert_eq!(
            got,
            vec![
                ("Spray".to_string(), Category::Process),
                ("Pam".to_string(), Category::Equipment),
                ("bake 450\\u00b0".to_string(), Category::Temperature),
                ("10 to 12 minutes".to_string(), Category::Duration),
                ("Pour".to_string(), Category::Process),
                ("Tupperware".to_string(), Category::Equipment),
            ]
        );
    }

    #[test]
    fn preheat_sentence_keeps_temperature() {
        let set = extract_pattern("Preheat oven to 350 degrees.");
        assert_eq!(set.get("350 degrees").unwrap().category, Category::Temperature);
    }

    #[test]
    fn folded_verbs_and_bare_verbs() {
        let set = extract_pattern("Bake 40 minutes. Eat immediately. Freeze.");
        assert_eq!(
            listed(&set),
            vec![
                ("Bake 40 minutes".to_string(), Category::Duration),
                ("Freeze".to_string(), Category::Process),
            ]
        );
    }

    #[test]
    fn sizes() {
        let set = extract_pattern("Press mixture evenly in ungreased 9 x 13-inch pan. Melt butter in a 9x13 pan.");
        let keys: Vec<&str> = set.keys().collect();
        assert_eq!(keys, vec!["press", "13inch", "melt", "9x13"]);
    }

    #[test]
    fn brand_runs() {
        let set = extract_pattern("Gently stir in Cool Whip. Refrigerate 3 hours or overnight.");
        assert_eq!(
            listed(&set),
            vec![
                ("Cool Whip".to_string(), Category::Equipment),
                ("Refrigerate 3 hours".to_string(), Category::Duration),
                ("overnight".to_string(), Category::Duration),
            ]
        );
    }

    #[test]
    fn degree_variants() {
        for (text, want) in [
            ("Heat oven to 350\\u00b0.", "350°"),
            ("Bake at 375\\\\u00b0 for 40 minutes.", "375°"),
            ("Bake at 400°F until done.", "400°F"),
            ("Bake at 325 ° today.", "325 °"),
            ("Roast at 425 degrees F.", "425 degrees F"),
        ] {
            let set = extract_pattern(text);
            assert!(set.contains_key(want), "{text}: {:?}", set.keys().collect::<Vec<_>>());
        }
    }

    #[test]
    fn empty_text() {
        assert!(extract_pattern("").is_empty());
        assert!(extract_pattern("   ...  ").is_empty());
    }

    #[test]
    fn custom_lexicon() {
        let ex = PatternExtractor::with_verbs(["Whisk"]);
        let set = ex.extract("Whisk.");
        assert!(set.contains_key("whisk"));
        assert!(ex.extract("Freeze.").is_empty());
    }
}

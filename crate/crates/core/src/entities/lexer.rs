//! Span-preserving word lexer shared by both extractors.

use super::DEGREE_ESCAPES;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
    pub sentence: usize,
    /// Index within the sentence.
    pub pos: usize,
    /// Only whitespace separates this token from the previous one in the
    /// same sentence.
    pub joined: bool,
}

fn degree_escape_len(rest: &str) -> Option<usize> {
    DEGREE_ESCAPES
        .iter()
        .find(|esc| rest.starts_with(**esc))
        .map(|esc| esc.len())
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '°'
}

/// Splits text into word tokens with byte spans and sentence positions.
///
/// Word characters are letters, digits and the degree sign (or its escaped
/// form). `-`, `/` and `'` stay inside a word when followed by a word
/// character; `.` and `,` only between two digits. A `.`, `!` or `?` that is
/// not inside a word ends the sentence.
pub(crate) fn lex<'a>(text: &'a str) -> Vec<Token<'a>> {
    let mut tokens: Vec<Token<'a>> = Vec::new();
    let mut sentence = 0usize;
    let mut pos = 0usize;
    let mut start: Option<usize> = None;
    let mut gap_clean = true;
    let mut prev_char: Option<char> = None;

    let close = |tokens: &mut Vec<Token<'a>>,
                 start: &mut Option<usize>,
                 end: usize,
                 sentence: usize,
                 pos: &mut usize,
                 gap_clean: &mut bool| {
        if let Some(s) = start.take() {
            tokens.push(Token {
                text: &text[s..end],
                start: s,
                end,
                sentence,
                pos: *pos,
                joined: *pos > 0 && *gap_clean,
            });
            *pos += 1;
            *gap_clean = true;
        }
    };

    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        if let Some(len) = degree_escape_len(rest) {
            if start.is_none() {
                start = Some(i);
            }
            i += len;
            prev_char = Some('°');
            continue;
        }
        let c = rest.chars().next().expect("non-empty");
        let clen = c.len_utf8();
        let next = text[i + clen..].chars().next();
        if is_word_char(c) {
            if start.is_none() {
                start = Some(i);
            }
            i += clen;
            prev_char = Some(c);
            continue;
        }
        if start.is_some() {
            let internal = match c {
                '-' | '/' | '\'' => next.is_some_and(is_word_char),
                '.' | ',' => prev_char.is_some_and(|p| p.is_ascii_digit()) && next.is_some_and(|n| n.is_ascii_digit()),
                _ => false,
            };
            if internal {
                i += clen;
                prev_char = Some(c);
                continue;
            }
        }
        close(&mut tokens, &mut start, i, sentence, &mut pos, &mut gap_clean);
        if matches!(c, '.' | '!' | '?') && next.is_none_or(|n| n.is_whitespace() || matches!(n, '"' | '\'' | ')')) {
            sentence += 1;
            pos = 0;
            gap_clean = true;
        } else if !c.is_whitespace() {
            gap_clean = false;
        }
        prev_char = Some(c);
        i += clen;
    }
    close(&mut tokens, &mut start, text.len(), sentence, &mut pos, &mut gap_clean);
    tokens
}

/// Groups tokens by sentence, preserving order.
pub(crate) fn sentences<'t, 'a>(tokens: &'t [Token<'a>]) -> Vec<&'t [Token<'a>]> {
    let mut out = Vec::new();
    let mut begin = 0;
    for i in 1..=tokens.len() {
        if i == tokens.len() || tokens[i].sentence != tokens[begin].sentence {
            if begin < i {
                out.push(&tokens[begin..i]);
            }
            begin = i;
        }
    }
    out
}

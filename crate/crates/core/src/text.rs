//! Descriptive query statistics: lengths, term counts, lexical diversity,
//! readability and a named-entity count.

use std::collections::HashSet;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("empty query")]
    EmptyQuery,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedQuery {
    pub raw: String,
    /// Lowercased terms with surrounding punctuation removed.
    pub tokens: Vec<String>,
    // Same terms with their original casing, for the entity heuristic.
    surface: Vec<String>,
    pub sentence_count: usize,
    pub syllable_counts: Vec<usize>,
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '‘' | '’'
                | '‚'
                | '“'
                | '”'
                | '„'
                | '«'
                | '»'
                | '…'
                | '–'
                | '—'
                | '¿'
                | '¡'
                | '·'
        )
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Vowel-group syllable estimate: one syllable per run of `aeiouy`, minus a
/// terminal silent `e` when more than one group was found, never below 1.
pub fn count_syllables(word: &str) -> usize {
    let lower = word.to_lowercase();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev_vowel = false;
    for c in lower.chars() {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    if groups > 1 && lower.ends_with('e') {
        groups -= 1;
    }
    groups.max(1)
}

pub fn tokenize(raw: &str) -> Result<TokenizedQuery, TextError> {
    if raw.trim().is_empty() {
        return Err(TextError::EmptyQuery);
    }
    let surface: Vec<String> = raw
        .split_whitespace()
        .map(|t| t.trim_matches(is_punct))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect();
    if surface.is_empty() {
        return Err(TextError::EmptyQuery);
    }
    let tokens: Vec<String> = surface.iter().map(|t| t.to_lowercase()).collect();
    let syllable_counts = tokens.iter().map(|t| count_syllables(t)).collect();
    let sentence_count = raw.chars().filter(|&c| is_terminator(c)).count().max(1);
    Ok(TokenizedQuery {
        raw: raw.to_owned(),
        tokens,
        surface,
        sentence_count,
        syllable_counts,
    })
}

impl TokenizedQuery {
    pub fn term_set(&self) -> HashSet<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }
}

pub fn query_length_chars(q: &TokenizedQuery) -> usize {
    q.raw.chars().count()
}

pub fn query_length_terms(q: &TokenizedQuery) -> usize {
    q.tokens.len()
}

pub fn unique_term_count(q: &TokenizedQuery) -> usize {
    q.term_set().len()
}

pub fn type_token_ratio<T: Scalar>(q: &TokenizedQuery) -> T {
    T::of_usize(unique_term_count(q)) / T::of_usize(query_length_terms(q))
}

/// Flesch-Kincaid grade level: `0.39·(W/S) + 11.8·(Syll/W) − 15.59`.
pub fn flesch_kincaid_grade<T: Scalar>(q: &TokenizedQuery) -> T {
    let words = T::of_usize(q.tokens.len());
    let sentences = T::of_usize(q.sentence_count);
    let syllables = T::of_usize(q.syllable_counts.iter().sum());
    flesch_kincaid_from_counts(words, sentences, syllables)
}

pub fn flesch_kincaid_from_counts<T: Scalar>(words: T, sentences: T, syllables: T) -> T {
    T::of(0.39) * (words / sentences) + T::of(11.8) * (syllables / words) - T::of(15.59)
}

/// Number of named entities in the query.
///
/// Supplied annotations take precedence. Otherwise maximal runs of
/// capitalized tokens are counted; a capitalized sentence-initial token on
/// its own does not count.
pub fn named_entity_count(q: &TokenizedQuery, annotations: Option<&[String]>) -> usize {
    if let Some(entities) = annotations {
        return entities.len();
    }

    // Recover sentence boundaries from the whitespace-split raw tokens.
    let mut sentence_initial = Vec::with_capacity(q.surface.len());
    let mut at_start = true;
    for word in q.raw.split_whitespace() {
        if !word.trim_matches(is_punct).is_empty() {
            sentence_initial.push(at_start);
            at_start = false;
        }
        if word
            .trim_end_matches(['"', '\'', ')'])
            .ends_with(is_terminator)
        {
            at_start = true;
        }
    }

    let capitalized = |t: &str| t.chars().next().is_some_and(char::is_uppercase);
    let mut count = 0;
    let mut i = 0;
    while i < q.surface.len() {
        if !capitalized(&q.surface[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < q.surface.len()
            && capitalized(&q.surface[i])
            && (i == start || !sentence_initial[i])
        {
            i += 1;
        }
        let len = i - start;
        if !(sentence_initial[start] && len == 1) {
            count += 1;
        }
    }
    count
}

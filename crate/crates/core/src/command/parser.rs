use std::collections::BTreeMap;

use crate::chart::{AttributeKind, AttributeSchema, ChartSpec, Dataset};

use super::ast::{CommandAst, CompareOp, Predicate};
use super::CommandError;

/// Comparison phrases and the operator each one means. Exhaustive.
pub const COMPARISON_PHRASES: &[(&[&str], CompareOp)] = &[
    (&["larger", "than"], CompareOp::Gt),
    (&["greater", "than"], CompareOp::Gt),
    (&["above"], CompareOp::Gt),
    (&["over"], CompareOp::Gt),
    (&["smaller", "than"], CompareOp::Lt),
    (&["less", "than"], CompareOp::Lt),
    (&["below"], CompareOp::Lt),
    (&["under"], CompareOp::Lt),
    (&["equal", "to"], CompareOp::Eq),
    (&["at", "least"], CompareOp::Ge),
    (&["at", "most"], CompareOp::Le),
];

const CURRENCY_SYMBOLS: [char; 3] = ['$', '€', '£'];

/// Everything the parser needs to bind words to the dataset.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    pub schema: Vec<AttributeSchema>,
    /// Attribute name -> alternative words.
    pub synonyms: BTreeMap<String, Vec<String>>,
    /// Categorical attribute name -> distinct values, first-appearance order.
    pub categories: BTreeMap<String, Vec<String>>,
}

impl Vocabulary {
    pub fn new(
        schema: Vec<AttributeSchema>,
        synonyms: BTreeMap<String, Vec<String>>,
        dataset: Option<&Dataset>,
    ) -> Self {
        let categories = match dataset {
            Some(ds) => schema
                .iter()
                .filter(|a| a.kind == AttributeKind::Categorical)
                .map(|a| (a.name.clone(), ds.categories(&a.name)))
                .collect(),
            None => BTreeMap::new(),
        };
        Self {
            schema,
            synonyms,
            categories,
        }
    }

    pub fn from_chart(spec: &ChartSpec, dataset: &Dataset) -> Self {
        Self::new(spec.schema.clone(), spec.synonyms.clone(), Some(dataset))
    }

    fn attribute(&self, name: &str) -> Option<&AttributeSchema> {
        self.schema.iter().find(|a| a.name == name)
    }
}

/// Strips currency symbols and thousands separators, then applies an optional
/// `k` (thousand) or `m` (million) suffix.
pub fn parse_quantity(text: &str) -> Result<f64, CommandError> {
    let cleaned: String = text
        .trim()
        .chars()
        .filter(|c| !CURRENCY_SYMBOLS.contains(c) && *c != ',')
        .collect();
    let (digits, multiplier) = match cleaned.chars().last() {
        Some('k' | 'K') => (&cleaned[..cleaned.len() - 1], 1e3),
        Some('m' | 'M') => (&cleaned[..cleaned.len() - 1], 1e6),
        _ => (cleaned.as_str(), 1.0),
    };
    let looks_numeric = !digits.is_empty()
        && digits
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+'))
        && digits.chars().any(|c| c.is_ascii_digit());
    if !looks_numeric {
        return Err(CommandError::NotANumber(text.to_string()));
    }
    digits
        .parse::<f64>()
        .ok()
        .map(|v| v * multiplier)
        .filter(|v| v.is_finite())
        .ok_or_else(|| CommandError::NotANumber(text.to_string()))
}

fn normalize_word(s: &str) -> String {
    s.split(|c: char| c.is_whitespace() || c == '_')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Binds a word to a schema attribute: case-insensitive name match first,
/// then declared synonyms. Underscores and spaces are interchangeable.
pub fn resolve_attribute(
    token: &str,
    schema: &[AttributeSchema],
    synonyms: &BTreeMap<String, Vec<String>>,
) -> Result<String, CommandError> {
    let wanted = normalize_word(token);
    if let Some(attr) = schema.iter().find(|a| normalize_word(&a.name) == wanted) {
        return Ok(attr.name.clone());
    }
    let hits: Vec<&String> = synonyms
        .iter()
        .filter(|(_, words)| words.iter().any(|w| normalize_word(w) == wanted))
        .map(|(attr, _)| attr)
        .collect();
    match hits.as_slice() {
        [] => Err(CommandError::UnknownAttribute(token.to_string())),
        [one] => Ok((*one).clone()),
        many => Err(CommandError::AmbiguousAttribute {
            token: token.to_string(),
            candidates: many.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

struct Tokens<'a> {
    raw: Vec<&'a str>,
    lower: Vec<String>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let trimmed = text.trim().trim_end_matches(['.', '!', '?']).trim();
        let raw: Vec<&str> = trimmed.split_whitespace().collect();
        let lower = raw.iter().map(|t| t.to_lowercase()).collect();
        Self { raw, lower }
    }

    fn is(&self, i: usize, word: &str) -> bool {
        self.lower.get(i).is_some_and(|w| w == word)
    }

    fn prefix(&self, n: usize) -> String {
        self.raw[..n.min(self.raw.len())].join(" ")
    }

    fn joined(&self, from: usize, to: usize) -> String {
        self.raw[from..to].join(" ")
    }

    /// Comparison phrase starting at `i`, with its length in tokens.
    fn comparison_at(&self, i: usize) -> Option<(CompareOp, usize)> {
        COMPARISON_PHRASES.iter().find_map(|(words, op)| {
            words
                .iter()
                .enumerate()
                .all(|(k, w)| self.is(i + k, w))
                .then_some((*op, words.len()))
        })
    }
}

fn unrecognized(t: &Tokens, matched: usize, rule: &'static str) -> CommandError {
    CommandError::Unrecognized {
        matched: t.prefix(matched),
        rule,
        rest: t.raw[matched.min(t.raw.len())..].join(" "),
    }
}

/// Parses one command. Matching is case-insensitive; trailing sentence
/// punctuation is ignored.
pub fn parse_command(text: &str, vocab: &Vocabulary) -> Result<CommandAst, CommandError> {
    let t = Tokens::new(text);
    let n = t.raw.len();
    if n == 0 {
        return Err(unrecognized(&t, 0, "command"));
    }
    match t.lower[0].as_str() {
        "reset" if n == 1 => Ok(CommandAst::Reset),
        "reset" => Err(unrecognized(&t, 1, "clear")),
        "clear" => match (n, t.lower.get(1).map(String::as_str)) {
            (2, Some("filters")) => Ok(CommandAst::ClearFilters),
            (2, Some("highlights")) => Ok(CommandAst::ClearHighlights),
            _ => Err(unrecognized(&t, 1, "clear")),
        },
        "hide" if n == 2 && t.is(1, "details") => Ok(CommandAst::DetailsOff),
        "hide" => Err(unrecognized(&t, 1, "toggle")),
        "show" if n == 2 && t.is(1, "details") => Ok(CommandAst::DetailsOn),
        "show" if t.is(1, "only") => {
            let predicate = parse_subject_predicate(&t, 2, vocab)?;
            Ok(CommandAst::ShowOnly { predicate })
        }
        "show" => Err(unrecognized(&t, 1, "toggle")),
        "filter" if t.is(1, "out") => {
            let predicate = parse_subject_predicate(&t, 2, vocab)?;
            Ok(CommandAst::FilterOut { predicate })
        }
        "filter" => Err(unrecognized(&t, 1, "filter")),
        "highlight" => {
            let predicate = parse_subject_predicate(&t, 1, vocab)?;
            Ok(CommandAst::Highlight { predicate })
        }
        _ => Err(unrecognized(&t, 0, "command")),
    }
}

/// `[noun] pred` starting at token `start`. The subject noun ("countries",
/// "cars") is optional and ignored.
fn parse_subject_predicate(
    t: &Tokens,
    start: usize,
    vocab: &Vocabulary,
) -> Result<Predicate, CommandError> {
    let direct = parse_predicate(t, start, vocab);
    if direct.is_ok() || t.raw.len() < start + 2 {
        return direct;
    }
    let with_noun = parse_predicate(t, start + 1, vocab);
    if with_noun.is_ok() {
        return with_noun;
    }
    // Report the reading that got furthest: if the first word is itself a
    // predicate keyword or an attribute, it was not a noun.
    let first = &t.lower[start];
    let keyword =
        matches!(first.as_str(), "with" | "where" | "in") || t.comparison_at(start).is_some();
    let attribute = resolve_attribute(first, &vocab.schema, &vocab.synonyms).is_ok();
    if keyword || attribute {
        direct
    } else {
        with_noun
    }
}

fn parse_predicate(
    t: &Tokens,
    start: usize,
    vocab: &Vocabulary,
) -> Result<Predicate, CommandError> {
    let n = t.raw.len();
    if start >= n {
        return Err(unrecognized(t, start, "pred"));
    }
    if t.is(start, "in") {
        if start + 1 >= n {
            return Err(unrecognized(t, start + 1, "value"));
        }
        let value = t.joined(start + 1, n);
        let (attribute, category) = lookup_category(&value, vocab)?;
        return Ok(Predicate::CategoryIs {
            attribute,
            category,
        });
    }
    let attr_start = if t.is(start, "with") || t.is(start, "where") {
        start + 1
    } else {
        start
    };
    let Some((cmp_at, op, cmp_len)) =
        (attr_start..n).find_map(|i| t.comparison_at(i).map(|(op, len)| (i, op, len)))
    else {
        return Err(unrecognized(t, start, "pred"));
    };
    let value_start = cmp_at + cmp_len;
    if value_start >= n {
        return Err(unrecognized(t, value_start, "qty"));
    }
    if cmp_at == attr_start {
        if attr_start != start {
            return Err(unrecognized(t, attr_start, "attr"));
        }
        // qty-only: the attribute is implied by a monetary amount.
        if value_start + 1 != n {
            return Err(unrecognized(t, value_start + 1, "qty"));
        }
        let raw_value = t.raw[value_start];
        let value = parse_quantity(raw_value)?;
        if !raw_value.contains(CURRENCY_SYMBOLS) {
            return Err(CommandError::MissingAttribute(raw_value.to_string()));
        }
        let attribute = implicit_monetary_attribute(vocab)?;
        return Ok(Predicate::Compare {
            attribute,
            op,
            value,
        });
    }
    let attr_phrase = t.joined(attr_start, cmp_at);
    let attribute = resolve_attribute(&attr_phrase, &vocab.schema, &vocab.synonyms)?;
    let kind = vocab
        .attribute(&attribute)
        .map(|a| a.kind)
        .unwrap_or(AttributeKind::Quantitative);
    match kind {
        AttributeKind::Quantitative => {
            if value_start + 1 != n {
                return Err(unrecognized(t, value_start + 1, "qty"));
            }
            let value = parse_quantity(t.raw[value_start])?;
            Ok(Predicate::Compare {
                attribute,
                op,
                value,
            })
        }
        AttributeKind::Categorical => {
            if op != CompareOp::Eq {
                return Err(CommandError::KindMismatch {
                    attribute,
                    expected: AttributeKind::Quantitative,
                });
            }
            let wanted = t.joined(value_start, n);
            let category = vocab
                .categories
                .get(&attribute)
                .and_then(|values| {
                    values
                        .iter()
                        .find(|v| normalize_word(v) == normalize_word(&wanted))
                })
                .cloned()
                .ok_or(CommandError::UnknownCategory(wanted))?;
            Ok(Predicate::CategoryIs {
                attribute,
                category,
            })
        }
    }
}

/// "in <value>": the unique categorical attribute whose values contain it.
fn lookup_category(value: &str, vocab: &Vocabulary) -> Result<(String, String), CommandError> {
    let wanted = normalize_word(value);
    let hits: Vec<(&String, &String)> = vocab
        .categories
        .iter()
        .filter_map(|(attr, values)| {
            values
                .iter()
                .find(|v| normalize_word(v) == wanted)
                .map(|v| (attr, v))
        })
        .collect();
    match hits.as_slice() {
        [] => Err(CommandError::UnknownCategory(value.to_string())),
        [(attr, v)] => Ok(((*attr).clone(), (*v).clone())),
        many => Err(CommandError::AmbiguousCategory {
            value: value.to_string(),
            attributes: many.iter().map(|(a, _)| a.to_string()).collect(),
        }),
    }
}

fn implicit_monetary_attribute(vocab: &Vocabulary) -> Result<String, CommandError> {
    let candidates: Vec<&AttributeSchema> = vocab
        .schema
        .iter()
        .filter(|a| a.kind == AttributeKind::Quantitative && a.is_monetary())
        .collect();
    match candidates.as_slice() {
        [one] => Ok(one.name.clone()),
        other => Err(CommandError::AmbiguousImplicitAttribute {
            candidates: other.iter().map(|a| a.name.clone()).collect(),
        }),
    }
}

//! CHAT transcript parsing and language outcome measures.
//!
//! Only the parts of the format the measures need are modeled: header
//! lines, `*SPK:` main tiers with retracing/repetition markers and time
//! bullets, and the `%mor` dependent tier. Other dependent tiers are read
//! and discarded.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseMode {
    /// Structural problems are errors.
    Strict,
    /// Structural problems become warnings; parsing never fails.
    Tolerant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    /// `xxx`, `yyy`, `www`
    Unintelligible,
    /// `&-uh`, `&+fr` and other `&`-prefixed fillers and fragments
    Filler,
    /// `&=laughs`, `0word`
    Event,
    /// `(.)`, `(..)`, `(2.5)`
    Pause,
    /// terminators, commas, linkers
    Punctuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Retrace {
    /// `[/]`
    Repetition,
    /// `[//]`, `[///]`, `[/-]`
    Retracing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub retrace: Option<Retrace>,
    /// Other bracketed codes following the token, e.g. `[: cookie]`, `[*]`.
    pub annotations: Vec<String>,
}

impl Token {
    /// Counted by MLU/TTR: real words that were not retraced or repeated.
    pub fn is_analyzable(&self) -> bool {
        self.kind == TokenKind::Word && self.retrace.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorItem {
    /// Full tag, e.g. `det:art`.
    pub pos: String,
    pub lemma: String,
    pub morphemes: usize,
}

impl MorItem {
    /// Tag before any `:` subcategory.
    pub fn main_pos(&self) -> &str {
        self.pos.split(':').next().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: String,
    pub tokens: Vec<Token>,
    pub mor_items: Option<Vec<MorItem>>,
    pub time_span_ms: Option<(u64, u64)>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub headers: BTreeMap<String, String>,
    pub utterances: Vec<Utterance>,
    pub warnings: Vec<ParseWarning>,
}

const TIME_BULLET: char = '\u{15}';

struct Problems<'a> {
    mode: ParseMode,
    warnings: &'a mut Vec<ParseWarning>,
}

impl Problems<'_> {
    /// Strict: error. Tolerant: recorded warning.
    fn structural(&mut self, line: usize, message: String) -> Result<()> {
        match self.mode {
            ParseMode::Strict => Err(Error::Transcript { line, message }),
            ParseMode::Tolerant => {
                self.warnings.push(ParseWarning { line, message });
                Ok(())
            }
        }
    }

    fn warn(&mut self, line: usize, message: String) {
        self.warnings.push(ParseWarning { line, message });
    }
}

/// Logical lines: continuation lines (leading tab or space) are folded
/// into the line above. Returns (1-based line number, text).
fn logical_lines(text: &str) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            continue;
        }
        if raw.starts_with(['\t', ' ']) {
            if let Some(last) = out.last_mut() {
                last.1.push(' ');
                last.1.push_str(raw.trim());
                continue;
            }
        }
        out.push((i + 1, raw.to_string()));
    }
    out
}

/// Splits `*PAR:\tthe boy` or `%mor:\t...` into (code, body).
fn split_tier(line: &str) -> Option<(&str, &str)> {
    let colon = line.find(':')?;
    let code = &line[1..colon];
    if code.is_empty() || !code.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return None;
    }
    Some((code, line[colon + 1..].trim()))
}

fn extract_bullet(body: &str) -> (String, Option<(u64, u64)>) {
    let mut text = String::with_capacity(body.len());
    let mut span = None;
    let mut rest = body;
    while let Some(open) = rest.find(TIME_BULLET) {
        text.push_str(&rest[..open]);
        let after = &rest[open + TIME_BULLET.len_utf8()..];
        let Some(close) = after.find(TIME_BULLET) else {
            rest = after;
            break;
        };
        let inner = &after[..close];
        if span.is_none() {
            if let Some((a, b)) = inner.split_once('_') {
                if let (Ok(a), Ok(b)) = (a.trim().parse(), b.trim().parse()) {
                    span = Some((a, b));
                }
            }
        }
        rest = &after[close + TIME_BULLET.len_utf8()..];
    }
    text.push_str(rest);
    (text, span)
}

enum Piece {
    Word { text: String, opens: usize, closes: usize },
    Code(String),
}

fn scan_pieces(body: &str) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let chars: Vec<char> = body.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '[' {
            let start = i;
            while i < chars.len() && chars[i] != ']' {
                i += 1;
            }
            let end = i.min(chars.len());
            pieces.push(Piece::Code(chars[start + 1..end].iter().collect::<String>().trim().to_string()));
            i = end + 1;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '[' {
                i += 1;
            }
            let raw: String = chars[start..i].iter().collect();
            let opens = raw.chars().take_while(|&c| c == '<').count();
            let trimmed = raw.trim_start_matches('<');
            let closes = trimmed.chars().rev().take_while(|&c| c == '>').count();
            let text = trimmed.trim_end_matches('>').to_string();
            pieces.push(Piece::Word { text, opens, closes });
        }
    }
    pieces
}

fn classify(word: &str) -> TokenKind {
    const TERMINATORS: [&str; 3] = [".", "?", "!"];
    if TERMINATORS.contains(&word) || word == "," || word == "„" || word == "‡" || word.starts_with('+') {
        TokenKind::Punctuation
    } else if matches!(word, "xxx" | "yyy" | "www") || word.starts_with("xxx@") {
        TokenKind::Unintelligible
    } else if word.starts_with("&=") || word.starts_with('0') {
        TokenKind::Event
    } else if word.starts_with('&') {
        TokenKind::Filler
    } else if word.starts_with('(') && word.ends_with(')') && word[1..word.len() - 1].chars().all(|c| c == '.' || c.is_ascii_digit() || c == ':') {
        TokenKind::Pause
    } else {
        TokenKind::Word
    }
}

fn parse_main_tier(body: &str) -> (Vec<Token>, Option<(u64, u64)>) {
    let (text, span) = extract_bullet(body);
    let mut tokens: Vec<Token> = Vec::new();
    let mut open_groups: Vec<usize> = Vec::new();
    // start of the most recently closed <...> group, valid until the next word
    let mut closed_group: Option<usize> = None;
    for piece in scan_pieces(&text) {
        match piece {
            Piece::Word { text, opens, closes } => {
                for _ in 0..opens {
                    open_groups.push(tokens.len());
                }
                closed_group = None;
                if !text.is_empty() {
                    tokens.push(Token {
                        kind: classify(&text),
                        text,
                        retrace: None,
                        annotations: Vec::new(),
                    });
                }
                for _ in 0..closes {
                    closed_group = open_groups.pop();
                }
            }
            Piece::Code(code) => {
                let retrace = match code.as_str() {
                    "/" => Some(Retrace::Repetition),
                    "//" | "///" | "/-" | "/?" => Some(Retrace::Retracing),
                    _ => None,
                };
                match retrace {
                    Some(r) => {
                        let from = closed_group.unwrap_or(tokens.len().saturating_sub(1));
                        for t in tokens.iter_mut().skip(from) {
                            if t.kind != TokenKind::Punctuation {
                                t.retrace = Some(r);
                            }
                        }
                    }
                    None => {
                        if let Some(t) = tokens.last_mut() {
                            t.annotations.push(code);
                        }
                    }
                }
            }
        }
    }
    (tokens, span)
}

const MOR_PUNCTUATION_POS: [&str; 5] = ["cm", "beg", "end", "bq", "eq"];

fn parse_mor_item(item: &str) -> Option<MorItem> {
    let (pos, rest) = item.split_once('|')?;
    // strip prefixes like `un#adj`
    let pos = pos.rsplit('#').next().unwrap_or(pos);
    if MOR_PUNCTUATION_POS.contains(&pos.split(':').next().unwrap_or("")) {
        return None;
    }
    let lemma_end = rest.find(['-', '&', '~', '=']).unwrap_or(rest.len());
    let markers = rest.chars().filter(|c| matches!(c, '-' | '&' | '~')).count();
    Some(MorItem {
        pos: pos.to_string(),
        lemma: rest[..lemma_end].to_lowercase(),
        morphemes: 1 + markers,
    })
}

/// Morphological items of a `%mor` body; punctuation is dropped.
pub fn parse_mor_tier(body: &str) -> Vec<MorItem> {
    body.split_whitespace().filter_map(parse_mor_item).collect()
}

pub fn parse_chat(text: &str, mode: ParseMode) -> Result<Transcript> {
    let mut headers = BTreeMap::new();
    let mut utterances: Vec<Utterance> = Vec::new();
    let mut warnings = Vec::new();
    let mut problems = Problems {
        mode,
        warnings: &mut warnings,
    };
    let mut began = false;
    let mut ended = false;
    for (line_no, line) in logical_lines(text) {
        if ended {
            problems.structural(line_no, "content after @End".into())?;
            continue;
        }
        match line.chars().next() {
            Some('@') => {
                let (key, value) = match line.split_once(':') {
                    Some((k, v)) => (k[1..].trim().to_string(), v.trim().to_string()),
                    None => (line[1..].trim().to_string(), String::new()),
                };
                match key.as_str() {
                    "Begin" => began = true,
                    "End" => ended = true,
                    "UTF8" => {}
                    _ => {
                        if !began && key != "Font" && key != "Window" {
                            problems.structural(line_no, format!("@{key} before @Begin"))?;
                        }
                        headers.insert(key, value);
                    }
                }
            }
            Some('*') => {
                if !began {
                    problems.structural(line_no, "main tier before @Begin".into())?;
                }
                let Some((speaker, body)) = split_tier(&line) else {
                    problems.structural(line_no, format!("malformed main tier `{line}`"))?;
                    continue;
                };
                let (tokens, time_span_ms) = parse_main_tier(body);
                utterances.push(Utterance {
                    speaker: speaker.to_string(),
                    tokens,
                    mor_items: None,
                    time_span_ms,
                    line: line_no,
                });
            }
            Some('%') => {
                let Some((tier, body)) = split_tier(&line) else {
                    problems.structural(line_no, format!("malformed dependent tier `{line}`"))?;
                    continue;
                };
                let Some(utt) = utterances.last_mut() else {
                    problems.structural(line_no, format!("%{tier} tier with no preceding main tier; dropped"))?;
                    continue;
                };
                if tier == "mor" {
                    let items = parse_mor_tier(body);
                    let analyzable = utt.tokens.iter().filter(|t| t.is_analyzable()).count();
                    if items.len() != analyzable {
                        problems.warn(
                            line_no,
                            format!("%mor has {} items for {} analyzable words", items.len(), analyzable),
                        );
                    }
                    utt.mor_items = Some(items);
                }
            }
            _ => {
                problems.structural(line_no, format!("unknown tier prefix in `{line}`"))?;
            }
        }
    }
    if !began {
        problems.structural(1, "missing @Begin".into())?;
    }
    if !ended {
        problems.structural(text.lines().count().max(1), "missing @End".into())?;
    }
    Ok(Transcript {
        headers,
        utterances,
        warnings,
    })
}

/// The nine part-of-speech classes reported as percentages.
pub const POS_CLASSES: [&str; 9] = ["n", "v", "adj", "adv", "pro", "det", "prep", "conj", "int"];
const OPEN_CLASSES: [&str; 4] = ["n", "v", "adj", "adv"];

/// Maps a %mor tag to one of [`POS_CLASSES`], or `None` for "other".
pub fn pos_class(item: &MorItem) -> Option<&'static str> {
    let main = match item.main_pos() {
        "coord" => "conj",
        "co" => "int",
        other => other,
    };
    POS_CLASSES.iter().copied().find(|c| *c == main)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticMeasures {
    pub duration_s: f64,
    pub total_utterances: usize,
    /// `None` when no utterance of the speaker carries a %mor tier.
    pub mlu: Option<f64>,
    pub ttr: Option<f64>,
    /// `None` also when there are no closed-class items.
    pub open_closed_ratio: Option<f64>,
    /// Percentages in [`POS_CLASSES`] order.
    pub pos_pct: Option<[f64; 9]>,
    pub other_pct: Option<f64>,
    /// Repeated or retraced word tokens, excluded from MLU and TTR.
    pub disfluencies: usize,
}

pub const MEASURE_NAMES: [&str; 15] = [
    "duration_s",
    "total_utterances",
    "mlu",
    "ttr",
    "open_closed_ratio",
    "pos_n_pct",
    "pos_v_pct",
    "pos_adj_pct",
    "pos_adv_pct",
    "pos_pro_pct",
    "pos_det_pct",
    "pos_prep_pct",
    "pos_conj_pct",
    "pos_int_pct",
    "pos_other_pct",
];

impl LinguisticMeasures {
    /// Named vector in [`MEASURE_NAMES`] order; absent measures are `None`.
    pub fn to_named(&self) -> Vec<(&'static str, Option<f64>)> {
        let mut values = Vec::with_capacity(15);
        values.push(Some(self.duration_s));
        values.push(Some(self.total_utterances as f64));
        values.push(self.mlu);
        values.push(self.ttr);
        values.push(self.open_closed_ratio);
        for i in 0..9 {
            values.push(self.pos_pct.map(|p| p[i]));
        }
        values.push(self.other_pct);
        MEASURE_NAMES.iter().copied().zip(values).collect()
    }
}

pub fn linguistic_measures(t: &Transcript, speaker: &str) -> Result<LinguisticMeasures> {
    let utts: Vec<&Utterance> = t.utterances.iter().filter(|u| u.speaker == speaker).collect();
    if utts.is_empty() {
        return Err(Error::NoUtterances(speaker.to_string()));
    }
    let aligned: Vec<(u64, u64)> = utts.iter().filter_map(|u| u.time_span_ms).collect();
    let duration_s = match (aligned.first(), aligned.last()) {
        (Some(first), Some(last)) => last.1.saturating_sub(first.0) as f64 / 1000.0,
        _ => 0.0,
    };
    let disfluencies = utts
        .iter()
        .flat_map(|u| &u.tokens)
        .filter(|tok| tok.retrace.is_some() && tok.kind == TokenKind::Word)
        .count();

    let with_mor: Vec<&Vec<MorItem>> = utts.iter().filter_map(|u| u.mor_items.as_ref()).collect();
    let mut m = LinguisticMeasures {
        duration_s,
        total_utterances: utts.len(),
        mlu: None,
        ttr: None,
        open_closed_ratio: None,
        pos_pct: None,
        other_pct: None,
        disfluencies,
    };
    if with_mor.is_empty() {
        return Ok(m);
    }
    let items: Vec<&MorItem> = with_mor.iter().flat_map(|v| v.iter()).collect();
    let morphemes: usize = items.iter().map(|i| i.morphemes).sum();
    m.mlu = Some(morphemes as f64 / with_mor.len() as f64);
    if items.is_empty() {
        return Ok(m);
    }
    let distinct: BTreeSet<&str> = items.iter().map(|i| i.lemma.as_str()).collect();
    m.ttr = Some(distinct.len() as f64 / items.len() as f64);
    let mut counts = [0usize; 9];
    let mut other = 0usize;
    let mut open = 0usize;
    for item in &items {
        match pos_class(item) {
            Some(c) => {
                let idx = POS_CLASSES.iter().position(|p| *p == c).unwrap_or(0);
                counts[idx] += 1;
                if OPEN_CLASSES.contains(&c) {
                    open += 1;
                }
            }
            None => other += 1,
        }
    }
    let total = items.len() as f64;
    let closed = items.len() - open;
    m.open_closed_ratio = (closed > 0).then(|| open as f64 / closed as f64);
    let mut pct = [0.0; 9];
    for (p, c) in pct.iter_mut().zip(counts) {
        *p = 100.0 * c as f64 / total;
    }
    m.pos_pct = Some(pct);
    m.other_pct = Some(100.0 * other as f64 / total);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use alloc::vec;

    const MINIMAL: &str = "@UTF8\n@Begin\n@Languages:\teng\n@Participants:\tPAR Participant, INV Investigator\n*PAR:\tthe boy is on the stool . \u{15}1000_2500\u{15}\n%mor:\tdet|the n|boy aux|be&3S prep|on det|the n|stool .\n*PAR:\the is falling . \u{15}3000_4200\u{15}\n%mor:\tpro|he aux|be&3S part|fall-PRESP .\n@End\n";

    #[test]
    fn parses_minimal_file() {
        let t = parse_chat(MINIMAL, ParseMode::Strict).unwrap();
        assert_eq!(t.utterances.len(), 2);
        assert!(t.utterances.iter().all(|u| u.speaker == "PAR"));
        assert_eq!(t.utterances[0].time_span_ms, Some((1000, 2500)));
        assert_eq!(t.headers.get("Languages").map(String::as_str), Some("eng"));
        assert!(t.warnings.is_empty(), "{:?}", t.warnings);
    }

    #[test]
    fn mor_tier_items() {
        let items = parse_mor_tier("pro|it v|be&3S det|the n|cookie .");
        let pos: Vec<&str> = items.iter().map(|i| i.pos.as_str()).collect();
        assert_eq!(pos, ["pro", "v", "det", "n"]);
        assert_eq!(items[1].morphemes, 2);
        assert_eq!(items[1].lemma, "be");
    }

    #[test]
    fn clitics_and_suffixes_count_morphemes() {
        let items = parse_mor_tier("pro|it~aux|be&3S n|cookie-PL cm|cm det:art|the");
        assert_eq!(items.len(), 3);
        assert_eq!(items[0].morphemes, 3);
        assert_eq!(items[1].morphemes, 2);
        assert_eq!(items[2].main_pos(), "det");
    }

    #[test]
    fn orphan_dependent_tier() {
        let text = "@Begin\n%mor:\tn|cookie .\n*PAR:\tcookie .\n@End\n";
        assert!(matches!(parse_chat(text, ParseMode::Strict), Err(Error::Transcript { line: 2, .. })));
        let t = parse_chat(text, ParseMode::Tolerant).unwrap();
        assert_eq!(t.warnings.len(), 1);
        assert_eq!(t.utterances.len(), 1);
        assert!(t.utterances[0].mor_items.is_none());
    }

    #[test]
    fn strict_requires_begin_and_end() {
        assert!(parse_chat("*PAR:\thi .\n@End\n", ParseMode::Strict).is_err());
        assert!(parse_chat("@Begin\n*PAR:\thi .\n", ParseMode::Strict).is_err());
        assert!(parse_chat("@Begin\n?? weird\n@End\n", ParseMode::Strict).is_err());
        let t = parse_chat("?? weird\n*PAR:\thi .\n", ParseMode::Tolerant).unwrap();
        assert_eq!(t.utterances.len(), 1);
        assert!(t.warnings.len() >= 3);
    }

    #[test]
    fn retracing_markers_are_preserved() {
        let (tokens, _) = parse_main_tier("<the boy> [//] the girl [/] girl is xxx &-uh there [: here] .");
        let retraced: Vec<(&str, Option<Retrace>)> = tokens.iter().map(|t| (t.text.as_str(), t.retrace)).collect();
        assert_eq!(retraced[0], ("the", Some(Retrace::Retracing)));
        assert_eq!(retraced[1], ("boy", Some(Retrace::Retracing)));
        assert_eq!(retraced[2], ("the", None));
        assert_eq!(retraced[3], ("girl", Some(Retrace::Repetition)));
        assert_eq!(retraced[4], ("girl", None));
        assert_eq!(tokens[6].kind, TokenKind::Unintelligible);
        assert_eq!(tokens[7].kind, TokenKind::Filler);
        assert_eq!(tokens[8].annotations, [": here"]);
        assert_eq!(tokens.iter().filter(|t| t.is_analyzable()).count(), 4);
    }

    #[test]
    fn continuation_lines_fold() {
        let text = "@Begin\n*PAR:\tthe boy\n\tis here .\n@End\n";
        let t = parse_chat(text, ParseMode::Strict).unwrap();
        assert_eq!(t.utterances[0].tokens.len(), 5);
    }

    #[test]
    fn measures_on_minimal_file() {
        let t = parse_chat(MINIMAL, ParseMode::Strict).unwrap();
        let m = linguistic_measures(&t, "PAR").unwrap();
        assert_eq!(m.total_utterances, 2);
        assert!((m.duration_s - 3.2).abs() < 1e-12);
        // (6 + 1) + (3 + 1 + 1) morphemes over 2 utterances
        assert_eq!(m.mlu, Some(6.0));
        assert!(linguistic_measures(&t, "INV").is_err());
    }

    #[test]
    fn mlu_three_and_ttr_one() {
        let text = "@Begin\n*PAR:\ta b c .\n%mor:\tn|a v|b adj|c .\n*PAR:\td e f .\n%mor:\tn|d v|e adj|f .\n@End\n";
        let m = linguistic_measures(&parse_chat(text, ParseMode::Strict).unwrap(), "PAR").unwrap();
        assert_eq!(m.mlu, Some(3.0));
        assert_eq!(m.ttr, Some(1.0));
        assert_eq!(m.open_closed_ratio, None);
    }

    #[test]
    fn missing_mor_gives_absent_measures() {
        let text = "@Begin\n*PAR:\thello there .\n@End\n";
        let m = linguistic_measures(&parse_chat(text, ParseMode::Strict).unwrap(), "PAR").unwrap();
        assert_eq!(m.mlu, None);
        assert_eq!(m.pos_pct, None);
        assert_eq!(m.to_named().len(), 15);
    }

    proptest! {
        #[test]
        fn tolerant_parse_is_total(text in "(?s).{0,400}") {
            let _ = parse_chat(&text, ParseMode::Tolerant).unwrap();
        }

        #[test]
        fn tolerant_parse_total_on_chat_like_text(lines in proptest::collection::vec("[@*%]?[A-Za-z]{0,4}:?\t?[a-z|&~\\-<>\\[\\]/ .\u{15}0-9_]{0,40}", 0..20)) {
            let text = lines.join("\n");
            let _ = parse_chat(&text, ParseMode::Tolerant).unwrap();
        }

        #[test]
        fn pos_percentages_sum_to_100(tags in proptest::collection::vec(prop::sample::select(vec!["n", "v", "adj", "adv", "pro", "det", "prep", "conj", "int", "aux", "part", "co", "coord", "qn"]), 1..40)) {
            let mor: Vec<String> = tags.iter().enumerate().map(|(i, t)| format!("{t}|w{i}")).collect();
            let words: Vec<String> = (0..tags.len()).map(|i| format!("w{i}")).collect();
            let text = format!("@Begin\n*PAR:\t{} .\n%mor:\t{} .\n@End\n", words.join(" "), mor.join(" "));
            let m = linguistic_measures(&parse_chat(&text, ParseMode::Strict).unwrap(), "PAR").unwrap();
            let sum: f64 = m.pos_pct.unwrap().iter().sum::<f64>() + m.other_pct.unwrap();
            prop_assert!((sum - 100.0).abs() < 1e-9);
        }

        #[test]
        fn mlu_ignores_utterance_order(lens in proptest::collection::vec(1usize..6, 1..8), rot in 0usize..8) {
            let utt = |n: usize| {
                let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
                let mor: Vec<String> = (0..n).map(|i| format!("n|w{i}-PL")).collect();
                format!("*PAR:\t{} .\n%mor:\t{} .\n", words.join(" "), mor.join(" "))
            };
            let mut rotated = lens.clone();
            let k = rot % lens.len();
            rotated.rotate_left(k);
            let build = |ls: &[usize]| format!("@Begin\n{}@End\n", ls.iter().map(|&n| utt(n)).collect::<String>());
            let a = linguistic_measures(&parse_chat(&build(&lens), ParseMode::Strict).unwrap(), "PAR").unwrap();
            let b = linguistic_measures(&parse_chat(&build(&rotated), ParseMode::Strict).unwrap(), "PAR").unwrap();
            prop_assert!((a.mlu.unwrap() - b.mlu.unwrap()).abs() < 1e-12);
        }
    }
}

//! Chemical species extraction: formula grammar, name lexicon, text scanner
//! and per-document element markers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChemError {
    #[error("empty formula")]
    Empty,
    #[error("unknown element symbol {symbol:?} at offset {offset}")]
    UnknownSymbol { symbol: String, offset: usize },
    #[error("unbalanced parenthesis at offset {offset}")]
    Unbalanced { offset: usize },
    #[error("unexpected character {ch:?} at offset {offset}")]
    Unexpected { ch: char, offset: usize },
    #[error("invalid count at offset {offset}")]
    BadCount { offset: usize },
    #[error("count overflow")]
    Overflow,
    #[error("groups nested too deeply")]
    TooDeep,
    #[error("{0:?} is not a chemical species")]
    NotASpecies(String),
    #[error("lexicon entry {name:?}: {source}")]
    Lexicon {
        name: String,
        #[source]
        source: Box<ChemError>,
    },
    #[error("lexicon json: {0}")]
    LexiconJson(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0} species lists for {1} documents")]
    Misaligned(usize, usize),
    #[error("marker csv line {line}: {message}")]
    MarkerCsv { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, ChemError>;

const SYMBOLS: [&str; 120] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca", "Sc",
    "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt",
    "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv",
    "Ts", "Og", "Uue", "Ubn",
];

/// Number of IUPAC-named elements; the two after it are placeholders.
pub const STANDARD_ELEMENTS: u8 = 118;
pub const EXTENDED_ELEMENTS: u8 = 120;

/// Bare symbols that are also common English words or abbreviations.
const AMBIGUOUS_SYMBOLS: &[&str] = &["In", "As", "At", "No", "I", "He", "Be", "Am", "Pa", "Re", "Ho"];

/// A chemical element, identified by atomic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(u8);

impl Element {
    pub fn from_atomic_number(z: u8) -> Option<Element> {
        (1..=EXTENDED_ELEMENTS).contains(&z).then_some(Element(z))
    }

    /// Case-sensitive symbol lookup. `extended` admits Uue and Ubn.
    pub fn from_symbol(symbol: &str, extended: bool) -> Option<Element> {
        let limit = if extended { EXTENDED_ELEMENTS } else { STANDARD_ELEMENTS } as usize;
        SYMBOLS[..limit].iter().position(|&s| s == symbol).map(|i| Element(i as u8 + 1))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[self.0 as usize - 1]
    }

    pub fn all(extended: bool) -> impl Iterator<Item = Element> {
        let limit = if extended { EXTENDED_ELEMENTS } else { STANDARD_ELEMENTS };
        (1..=limit).map(Element)
    }

    fn bit(self) -> u128 {
        1u128 << (self.0 - 1)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

/// Multiset of elements with positive rational counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ElementBag {
    counts: BTreeMap<Element, Rational64>,
}

impl ElementBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(element: Element) -> Self {
        let mut b = Self::new();
        b.counts.insert(element, Rational64::one());
        b
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, element: Element) -> Option<Rational64> {
        self.counts.get(&element).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Element, Rational64)> + '_ {
        self.counts.iter().map(|(&e, &c)| (e, c))
    }

    pub fn elements(&self) -> BTreeSet<Element> {
        self.counts.keys().copied().collect()
    }

    /// Adds `count` of `element`; non-positive counts are rejected.
    pub fn add(&mut self, element: Element, count: Rational64) -> Result<()> {
        if !count.is_positive() {
            return Err(ChemError::BadCount { offset: 0 });
        }
        let slot = self.counts.entry(element).or_insert_with(Rational64::zero);
        *slot = slot.checked_add(&count).ok_or(ChemError::Overflow)?;
        Ok(())
    }

    pub fn merge(&mut self, other: &ElementBag) -> Result<()> {
        for (e, c) in other.iter() {
            self.add(e, c)?;
        }
        Ok(())
    }

    fn scaled(&self, factor: Rational64) -> Result<ElementBag> {
        let mut out = ElementBag::new();
        for (e, c) in self.iter() {
            out.add(e, c.checked_mul(&factor).ok_or(ChemError::Overflow)?)?;
        }
        Ok(out)
    }

    fn mask(&self) -> u128 {
        self.counts.keys().fold(0, |m, e| m | e.bit())
    }

    /// Renders a formula in atomic-number order that parses back to this bag.
    /// `None` when a count has no terminating decimal expansion or needs more
    /// digits than the grammar reads.
    pub fn canonical_formula(&self) -> Option<String> {
        let mut out = String::new();
        for (e, c) in self.iter() {
            out.push_str(e.symbol());
            if c != Rational64::one() {
                let d = decimal(c)?;
                if d.split('.').any(|part| part.len() > MAX_DIGITS) {
                    return None;
                }
                out.push_str(&d);
            }
        }
        Some(out)
    }
}

impl Serialize for ElementBag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(self.counts.iter().map(|(e, c)| (e.symbol(), c.to_string())))
    }
}

fn decimal(c: Rational64) -> Option<String> {
    let (numer, denom) = (*c.numer(), *c.denom());
    let (mut d, mut twos, mut fives) = (denom, 0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return None;
    }
    let places = twos.max(fives);
    let scale = 10i64.checked_pow(places)?;
    let scaled = numer.checked_mul(scale / denom)?;
    if places == 0 {
        return Some(scaled.to_string());
    }
    let digits = format!("{:0width$}", scaled, width = places as usize + 1);
    let (int, frac) = digits.split_at(digits.len() - places as usize);
    Some(format!("{int}.{frac}"))
}

fn normalize_subscripts(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '\u{2080}'..='\u{2089}' => char::from(b'0' + (c as u32 - 0x2080) as u8),
            _ => c,
        })
        .collect()
}

fn is_superscript_charge(c: char) -> bool {
    matches!(c, '\u{2070}' | '\u{00B9}' | '\u{00B2}' | '\u{00B3}' | '\u{2074}'..='\u{2079}' | '\u{207A}' | '\u{207B}')
}

/// Removes a trailing ionic charge (`3+`, `2-`, `2−`, `⁺`, `³⁺`).
fn strip_charge(s: &str) -> &str {
    let t = s.trim_end_matches(is_superscript_charge);
    if t.len() != s.len() {
        return t;
    }
    let signs = t.trim_end_matches(['+', '\u{2212}', '-']);
    if signs.len() == t.len() || signs.is_empty() {
        return t;
    }
    let digits = signs.trim_end_matches(|c: char| c.is_ascii_digit());
    if digits.is_empty() {
        signs
    } else {
        digits
    }
}

const PART_SEPARATORS: [char; 3] = ['-', '\u{2013}', '\u{00B7}'];
const MAX_DEPTH: usize = 16;
const MAX_DIGITS: usize = 18;

struct FormulaParser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    extended: bool,
    src: &'a str,
}

impl<'a> FormulaParser<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.src.len(), |&(o, _)| o)
    }

    fn number(&mut self) -> Result<Option<Rational64>> {
        let start = self.offset();
        let mut int = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            int.push(c);
            self.pos += 1;
        }
        let mut frac = String::new();
        if self.peek() == Some('.') && self.chars.get(self.pos + 1).is_some_and(|&(_, c)| c.is_ascii_digit()) {
            self.pos += 1;
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                frac.push(c);
                self.pos += 1;
            }
        }
        if int.is_empty() && frac.is_empty() {
            return Ok(None);
        }
        if int.len() > MAX_DIGITS || frac.len() > MAX_DIGITS {
            return Err(ChemError::BadCount { offset: start });
        }
        let whole: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| ChemError::BadCount { offset: start })? };
        let denom = 10i64.pow(frac.len() as u32);
        let part: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| ChemError::BadCount { offset: start })? };
        let numer = whole.checked_mul(denom).and_then(|w| w.checked_add(part)).ok_or(ChemError::Overflow)?;
        let value = Rational64::new(numer, denom);
        if !value.is_positive() {
            return Err(ChemError::BadCount { offset: start });
        }
        Ok(Some(value))
    }

    fn element(&mut self) -> Result<Element> {
        let offset = self.offset();
        let first = self.peek().expect("caller checked");
        let lower = |i: usize| self.chars.get(i).map(|&(_, c)| c).filter(char::is_ascii_lowercase);
        if self.extended {
            if let (Some(a), Some(b)) = (lower(self.pos + 1), lower(self.pos + 2)) {
                let sym: String = [first, a, b].iter().collect();
                if let Some(e) = Element::from_symbol(&sym, true) {
                    self.pos += 3;
                    return Ok(e);
                }
            }
        }
        let mut sym = String::from(first);
        if let Some(a) = lower(self.pos + 1) {
            sym.push(a);
        }
        let taken = sym.chars().count();
        match Element::from_symbol(&sym, self.extended) {
            Some(e) => {
                self.pos += taken;
                Ok(e)
            }
            None => Err(ChemError::UnknownSymbol { symbol: sym, offset }),
        }
    }

    /// Group+ until end of input or a closing bracket.
    fn groups(&mut self, depth: usize) -> Result<ElementBag> {
        if depth > MAX_DEPTH {
            return Err(ChemError::TooDeep);
        }
        let mut bag = ElementBag::new();
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_uppercase() => {
                    let e = self.element()?;
                    let n = self.number()?.unwrap_or_else(Rational64::one);
                    bag.add(e, n)?;
                }
                Some(open @ ('(' | '[')) => {
                    let offset = self.offset();
                    self.pos += 1;
                    let inner = self.groups(depth + 1)?;
                    let close = if open == '(' { ')' } else { ']' };
                    if self.peek() != Some(close) || inner.is_empty() {
                        return Err(ChemError::Unbalanced { offset });
                    }
                    self.pos += 1;
                    let n = self.number()?.unwrap_or_else(Rational64::one);
                    bag.merge(&inner.scaled(n)?)?;
                }
                Some(')' | ']') if depth > 0 => return Ok(bag),
                Some(')' | ']') => return Err(ChemError::Unbalanced { offset: self.offset() }),
                Some(ch) => return Err(ChemError::Unexpected { ch, offset: self.offset() }),
                None => {
                    if depth > 0 {
                        return Err(ChemError::Unbalanced { offset: self.src.len() });
                    }
                    return Ok(bag);
                }
            }
        }
    }

    fn part(&mut self) -> Result<ElementBag> {
        let coefficient = self.number()?.unwrap_or_else(Rational64::one);
        let bag = self.groups(0)?;
        if bag.is_empty() {
            return Err(ChemError::Empty);
        }
        bag.scaled(coefficient)
    }
}

fn parse_formula_impl(s: &str, extended: bool) -> Result<ElementBag> {
    let normalized = normalize_subscripts(s.trim());
    let body = strip_charge(&normalized);
    if body.is_empty() {
        return Err(ChemError::Empty);
    }
    let mut bag = ElementBag::new();
    for part in body.split(PART_SEPARATORS) {
        if part.is_empty() {
            return Err(ChemError::Empty);
        }
        let mut p = FormulaParser { chars: part.char_indices().collect(), pos: 0, extended, src: part };
        bag.merge(&p.part()?)?;
    }
    Ok(bag)
}

/// Parses a formula over the 118 IUPAC symbols.
///
/// `Formula := Part (sep Part)*`, `Part := [Coefficient] Group+`,
/// `Group := Element [Count] | "(" Group+ ")" [Count]`. Separators are `-`,
/// en-dash and the hydrate dot. A trailing ionic charge is dropped.
pub fn parse_formula(s: &str) -> Result<ElementBag> {
    parse_formula_impl(s, false)
}

/// Species kinds reported by the scanner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeciesKind {
    Formula,
    ElementSymbol,
    CompoundName,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChemicalSpecies {
    pub surface_form: String,
    pub kind: SpeciesKind,
    pub elements: ElementBag,
    /// Byte range in the source text.
    pub span: (usize, usize),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LexiconFile {
    Plain(BTreeMap<String, String>),
    Configured {
        #[serde(default)]
        extended_elements: bool,
        entries: BTreeMap<String, String>,
    },
}

/// Case-insensitive map from names and abbreviations to element bags.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, ElementBag>,
    max_words: usize,
    extended: bool,
}

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon_en.json");

impl Lexicon {
    /// Shipped lexicon: element names, common oxides and materials, abbreviations.
    pub fn english() -> Self {
        Self::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    /// Accepts either a plain `{name: formula}` object or
    /// `{"extended_elements": bool, "entries": {name: formula}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: LexiconFile = serde_json::from_str(text).map_err(|e| ChemError::LexiconJson(e.to_string()))?;
        let (extended, raw) = match file {
            LexiconFile::Plain(m) => (false, m),
            LexiconFile::Configured { extended_elements, entries } => (extended_elements, entries),
        };
        let mut entries = HashMap::with_capacity(raw.len());
        let mut max_words = 1;
        for (name, formula) in raw {
            let bag = parse_formula_impl(&formula, extended)
                .map_err(|e| ChemError::Lexicon { name: name.clone(), source: Box::new(e) })?;
            let key = lexicon_key(&name);
            max_words = max_words.max(key.split(' ').count());
            entries.insert(key, bag);
        }
        Ok(Lexicon { entries, max_words, extended })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ChemError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn empty() -> Self {
        Lexicon { entries: HashMap::new(), max_words: 1, extended: false }
    }

    pub fn with_extended(mut self, extended: bool) -> Self {
        self.extended = extended;
        self
    }

    pub fn extended(&self) -> bool {
        self.extended
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<&ElementBag> {
        self.entries.get(&lexicon_key(name))
    }

    pub fn parse_formula(&self, s: &str) -> Result<ElementBag> {
        parse_formula_impl(s, self.extended)
    }

    pub fn element_count(&self) -> u8 {
        if self.extended {
            EXTENDED_ELEMENTS
        } else {
            STANDARD_ELEMENTS
        }
    }
}

fn lexicon_key(name: &str) -> String {
    name.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Name or abbreviation lookup, falling back to the formula grammar.
pub fn normalize_species(name: &str, lexicon: &Lexicon) -> Result<ElementBag> {
    if let Some(bag) = lexicon.lookup(name) {
        return Ok(bag.clone());
    }
    lexicon.parse_formula(name).map_err(|_| ChemError::NotASpecies(name.to_string()))
}

#[derive(Debug, Clone)]
struct Word<'t> {
    text: &'t str,
    start: usize,
    /// Punctuation was trimmed from the front or the back.
    trimmed_front: bool,
    trimmed_back: bool,
}

fn split_words(text: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                if let Some(w) = trim_word(&text[s..i], s) {
                    out.push(w);
                }
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

fn trim_word(raw: &str, offset: usize) -> Option<Word<'_>> {
    let (mut lo, mut hi) = (0, raw.len());
    loop {
        let w = &raw[lo..hi];
        let opens = w.matches(['(', '[']).count();
        let closes = w.matches([')', ']']).count();
        let Some(last) = w.chars().next_back() else { break };
        let first = w.chars().next().expect("nonempty");
        if matches!(last, ',' | ';' | ':' | '.' | '!' | '?' | '"' | '\'' | '\u{201D}' | '\u{2019}')
            || (matches!(last, ')' | ']') && closes > opens)
        {
            hi -= last.len_utf8();
        } else if matches!(first, '"' | '\'' | '\u{201C}' | '\u{2018}') || (matches!(first, '(' | '[') && opens > closes) {
            lo += first.len_utf8();
        } else if w.len() > 2 && wraps(w) {
            lo += 1;
            hi -= 1;
        } else {
            break;
        }
    }
    (lo < hi).then(|| Word { text: &raw[lo..hi], start: offset + lo, trimmed_front: lo > 0, trimmed_back: hi < raw.len() })
}

/// `(ITO)` or `[SiO4]`: one bracket pair enclosing the whole word.
fn wraps(w: &str) -> bool {
    let close = match w.as_bytes()[0] {
        b'(' => b')',
        b'[' => b']',
        _ => return false,
    };
    if *w.as_bytes().last().expect("nonempty") != close {
        return false;
    }
    let mut depth = 0i32;
    for (i, c) in w.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if depth == 0 && i + c.len_utf8() < w.len() {
            return false;
        }
    }
    true
}

fn is_numeric_token(w: &str) -> bool {
    !w.is_empty() && w.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '+' | '-' | '\u{00B1}' | '~'))
        && w.chars().any(|c| c.is_ascii_digit())
}

#[derive(Debug)]
struct Candidate {
    species: ChemicalSpecies,
    /// Bare stoplisted symbol still waiting for supporting context.
    ambiguous: bool,
}

/// Classifies one token (no whitespace) as a species, if it is one.
fn classify_token(token: &str, start: usize, lexicon: &Lexicon) -> Option<Candidate> {
    let make = |kind, elements| ChemicalSpecies { surface_form: token.to_string(), kind, elements, span: (start, start + token.len()) };
    if let Some(bag) = lexicon.lookup(token) {
        return Some(Candidate { species: make(SpeciesKind::CompoundName, bag.clone()), ambiguous: false });
    }
    let first = token.chars().next()?;
    if !(first.is_ascii_uppercase() || first == '(' || first == '[') {
        return None;
    }
    let letters: Vec<char> = token.chars().filter(|c| c.is_alphabetic()).collect();
    let has_structure = token.chars().any(|c| c.is_ascii_digit() || "()[]+-\u{2212}\u{2013}\u{00B7}".contains(c) || is_superscript_charge(c) || ('\u{2080}'..='\u{2089}').contains(&c));
    // Uppercase acronyms such as UV, SPS or ICP only count through the lexicon.
    if letters.len() >= 2 && letters.iter().all(|c| c.is_ascii_uppercase()) && !has_structure {
        return None;
    }
    let bag = lexicon.parse_formula(token).ok()?;
    let body = strip_charge(token);
    let single = bag.len() == 1 && Element::from_symbol(body, lexicon.extended).is_some();
    let kind = if single { SpeciesKind::ElementSymbol } else { SpeciesKind::Formula };
    let ambiguous = AMBIGUOUS_SYMBOLS.contains(&token);
    Some(Candidate { species: make(kind, bag), ambiguous })
}

/// Splits a token on `-`, en-dash, `/` and `:` and classifies the pieces.
fn classify_pieces(word: &Word<'_>, lexicon: &Lexicon) -> Vec<Candidate> {
    let mut pieces = Vec::new();
    let mut from = 0;
    for (i, c) in word.text.char_indices().chain(std::iter::once((word.text.len(), '/'))) {
        if matches!(c, '-' | '\u{2013}' | '/' | ':') {
            // A charge sign like the `+` in `Er3+-doped` stays with its piece.
            let piece = &word.text[from..i];
            if !piece.is_empty() {
                pieces.push((piece, word.start + from));
            }
            from = i + c.len_utf8();
        }
    }
    if pieces.len() < 2 {
        return Vec::new();
    }
    let mut found: Vec<Option<Candidate>> = pieces.iter().map(|&(p, s)| classify_token(p, s, lexicon)).collect();
    let supported: Vec<bool> = found.iter().map(|c| c.as_ref().is_some_and(|c| !c.ambiguous)).collect();
    for (i, slot) in found.iter_mut().enumerate() {
        if let Some(c) = slot {
            if c.ambiguous {
                let near = (i > 0 && supported[i - 1]) || supported.get(i + 1).copied().unwrap_or(false);
                if near {
                    c.ambiguous = false;
                }
            }
        }
    }
    found.into_iter().flatten().collect()
}

/// Scans text for chemical species, longest match first.
///
/// Multi-word lexicon names are tried before single tokens. Bare symbols on
/// the ambiguity stoplist (`In`, `As`, `No`, ...) survive only next to another
/// species, and a bare symbol right after a number is read as a unit.
pub fn extract_species(text: &str, lexicon: &Lexicon) -> Vec<ChemicalSpecies> {
    let words = split_words(text);
    // (word index, candidate)
    let mut found: Vec<(usize, usize, Candidate)> = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let mut matched = false;
        for len in (2..=lexicon.max_words.min(words.len() - i)).rev() {
            let window = &words[i..i + len];
            let clean = window.iter().enumerate().all(|(k, w)| (k == 0 || !w.trimmed_front) && (k == len - 1 || !w.trimmed_back));
            if !clean {
                continue;
            }
            let key = window.iter().map(|w| w.text.to_lowercase()).collect::<Vec<_>>().join(" ");
            if let Some(bag) = lexicon.entries.get(&key) {
                let (s, e) = (window[0].start, window[len - 1].start + window[len - 1].text.len());
                let species = ChemicalSpecies { surface_form: text[s..e].to_string(), kind: SpeciesKind::CompoundName, elements: bag.clone(), span: (s, e) };
                found.push((i, i + len - 1, Candidate { species, ambiguous: false }));
                i += len;
                matched = true;
                break;
            }
        }
        if matched {
            continue;
        }
        let w = &words[i];
        let after_number = i > 0 && is_numeric_token(words[i - 1].text);
        match classify_token(w.text, w.start, lexicon) {
            Some(c) if c.species.kind == SpeciesKind::ElementSymbol && after_number && c.species.surface_form.chars().all(char::is_alphabetic) => {}
            Some(c) => found.push((i, i, c)),
            None => {
                for c in classify_pieces(w, lexicon) {
                    found.push((i, i, c));
                }
            }
        }
        i += 1;
    }

    let anchored: BTreeSet<usize> = found.iter().filter(|(_, _, c)| !c.ambiguous).flat_map(|&(a, b, _)| a..=b).collect();
    found
        .into_iter()
        .filter(|(a, b, c)| !c.ambiguous || (*a > 0 && anchored.contains(&(a - 1))) || anchored.contains(&(b + 1)))
        .map(|(_, _, c)| c.species)
        .collect()
}

/// Extracts species from every abstract in parallel.
pub fn extract_corpus_species(corpus: &Corpus, lexicon: &Lexicon) -> Vec<Vec<ChemicalSpecies>> {
    corpus.documents().par_iter().map(|d| extract_species(&d.abstract_text, lexicon)).collect()
}

/// Binary element markers, one row per document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentElementMatrix {
    doc_ids: Vec<String>,
    rows: Vec<u128>,
    element_count: u8,
}

impl DocumentElementMatrix {
    pub fn new(doc_ids: Vec<String>, element_count: u8) -> Self {
        let rows = vec![0; doc_ids.len()];
        DocumentElementMatrix { doc_ids, rows, element_count }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// 118, or 120 when the extended placeholders are tracked.
    pub fn element_count(&self) -> u8 {
        self.element_count
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> {
        Element::all(self.element_count == EXTENDED_ELEMENTS)
    }

    pub fn get(&self, doc: usize, element: Element) -> bool {
        self.rows[doc] & element.bit() != 0
    }

    pub fn set(&mut self, doc: usize, element: Element) {
        self.rows[doc] |= element.bit();
    }

    pub fn row_elements(&self, doc: usize) -> Vec<Element> {
        self.elements().filter(|&e| self.get(doc, e)).collect()
    }

    /// Number of documents marked with `element`.
    pub fn frequency(&self, element: Element) -> usize {
        self.rows.iter().filter(|&&r| r & element.bit() != 0).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<&str> = self.elements().map(Element::symbol).collect();
        writeln!(w, "doc_id,{}", header.join(","))?;
        for (doc, id) in self.doc_ids.iter().enumerate() {
            let cells: Vec<&str> = self.elements().map(|e| if self.get(doc, e) { "1" } else { "0" }).collect();
            writeln!(w, "{},{}", csv_field(id), cells.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let bad = |line: usize, message: &str| ChemError::MarkerCsv { line, message: message.to_string() };
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let header = header.map_err(|e| bad(1, &e.to_string()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("doc_id") {
            return Err(bad(1, "first column must be doc_id"));
        }
        let symbols: Vec<&str> = cols.collect();
        let extended = symbols.len() == EXTENDED_ELEMENTS as usize;
        let columns: Vec<Element> = symbols
            .iter()
            .map(|s| Element::from_symbol(s, extended).ok_or_else(|| bad(1, &format!("unknown element {s}"))))
            .collect::<Result<_>>()?;
        let element_count = if extended { EXTENDED_ELEMENTS } else { STANDARD_ELEMENTS };
        let mut m = DocumentElementMatrix::new(Vec::new(), element_count);
        for (n, line) in lines {
            let line = line.map_err(|e| bad(n + 1, &e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let (id, rest) = split_csv_id(&line).ok_or_else(|| bad(n + 1, "malformed row"))?;
            let cells: Vec<&str> = rest.split(',').collect();
            if cells.len() != columns.len() {
                return Err(bad(n + 1, "wrong column count"));
            }
            let mut row = 0u128;
            for (e, cell) in columns.iter().zip(cells) {
                match cell {
                    "1" => row |= e.bit(),
                    "0" => {}
                    _ => return Err(bad(n + 1, "marker must be 0 or 1")),
                }
            }
            m.doc_ids.push(id);
            m.rows.push(row);
        }
        Ok(m)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv_id(line: &str) -> Option<(String, &str)> {
    if let Some(rest) = line.strip_prefix('"') {
        let mut id = String::new();
        let mut chars = rest.char_indices();
        while let Some((i, c)) = chars.next() {
            if c == '"' {
                if rest[i + 1..].starts_with('"') {
                    id.push('"');
                    chars.next();
                } else {
                    return rest[i + 1..].strip_prefix(',').map(|r| (id, r));
                }
            } else {
                id.push(c);
            }
        }
        None
    } else {
        line.split_once(',').map(|(a, b)| (a.to_string(), b))
    }
}

/// `marker[d][X] = 1` iff X occurs in any species extracted from document d.
pub fn element_markers(corpus: &Corpus, species: &[Vec<ChemicalSpecies>], element_count: u8) -> Result<DocumentElementMatrix> {
    element_markers_min_freq(corpus, species, element_count, 1)
}

/// Like [`element_markers`], but only species whose element set occurs in at
/// least `min_doc_freq` documents contribute.
pub fn element_markers_min_freq(
    corpus: &Corpus,
    species: &[Vec<ChemicalSpecies>],
    element_count: u8,
    min_doc_freq: usize,
) -> Result<DocumentElementMatrix> {
    if species.len() != corpus.len() {
        return Err(ChemError::Misaligned(species.len(), corpus.len()));
    }
    let mut df: HashMap<u128, usize> = HashMap::new();
    if min_doc_freq > 1 {
        for doc in species {
            let masks: BTreeSet<u128> = doc.iter().map(|s| s.elements.mask()).collect();
            for m in masks {
                *df.entry(m).or_default() += 1;
            }
        }
    }
    let ids = corpus.documents().iter().map(|d| d.doc_id.clone()).collect();
    let mut out = DocumentElementMatrix::new(ids, element_count);
    let allowed = if element_count == EXTENDED_ELEMENTS { u128::MAX } else { (1u128 << STANDARD_ELEMENTS) - 1 };
    for (row, doc) in out.rows.iter_mut().zip(species) {
        for s in doc {
            let m = s.elements.mask();
            if min_doc_freq <= 1 || df.get(&m).copied().unwrap_or(0) >= min_doc_freq {
                *row |= m & allowed;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(bag: &ElementBag) -> Vec<&'static str> {
        bag.elements().into_iter().map(Element::symbol).collect()
    }

    #[test]
    fn symbol_table() {
        assert_eq!(Element::from_symbol("Og", false).unwrap().atomic_number(), 118);
        assert!(Element::from_symbol("Uue", false).is_none());
        assert_eq!(Element::from_symbol("Ubn", true).unwrap().atomic_number(), 120);
        assert_eq!(Element::from_symbol("Er", false).unwrap().symbol(), "Er");
    }

    #[test]
    fn formulas() {
        let b = parse_formula("SiO2").unwrap();
        assert_eq!(b.count(Element::from_symbol("O", false).unwrap()), Some(Rational64::from_integer(2)));
        let b = parse_formula("Ca3(PO4)2").unwrap();
        assert_eq!(b.canonical_formula().unwrap(), "O8P2Ca3");
        assert_eq!(set(&parse_formula("SiO2-CaO-Na2O-P2O5").unwrap()), ["O", "Na", "Si", "P", "Ca"]);
        assert_eq!(parse_formula("0.5Na2O").unwrap().canonical_formula().unwrap(), "O0.5Na");
        assert_eq!(parse_formula("CuSO4·5H2O").unwrap().canonical_formula().unwrap(), "H10O9SCu");
        assert_eq!(set(&parse_formula("Er3+").unwrap()), ["Er"]);
        assert_eq!(set(&parse_formula("SO4²⁻").unwrap()), ["O", "S"]);
        assert_eq!(set(&parse_formula("Al₂O₃").unwrap()), ["O", "Al"]);
    }

    #[test]
    fn formula_errors() {
        assert_eq!(parse_formula(""), Err(ChemError::Empty));
        assert!(matches!(parse_formula("Xx2"), Err(ChemError::UnknownSymbol { .. })));
        assert!(matches!(parse_formula("Ca3(PO4"), Err(ChemError::Unbalanced { .. })));
        assert!(matches!(parse_formula("CaO)"), Err(ChemError::Unbalanced { .. })));
        assert!(parse_formula("glass").is_err());
        assert!(parse_formula("SiO2--CaO").is_err());
        assert!(parse_formula("Uue").is_err());
        assert!(parse_formula_impl("Uue2O", true).is_ok());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal(Rational64::new(1, 2)).unwrap(), "0.5");
        assert_eq!(decimal(Rational64::new(3, 40)).unwrap(), "0.075");
        assert_eq!(decimal(Rational64::from_integer(12)).unwrap(), "12");
        assert!(decimal(Rational64::new(1, 3)).is_none());
    }

    #[test]
    fn lexicon_names() {
        let lex = Lexicon::english();
        assert_eq!(set(&normalize_species("Indium Tin Oxide", &lex).unwrap()), ["O", "In", "Sn"]);
        assert_eq!(set(&normalize_species("ITO", &lex).unwrap()), ["O", "In", "Sn"]);
        assert_eq!(set(&normalize_species("erbium", &lex).unwrap()), ["Er"]);
        assert!(matches!(normalize_species("glass", &lex), Err(ChemError::NotASpecies(_))));
    }

    #[test]
    fn scanner_examples() {
        let lex = Lexicon::english();
        let found = extract_species("Er3+ doped SiO2 glasses", &lex);
        let forms: Vec<_> = found.iter().map(|s| s.surface_form.as_str()).collect();
        assert_eq!(forms, ["Er3+", "SiO2"]);
        assert_eq!(found[0].span, (0, 4));
        assert_eq!(found[1].span, (11, 15));
        assert_eq!(found[0].kind, SpeciesKind::ElementSymbol);
        assert!(extract_species("", &lex).is_empty());
        assert!(extract_species("In this paper", &lex).is_empty());
        assert!(extract_species("annealed at 500 C for 2 h", &lex).is_empty());
        assert!(extract_species("UV and XRD and SEM data", &lex).is_empty());
    }

    #[test]
    fn scanner_context_rules() {
        let lex = Lexicon::english();
        let forms = |t: &str| extract_species(t, &lex).into_iter().map(|s| s.surface_form).collect::<Vec<_>>();
        assert_eq!(forms("transparent Indium Tin Oxide (ITO) electrodes"), ["Indium Tin Oxide", "ITO"]);
        assert_eq!(forms("Ga, In and Zn"), ["Ga", "In", "Zn"]);
        assert_eq!(forms("As-prepared samples"), Vec::<String>::new());
        assert_eq!(forms("Yb3+/Er3+ co-doped"), ["Yb3+", "Er3+"]);
        assert_eq!(forms("erbium-doped fibre"), ["erbium"]);
        assert_eq!(forms("the SiO2-CaO-Na2O-P2O5 system"), ["SiO2-CaO-Na2O-P2O5"]);
        assert_eq!(forms("containing F and Cl."), ["F", "Cl"]);
    }

    #[test]
    fn markers_and_csv() {
        use crate::corpus::{Document, Corpus};
        let docs = vec![
            Document::new("d1", "t", "SiO2 glass"),
            Document::new("d2", "t", "nothing here"),
        ];
        let corpus = Corpus::from_documents(docs).unwrap();
        let lex = Lexicon::english();
        let species = extract_corpus_species(&corpus, &lex);
        let m = element_markers(&corpus, &species, STANDARD_ELEMENTS).unwrap();
        let si = Element::from_symbol("Si", false).unwrap();
        assert!(m.get(0, si));
        assert_eq!(m.row_elements(0).len(), 2);
        assert!(m.row_elements(1).is_empty());
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = DocumentElementMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(back, m);
        assert!(element_markers(&corpus, &species[..1], STANDARD_ELEMENTS).is_err());
        let filtered = element_markers_min_freq(&corpus, &species, STANDARD_ELEMENTS, 2).unwrap();
        assert!(filtered.row_elements(0).is_empty());
    }
}

//! Numeric subset of Code 39 and nearest-pattern digit resolution.
//!
//! Each digit is nine elements (five bars, four spaces, alternating and
//! starting with a bar), exactly three of them wide. A card is four digits
//! laid end to end with no start/stop characters and no inter-character gap,
//! giving a 36-element pattern.

use std::fmt;
use std::str::FromStr;

use crate::Error;

/// Elements per digit.
pub const DIGIT_ELEMENTS: usize = 9;
/// Digits per card.
pub const CARD_DIGITS: usize = 4;
/// Elements per card.
pub const CARD_ELEMENTS: usize = DIGIT_ELEMENTS * CARD_DIGITS;

/// Smallest Hamming distance between any two rows of [`DIGIT_TABLE`].
pub const MIN_TABLE_DISTANCE: u32 = 2;

/// Wide/narrow flags for digits 0-9, element 1 in the most significant of
/// the nine low bits. Values come from the public Code 39 table.
pub const DIGIT_TABLE: [u16; 10] = [
    0b000110100, // 0
    0b100100001, // 1
    0b001100001, // 2
    0b101100000, // 3
    0b000110001, // 4
    0b100110000, // 5
    0b001110000, // 6
    0b000100101, // 7
    0b100100100, // 8
    0b001100100, // 9
];

const NINE_BITS: u16 = (1 << DIGIT_ELEMENTS) - 1;
// Bars sit at elements 1, 3, 5, 7, 9.
const BAR_MASK: u16 = 0b101010101;

/// Nine wide/narrow flags for a single digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DigitPattern(u16);

impl DigitPattern {
    /// Builds a pattern from nine flags, checking the 3-of-9 layout rules.
    pub fn new(elements: [bool; DIGIT_ELEMENTS]) -> Result<Self, Error> {
        let raw = pack(&elements);
        if !is_valid_layout(raw) {
            return Err(Error::InvalidPattern(format_bits(raw)));
        }
        Ok(Self(raw))
    }

    pub fn elements(self) -> [bool; DIGIT_ELEMENTS] {
        unpack(self.0)
    }

    pub fn bits(self) -> u16 {
        self.0
    }
}

impl fmt::Display for DigitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_bits(self.0))
    }
}

/// The four-digit identity printed on a card.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CardCode([u8; CARD_DIGITS]);

impl CardCode {
    pub fn new(digits: [u8; CARD_DIGITS]) -> Result<Self, Error> {
        if let Some(&d) = digits.iter().find(|&&d| d > 9) {
            return Err(Error::DigitOutOfRange(d));
        }
        Ok(Self(digits))
    }

    /// Card for an integer in `0..=9999`; leading zeros are kept.
    pub fn from_number(n: u16) -> Result<Self, Error> {
        if n > 9999 {
            return Err(Error::InvalidCardCode(n.to_string()));
        }
        let digits = [
            (n / 1000) as u8,
            (n / 100 % 10) as u8,
            (n / 10 % 10) as u8,
            (n % 10) as u8,
        ];
        Ok(Self(digits))
    }

    pub fn digits(&self) -> [u8; CARD_DIGITS] {
        self.0
    }

    pub fn number(&self) -> u16 {
        self.0.iter().fold(0u16, |acc, &d| acc * 10 + u16::from(d))
    }
}

impl fmt::Display for CardCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for CardCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        if bytes.len() != CARD_DIGITS || !bytes.iter().all(u8::is_ascii_digit) {
            return Err(Error::InvalidCardCode(s.to_string()));
        }
        let mut digits = [0u8; CARD_DIGITS];
        for (slot, b) in digits.iter_mut().zip(bytes) {
            *slot = b - b'0';
        }
        Ok(Self(digits))
    }
}

/// 36 wide/narrow flags for a whole card.
///
/// Within each nine-element group, odd positions are bars and even positions
/// are spaces. Element 9 of one group and element 1 of the next are both bars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pattern36([bool; CARD_ELEMENTS]);

impl Pattern36 {
    pub fn from_elements(elements: [bool; CARD_ELEMENTS]) -> Self {
        Self(elements)
    }

    pub fn from_slice(elements: &[bool]) -> Result<Self, Error> {
        let arr: [bool; CARD_ELEMENTS] = elements.try_into().map_err(|_| Error::WrongLength {
            expected: CARD_ELEMENTS,
            actual: elements.len(),
        })?;
        Ok(Self(arr))
    }

    pub fn elements(&self) -> &[bool; CARD_ELEMENTS] {
        &self.0
    }

    pub fn groups(&self) -> impl Iterator<Item = &[bool]> {
        self.0.chunks_exact(DIGIT_ELEMENTS)
    }
}

impl fmt::Display for Pattern36 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &e in &self.0 {
            f.write_str(if e { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Outcome of nearest-pattern matching for one nine-element group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchResult {
    pub digit: u8,
    /// Elements agreeing with the table row of `digit`, out of nine.
    pub score: u8,
    /// Two or more digits share the best score; `digit` is the smallest.
    pub ambiguous: bool,
}

pub fn encode_digit(d: u8) -> Result<DigitPattern, Error> {
    DIGIT_TABLE
        .get(usize::from(d))
        .map(|&raw| DigitPattern(raw))
        .ok_or(Error::DigitOutOfRange(d))
}

pub fn encode_card(code: CardCode) -> Pattern36 {
    let mut out = [false; CARD_ELEMENTS];
    for (chunk, d) in out.chunks_exact_mut(DIGIT_ELEMENTS).zip(code.digits()) {
        chunk.copy_from_slice(&unpack(DIGIT_TABLE[usize::from(d)]));
    }
    Pattern36(out)
}

/// Resolves nine flags to the digit whose table row agrees in the most
/// positions.
pub fn match_digit(bits: &[bool]) -> Result<MatchResult, Error> {
    if bits.len() != DIGIT_ELEMENTS {
        return Err(Error::WrongLength {
            expected: DIGIT_ELEMENTS,
            actual: bits.len(),
        });
    }
    let observed = pack(bits);
    let mut best = MatchResult {
        digit: 0,
        score: 0,
        ambiguous: false,
    };
    for (digit, &row) in DIGIT_TABLE.iter().enumerate() {
        let score = (DIGIT_ELEMENTS as u32 - ((observed ^ row) & NINE_BITS).count_ones()) as u8;
        if digit == 0 || score > best.score {
            best = MatchResult {
                digit: digit as u8,
                score,
                ambiguous: false,
            };
        } else if score == best.score {
            best.ambiguous = true;
        }
    }
    Ok(best)
}

/// Splits a card pattern into four groups and matches each one.
pub fn decode_card(pattern: &[bool]) -> Result<(CardCode, [MatchResult; CARD_DIGITS]), Error> {
    if pattern.len() != CARD_ELEMENTS {
        return Err(Error::WrongLength {
            expected: CARD_ELEMENTS,
            actual: pattern.len(),
        });
    }
    let mut results = [MatchResult {
        digit: 0,
        score: 0,
        ambiguous: false,
    }; CARD_DIGITS];
    for (slot, group) in results.iter_mut().zip(pattern.chunks_exact(DIGIT_ELEMENTS)) {
        *slot = match_digit(group)?;
    }
    let code = CardCode(results.map(|r| r.digit));
    Ok((code, results))
}

pub(crate) fn is_valid_layout(raw: u16) -> bool {
    raw & !NINE_BITS == 0
        && raw.count_ones() == 3
        && (raw & BAR_MASK).count_ones() == 2
        && (raw & !BAR_MASK & NINE_BITS).count_ones() == 1
}

fn pack(elements: &[bool]) -> u16 {
    elements
        .iter()
        .fold(0u16, |acc, &wide| (acc << 1) | u16::from(wide))
}

fn unpack(raw: u16) -> [bool; DIGIT_ELEMENTS] {
    std::array::from_fn(|i| raw >> (DIGIT_ELEMENTS - 1 - i) & 1 == 1)
}

fn format_bits(raw: u16) -> String {
    unpack(raw)
        .iter()
        .map(|&b| if b { '1' } else { '0' })
        .collect()
}

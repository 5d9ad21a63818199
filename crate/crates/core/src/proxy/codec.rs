//! A tiny LZ77 codec with a counted decoder.
//!
//! Frame layout, bit-packed MSB-first and zero-padded to a whole byte:
//!
//! ```text
//! [32-bit big-endian decoded length]
//! token*: 0 <8-bit literal>
//!       | 1 <12-bit offset-1> <6-bit length-3>
//! ```
//!
//! Offsets are 1..=4096 and match lengths 3..=66. A match may overlap the
//! bytes it produces; it is copied forward one byte at a time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const WINDOW: usize = 4096;
pub const MIN_MATCH: usize = 3;
pub const MAX_MATCH: usize = 66;
const HEADER_BITS: u64 = 32;
const LITERAL_BITS: u64 = 1 + 8;
const MATCH_BITS: u64 = 1 + 12 + 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("frame ends in the middle of a token")]
    Truncated,
    #[error("match offset {offset} reaches before the start of the output ({decoded} bytes decoded)")]
    OffsetOutOfRange { offset: usize, decoded: usize },
    #[error("match token out of range (offset {offset}, length {len})")]
    BadMatch { offset: usize, len: usize },
    #[error("decoded {decoded} bytes but the header says {expected}")]
    LengthMismatch { expected: usize, decoded: usize },
    #[error("unexpected data after the last token")]
    TrailingData,
    #[error("input of {0} bytes does not fit a 32-bit frame header")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Token {
    Literal(u8),
    Match { offset: u16, len: u8 },
}

impl Token {
    fn bits(&self) -> u64 {
        match self {
            Token::Literal(_) => LITERAL_BITS,
            Token::Match { .. } => MATCH_BITS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecFrame {
    pub output_len: u32,
    pub tokens: Vec<Token>,
}

/// Per-operation costs charged by [`decompress_instrumented`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub per_token: u64,
    pub per_literal_byte: u64,
    pub per_match_byte: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            per_token: 1,
            per_literal_byte: 1,
            per_match_byte: 1,
        }
    }
}

impl CostModel {
    pub fn new(per_token: u64, per_literal_byte: u64, per_match_byte: u64) -> Option<Self> {
        (per_token > 0 || per_literal_byte > 0 || per_match_byte > 0).then_some(CostModel {
            per_token,
            per_literal_byte,
            per_match_byte,
        })
    }

    /// Parses `a,b,c`.
    pub fn parse(text: &str) -> Option<Self> {
        let parts: Vec<u64> = text
            .split(',')
            .map(|p| p.trim().parse().ok())
            .collect::<Option<_>>()?;
        match parts[..] {
            [a, b, c] => CostModel::new(a, b, c),
            _ => None,
        }
    }
}

impl CodecFrame {
    /// Exact size of the encoded frame before final padding.
    pub fn compressed_bits(&self) -> u64 {
        HEADER_BITS + self.tokens.iter().map(Token::bits).sum::<u64>()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BitWriter::default();
        w.put(u64::from(self.output_len), 32);
        for token in &self.tokens {
            match *token {
                Token::Literal(b) => {
                    w.put(0, 1);
                    w.put(u64::from(b), 8);
                }
                Token::Match { offset, len } => {
                    w.put(1, 1);
                    w.put(u64::from(offset) - 1, 12);
                    w.put(u64::from(len) - MIN_MATCH as u64, 6);
                }
            }
        }
        w.finish()
    }

    /// Strict parse: tokens must produce exactly the header length, every
    /// offset must point into the decoded prefix, and only zero padding may
    /// follow the last token.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = BitReader::new(bytes);
        let output_len = r.take(32)? as u32;
        let expected = output_len as usize;
        let mut decoded = 0usize;
        let mut tokens = Vec::new();
        while decoded < expected {
            let token = if r.take(1)? == 0 {
                decoded += 1;
                Token::Literal(r.take(8)? as u8)
            } else {
                let offset = r.take(12)? as usize + 1;
                let len = r.take(6)? as usize + MIN_MATCH;
                if offset > decoded {
                    return Err(DecodeError::OffsetOutOfRange { offset, decoded });
                }
                decoded += len;
                Token::Match {
                    offset: offset as u16,
                    len: len as u8,
                }
            };
            tokens.push(token);
        }
        if decoded != expected {
            return Err(DecodeError::LengthMismatch { expected, decoded });
        }
        if !r.only_padding_left() {
            return Err(DecodeError::TrailingData);
        }
        Ok(CodecFrame { output_len, tokens })
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    used: u32,
}

impl BitWriter {
    fn put(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            if self.used == 0 {
                self.bytes.push(0);
            }
            if (value >> i) & 1 == 1 {
                *self.bytes.last_mut().expect("pushed above") |= 0x80 >> self.used;
            }
            self.used = (self.used + 1) % 8;
        }
    }

    fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    fn take(&mut self, width: u32) -> Result<u64, DecodeError> {
        if self.pos + width as usize > self.bytes.len() * 8 {
            return Err(DecodeError::Truncated);
        }
        let mut v = 0u64;
        for _ in 0..width {
            let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | u64::from(bit);
            self.pos += 1;
        }
        Ok(v)
    }

    fn only_padding_left(&self) -> bool {
        let remaining = self.bytes.len() * 8 - self.pos;
        remaining < 8 && (self.pos..self.bytes.len() * 8)
            .all(|p| (self.bytes[p / 8] >> (7 - p % 8)) & 1 == 0)
    }
}

/// Greedy longest-match parse; among equally long matches the nearest wins.
pub fn compress(data: &[u8]) -> Result<CodecFrame, DecodeError> {
    let output_len = u32::try_from(data.len()).map_err(|_| DecodeError::TooLarge(data.len()))?;
    const NONE: usize = usize::MAX;
    const HASH_BITS: u32 = 15;
    let hash = |i: usize| -> usize {
        let key = u32::from(data[i]) << 16 | u32::from(data[i + 1]) << 8 | u32::from(data[i + 2]);
        (key.wrapping_mul(2_654_435_761) >> (32 - HASH_BITS)) as usize
    };
    // Hash chains over 3-byte prefixes: head[h] is the latest position with
    // hash h, prev[i] the previous one. Walking a chain visits candidates in
    // increasing offset, so keeping only strictly longer matches breaks ties
    // toward the smallest offset.
    let mut head = vec![NONE; 1 << HASH_BITS];
    let mut prev = vec![NONE; data.len()];

    let mut tokens = Vec::new();
    let mut i = 0;
    while i < data.len() {
        let limit = MAX_MATCH.min(data.len() - i);
        let (mut best_len, mut best_offset) = (0, 0);
        if limit >= MIN_MATCH {
            let mut j = head[hash(i)];
            while j != NONE && i - j <= WINDOW {
                let len = data[j..]
                    .iter()
                    .zip(&data[i..i + limit])
                    .take_while(|(a, b)| a == b)
                    .count();
                if len > best_len {
                    best_len = len;
                    best_offset = i - j;
                    if len == limit {
                        break;
                    }
                }
                j = prev[j];
            }
        }
        let advance = if best_len >= MIN_MATCH {
            tokens.push(Token::Match {
                offset: best_offset as u16,
                len: best_len as u8,
            });
            best_len
        } else {
            tokens.push(Token::Literal(data[i]));
            1
        };
        let hashable = (data.len() + 1).saturating_sub(MIN_MATCH);
        for (k, link) in prev.iter_mut().enumerate().take((i + advance).min(hashable)).skip(i) {
            let h = hash(k);
            *link = head[h];
            head[h] = k;
        }
        i += advance;
    }
    Ok(CodecFrame { output_len, tokens })
}

/// Decodes `frame`, charging `model` costs for each token and byte.
pub fn decompress_instrumented(
    frame: &CodecFrame,
    model: &CostModel,
) -> Result<(Vec<u8>, u64), DecodeError> {
    let expected = frame.output_len as usize;
    let mut out = Vec::with_capacity(expected);
    let mut steps = 0u64;
    for token in &frame.tokens {
        steps += model.per_token;
        match *token {
            Token::Literal(b) => {
                steps += model.per_literal_byte;
                out.push(b);
            }
            Token::Match { offset, len } => {
                let (offset, len) = (usize::from(offset), usize::from(len));
                if !(1..=WINDOW).contains(&offset) || !(MIN_MATCH..=MAX_MATCH).contains(&len) {
                    return Err(DecodeError::BadMatch { offset, len });
                }
                if offset > out.len() {
                    return Err(DecodeError::OffsetOutOfRange {
                        offset,
                        decoded: out.len(),
                    });
                }
                steps += len as u64 * model.per_match_byte;
                let start = out.len() - offset;
                for k in 0..len {
                    out.push(out[start + k]);
                }
            }
        }
        if out.len() > expected {
            return Err(DecodeError::LengthMismatch {
                expected,
                decoded: out.len(),
            });
        }
    }
    if out.len() != expected {
        return Err(DecodeError::LengthMismatch {
            expected,
            decoded: out.len(),
        });
    }
    Ok((out, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model() -> CostModel {
        CostModel::default()
    }

    #[test]
    fn empty_input() {
        let frame = compress(b"").unwrap();
        assert_eq!(frame, CodecFrame { output_len: 0, tokens: vec![] });
        assert_eq!(decompress_instrumented(&frame, &model()).unwrap(), (vec![], 0));
        assert_eq!(frame.to_bytes(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn two_literals() {
        let frame = compress(b"AB").unwrap();
        assert_eq!(frame.tokens, vec![Token::Literal(b'A'), Token::Literal(b'B')]);
        assert_eq!(decompress_instrumented(&frame, &model()).unwrap(), (b"AB".to_vec(), 4));
    }

    #[test]
    fn self_overlapping_match() {
        let frame = compress(b"AAAAAA").unwrap();
        assert_eq!(
            frame.tokens,
            vec![Token::Literal(b'A'), Token::Match { offset: 1, len: 5 }]
        );
        assert_eq!(decompress_instrumented(&frame, &model()).unwrap(), (b"AAAAAA".to_vec(), 8));
        // 32 header bits + 9 + 19.
        assert_eq!(frame.compressed_bits(), 60);
    }

    #[test]
    fn ties_go_to_nearest_offset() {
        // "abc" occurs at offsets 6 and 3 from the final copy.
        let frame = compress(b"abcXYZabcabc").unwrap();
        assert_eq!(*frame.tokens.last().unwrap(), Token::Match { offset: 3, len: 3 });
    }

    #[test]
    fn match_length_is_capped() {
        let data = vec![7u8; 1 + MAX_MATCH + 10];
        let frame = compress(&data).unwrap();
        assert_eq!(frame.tokens[1], Token::Match { offset: 1, len: MAX_MATCH as u8 });
        assert_eq!(frame.tokens[2], Token::Match { offset: 1, len: 10 });
    }

    #[test]
    fn bit_layout() {
        let frame = compress(b"AAAAAA").unwrap();
        // header 00000006, then 0 01000001, then 1 000000000000 000010, pad.
        assert_eq!(frame.to_bytes(), vec![0, 0, 0, 6, 0b0010_0000, 0b1100_0000, 0b0000_0000, 0b0010_0000]);
    }

    #[test]
    fn strict_parser_rejects_bad_frames() {
        let bytes = compress(b"AAAAAA").unwrap().to_bytes();
        assert_eq!(CodecFrame::from_bytes(&bytes[..6]), Err(DecodeError::Truncated));
        let mut padded = bytes.clone();
        padded.push(0);
        assert_eq!(CodecFrame::from_bytes(&padded), Err(DecodeError::TrailingData));
        let mut dirty = bytes.clone();
        *dirty.last_mut().unwrap() |= 1;
        assert_eq!(CodecFrame::from_bytes(&dirty), Err(DecodeError::TrailingData));
        // A match as the very first token points before the output.
        let bad = CodecFrame { output_len: 3, tokens: vec![Token::Match { offset: 1, len: 3 }] };
        assert!(matches!(CodecFrame::from_bytes(&bad.to_bytes()), Err(DecodeError::OffsetOutOfRange { .. })));
        // Header shorter than the tokens produce.
        let long = CodecFrame { output_len: 4, tokens: vec![Token::Literal(1), Token::Match { offset: 1, len: 5 }] };
        assert!(matches!(CodecFrame::from_bytes(&long.to_bytes()), Err(DecodeError::LengthMismatch { .. })));
    }

    #[test]
    fn decoder_rejects_bad_frames() {
        let m = model();
        let f = CodecFrame { output_len: 3, tokens: vec![Token::Match { offset: 1, len: 3 }] };
        assert!(matches!(decompress_instrumented(&f, &m), Err(DecodeError::OffsetOutOfRange { .. })));
        let f = CodecFrame { output_len: 2, tokens: vec![Token::Literal(1)] };
        assert!(matches!(decompress_instrumented(&f, &m), Err(DecodeError::LengthMismatch { .. })));
        let f = CodecFrame { output_len: 9, tokens: vec![Token::Literal(1), Token::Match { offset: 1, len: 2 }] };
        assert!(matches!(decompress_instrumented(&f, &m), Err(DecodeError::BadMatch { .. })));
    }

    #[test]
    fn cost_model_parse() {
        assert_eq!(CostModel::parse("1, 2,3"), CostModel::new(1, 2, 3));
        assert!(CostModel::parse("0,0,0").is_none());
        assert!(CostModel::parse("1,2").is_none());
        assert!(CostModel::parse("1,x,2").is_none());
    }

    proptest! {
        #[test]
        fn round_trip(data in proptest::collection::vec(0u8..4, 0..2000)) {
            let frame = compress(&data).unwrap();
            let reparsed = CodecFrame::from_bytes(&frame.to_bytes()).unwrap();
            prop_assert_eq!(&reparsed, &frame);
            prop_assert_eq!(decompress_instrumented(&frame, &model()).unwrap().0, data);
        }

        #[test]
        fn doubling_costs_doubles_steps(data in proptest::collection::vec(any::<u8>(), 0..500), a in 0u64..5, b in 0u64..5, c in 1u64..5) {
            let frame = compress(&data).unwrap();
            let m = CostModel::new(a, b, c).unwrap();
            let m2 = CostModel::new(2 * a, 2 * b, 2 * c).unwrap();
            let (_, s1) = decompress_instrumented(&frame, &m).unwrap();
            let (_, s2) = decompress_instrumented(&frame, &m2).unwrap();
            prop_assert_eq!(s2, 2 * s1);
        }
    }
}

//! Binary message payloads exchanged between prover and verifier.
//!
//! Integers are unsigned LEB128. A bit string is its bit length followed by
//! the bits packed MSB-first. Each payload starts with a one-byte tag.

use crate::bits::BitString;
use crate::machine::Program;

use super::{Claim, DepthClaim, MinimalityClaim, OutputClaim, ProverTable, TableRow};

const TAG_OUTPUT_CLAIM: u8 = 0x01;
const TAG_MINIMALITY_CLAIM: u8 = 0x02;
const TAG_DEPTH_CLAIM: u8 = 0x03;
const TAG_TABLE_HEADER: u8 = 0x10;
const TAG_TABLE_ROW: u8 = 0x11;
const TAG_SAMPLE: u8 = 0x20;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn tag(mut self, tag: u8) -> Self {
        self.0.push(tag);
        self
    }

    fn uint(mut self, mut v: u64) -> Self {
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                self.0.push(byte);
                return self;
            }
            self.0.push(byte | 0x80);
        }
    }

    fn bits(self, b: &BitString) -> Self {
        let mut w = self.uint(b.len() as u64);
        w.0.extend(b.to_packed_bytes());
        w
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

type WireResult<T> = Result<T, String>;

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn byte(&mut self) -> WireResult<u8> {
        let b = *self.buf.get(self.pos).ok_or("payload ends early")?;
        self.pos += 1;
        Ok(b)
    }

    fn expect_tag(&mut self, tag: u8) -> WireResult<()> {
        let found = self.byte()?;
        if found != tag {
            return Err(format!("expected tag {tag:#04x}, found {found:#04x}"));
        }
        Ok(())
    }

    fn uint(&mut self) -> WireResult<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.byte()?;
            v |= u64::from(b & 0x7f)
                .checked_shl(shift)
                .filter(|x| x >> shift == u64::from(b & 0x7f))
                .ok_or("integer overflows 64 bits")?;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err("integer overflows 64 bits".into())
    }

    fn usize(&mut self) -> WireResult<usize> {
        usize::try_from(self.uint()?).map_err(|_| "length does not fit in memory".to_string())
    }

    fn bits(&mut self) -> WireResult<BitString> {
        let len = self.usize()?;
        let nbytes = len.div_ceil(8);
        let end = self.pos.checked_add(nbytes).ok_or("length overflow")?;
        let chunk = self.buf.get(self.pos..end).ok_or("bit string runs past the payload")?;
        self.pos = end;
        let b = BitString::from_packed_bytes(chunk, len).expect("chunk sized for len");
        if b.to_packed_bytes() != chunk {
            return Err("non-zero padding bits".into());
        }
        Ok(b)
    }

    fn finish(self) -> WireResult<()> {
        if self.pos != self.buf.len() {
            return Err(format!("{} trailing bytes", self.buf.len() - self.pos));
        }
        Ok(())
    }
}

pub fn encode_claim(claim: &Claim) -> Vec<u8> {
    let w = Writer::default();
    match claim {
        Claim::Output(c) => w
            .tag(TAG_OUTPUT_CLAIM)
            .bits(c.p.bits())
            .bits(&c.x)
            .uint(c.t),
        Claim::Minimality(c) => w
            .tag(TAG_MINIMALITY_CLAIM)
            .bits(c.p.bits())
            .bits(&c.x)
            .uint(c.t),
        Claim::Depth(c) => w
            .tag(TAG_DEPTH_CLAIM)
            .bits(&c.x)
            .uint(c.t)
            .uint(c.s as u64)
            .uint(c.k_hat as u64),
    }
    .0
}

pub fn decode_claim(payload: &[u8]) -> WireResult<Claim> {
    let mut r = Reader::new(payload);
    let claim = match r.byte()? {
        TAG_OUTPUT_CLAIM => Claim::Output(OutputClaim {
            p: Program::new(r.bits()?),
            x: r.bits()?,
            t: r.uint()?,
        }),
        TAG_MINIMALITY_CLAIM => Claim::Minimality(MinimalityClaim {
            p: Program::new(r.bits()?),
            x: r.bits()?,
            t: r.uint()?,
        }),
        TAG_DEPTH_CLAIM => Claim::Depth(DepthClaim {
            x: r.bits()?,
            t: r.uint()?,
            s: r.usize()?,
            k_hat: r.usize()?,
        }),
        other => return Err(format!("unknown claim tag {other:#04x}")),
    };
    r.finish()?;
    Ok(claim)
}

pub fn encode_table_header(table: &ProverTable) -> Vec<u8> {
    Writer::default()
        .tag(TAG_TABLE_HEADER)
        .uint(table.max_program_bits as u64)
        .uint(table.budget)
        .uint(table.rows.len() as u64)
        .0
}

pub fn encode_row(row: &TableRow) -> Vec<u8> {
    Writer::default()
        .tag(TAG_TABLE_ROW)
        .bits(row.program.bits())
        .bits(&row.output)
        .uint(row.steps)
        .0
}

/// Header fields: (max program bits, step budget, row count).
pub fn decode_table_header(payload: &[u8]) -> WireResult<(usize, u64, usize)> {
    let mut r = Reader::new(payload);
    r.expect_tag(TAG_TABLE_HEADER)?;
    let fields = (r.usize()?, r.uint()?, r.usize()?);
    r.finish()?;
    Ok(fields)
}

pub fn decode_row(payload: &[u8]) -> WireResult<TableRow> {
    let mut r = Reader::new(payload);
    r.expect_tag(TAG_TABLE_ROW)?;
    let row = TableRow {
        program: Program::new(r.bits()?),
        output: r.bits()?,
        steps: r.uint()?,
    };
    r.finish()?;
    Ok(row)
}

pub fn encode_sample(indices: &[usize]) -> Vec<u8> {
    indices
        .iter()
        .fold(
            Writer::default().tag(TAG_SAMPLE).uint(indices.len() as u64),
            |w, &i| w.uint(i as u64),
        )
        .0
}

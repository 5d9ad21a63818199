//! Reference implementations used to check the library. Nothing here calls
//! into `depthlab`; the point is to derive expected values a second way.

#![allow(dead_code)]

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Halted { output: String, steps: u64, consumed: usize },
    Timeout(u64),
    Underflow,
    Overflow,
    Unmatched,
}

/// Straight-line UM-1 interpreter over a whole bit string. Opcodes are
/// decoded only when the instruction pointer first reaches them.
pub fn oracle_run(bits: &str, max_steps: u64, output_cap: usize) -> Outcome {
    let bits: Vec<u8> = bits.bytes().map(|b| b - b'0').collect();
    let mut ops: Vec<u8> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut partner: BTreeMap<usize, usize> = BTreeMap::new();
    let (mut ip, mut a, mut b, mut steps) = (0usize, 0u64, 0u64, 0u64);
    let mut out = String::new();
    let mut skipping: Option<usize> = None;
    loop {
        if steps >= max_steps {
            return Outcome::Timeout(steps);
        }
        if ip == ops.len() {
            let start = 3 * ops.len();
            if start + 3 > bits.len() {
                return Outcome::Underflow;
            }
            let op = bits[start] * 4 + bits[start + 1] * 2 + bits[start + 2];
            match op {
                6 => open.push(ip),
                7 => {
                    let Some(o) = open.pop() else { return Outcome::Unmatched };
                    partner.insert(o, ip);
                    partner.insert(ip, o);
                }
                _ => {}
            }
            ops.push(op);
        }
        let op = ops[ip];
        steps += 1;
        if let Some(depth) = skipping {
            skipping = match (op, depth) {
                (6, d) => Some(d + 1),
                (7, 0) => None,
                (7, d) => Some(d - 1),
                (_, d) => Some(d),
            };
            ip += 1;
            continue;
        }
        match op {
            0 => {
                return Outcome::Halted { output: out, steps, consumed: 3 * ops.len() };
            }
            1 | 2 => {
                if out.len() == output_cap {
                    return Outcome::Overflow;
                }
                out.push(if op == 2 { '1' } else { '0' });
            }
            3 => a += 1,
            4 => a = a.saturating_sub(1),
            5 => std::mem::swap(&mut a, &mut b),
            6 => {
                if a == 0 {
                    skipping = Some(0);
                }
            }
            _ => {
                if a != 0 {
                    ip = partner[&ip];
                    continue;
                }
            }
        }
        ip += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleHalt {
    pub program: String,
    pub output: String,
    pub steps: u64,
}

pub fn bitstrings(len: usize) -> impl Iterator<Item = String> {
    (0u64..1 << len).map(move |v| {
        (0..len)
            .rev()
            .map(|i| if (v >> i) & 1 == 1 { '1' } else { '0' })
            .collect()
    })
}

fn shortlex(a: &str, b: &str) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Runs every bit string of length at most `max_bits` separately and keeps
/// those that halt having read exactly their own bits. Sorted by program in
/// shortlex order.
pub fn naive_census(max_bits: usize, max_steps: u64, output_cap: usize) -> Vec<OracleHalt> {
    let mut halts = Vec::new();
    for len in 0..=max_bits {
        for p in bitstrings(len) {
            if let Outcome::Halted { output, steps, consumed } = oracle_run(&p, max_steps, output_cap) {
                if consumed == len {
                    halts.push(OracleHalt { program: p, output, steps });
                }
            }
        }
    }
    halts.sort_by(|a, b| shortlex(&a.program, &b.program));
    halts
}

/// Sum of `2^(max_bits - |p|)` over the given programs, so that the Kraft
/// mass is this value over `2^max_bits`.
pub fn scaled_mass<'a>(programs: impl IntoIterator<Item = &'a str>, max_bits: usize) -> u128 {
    programs.into_iter().map(|p| 1u128 << (max_bits - p.len())).sum()
}

pub fn shortest_length(halts: &[OracleHalt], x: &str) -> Option<usize> {
    halts.iter().filter(|h| h.output == x).map(|h| h.program.len()).min()
}

/// `(numerator, denominator)` of the probability mass of programs printing `x`.
pub fn probability(halts: &[OracleHalt], x: &str, max_bits: usize) -> (u128, u128) {
    let mass = scaled_mass(halts.iter().filter(|h| h.output == x).map(|h| h.program.as_str()), max_bits);
    (mass, 1u128 << max_bits)
}

/// Fewest steps among programs for `x` within `s` bits of the shortest.
pub fn depth(halts: &[OracleHalt], x: &str, s: usize) -> Option<u64> {
    let k = shortest_length(halts, x)?;
    halts
        .iter()
        .filter(|h| h.output == x && h.program.len() <= k + s)
        .map(|h| h.steps)
        .min()
}

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Reduced `p/q` text, the same shape the library prints.
pub fn fraction(num: u128, den: u128) -> String {
    let g = gcd(num, den).max(1);
    if num == 0 {
        return "0/1".into();
    }
    format!("{}/{}", num / g, den / g)
}

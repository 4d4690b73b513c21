//! Line-oriented text format for codebooks.
//!
//! ```text
//! rgv-codebook 1
//! k 2
//! n 4
//! alphabets 2 2
//! palette 2,2
//! mu 0 0 0
//! thresholds -0.01 -0.3565735902799727 -0.01
//! delta 0.01
//! seed 42
//! distance neg_mi
//! messages 4
//! 00 0011 0
//! ...
//! ```
//!
//! Message lines hold the source sequence, the codeword and the source-type
//! index; symbols are written as base-36 digits. Floats use the shortest
//! representation that parses back to the same value.

use std::fmt::Write as _;

use super::{Codebook, CodebookEntry, CodebookHeader};
use crate::error::{Error, Result};
use crate::types::Symbol;

const MAGIC: &str = "rgv-codebook 1";

fn digits(seq: &[Symbol]) -> String {
    seq.iter()
        .map(|&s| std::char::from_digit(s as u32, 36).expect("symbol below 36"))
        .collect()
}

fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

impl Codebook {
    /// Serializes the codebook; alphabets above 36 symbols are rejected.
    pub fn to_text(&self) -> Result<String> {
        let h = &self.header;
        if h.source_alphabet > 36 || h.input_alphabet > 36 {
            return Err(Error::InvalidConfig(
                "text format supports alphabets of at most 36 symbols".into(),
            ));
        }
        let mut s = String::new();
        let join = |v: &[String]| v.join(" ");
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "k {}", h.k).unwrap();
        writeln!(s, "n {}", h.n).unwrap();
        writeln!(s, "alphabets {} {}", h.source_alphabet, h.input_alphabet).unwrap();
        let palette: Vec<String> = h
            .palette
            .iter()
            .map(|t| t.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
            .collect();
        writeln!(s, "palette {}", join(&palette)).unwrap();
        let mu: Vec<String> = h.assignment.iter().map(usize::to_string).collect();
        writeln!(s, "mu {}", join(&mu)).unwrap();
        let th: Vec<String> = h.thresholds.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(s, "thresholds {}", join(&th)).unwrap();
        writeln!(s, "delta {}", fmt_f64(h.delta)).unwrap();
        match h.seed {
            Some(seed) => writeln!(s, "seed {seed}").unwrap(),
            None => writeln!(s, "seed none").unwrap(),
        }
        writeln!(s, "distance {}", h.distance).unwrap();
        writeln!(s, "messages {}", self.entries.len()).unwrap();
        for e in &self.entries {
            writeln!(
                s,
                "{} {} {}",
                digits(&e.message),
                digits(&e.codeword),
                e.type_index
            )
            .unwrap();
        }
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Codebook> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, msg: &str| Error::CodebookFormat {
            line,
            msg: msg.to_string(),
        };
        let mut next = |key: &str| -> Result<(usize, String)> {
            let (no, l) = lines
                .next()
                .ok_or_else(|| err(0, &format!("missing `{key}` line")))?;
            if key.is_empty() {
                return Ok((no, l.to_string()));
            }
            let rest = l
                .strip_prefix(key)
                .and_then(|r| {
                    r.strip_prefix(' ')
                        .or(if r.is_empty() { Some("") } else { None })
                })
                .ok_or_else(|| err(no, &format!("expected `{key}`")))?;
            Ok((no, rest.to_string()))
        };
        fn num<T: std::str::FromStr>(no: usize, s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::CodebookFormat {
                line: no,
                msg: format!("cannot parse `{s}`"),
            })
        }
        let (no, magic) = next("")?;
        if magic != MAGIC {
            return Err(err(no, "not an rgv-codebook file"));
        }
        let (no, k) = next("k")?;
        let k: u64 = num(no, &k)?;
        let (no, n) = next("n")?;
        let n: u64 = num(no, &n)?;
        let (no, al) = next("alphabets")?;
        let al: Vec<usize> = al.split(' ').map(|t| num(no, t)).collect::<Result<_>>()?;
        if al.len() != 2 {
            return Err(err(no, "expected two alphabet sizes"));
        }
        let (no, pal) = next("palette")?;
        let palette: Vec<Vec<u64>> = pal
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| t.split(',').map(|c| num(no, c)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let (no, mu) = next("mu")?;
        let assignment: Vec<usize> = mu
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| num(no, t))
            .collect::<Result<_>>()?;
        let (no, th) = next("thresholds")?;
        let thresholds: Vec<f64> = th
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| num(no, t))
            .collect::<Result<_>>()?;
        let (no, d) = next("delta")?;
        let delta: f64 = num(no, &d)?;
        let (no, sd) = next("seed")?;
        let seed = if sd == "none" {
            None
        } else {
            Some(num(no, &sd)?)
        };
        let (_, distance) = next("distance")?;
        let (no, cnt) = next("messages")?;
        let count: usize = num(no, &cnt)?;
        let parse_seq = |no: usize, s: &str, size: usize| -> Result<Vec<Symbol>> {
            s.chars()
                .map(|ch| {
                    ch.to_digit(36)
                        .filter(|&v| (v as usize) < size)
                        .map(|v| v as Symbol)
                        .ok_or_else(|| err(no, &format!("bad symbol `{ch}`")))
                })
                .collect()
        };
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (no, line) = next("")?;
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() != 3 {
                return Err(err(no, "expected `message codeword type`"));
            }
            let message = parse_seq(no, parts[0], al[0])?;
            let codeword = parse_seq(no, parts[1], al[1])?;
            if message.len() as u64 != k || codeword.len() as u64 != n {
                return Err(err(no, "sequence length does not match k or n"));
            }
            let type_index: usize = num(no, parts[2])?;
            entries.push(CodebookEntry {
                message,
                codeword,
                type_index,
            });
        }
        if let Some((no, l)) = lines.next() {
            if !l.trim().is_empty() {
                return Err(err(no, "trailing content"));
            }
        }
        let header = CodebookHeader {
            k,
            n,
            source_alphabet: al[0],
            input_alphabet: al[1],
            palette,
            assignment,
            thresholds,
            delta,
            seed,
            distance,
        };
        Codebook::from_parts(header, entries)
    }
}

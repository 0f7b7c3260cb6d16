//! Sample files and JSON helpers.
//!
//! A sample file starts with one header line such as
//! `# n=4 alphabet=pm1 seed=7 provenance=exact` (or `alphabet=3` for
//! symbols, and `provenance=gibbs burn_in=400 thinning=2` for chains),
//! followed by one space-separated sample per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::samplers::{Alphabet, Provenance, SampleBatch};

pub fn header_line(batch: &SampleBatch) -> String {
    let alphabet = match batch.alphabet {
        Alphabet::Spin => "pm1".to_string(),
        Alphabet::Symbols(k) => k.to_string(),
    };
    let prov = match batch.provenance {
        Provenance::Exact => "provenance=exact".to_string(),
        Provenance::Gibbs { burn_in, thinning } => {
            format!("provenance=gibbs burn_in={burn_in} thinning={thinning}")
        }
    };
    format!("# n={} alphabet={} seed={} {}", batch.n, alphabet, batch.seed, prov)
}

pub fn write_samples<W: Write>(batch: &SampleBatch, out: W) -> Result<()> {
    write_samples_annotated(batch, &[], out)
}

/// Like [`write_samples`], with extra `# ...` comment lines after the
/// header. Readers skip them.
pub fn write_samples_annotated<W: Write>(batch: &SampleBatch, comments: &[String], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", header_line(batch))?;
    for c in comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    let mut line = String::with_capacity(batch.n * 3);
    for row in batch.rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            match v {
                1 => line.push('1'),
                -1 => line.push_str("-1"),
                other => line.push_str(&other.to_string()),
            }
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(usize, Alphabet, u64, Provenance)> {
    let bad = |msg: String| Error::Parse { line: 1, msg };
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| bad("missing '#' header line".into()))?;
    let mut n = None;
    let mut alphabet = None;
    let mut seed = 0u64;
    let mut prov = None;
    let mut burn_in = 0usize;
    let mut thinning = 1usize;
    for tok in body.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed header field {tok:?}")))?;
        let num = |v: &str| v.parse::<u64>().map_err(|_| bad(format!("bad number in {tok:?}")));
        match key {
            "n" => n = Some(num(val)? as usize),
            "alphabet" => {
                alphabet = Some(if val == "pm1" {
                    Alphabet::Spin
                } else {
                    let k = num(val)?;
                    if !(1..=i8::MAX as u64).contains(&k) {
                        return Err(bad(format!("unsupported alphabet size {k}")));
                    }
                    Alphabet::Symbols(k as u8)
                })
            }
            "seed" => seed = num(val)?,
            "provenance" => prov = Some(val.to_string()),
            "burn_in" => burn_in = num(val)? as usize,
            "thinning" => thinning = num(val)? as usize,
            _ => {}
        }
    }
    let n = n.ok_or_else(|| bad("header lacks n=".into()))?;
    let alphabet = alphabet.ok_or_else(|| bad("header lacks alphabet=".into()))?;
    let provenance = match prov.as_deref() {
        None | Some("exact") => Provenance::Exact,
        Some("gibbs") => Provenance::Gibbs { burn_in, thinning },
        Some(other) => return Err(bad(format!("unknown provenance {other:?}"))),
    };
    Ok((n, alphabet, seed, provenance))
}

pub fn read_samples<R: Read>(input: R) -> Result<SampleBatch> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty sample file".into(),
    })??;
    let (n, alphabet, seed, provenance) = parse_header(header.trim())?;
    let mut data = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let ln = idx + 2;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let start = data.len();
        for tok in line.split_whitespace() {
            let v: i8 = tok.trim_start_matches('+').parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad value {tok:?}"),
            })?;
            if !alphabet.contains(v) {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("value {v} outside the alphabet"),
                });
            }
            data.push(v);
        }
        if data.len() - start != n {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {n} values, found {}", data.len() - start),
            });
        }
    }
    SampleBatch::new(n, alphabet, data, seed, provenance)
}

pub fn save_samples(path: &Path, batch: &SampleBatch) -> Result<()> {
    write_samples(batch, File::create(path)?)
}

pub fn load_samples(path: &Path) -> Result<SampleBatch> {
    read_samples(File::open(path)?)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(f)?)
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_round_trip() {
        let b = SampleBatch::new(3, Alphabet::Spin, vec![1, -1, 1, -1, -1, -1], 7, Provenance::Exact).unwrap();
        let mut buf = Vec::new();
        write_samples(&b, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "# n=3 alphabet=pm1 seed=7 provenance=exact\n1 -1 1\n-1 -1 -1\n");
        assert_eq!(read_samples(&buf[..]).unwrap(), b);
    }

    #[test]
    fn symbol_round_trip_with_gibbs_header() {
        let b = SampleBatch::new(
            2,
            Alphabet::Symbols(12),
            vec![1, 12, 3, 7],
            99,
            Provenance::Gibbs { burn_in: 200, thinning: 1 },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_samples(&b, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("# n=2 alphabet=12 seed=99 provenance=gibbs burn_in=200 thinning=1\n1 12\n"));
        assert_eq!(read_samples(&buf[..]).unwrap(), b);
    }

    #[test]
    fn comment_lines_are_skipped() {
        let b = SampleBatch::new(2, Alphabet::Spin, vec![1, -1], 0, Provenance::Exact).unwrap();
        let mut buf = Vec::new();
        write_samples_annotated(&b, &["config {\"a\":1}".to_string()], &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains("\n# config {\"a\":1}\n1 -1\n"));
        assert_eq!(read_samples(&buf[..]).unwrap(), b);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let text = "# n=2 alphabet=pm1\n1 1\n1 0\n";
        assert!(matches!(read_samples(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let text = "# n=2 alphabet=pm1\n1 1 1\n";
        assert!(matches!(read_samples(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(read_samples("1 1\n".as_bytes()).is_err());
    }
}

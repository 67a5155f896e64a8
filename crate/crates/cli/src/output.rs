use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Sink {
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Sink {
    fn open(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => {
                Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?))
            }
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    /// Writes `json` pretty-printed, or the CSV table built from `header` and `rows`.
    pub fn emit<J: Serialize + ?Sized>(&self, json: &J, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = self.open()?;
        match self.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, json)?;
                writeln!(w)?;
            }
            Format::Csv => {
                let mut csv = csv::Writer::from_writer(&mut w);
                csv.write_record(header)?;
                for r in rows {
                    csv.write_record(r)?;
                }
                csv.flush()?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Fixed decimals with trailing zeros (and a bare point) removed.
pub fn trimmed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn fixed(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

/// Shortest round-trip representation, scientific outside `[1e-4, 1e7)`.
pub fn full(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e7).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimming() {
        assert_eq!(trimmed(1.0, 4), "1");
        assert_eq!(trimmed(1.9375, 4), "1.9375");
        assert_eq!(trimmed(3.0 / 63.0, 4), "0.0476");
        assert_eq!(trimmed(0.2, 4), "0.2");
        assert_eq!(trimmed(-0.00001, 2), "0");
        assert_eq!(fixed(0.0037, 4), "0.0037");
        assert_eq!(full(2.5e-8), "2.5e-8");
        assert_eq!(full(0.125), "0.125");
        assert_eq!(full(3.8e11), "3.8e11");
        assert_eq!(full(0.0), "0");
    }
}

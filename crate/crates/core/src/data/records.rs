use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenize;
use crate::color::{LabColor, Palette};
use crate::{Error, Result};

/// Test-set size used once the corpus reaches full scale.
pub const FULL_TEST_SIZE: usize = 992;

/// One text paired with its five-color palette.
#[derive(Debug, Clone, PartialEq)]
pub struct PatRecord {
    pub text: String,
    pub palette: Palette,
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    text: String,
    palette: Vec<LabColor>,
}

impl PatRecord {
    pub fn new(text: impl Into<String>, palette: Palette) -> Result<Self> {
        let text = text.into();
        if tokenize(&text).is_empty() {
            return Err(Error::EmptyText(text));
        }
        Ok(Self { text, palette })
    }

    fn from_line(line: &str, lineno: usize) -> Result<Self> {
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        if raw.palette.len() != 5 {
            return Err(Error::PaletteArity {
                line: Some(lineno),
                found: raw.palette.len(),
            });
        }
        let palette = Palette::from_slice(&raw.palette).map_err(|e| parse_err(e.to_string()))?;
        PatRecord::new(raw.text, palette).map_err(|e| parse_err(e.to_string()))
    }

    fn to_line(&self) -> String {
        serde_json::to_string(&RawRecord {
            text: self.text.clone(),
            palette: self.palette.colors().to_vec(),
        })
        .expect("serializable")
    }
}

/// Parses newline-delimited `{"text": .., "palette": [[L,a,b] x5]}` records.
/// Blank lines are skipped; errors carry 1-based line numbers.
pub fn parse_pat(reader: impl BufRead) -> Result<Vec<PatRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(PatRecord::from_line(&line, i + 1)?);
    }
    Ok(out)
}

pub fn load_pat(path: impl AsRef<Path>) -> Result<Vec<PatRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    parse_pat(BufReader::new(file))
}

pub fn write_pat(records: &[PatRecord], mut writer: impl Write) -> Result<()> {
    for r in records {
        writeln!(writer, "{}", r.to_line())?;
    }
    Ok(())
}

/// Seeded shuffle into `(train, test)`. The test share is
/// [`FULL_TEST_SIZE`] at full corpus scale and 10% (rounded up) otherwise.
pub fn split(records: &[PatRecord], seed: u64) -> Result<(Vec<PatRecord>, Vec<PatRecord>)> {
    let n = records.len();
    let test_size = if n >= FULL_TEST_SIZE * 10 + 1 {
        FULL_TEST_SIZE
    } else {
        n.div_ceil(10)
    };
    if n <= test_size {
        return Err(Error::TooFewRecords {
            found: n,
            needed: test_size,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order[..test_size].iter().map(|&i| records[i].clone()).collect();
    let train = order[test_size..].iter().map(|&i| records[i].clone()).collect();
    Ok((train, test))
}

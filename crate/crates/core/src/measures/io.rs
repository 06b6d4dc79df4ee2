//! Plain-text forms: a measure is CSV rows `support,weight`; a measure set is
//! a small header followed by one such CSV block per extreme.

use std::io::{Read, Write};

use super::{DiscreteMeasure, MeasureSet};
use crate::error::{Error, Result};
use crate::systems::PhaseSpace;

impl DiscreteMeasure {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["support", "weight"])?;
        for (x, m) in self.atoms() {
            w.write_record([x.to_string(), m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Reads `support,weight` rows; lines starting with `#` are ignored.
    pub fn read_csv<R: Read>(space: PhaseSpace, input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(i + 2, |p| p.line() as usize);
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse { line, message: "expected two columns".into() })?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse { line, message: e.to_string() })
            };
            support.push(field(0)?);
            weights.push(field(1)?);
        }
        Self::new(space, support, weights)
    }
}

impl MeasureSet {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "space = {}\nhull = {}\ncount = {}\n",
            self.space().name(),
            self.hull(),
            self.len()
        );
        for (k, m) in self.extremes().iter().enumerate() {
            s.push_str(&format!("\n[measure {k}]\n"));
            s.push_str(&m.to_csv_string());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line: line + 1, message };
        let mut space = None;
        let mut hull = None;
        let mut count = None;
        let mut blocks: Vec<(usize, String)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("[measure").and_then(|r| r.strip_suffix(']')) {
                let k: usize = rest.trim().parse().map_err(|_| perr(ln, format!("bad block header `{line}`")))?;
                if k != blocks.len() {
                    return Err(perr(ln, format!("expected measure {} but found {k}", blocks.len())));
                }
                blocks.push((ln, String::new()));
                continue;
            }
            if let Some((_, body)) = blocks.last_mut() {
                if !line.is_empty() {
                    body.push_str(line);
                    body.push('\n');
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| perr(ln, format!("expected `key = value`, got `{line}`")))?;
            match key {
                "space" => {
                    space = Some(match value {
                        "interval" => PhaseSpace::Interval,
                        "circle" => PhaseSpace::Circle,
                        _ => return Err(perr(ln, format!("unknown space `{value}`"))),
                    })
                }
                "hull" => hull = Some(value.parse::<bool>().map_err(|e| perr(ln, e.to_string()))?),
                "count" => count = Some(value.parse::<usize>().map_err(|e| perr(ln, e.to_string()))?),
                _ => return Err(perr(ln, format!("unknown key `{key}`"))),
            }
        }
        let space = space.ok_or_else(|| perr(0, "missing `space`".into()))?;
        if let Some(c) = count {
            if c != blocks.len() {
                return Err(perr(0, format!("count = {c} but {} measure blocks", blocks.len())));
            }
        }
        let mut extremes = Vec::with_capacity(blocks.len());
        for (ln, body) in blocks {
            let m = DiscreteMeasure::read_csv(space, body.as_bytes()).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse { line: ln + 1 + line, message },
                other => other,
            })?;
            extremes.push(m);
        }
        MeasureSet::new(extremes, hull.unwrap_or(false))
    }
}

//! Plain-text signals: one sample per line, optional `K`/`D` region tag.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use tinct::descent1d::{Region, Signal1D};

pub struct TaggedSamples {
    pub values: Vec<f64>,
    pub regions: Vec<Region>,
}

pub fn parse(text: &str) -> Result<TaggedSamples> {
    let mut values = Vec::new();
    let mut regions = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let value: f64 = fields
            .next()
            .unwrap_or_default()
            .parse()
            .with_context(|| format!("line {}: bad sample {line:?}", n + 1))?;
        let region = match fields.next() {
            None | Some("K") | Some("k") => Region::Known,
            Some("D") | Some("d") => Region::Distorted,
            Some(tag) => bail!("line {}: unknown region tag {tag:?}", n + 1),
        };
        if fields.next().is_some() {
            bail!("line {}: expected `value [K|D]`", n + 1);
        }
        values.push(value);
        regions.push(region);
    }
    if values.is_empty() {
        bail!("signal has no samples");
    }
    Ok(TaggedSamples { values, regions })
}

impl TaggedSamples {
    pub fn into_signal(self) -> Result<Signal1D> {
        Ok(Signal1D::new(self.values, self.regions)?)
    }
}

/// Columns `index initial restored region`.
pub fn format_restored(signal: &Signal1D, initial: &[f64], restored: &[f64]) -> String {
    let mut out = String::from("# index initial restored region\n");
    for (i, ((v0, v), r)) in initial.iter().zip(restored).zip(signal.region()).enumerate() {
        let tag = match r {
            Region::Known => 'K',
            Region::Distorted => 'D',
        };
        let _ = writeln!(out, "{i} {v0} {v} {tag}");
    }
    out
}

pub fn format_trace(trace: &[f64]) -> String {
    let mut out = String::from("# sweep max_residual\n");
    for (i, r) in trace.iter().enumerate() {
        let _ = writeln!(out, "{i} {r}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_default_to_known() {
        let s = parse("# header\n0.5\n0.25 D\n\n1 K\n").unwrap();
        assert_eq!(s.values, vec![0.5, 0.25, 1.0]);
        assert_eq!(s.regions, vec![Region::Known, Region::Distorted, Region::Known]);
    }

    #[test]
    fn rejects_unknown_tags_and_extra_columns() {
        assert!(parse("0.5 X\n").is_err());
        assert!(parse("0.5 K 3\n").is_err());
        assert!(parse("abc\n").is_err());
        assert!(parse("# only a comment\n").is_err());
    }
}

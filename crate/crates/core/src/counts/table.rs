//! Count-table file format.
//!
//! UTF-8 CSV with a metadata comment line and a mandatory header:
//!
//! ```text
//! # bases=mask:mask, l_a=100, l_b=100
//! kind,angle_a_deg,angle_b_deg,integration_s,coincidences,singles_a,singles_b,corrected
//! mask:mask,0,0,30,3521,115230,114987,false
//! ```
//!
//! `kind` holds the per-arm analyzer labels `<a>:<b>` with each side `mask`
//! or `polarizer`; the `bases` line repeats them together with the mask
//! order (`l_a`/`l_b` an integer, or `pol` for a polarizer arm). Angles are
//! degrees. Empty singles fields mean the singles were not recorded. The
//! `corrected` column is written on output and optional on input. Numbers
//! are written in shortest round-trip form, so read-back is lossless.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::ScanRecord;
use crate::error::{Error, Result};

/// Analyzer type of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmKind {
    Mask { l: u32 },
    Polarizer,
}

impl ArmKind {
    pub fn label(&self) -> &'static str {
        match self {
            ArmKind::Mask { .. } => "mask",
            ArmKind::Polarizer => "polarizer",
        }
    }

    /// Fringe order: l for a mask, 1 for a polarizer (180-degree period).
    pub fn l_eff(&self) -> u32 {
        match self {
            ArmKind::Mask { l } => *l,
            ArmKind::Polarizer => 1,
        }
    }

    /// Fringe period in the analyzer angle, degrees.
    pub fn period_deg(&self) -> f64 {
        180.0 / f64::from(self.l_eff())
    }

    fn l_field(&self) -> String {
        match self {
            ArmKind::Mask { l } => l.to_string(),
            ArmKind::Polarizer => "pol".to_string(),
        }
    }

    fn parse_l_field(text: &str, line: usize) -> Result<ArmKind> {
        if text == "pol" {
            return Ok(ArmKind::Polarizer);
        }
        let l: u32 = text.parse().map_err(|_| Error::Csv {
            line,
            message: format!("invalid mask order '{text}' (integer or 'pol')"),
        })?;
        if l == 0 {
            return Err(Error::Csv {
                line,
                message: "mask order must be >= 1".into(),
            });
        }
        Ok(ArmKind::Mask { l })
    }
}

impl fmt::Display for ArmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A validated set of scan records with their per-arm analyzer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pub arm_a: ArmKind,
    pub arm_b: ArmKind,
    pub records: Vec<ScanRecord>,
}

const HEADER: &str = "kind,angle_a_deg,angle_b_deg,integration_s,coincidences,singles_a,singles_b";

impl CountTable {
    pub fn new(arm_a: ArmKind, arm_b: ArmKind, records: Vec<ScanRecord>) -> Self {
        Self {
            arm_a,
            arm_b,
            records,
        }
    }

    pub fn kind_label(&self) -> String {
        format!("{}:{}", self.arm_a.label(), self.arm_b.label())
    }

    /// The analyzer kind on the given sweep axis.
    pub fn kind_on_axis(&self, axis: super::Axis) -> ArmKind {
        match axis {
            super::Axis::A => self.arm_a,
            super::Axis::B => self.arm_b,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)
    }

    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        writeln!(
            out,
            "# bases={}, l_a={}, l_b={}",
            self.kind_label(),
            self.arm_a.l_field(),
            self.arm_b.l_field()
        )?;
        writeln!(out, "{HEADER},corrected")?;
        let kind = self.kind_label();
        for r in &self.records {
            let sa = r.singles_a.map(|v| v.to_string()).unwrap_or_default();
            let sb = r.singles_b.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{kind},{},{},{},{},{sa},{sb},{}",
                r.angle_a_deg, r.angle_b_deg, r.integration_s, r.coincidences, r.corrected
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<CountTable> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn read_from(input: impl Read) -> Result<CountTable> {
        let reader = BufReader::new(input);
        let mut arm_kinds: Option<(ArmKind, ArmKind)> = None;
        let mut header_seen = false;
        let mut has_corrected_column = false;
        let mut records = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(comment) = text.strip_prefix('#') {
                if comment.trim_start().starts_with("bases=") {
                    arm_kinds = Some(parse_bases_line(comment.trim_start(), line_no)?);
                }
                continue;
            }
            if !header_seen {
                if !text.starts_with(HEADER) {
                    return Err(Error::Csv {
                        line: line_no,
                        message: format!("expected header '{HEADER}[,corrected]'"),
                    });
                }
                has_corrected_column = text == format!("{HEADER},corrected");
                header_seen = true;
                continue;
            }
            let (arm_a, arm_b) = arm_kinds.ok_or(Error::Csv {
                line: line_no,
                message: "missing '# bases=...' metadata line before data rows".into(),
            })?;
            records.push(parse_row(
                text,
                line_no,
                (arm_a, arm_b),
                has_corrected_column,
            )?);
        }
        if !header_seen {
            return Err(Error::Csv {
                line: 1,
                message: "missing header row".into(),
            });
        }
        let (arm_a, arm_b) = arm_kinds.ok_or(Error::Csv {
            line: 1,
            message: "missing '# bases=...' metadata line".into(),
        })?;
        Ok(CountTable {
            arm_a,
            arm_b,
            records,
        })
    }
}

fn parse_bases_line(text: &str, line: usize) -> Result<(ArmKind, ArmKind)> {
    // "bases=mask:mask, l_a=100, l_b=100"
    let mut bases: Option<(String, String)> = None;
    let mut l_a: Option<String> = None;
    let mut l_b: Option<String> = None;
    for part in text.split(',') {
        let part = part.trim();
        if let Some(v) = part.strip_prefix("bases=") {
            let (a, b) = v.split_once(':').ok_or(Error::Csv {
                line,
                message: format!("bases must be '<a>:<b>', got '{v}'"),
            })?;
            bases = Some((a.to_string(), b.to_string()));
        } else if let Some(v) = part.strip_prefix("l_a=") {
            l_a = Some(v.to_string());
        } else if let Some(v) = part.strip_prefix("l_b=") {
            l_b = Some(v.to_string());
        }
    }
    let (label_a, label_b) = bases.ok_or(Error::Csv {
        line,
        message: "missing bases=<a>:<b>".into(),
    })?;
    let l_a = l_a.ok_or(Error::Csv {
        line,
        message: "missing l_a=<int|pol>".into(),
    })?;
    let l_b = l_b.ok_or(Error::Csv {
        line,
        message: "missing l_b=<int|pol>".into(),
    })?;
    let arm_a = ArmKind::parse_l_field(&l_a, line)?;
    let arm_b = ArmKind::parse_l_field(&l_b, line)?;
    for (label, kind, name) in [(label_a, arm_a, "a"), (label_b, arm_b, "b")] {
        if label != kind.label() {
            return Err(Error::Csv {
                line,
                message: format!(
                    "bases label '{label}' for arm {name} conflicts with l_{name} field"
                ),
            });
        }
    }
    Ok((arm_a, arm_b))
}

fn parse_row(
    text: &str,
    line: usize,
    kinds: (ArmKind, ArmKind),
    has_corrected: bool,
) -> Result<ScanRecord> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    let expected = if has_corrected { 8 } else { 7 };
    if fields.len() != expected {
        return Err(Error::Csv {
            line,
            message: format!("expected {expected} fields, found {}", fields.len()),
        });
    }
    let expected_kind = format!("{}:{}", kinds.0.label(), kinds.1.label());
    if fields[0] != expected_kind {
        return Err(Error::Csv {
            line,
            message: format!(
                "kind '{}' does not match bases '{expected_kind}'",
                fields[0]
            ),
        });
    }
    let num = |idx: usize, name: &str| -> Result<f64> {
        fields[idx].parse::<f64>().map_err(|_| Error::Csv {
            line,
            message: format!("invalid {name} '{}'", fields[idx]),
        })
    };
    let angle_a_deg = num(1, "angle_a_deg")?;
    let angle_b_deg = num(2, "angle_b_deg")?;
    let integration_s = num(3, "integration_s")?;
    if !integration_s.is_finite() || integration_s <= 0.0 {
        return Err(Error::Csv {
            line,
            message: "integration_s must be positive".into(),
        });
    }
    let coincidences = num(4, "coincidences")?;
    let opt = |idx: usize, name: &str| -> Result<Option<f64>> {
        if fields[idx].is_empty() {
            return Ok(None);
        }
        num(idx, name).map(Some)
    };
    let singles_a = opt(5, "singles_a")?;
    let singles_b = opt(6, "singles_b")?;
    for (name, v) in [
        ("coincidences", Some(coincidences)),
        ("singles_a", singles_a),
        ("singles_b", singles_b),
    ] {
        if let Some(v) = v {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Csv {
                    line,
                    message: format!("negative or non-finite {name} ({v}) rejected"),
                });
            }
        }
    }
    let corrected = if has_corrected {
        match fields[7] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Csv {
                    line,
                    message: format!("corrected must be true/false, got '{other}'"),
                })
            }
        }
    } else {
        false
    };
    Ok(ScanRecord {
        angle_a_deg,
        angle_b_deg,
        integration_s,
        coincidences,
        singles_a,
        singles_b,
        corrected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> CountTable {
        let rec = |a: f64, b: f64, c: f64| ScanRecord {
            angle_a_deg: a,
            angle_b_deg: b,
            integration_s: 30.0,
            coincidences: c,
            singles_a: Some(115_230.0),
            singles_b: Some(114_987.0),
            corrected: false,
        };
        CountTable::new(
            ArmKind::Mask { l: 100 },
            ArmKind::Mask { l: 100 },
            vec![
                rec(0.0, 0.0, 3521.0),
                rec(0.0, 0.45, 1802.5),
                rec(0.0, 0.9, 112.0),
            ],
        )
    }

    #[test]
    fn round_trip_is_lossless() {
        let table = sample_table();
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        let back = CountTable::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn empty_table_round_trips() {
        let table = CountTable::new(ArmKind::Polarizer, ArmKind::Mask { l: 300 }, vec![]);
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# bases=polarizer:mask, l_a=pol, l_b=300\n"));
        let back = CountTable::read_from(buf.as_slice()).unwrap();
        assert!(back.records.is_empty());
        assert_eq!(back.arm_a, ArmKind::Polarizer);
        assert_eq!(back.arm_b, ArmKind::Mask { l: 300 });
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let text = "\
# bases=mask:mask, l_a=10, l_b=10
kind,angle_a_deg,angle_b_deg,integration_s,coincidences,singles_a,singles_b
mask:mask,0,0,30,100,1000,1000
mask:mask,0,oops,30,100,1000,1000
";
        let err = CountTable::read_from(text.as_bytes()).unwrap_err();
        match err {
            Error::Csv { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("angle_b_deg"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_counts_rejected_with_line() {
        let text = "\
# bases=mask:mask, l_a=10, l_b=10
kind,angle_a_deg,angle_b_deg,integration_s,coincidences,singles_a,singles_b
mask:mask,0,0,30,-5,1000,1000
";
        let err = CountTable::read_from(text.as_bytes()).unwrap_err();
        match err {
            Error::Csv { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("coincidences"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_metadata_rejected() {
        let text = "\
kind,angle_a_deg,angle_b_deg,integration_s,coincidences,singles_a,singles_b
mask:mask,0,0,30,5,1000,1000
";
        assert!(matches!(
            CountTable::read_from(text.as_bytes()),
            Err(Error::Csv { .. })
        ));
    }

    #[test]
    fn empty_singles_become_none() {
        let text = "\
# bases=mask:polarizer, l_a=300, l_b=pol
kind,angle_a_deg,angle_b_deg,integration_s,coincidences,singles_a,singles_b
mask:polarizer,0,45,60,12,,
";
        let table = CountTable::read_from(text.as_bytes()).unwrap();
        assert_eq!(table.records[0].singles_a, None);
        assert_eq!(table.records[0].singles_b, None);
        assert_eq!(table.arm_b, ArmKind::Polarizer);
        assert_eq!(table.arm_a.period_deg(), 0.6);
        assert_eq!(table.arm_b.period_deg(), 180.0);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let text = "\
# bases=mask:mask, l_a=10, l_b=10
kind,angle_a_deg,angle_b_deg,integration_s,coincidences,singles_a,singles_b
polarizer:mask,0,0,30,5,1000,1000
";
        let err = CountTable::read_from(text.as_bytes()).unwrap_err();
        match err {
            Error::Csv { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }
}

//! JSON and CSV file formats.
//!
//! Machine files print floats with 17 significant digits.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::momentgen::{EntrySource, MomentSequence, MomentTable, Provenance};
use crate::multi_index::MultiIndex;

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// 8 significant digits, for human-readable tables.
pub fn fmt_short(v: f64) -> String {
    format!("{v:.7e}")
}

/// Pretty JSON with every float written by [`fmt_f64`].
struct FullPrecision(PrettyFormatter<'static>);

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        w.write_all(fmt_f64(v as f64).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with full-precision floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub alpha: MultiIndex,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<EntrySource>,
}

/// On-disk moment file: the input prefix plus optional extended entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFile {
    pub n: usize,
    pub max_order: usize,
    pub provenance: Provenance,
    pub moments: Vec<MomentEntry>,
}

impl MomentFile {
    pub fn from_sequence(y: &MomentSequence) -> MomentFile {
        MomentFile {
            n: y.n(),
            max_order: y.max_order(),
            provenance: y.provenance().clone(),
            moments: y
                .iter()
                .map(|(a, v)| MomentEntry {
                    alpha: a.clone(),
                    value: v,
                    provenance: None,
                })
                .collect(),
        }
    }

    /// The prefix followed by extended entries not already in it, each
    /// tagged with its source.
    pub fn from_table(y: &MomentSequence, table: &MomentTable) -> MomentFile {
        let mut file = MomentFile::from_sequence(y);
        for e in &mut file.moments {
            e.provenance = Some(EntrySource::Input);
        }
        for (a, (v, src)) in &table.entries {
            if a.degree() > y.max_order() {
                file.moments.push(MomentEntry {
                    alpha: a.clone(),
                    value: *v,
                    provenance: Some(*src),
                });
            }
        }
        file
    }

    /// The complete prefix `|α| <= max_order`; entries above it are ignored.
    pub fn to_sequence(&self) -> Result<MomentSequence> {
        let mut slots: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for e in &self.moments {
            if e.alpha.dim() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: e.alpha.dim(),
                });
            }
            if e.alpha.degree() <= self.max_order && slots.insert(e.alpha.clone(), e.value).is_some() {
                return Err(Error::Format(format!("moment {} listed twice", e.alpha)));
            }
        }
        MomentSequence::from_fn(self.n, self.max_order, self.provenance.clone(), |a| {
            slots.get(a).copied().unwrap_or(f64::NAN)
        })
        .and_then(|y| {
            let missing = y.iter().find(|(_, v)| v.is_nan()).map(|(a, _)| a.clone());
            match missing {
                Some(alpha) => Err(Error::MissingMoment {
                    alpha,
                    max_order: self.max_order,
                }),
                None => Ok(y),
            }
        })
    }

    /// Entries above `max_order`.
    pub fn extra_entries(&self) -> MomentTable {
        let mut t = MomentTable::default();
        for e in &self.moments {
            if e.alpha.degree() > self.max_order {
                t.entries
                    .insert(e.alpha.clone(), (e.value, e.provenance.unwrap_or(EntrySource::Input)));
            }
        }
        t
    }
}

pub fn moments_to_json(y: &MomentSequence) -> Result<String> {
    to_json_string(&MomentFile::from_sequence(y))
}

pub fn moments_from_json(s: &str) -> Result<MomentSequence> {
    serde_json::from_str::<MomentFile>(s)?.to_sequence()
}

pub fn read_moment_file(path: &std::path::Path) -> Result<MomentFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

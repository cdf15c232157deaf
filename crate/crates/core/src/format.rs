//! JSON file formats for cones and triangulations.
//!
//! Integers that fit in ±2^53 are written as JSON numbers and larger ones as
//! decimal strings; both forms are accepted on input. Multiplicities are
//! always strings and dilations are `"num/den"`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bpft::TriangulationState;
use crate::cone::{DilationFactor, SimplicialCone};
use crate::error::{Error, Result};
use crate::linalg::IntMatrix;
use crate::unimodular::UnimodularTriangulation;
use crate::verify::BoundReport;

const SAFE_BITS: u64 = 53;

/// A big integer with the JSON encoding described above.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Int(pub BigInt);

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.abs().bits() <= SAFE_BITS {
            s.serialize_i64(self.0.to_i64().expect("fits in 53 bits"))
        } else {
            s.collect_str(&self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct IntVisitor;

        impl Visitor<'_> for IntVisitor {
            type Value = Int;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a decimal integer string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Int, E> {
                Ok(Int(v.into()))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Int, E> {
                Ok(Int(v.into()))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Int, E> {
                Err(E::custom(format!("expected an integer, found {v}")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Int, E> {
                v.trim()
                    .parse()
                    .map(Int)
                    .map_err(|_| E::custom(format!("{v:?} is not a decimal integer")))
            }
        }

        d.deserialize_any(IntVisitor)
    }
}

fn to_ints(v: &[BigInt]) -> Vec<Int> {
    v.iter().cloned().map(Int).collect()
}

fn from_ints(v: &[Int]) -> Vec<BigInt> {
    v.iter().map(|i| i.0.clone()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeFile {
    pub d: usize,
    pub generators: Vec<Vec<Int>>,
}

impl ConeFile {
    pub fn from_cone(c: &SimplicialCone) -> Self {
        Self {
            d: c.dimension(),
            generators: c.generators().row_iter().map(to_ints).collect(),
        }
    }

    /// Validates shape and builds the cone (rows are primitivized).
    pub fn to_cone(&self) -> Result<SimplicialCone> {
        let d = self.d;
        if d < 2 {
            return Err(Error::Format(format!("field `d`: need d >= 2, got {d}")));
        }
        if self.generators.len() != d {
            return Err(Error::Format(format!(
                "field `generators`: expected {d} rows, got {}",
                self.generators.len()
            )));
        }
        if let Some((i, row)) = self.generators.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::Format(format!(
                "field `generators[{i}]`: expected {d} entries, got {}",
                row.len()
            )));
        }
        let m = IntMatrix::from_rows(self.generators.iter().map(|r| from_ints(r)))?;
        SimplicialCone::new(&m).map_err(|e| match e {
            Error::Singular => Error::Format("field `generators`: matrix is singular".into()),
            other => other,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceRecord {
    pub generators: Vec<Vec<Int>>,
    pub multiplicity: String,
    pub chi: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorRecord {
    pub index: i64,
    pub vector: Vec<Int>,
    pub dilation: DilationFactor,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRecord {
    pub bound_name: String,
    pub bound_value: String,
    pub measured: String,
    pub satisfied: bool,
    pub outcome: String,
    pub checked: usize,
    pub violations: usize,
    pub skipped: usize,
    pub witness: Vec<Vec<Int>>,
    pub informational: bool,
    pub note: String,
}

impl From<&BoundReport> for BoundRecord {
    fn from(r: &BoundReport) -> Self {
        Self {
            bound_name: r.name.clone(),
            bound_value: r.bound.to_string(),
            measured: r.measured.to_string(),
            satisfied: r.satisfied(),
            outcome: r.outcome.as_str().into(),
            checked: r.checked,
            violations: r.violations,
            skipped: r.skipped,
            witness: r.witnesses.iter().map(|w| to_ints(w)).collect(),
            informational: r.informational,
            note: r.note.clone(),
        }
    }
}

impl BoundRecord {
    pub fn is_failure(&self) -> bool {
        !self.informational && !self.satisfied
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangulationFile {
    pub root: ConeFile,
    pub method: String,
    pub pieces: Vec<PieceRecord>,
    pub subdivision_vectors: Vec<VectorRecord>,
    pub bounds: Vec<BoundRecord>,
}

fn piece_record(c: &SimplicialCone, chi: i64) -> PieceRecord {
    PieceRecord {
        generators: c.generators().row_iter().map(to_ints).collect(),
        multiplicity: c.multiplicity().to_string(),
        chi,
    }
}

fn vector_records<'a>(root: &SimplicialCone, vectors: impl Iterator<Item = &'a [BigInt]>) -> Result<Vec<VectorRecord>> {
    vectors
        .enumerate()
        .map(|(i, v)| {
            Ok(VectorRecord {
                index: i as i64,
                vector: to_ints(v),
                dilation: root.dilation(v)?,
            })
        })
        .collect()
}

impl TriangulationFile {
    pub fn from_bpft(state: &TriangulationState, reports: &[BoundReport]) -> Result<Self> {
        let root = state.root();
        Ok(Self {
            root: ConeFile::from_cone(root),
            method: "bpft".into(),
            pieces: state.current().map(|c| piece_record(&c.cone, c.chi())).collect(),
            subdivision_vectors: vector_records(root, state.subdivision_vectors())?,
            bounds: reports.iter().map(BoundRecord::from).collect(),
        })
    }

    /// `chi` of a piece is its number of subdivision generations minus one.
    pub fn from_unimodular(t: &UnimodularTriangulation, reports: &[BoundReport]) -> Result<Self> {
        Ok(Self {
            root: ConeFile::from_cone(&t.root),
            method: t.strategy.name().into(),
            pieces: t
                .pieces
                .iter()
                .zip(&t.piece_ids)
                .map(|(c, &id)| piece_record(c, t.provenance.node(id).depth as i64 - 1))
                .collect(),
            subdivision_vectors: vector_records(&t.root, t.subdivision_vectors.iter().map(Vec::as_slice))?,
            bounds: reports.iter().map(BoundRecord::from).collect(),
        })
    }

    /// Parses the JSON text and checks that the file is internally
    /// consistent enough to be used.
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.pieces.is_empty() {
            return Err(Error::Format("field `pieces`: must be nonempty".into()));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn root_cone(&self) -> Result<SimplicialCone> {
        self.root.to_cone()
    }

    /// The pieces as cones, with their stored multiplicities.
    pub fn piece_cones(&self) -> Result<Vec<(SimplicialCone, String)>> {
        let d = self.root.d;
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let file = ConeFile {
                    d,
                    generators: p.generators.clone(),
                };
                let cone = file
                    .to_cone()
                    .map_err(|e| Error::Format(format!("pieces[{i}]: {e}")))?;
                Ok((cone, p.multiplicity.clone()))
            })
            .collect()
    }
}

pub fn parse_cone(text: &str) -> Result<SimplicialCone> {
    let file: ConeFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    file.to_cone()
}

pub fn cone_to_json(c: &SimplicialCone) -> String {
    let mut s = serde_json::to_string_pretty(&ConeFile::from_cone(c)).expect("plain data serializes");
    s.push('\n');
    s
}

//! JSON matrix literals: nested rows whose entries are `[re, im]` pairs or,
//! for real values, bare numbers. Output always uses pairs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Entry> for C64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

/// Row-major literal form of a complex matrix.
pub type ComplexLiteral = Vec<Vec<Entry>>;

impl ComplexMatrix {
    pub fn to_literal(&self) -> ComplexLiteral {
        (0..self.rows())
            .map(|r| {
                (0..self.cols())
                    .map(|c| {
                        let z = self[(r, c)];
                        Entry::Complex([z.re, z.im])
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_literal(lit: ComplexLiteral) -> crate::Result<Self> {
        Self::from_rows(
            lit.into_iter()
                .map(|row| row.into_iter().map(C64::from).collect())
                .collect(),
        )
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_literal().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let lit = ComplexLiteral::deserialize(d)?;
        Self::from_literal(lit).map_err(serde::de::Error::custom)
    }
}

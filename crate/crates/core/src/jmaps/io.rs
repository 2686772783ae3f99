use std::path::Path;

use serde::{Deserialize, Serialize};

use super::JMap;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Generator tag written into every provenance block.
pub const GENERATOR: &str = concat!("isospec-core ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub t: f64,
    pub generator: String,
}

impl Provenance {
    pub fn new(seed: u64, t: f64) -> Self {
        Self {
            seed,
            t,
            generator: GENERATOR.to_string(),
        }
    }
}

/// On-disk form of a [`JMap`]: matrices as rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JMapDocument {
    pub m: usize,
    #[serde(rename = "J1")]
    pub j1: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "J2")]
    pub j2: Vec<Vec<[f64; 2]>>,
    pub provenance: Provenance,
}

pub(crate) fn matrix_rows(a: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows())
        .map(|r| (0..a.ncols()).map(|c| [a[(r, c)].re, a[(r, c)].im]).collect())
        .collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<[f64; 2]>], m: usize, name: &str) -> Result<CMat> {
    if rows.len() != m {
        return Err(Error::Parse(format!("{name} has {} rows, expected {m}", rows.len())));
    }
    let mut a = CMat::zeros(m, m);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Parse(format!(
                "{name} row {r} has {} entries, expected {m}",
                row.len()
            )));
        }
        for (c, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(Error::Parse(format!("{name}[{r}][{c}] is not finite")));
            }
            a[(r, c)] = C64::new(z[0], z[1]);
        }
    }
    Ok(a)
}

/// Serde adapter for complex matrices as rows of `[re, im]`.
pub(crate) mod cmat_rows {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_rows(a).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let m = rows.len();
        matrix_from_rows(&rows, m, "matrix").map_err(serde::de::Error::custom)
    }
}

impl JMapDocument {
    pub fn new(j: &JMap, provenance: Provenance) -> Self {
        Self {
            m: j.m(),
            j1: matrix_rows(j.j1()),
            j2: matrix_rows(j.j2()),
            provenance,
        }
    }

    pub fn to_jmap(&self) -> Result<JMap> {
        let a = matrix_from_rows(&self.j1, self.m, "J1")?;
        let b = matrix_from_rows(&self.j2, self.m, "J2")?;
        JMap::new(a, b)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

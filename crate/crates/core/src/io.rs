//! JSON formats for laws, densities and paths. Rationals are written as
//! `"p/q"` strings; integers, decimal strings and JSON numbers are accepted
//! on input.
//!
//! ```json
//! {"T": "1/2",
//!  "atoms": {"zero": "1/4", "T": "1/4", "inf": "0"},
//!  "density": {"breakpoints": ["0", "1/2"], "segments": [{"p": "1", "q": "0"}]}}
//! ```
//!
//! A step density may give `"values"` instead of `"segments"`. Paths are
//! `{"nodes": [["0", "1"], ["1/2", "0"], ["1", "1"]]}`.

use serde::{Deserialize, Serialize};

use crate::density::{Affine, LocationLaw, PiecewiseDensity};
use crate::error::{Error, Result};
use crate::paths::PiecewiseLinearPath;
use crate::rational::{self, zero, Rational};

#[derive(Debug, Serialize, Deserialize)]
pub struct LawFile {
    #[serde(rename = "T", with = "rational::as_str")]
    pub horizon: Rational,
    #[serde(default)]
    pub atoms: AtomsFile,
    pub density: DensityFile,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct AtomsFile {
    #[serde(default = "zero", with = "rational::as_str")]
    pub zero: Rational,
    #[serde(rename = "T", default = "zero", with = "rational::as_str")]
    pub horizon: Rational,
    #[serde(rename = "inf", default = "zero", with = "rational::as_str")]
    pub infinity: Rational,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DensityFile {
    #[serde(with = "rational::vec_as_str")]
    pub breakpoints: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_vec")]
    pub values: Option<Vec<Rational>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SegmentFile {
    #[serde(with = "rational::as_str")]
    pub p: Rational,
    #[serde(with = "rational::as_str")]
    pub q: Rational,
}

mod opt_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &Option<Vec<Rational>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match xs {
            Some(v) => rational::vec_as_str::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Rational>>, D::Error> {
        rational::vec_as_str::deserialize(d).map(Some)
    }
}

impl DensityFile {
    pub fn from_density(f: &PiecewiseDensity) -> Self {
        Self {
            breakpoints: f.breakpoints().to_vec(),
            segments: Some(
                f.segments()
                    .iter()
                    .map(|s| SegmentFile {
                        p: s.intercept,
                        q: s.slope,
                    })
                    .collect(),
            ),
            values: None,
        }
    }

    pub fn to_density(&self) -> Result<PiecewiseDensity> {
        match (&self.segments, &self.values) {
            (Some(segs), None) => PiecewiseDensity::new(
                self.breakpoints.clone(),
                segs.iter().map(|s| Affine::new(s.p, s.q)).collect(),
            ),
            (None, Some(values)) => PiecewiseDensity::step(self.breakpoints.clone(), values.clone()),
            _ => Err(Error::Parse("density needs exactly one of \"segments\" and \"values\"".into())),
        }
    }
}

impl LawFile {
    pub fn from_law(law: &LocationLaw) -> Self {
        Self {
            horizon: law.horizon(),
            atoms: AtomsFile {
                zero: law.atom_zero(),
                horizon: law.atom_horizon(),
                infinity: law.atom_infinity(),
            },
            density: DensityFile::from_density(law.density()),
        }
    }

    pub fn density(&self) -> Result<PiecewiseDensity> {
        let f = self.density.to_density()?;
        if f.horizon() != self.horizon {
            return Err(Error::MismatchedHorizon);
        }
        Ok(f)
    }

    pub fn to_law(&self) -> Result<LocationLaw> {
        LocationLaw::new(self.density()?, self.atoms.zero, self.atoms.horizon, self.atoms.infinity)
    }
}

pub fn parse_law(text: &str) -> Result<LocationLaw> {
    parse_law_file(text)?.to_law()
}

/// Only the density of a law file; atoms are not required to complete it.
pub fn parse_density(text: &str) -> Result<PiecewiseDensity> {
    parse_law_file(text)?.density()
}

fn parse_law_file(text: &str) -> Result<LawFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn law_to_json(law: &LocationLaw) -> serde_json::Value {
    serde_json::to_value(LawFile::from_law(law)).expect("law serializes")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PathFile {
    pub nodes: Vec<NodeFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NodeFile(
    #[serde(with = "rational::as_str")] pub Rational,
    #[serde(with = "rational::as_str")] pub Rational,
);

pub fn parse_path(text: &str) -> Result<PiecewiseLinearPath> {
    let file: PathFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    PiecewiseLinearPath::new(file.nodes.into_iter().map(|NodeFile(t, y)| (t, y)).collect())
}

pub fn path_to_json(path: &PiecewiseLinearPath) -> serde_json::Value {
    let file = PathFile {
        nodes: path.nodes().map(|(t, y)| NodeFile(t, y)).collect(),
    };
    serde_json::to_value(file).expect("path serializes")
}

//! JSON file formats for sets and systems.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::poly::Polynomial;
use crate::sets::{SemiAlgebraicSet, SetShape, SystemSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetJson {
    Box { bounds: Vec<(f64, f64)> },
    Ball { center: Vec<f64>, radius: f64 },
    Generic { ineqs: Vec<Polynomial> },
}

impl SetJson {
    pub fn to_set(&self) -> Result<SemiAlgebraicSet> {
        match self {
            SetJson::Box { bounds } => SemiAlgebraicSet::new_box(bounds.clone()),
            SetJson::Ball { center, radius } => SemiAlgebraicSet::ball(center.clone(), *radius),
            SetJson::Generic { ineqs } => SemiAlgebraicSet::generic(ineqs.clone()),
        }
    }
}

impl From<&SemiAlgebraicSet> for SetJson {
    fn from(s: &SemiAlgebraicSet) -> Self {
        match s.shape() {
            SetShape::Box { bounds } => SetJson::Box { bounds: bounds.clone() },
            SetShape::Ball { center, radius } => SetJson::Ball {
                center: center.clone(),
                radius: *radius,
            },
            SetShape::Generic => SetJson::Generic {
                ineqs: s.ineqs().to_vec(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub x: Vec<f64>,
    /// Input in original units; 0 when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
}

/// On-disk system description. `g` is `n × m` and may be omitted when
/// `m = 0`; `U` may be omitted likewise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub n: usize,
    pub m: usize,
    pub f: Vec<Polynomial>,
    #[serde(default)]
    pub g: Vec<Vec<Polynomial>>,
    #[serde(rename = "X")]
    pub x: SetJson,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<SetJson>,
    #[serde(rename = "Z")]
    pub z: SetJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPoint>,
}

impl SystemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Validated system with inputs normalized to `[−1,1]^m`.
    pub fn to_spec(&self) -> Result<SystemSpec> {
        check_dim("f length", self.n, self.f.len())?;
        let g = if self.g.is_empty() && self.m == 0 {
            vec![Vec::new(); self.n]
        } else {
            self.g.clone()
        };
        check_dim("g rows", self.n, g.len())?;
        for row in &g {
            check_dim("g columns", self.m, row.len())?;
        }
        if self.m > 0 && self.u.is_none() {
            return Err(Error::InvalidSet("input set U is required when m > 0".into()));
        }
        let u = if self.m == 0 {
            None
        } else {
            self.u.as_ref().map(SetJson::to_set).transpose()?
        };
        if let Some(fp) = &self.fixed_point {
            check_dim("fixed point state", self.n, fp.x.len())?;
            if let Some(fu) = &fp.u {
                check_dim("fixed point input", self.m, fu.len())?;
            }
        }
        let spec = SystemSpec::new(self.f.clone(), g, self.x.to_set()?, u, self.z.to_set()?)?;
        if spec.is_normalized() {
            Ok(spec)
        } else {
            spec.rescale_inputs()
        }
    }
}

/// Reads and validates a system file, normalizing its inputs.
pub fn load_system(path: impl AsRef<Path>) -> Result<(SystemFile, SystemSpec)> {
    let file = SystemFile::load(path)?;
    let spec = file.to_spec()?;
    Ok((file, spec))
}

//! Problem-definition files (JSON). Unknown fields are rejected and every
//! error carries the position in the file or the path of the offending field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ProjectionSymbol;

use super::collar::{BoundaryCondition, CollarOperator};
use super::matrix::MatrixSymbol;
use super::problem::{BvpProblem, EndCondition, ManifoldKind, ModeChange, ModelManifold, SpectralCondition};

/// Matrix of expression strings, row by row.
pub type MatrixSpec = Vec<Vec<String>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    pub manifold: ManifoldKind,
    pub order: usize,
    /// `D_0, ..., D_m` of `sum_k D_k lambda^(m-k)`; `D_k` has degree `k`.
    pub coefficients: Vec<MatrixSpec>,
    #[serde(default)]
    pub interior: Option<MatrixSpec>,
    /// One entry per boundary component: the jet coefficients `B_0..B_(m-1)`.
    pub boundary_condition: Vec<Vec<MatrixSpec>>,
    /// One optional projection per boundary component.
    #[serde(default)]
    pub projection: Vec<Option<ProjectionSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSpec {
    /// Pullback or covariable-dependent projection symbol of degree zero.
    #[serde(default)]
    pub symbol: Option<MatrixSpec>,
    /// Spectral projection of this tangential symbol (degree one).
    #[serde(default)]
    pub spectral_of: Option<MatrixSpec>,
    /// Spectral projection of the tangential symbol of the operator at this end.
    #[serde(default)]
    pub aps: bool,
    #[serde(default)]
    pub modifications: Vec<ModeChange>,
}

/// Standalone projection for the `d`-functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionFile {
    pub name: String,
    pub projection: ProjectionSpec,
}

fn at(location: impl Into<String>) -> impl FnOnce(Error) -> Error {
    let location = location.into();
    move |e| match e {
        Error::Parse { location: inner, message } => Error::Parse { location: format!("{location}: {inner}"), message },
        other => Error::Parse { location, message: other.to_string() },
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse { location: format!("line {} column {}", e.line(), e.column()), message: e.to_string() }
}

fn matrix(spec: &MatrixSpec, degree: i32, location: &str) -> Result<MatrixSymbol> {
    if spec.is_empty() {
        return Err(Error::Parse { location: location.into(), message: "empty matrix".into() });
    }
    MatrixSymbol::parse(spec, degree).map_err(at(location))
}

impl ProjectionSpec {
    fn condition(&self, operator_at_end: Option<&CollarOperator>, location: &str) -> Result<SpectralCondition> {
        let sources = self.symbol.is_some() as u8 + self.spectral_of.is_some() as u8 + self.aps as u8;
        if sources != 1 {
            return Err(Error::Parse {
                location: location.into(),
                message: "exactly one of `symbol`, `spectral_of` and `aps` is required".into(),
            });
        }
        let cond = if let Some(s) = &self.symbol {
            let sym = matrix(s, 0, &format!("{location}.symbol"))?;
            SpectralCondition::from_symbol(ProjectionSymbol::new(sym).map_err(at(format!("{location}.symbol")))?)
        } else if let Some(a) = &self.spectral_of {
            let sym = matrix(a, 1, &format!("{location}.spectral_of"))?;
            SpectralCondition::spectral(&sym).map_err(at(format!("{location}.spectral_of")))?
        } else {
            let op = operator_at_end.ok_or_else(|| Error::Parse {
                location: format!("{location}.aps"),
                message: "`aps` needs an operator".into(),
            })?;
            if op.order() != 1 {
                return Err(Error::Parse { location: format!("{location}.aps"), message: "`aps` needs a first-order operator".into() });
            }
            SpectralCondition::spectral(&op.coefficients()[1].scale(crate::linalg::I)).map_err(at(format!("{location}.aps")))?
        };
        let rank = cond.rank();
        for (k, m) in self.modifications.iter().enumerate() {
            if m.vector.len() != rank {
                return Err(Error::Parse {
                    location: format!("{location}.modifications[{k}]"),
                    message: format!("vector has length {}, projection rank is {rank}", m.vector.len()),
                });
            }
        }
        Ok(cond.with_modifications(self.modifications.clone()))
    }

    pub fn build(&self, location: &str) -> Result<SpectralCondition> {
        self.condition(None, location)
    }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<BvpProblem> {
        if self.coefficients.len() != self.order + 1 {
            return Err(Error::Parse {
                location: "coefficients".into(),
                message: format!("{} coefficients for order {}", self.coefficients.len(), self.order),
            });
        }
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, s)| matrix(s, k as i32, &format!("coefficients[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        let interior = match &self.interior {
            Some(s) => Some(matrix(s, self.order as i32, "interior")?),
            None => None,
        };
        let operator = CollarOperator::new(coefficients, interior).map_err(at("coefficients"))?;
        let manifold = ModelManifold::new(self.manifold);
        let ends_count = manifold.ends();
        if self.boundary_condition.len() != ends_count {
            return Err(Error::Parse {
                location: "boundary_condition".into(),
                message: format!("{} entries for {} boundary components", self.boundary_condition.len(), ends_count),
            });
        }
        if self.projection.len() > ends_count {
            return Err(Error::Parse {
                location: "projection".into(),
                message: format!("{} entries for {} boundary components", self.projection.len(), ends_count),
            });
        }
        let reflected = operator.reflect();
        let mut ends = Vec::with_capacity(ends_count);
        for (e, jets) in self.boundary_condition.iter().enumerate() {
            let location = format!("boundary_condition[{e}]");
            let jets = jets
                .iter()
                .enumerate()
                .map(|(j, s)| matrix(s, 0, &format!("{location}[{j}]")))
                .collect::<Result<Vec<_>>>()?;
            let condition = BoundaryCondition::new(jets).map_err(at(location))?;
            let op_at_end = if e == 0 { &operator } else { &reflected };
            let projection = match self.projection.get(e).and_then(|p| p.as_ref()) {
                Some(p) => Some(p.condition(Some(op_at_end), &format!("projection[{e}]"))?),
                None => None,
            };
            ends.push(EndCondition { condition, projection });
        }
        BvpProblem::new(self.name.clone(), manifold, operator, ends).map_err(at("problem"))
    }
}

impl ProjectionFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn build(&self) -> Result<SpectralCondition> {
        self.projection.build("projection")
    }
}

//! Sweep runner, identity battery and their on-disk formats.

pub mod config;
pub mod sweep;
pub mod table;
pub mod verify;

use std::path::Path;

use thiserror::Error;

use crate::director::{make_normal_director, make_tilted_director, DirectorError, DirectorField, TangentField};
use crate::energy::EnergyError;
use crate::gauss_graph::GraphError;
use crate::mesh::{MeshError, TriMesh};
use crate::spectral::SpectralError;
use crate::varifold::VarifoldError;

pub use config::{ConfigError, Surface, SweepConfig};
pub use sweep::{run_sweep, SweepReport};
pub use table::{to_csv_string, write_csv, CsvRecord};
pub use verify::{run_verify, VerifyReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("table `{table}`: {message}")]
    Schema { table: &'static str, message: String },
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Director(#[from] DirectorError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Varifold(#[from] VarifoldError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad director spec `{0}`")]
    DirectorSpec(String),
}

impl HarnessError {
    /// Fold-overs and other violations of `θ·ν > 0`.
    pub fn is_domain(&self) -> bool {
        let fold = |e: &DirectorError| matches!(e, DirectorError::FaceFoldOver { .. } | DirectorError::VertexFoldOver { .. });
        match self {
            Self::Director(e) => fold(e),
            Self::Energy(EnergyError::TiltFoldOver { .. }) => true,
            Self::Energy(EnergyError::Director(e)) | Self::Graph(GraphError::Director(e)) => fold(e),
            _ => false,
        }
    }

    /// I/O, parse and parameter failures, including invalid meshes.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Self::Io { .. }
                | Self::Config(_)
                | Self::Json(_)
                | Self::DirectorSpec(_)
                | Self::Mesh(_)
                | Self::Director(DirectorError::Json(_) | DirectorError::LengthMismatch { .. } | DirectorError::UnknownField(_))
        )
    }
}

/// Where a director field comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DirectorSpec {
    Normal,
    /// Field and optional ε list; an empty list defers to the caller's ε.
    Tilted(TangentField, Vec<f64>),
    File(String),
}

impl DirectorSpec {
    /// `normal`, `tilted:<field>[:<eps>,<eps>,..]` or `file:<path>`.
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        let bad = || HarnessError::DirectorSpec(s.to_string());
        match s.split_once(':') {
            None if s == "normal" => Ok(Self::Normal),
            Some(("tilted", rest)) => {
                let (name, eps) = rest.split_once(':').unwrap_or((rest, ""));
                let field = TangentField::ALL.into_iter().find(|t| t.name() == name).ok_or_else(bad)?;
                let eps = if eps.is_empty() {
                    Vec::new()
                } else {
                    eps.split(',')
                        .map(|e| e.trim().parse::<f64>().ok().filter(|e| *e >= 0.0 && e.is_finite()))
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(bad)?
                };
                Ok(Self::Tilted(field, eps))
            }
            Some(("file", p)) if !p.is_empty() => Ok(Self::File(p.to_string())),
            _ => Err(bad()),
        }
    }

    /// The ε values to evaluate: the spec's own list, else `default`.
    pub fn eps_values(&self, default: f64) -> Vec<f64> {
        match self {
            Self::Tilted(_, eps) if !eps.is_empty() => eps.clone(),
            _ => vec![default],
        }
    }

    /// Builds the field; `eps` is used only by `tilted`.
    pub fn build(&self, mesh: &TriMesh, eps: f64) -> Result<DirectorField, HarnessError> {
        Ok(match self {
            Self::Normal => make_normal_director(mesh),
            Self::Tilted(t, _) => make_tilted_director(mesh, &t.sample(mesh), eps)?,
            Self::File(p) => {
                let text = std::fs::read_to_string(Path::new(p)).map_err(|source| HarnessError::Io { path: p.clone(), source })?;
                DirectorField::from_json(mesh, &text)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn director_specs_parse() {
        assert_eq!(DirectorSpec::parse("normal").unwrap(), DirectorSpec::Normal);
        assert_eq!(DirectorSpec::parse("tilted:swirl").unwrap(), DirectorSpec::Tilted(TangentField::Swirl, vec![]));
        let t = DirectorSpec::parse("tilted:e1:0.2, 0.1").unwrap();
        assert_eq!(t, DirectorSpec::Tilted(TangentField::E1, vec![0.2, 0.1]));
        assert_eq!(t.eps_values(0.5), vec![0.2, 0.1]);
        assert_eq!(DirectorSpec::Normal.eps_values(0.5), vec![0.5]);
        assert_eq!(DirectorSpec::parse("file:a.json").unwrap(), DirectorSpec::File("a.json".into()));
        for bad in ["", "tilted:", "tilted:nope", "tilted:e1:x", "tilted:e1:-1", "file:", "normal:x", "sideways"] {
            assert!(DirectorSpec::parse(bad).is_err(), "{bad}");
        }
    }
}

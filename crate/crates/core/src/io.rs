//! JSON file formats. State indices are 1-based in files.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{
    atom_catalog, boundary_prefactors, extremal_path, Direction, ExtremalPathInfo,
};
use crate::model::{validate, InitialLaw, Model, ModelSpec, Variant};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariantTag {
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedInitial {
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialTag {
    Fixed { fixed: usize },
    Named(NamedInitial),
}

/// Model file: `{"d", "Q", "lambda", "mu", "variant", "initial"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub d: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub variant: VariantTag,
    pub initial: InitialTag,
}

impl ModelFile {
    pub fn from_model(model: &Model) -> Self {
        let spec = model.spec();
        ModelFile {
            d: model.d(),
            q: spec.q.clone(),
            lambda: spec.lambda.clone(),
            mu: spec.mu.clone(),
            variant: match spec.variant {
                Variant::ModelI => VariantTag::I,
                Variant::ModelII => VariantTag::II,
            },
            initial: match spec.initial {
                InitialLaw::Fixed(i) => InitialTag::Fixed { fixed: i + 1 },
                InitialLaw::Stationary => InitialTag::Named(NamedInitial::Stationary),
            },
        }
    }

    pub fn to_spec(&self) -> Result<ModelSpec> {
        if self.q.len() != self.d {
            return Err(Error::Dimension(format!(
                "d = {} but Q has {} rows",
                self.d,
                self.q.len()
            )));
        }
        let initial = match self.initial {
            InitialTag::Fixed { fixed } => {
                if fixed == 0 || fixed > self.d {
                    return Err(Error::Dimension(format!(
                        "initial state {fixed} outside 1..={}",
                        self.d
                    )));
                }
                InitialLaw::Fixed(fixed - 1)
            }
            InitialTag::Named(NamedInitial::Stationary) => InitialLaw::Stationary,
        };
        Ok(ModelSpec {
            q: self.q.clone(),
            lambda: self.lambda.clone(),
            mu: self.mu.clone(),
            variant: match self.variant {
                VariantTag::I => Variant::ModelI,
                VariantTag::II => Variant::ModelII,
            },
            initial,
        })
    }

    pub fn to_model(&self) -> Result<Model> {
        validate(self.to_spec()?)
    }
}

/// Parse and validate a model file.
pub fn parse_model(text: &str) -> Result<Model> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidArgument(format!("model file: {e}")))?;
    file.to_model()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomEntry {
    pub state: usize,
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerPath {
    pub switch_epochs: Vec<f64>,
    pub states: Vec<usize>,
    pub bound: f64,
}

/// Output of `analyze`; also accepted back as precomputed input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub model: ModelFile,
    pub t: f64,
    #[serde(rename = "D")]
    pub jumps: usize,
    pub switch_epochs: Vec<f64>,
    pub states: Vec<usize>,
    pub bound: f64,
    pub omegas: Vec<f64>,
    pub regular: bool,
    pub kappa_bar: Option<f64>,
    pub kappa_hat: Option<f64>,
    /// Why the prefactors are absent, when they are.
    pub prefactor_note: Option<String>,
    pub atoms: Vec<AtomEntry>,
    pub lower: LowerPath,
    pub extrapolated: bool,
}

impl AnalysisReport {
    pub fn model(&self) -> Result<Model> {
        self.model.to_model()
    }

    /// The maximizing path as stored in the report.
    pub fn upper_info(&self) -> Result<ExtremalPathInfo> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.states.len() != self.jumps + 1 || self.switch_epochs.len() != self.jumps {
            return Err(Error::Dimension("inconsistent path in report".into()));
        }
        if self.states.iter().any(|&s| s == 0 || s > self.model.d) {
            return Err(Error::Dimension(
                "state index out of range in report".into(),
            ));
        }
        Ok(ExtremalPathInfo {
            direction: Direction::Max,
            variant: match self.model.variant {
                VariantTag::I => Variant::ModelI,
                VariantTag::II => Variant::ModelII,
            },
            horizon: self.t,
            switch_epochs: self.switch_epochs.clone(),
            states: self.states.iter().map(|s| s - 1).collect(),
            jumps: self.jumps,
            bound: self.bound,
            omegas: self.omegas.clone(),
            regular: self.regular,
            extrapolated: self.extrapolated,
        })
    }
}

/// Extremal paths, prefactors and atoms of a model at horizon `t`.
pub fn analyze(model: &Model, t: f64) -> Result<AnalysisReport> {
    let upper = extremal_path(model, t, Direction::Max)?;
    let lower = extremal_path(model, t, Direction::Min)?;
    let (kappa_bar, kappa_hat, note) =
        match boundary_prefactors(&upper, model, &model.initial_weights()) {
            Ok(p) => (Some(p.kappa_bar), Some(p.kappa_hat), None),
            Err(e @ (Error::NotRegular(..) | Error::NoSwitches | Error::InitialLawOffPath(_))) => {
                (None, None, Some(e.to_string()))
            }
            Err(e) => return Err(e),
        };
    let atoms = atom_catalog(model, t)?
        .atoms
        .into_iter()
        .map(|a| AtomEntry {
            state: a.state + 1,
            location: a.location,
            mass: a.mass,
        })
        .collect();
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        model: ModelFile::from_model(model),
        t,
        jumps: upper.jumps,
        switch_epochs: upper.switch_epochs.clone(),
        states: upper.states.iter().map(|s| s + 1).collect(),
        bound: upper.bound,
        omegas: upper.omegas.clone(),
        regular: upper.regular,
        kappa_bar,
        kappa_hat,
        prefactor_note: note,
        atoms,
        lower: LowerPath {
            switch_epochs: lower.switch_epochs,
            states: lower.states.iter().map(|s| s + 1).collect(),
            bound: lower.bound,
        },
        extrapolated: upper.extrapolated,
    })
}

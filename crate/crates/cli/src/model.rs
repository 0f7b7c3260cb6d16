use std::path::Path;

use anyhow::{bail, Context};
use mrflearn::samplers::EnergyModel;
use mrflearn::{IsingModel, MrfModel, NonBinaryIsing};

/// Any model file. The kind is read off the top-level keys: `A` for Ising,
/// `terms` for a polynomial MRF and `W` for a non-binary model.
pub enum ModelFile {
    Ising(IsingModel),
    Mrf(MrfModel),
    NonBinary(NonBinaryIsing),
}

impl ModelFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("model {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let Some(obj) = value.as_object() else {
            bail!("expected a JSON object");
        };
        Ok(if obj.contains_key("A") {
            ModelFile::Ising(serde_json::from_value(value)?)
        } else if obj.contains_key("terms") {
            ModelFile::Mrf(serde_json::from_value(value)?)
        } else if obj.contains_key("W") {
            ModelFile::NonBinary(serde_json::from_value(value)?)
        } else {
            bail!("unrecognized model: expected an \"A\", \"terms\" or \"W\" key");
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelFile::Ising(_) => "ising",
            ModelFile::Mrf(_) => "mrf",
            ModelFile::NonBinary(_) => "nonbinary",
        }
    }

    pub fn energy(&self) -> &(dyn EnergyModel + Sync) {
        match self {
            ModelFile::Ising(m) => m,
            ModelFile::Mrf(m) => m,
            ModelFile::NonBinary(m) => m,
        }
    }

    /// Binary models as polynomials.
    pub fn as_mrf(&self) -> Option<MrfModel> {
        match self {
            ModelFile::Ising(m) => Some(MrfModel::from(m)),
            ModelFile::Mrf(m) => Some(m.clone()),
            ModelFile::NonBinary(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_are_detected_from_keys() {
        let ising = r#"{"n":2,"A":[[0,0.5],[0.5,0]],"theta":[0,0]}"#;
        let mrf = r#"{"n":3,"t":3,"terms":[{"indices":[0,1,2],"coeff":0.6}]}"#;
        let nb = r#"{"n":2,"k":2,"W":[{"i":0,"j":1,"matrix":[[0.1,0],[0,0]]}],"theta":[[0,0],[0,0]]}"#;
        assert_eq!(ModelFile::parse(ising).unwrap().kind(), "ising");
        assert_eq!(ModelFile::parse(mrf).unwrap().kind(), "mrf");
        assert_eq!(ModelFile::parse(nb).unwrap().kind(), "nonbinary");
        assert!(ModelFile::parse(r#"{"n":2}"#).is_err());
        assert!(ModelFile::parse("[1]").is_err());
    }
}

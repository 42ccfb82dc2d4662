//! JSON model files with explicit exponent pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basis::{BasisLibrary, BasisTerm};
use crate::dynamics::IdentifiedSystem;
use crate::error::{Error, Result};
use crate::phase1::DampingModel;
use crate::phase2::StiffnessModel;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingEntry {
    pub q_exp: u32,
    pub qd_exp: u32,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StiffnessEntry {
    pub q_exp: u32,
    pub coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Eddi,
    Sindy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub method: Method,
    /// SHA-256 of the input response file, lowercase hex.
    pub input_digest: String,
    /// Effective configuration the model was produced with.
    pub config: serde_json::Value,
    pub residual_rms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub inertia: f64,
    pub damping: Vec<DampingEntry>,
    pub stiffness: Vec<StiffnessEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ModelFile {
    pub fn from_system(sys: &IdentifiedSystem, provenance: Option<Provenance>) -> Self {
        let damping = sys
            .damping
            .library()
            .terms()
            .iter()
            .zip(sys.damping.coeffs())
            .map(|(t, &coeff)| DampingEntry {
                q_exp: t.q_exp(),
                qd_exp: t.qd_exp(),
                coeff,
            })
            .collect();
        let stiffness = sys
            .stiffness
            .library()
            .terms()
            .iter()
            .zip(sys.stiffness.coeffs())
            .map(|(t, &coeff)| StiffnessEntry { q_exp: t.q_exp(), coeff })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            inertia: sys.inertia,
            damping,
            stiffness,
            provenance,
        }
    }

    pub fn to_system(&self) -> Result<IdentifiedSystem> {
        let term = |a: u32, b: u32| {
            BasisTerm::new(a, b).ok_or_else(|| Error::Model(format!("invalid exponent pair ({a}, {b})")))
        };
        let dterms = self
            .damping
            .iter()
            .map(|e| term(e.q_exp, e.qd_exp))
            .collect::<Result<Vec<_>>>()?;
        let sterms = self
            .stiffness
            .iter()
            .map(|e| term(e.q_exp, 0))
            .collect::<Result<Vec<_>>>()?;
        let damping = DampingModel::new(
            BasisLibrary::new(dterms)?,
            self.damping.iter().map(|e| e.coeff).collect(),
        )?;
        let stiffness = StiffnessModel::new(
            BasisLibrary::new(sterms)?,
            self.stiffness.iter().map(|e| e.coeff).collect(),
        )?;
        IdentifiedSystem::new(self.inertia, damping, stiffness)
    }

    /// Parses and validates a model file.
    pub fn from_json(text: &str) -> Result<Self> {
        let mf: ModelFile = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        if mf.schema_version != SCHEMA_VERSION {
            return Err(Error::Model(format!(
                "unsupported schema version {}, expected {SCHEMA_VERSION}",
                mf.schema_version
            )));
        }
        mf.to_system()?;
        Ok(mf)
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Model(e.to_string()))?;
        Self::from_json(text)
    }

    /// Pretty-printed JSON with a trailing newline. Numbers use the shortest
    /// representation that parses back to the same value.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model files always serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{duffing_truth, pendulum_truth};
    use proptest::prelude::*;

    #[test]
    fn truth_round_trip() {
        for sys in [duffing_truth(), pendulum_truth()] {
            let text = ModelFile::from_system(&sys, None).to_json();
            let back = ModelFile::from_json(&text).unwrap();
            assert_eq!(back.to_json(), text);
            assert_eq!(back.to_system().unwrap(), sys);
        }
    }

    #[test]
    fn layout() {
        let text = ModelFile::from_system(&duffing_truth(), None).to_json();
        assert!(text.starts_with("{\n  \"schema_version\": 1,\n  \"inertia\": 0.05,"));
        assert!(text.contains("\"coeff\": 300000000.0"));
        assert!(!text.contains("provenance"));
    }

    #[test]
    fn provenance_round_trip() {
        let prov = Provenance {
            method: Method::Sindy,
            input_digest: "ab".repeat(32),
            config: serde_json::json!({"threshold": 0.05, "terms": "qd, q^2*qd"}),
            residual_rms: BTreeMap::from([("stlsq".to_string(), 1.25e-7)]),
        };
        let text = ModelFile::from_system(&duffing_truth(), Some(prov)).to_json();
        assert!(text.contains("\"method\": \"sindy\""));
        assert_eq!(ModelFile::from_json(&text).unwrap().to_json(), text);
    }

    #[test]
    fn rejects_invalid() {
        let cases = [
            "",
            "{}",
            r#"{"schema_version":2,"inertia":1,"damping":[],"stiffness":[]}"#,
            r#"{"schema_version":1,"inertia":0,"damping":[],"stiffness":[]}"#,
            r#"{"schema_version":1,"inertia":1,"damping":[{"q_exp":0,"qd_exp":0,"coeff":1}],"stiffness":[]}"#,
            r#"{"schema_version":1,"inertia":1,"damping":[],"stiffness":[{"q_exp":1,"coeff":1},{"q_exp":1,"coeff":2}]}"#,
            r#"{"schema_version":1,"inertia":1,"damping":[],"stiffness":[],"extra":1}"#,
            r#"{"schema_version":1,"inertia":1,"damping":[],"stiffness":[{"q_exp":99,"coeff":1}]}"#,
        ];
        for c in cases {
            assert!(matches!(ModelFile::from_json(c), Err(Error::Model(_)) | Err(Error::InvalidInertia(_)) | Err(Error::DuplicateTerm(_))), "{c}");
        }
    }

    proptest! {
        #[test]
        fn arbitrary_coefficients_round_trip(
            inertia in 1e-6f64..1e6,
            coeffs in proptest::collection::vec(-1e12f64..1e12, 1..6),
        ) {
            let lib = BasisLibrary::polynomial(coeffs.len() as u32);
            let sys = IdentifiedSystem::new(
                inertia,
                DampingModel::new(BasisLibrary::new(vec![BasisTerm::new(0, 1).unwrap()]).unwrap(), vec![coeffs[0]]).unwrap(),
                StiffnessModel::new(lib, coeffs).unwrap(),
            ).unwrap();
            let text = ModelFile::from_system(&sys, None).to_json();
            let back = ModelFile::from_json(&text).unwrap();
            prop_assert_eq!(back.to_json(), text);
            prop_assert_eq!(back.to_system().unwrap(), sys);
        }
    }
}

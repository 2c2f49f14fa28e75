use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::path::Path;

use super::DataError;

const AMI_SCHEMA_JSON: &str = include_str!("../../assets/ami_schema_v1.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Numeric,
    Binary,
    OrdinalResponse,
}

/// Questionnaire domain a feature belongs to. `Other` is used by schemas that
/// do not come from the AMI instrument (synthetic data, custom exports).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainGroup {
    SocialReciprocity,
    Nonverbal,
    Relationship,
    Stereotyped,
    Routine,
    FixedInterest,
    Sensory,
    Demographic,
    Other,
}

impl DomainGroup {
    /// Table-1 row group for an AMI feature code, if the code belongs to the
    /// instrument.
    pub fn for_ami_code(code: &str) -> Option<DomainGroup> {
        let item = |prefix: &str, max: u32| {
            code.strip_prefix(prefix)
                .and_then(|rest| rest.parse::<u32>().ok())
                .is_some_and(|i| (1..=max).contains(&i))
        };
        match code {
            "Age in months" | "Gender" => Some(DomainGroup::Demographic),
            "New2b" => Some(DomainGroup::Routine),
            "New2c" => Some(DomainGroup::FixedInterest),
            _ if item("New1a", 8) => Some(DomainGroup::SocialReciprocity),
            _ if item("New1b", 4) => Some(DomainGroup::Nonverbal),
            _ if item("New1c", 3) => Some(DomainGroup::Relationship),
            _ if item("New2a", 7) => Some(DomainGroup::Stereotyped),
            _ if item("New2d", 4) => Some(DomainGroup::Sensory),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub code: String,
    pub kind: FeatureKind,
    pub domain_group: DomainGroup,
    pub description: String,
    /// Answer vocabulary for binary and ordinal items; empty for numeric.
    #[serde(default)]
    pub answers: Vec<AnswerOption>,
}

impl FeatureSpec {
    pub fn numeric(code: impl Into<String>, group: DomainGroup) -> Self {
        let code = code.into();
        FeatureSpec {
            description: code.clone(),
            code,
            kind: FeatureKind::Numeric,
            domain_group: group,
            answers: Vec::new(),
        }
    }

    pub fn yes_no(code: impl Into<String>, group: DomainGroup) -> Self {
        let code = code.into();
        FeatureSpec {
            description: code.clone(),
            code,
            kind: FeatureKind::Binary,
            domain_group: group,
            answers: vec![
                AnswerOption { label: "yes".into(), value: 1.0 },
                AnswerOption { label: "no".into(), value: 0.0 },
            ],
        }
    }

    /// Encodes one raw answer. Vocabulary labels match case-insensitively;
    /// binary items also accept their numeric encodings, ordinal items any
    /// small non-negative integer.
    pub fn encode(&self, raw: &str) -> Result<f64, String> {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(format!("missing answer for `{}`", self.code));
        }
        match self.kind {
            FeatureKind::Numeric => match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("`{raw}` is not a number")),
            },
            FeatureKind::Binary | FeatureKind::OrdinalResponse => {
                if let Some(opt) = self.answers.iter().find(|a| a.label.eq_ignore_ascii_case(raw)) {
                    return Ok(opt.value);
                }
                let parsed = raw.parse::<f64>().ok().filter(|v| v.is_finite());
                match (self.kind, parsed) {
                    (_, Some(v)) if self.answers.iter().any(|a| a.value == v) => Ok(v),
                    (FeatureKind::OrdinalResponse, Some(v)) if v >= 0.0 && v.fract() == 0.0 => Ok(v),
                    _ => Err(format!(
                        "`{raw}` is not one of {:?}",
                        self.answers.iter().map(|a| a.label.as_str()).collect::<Vec<_>>()
                    )),
                }
            }
        }
    }

    /// Inverse of [`encode`](Self::encode) for canonical inputs.
    pub fn decode(&self, value: f64) -> String {
        match self.answers.iter().find(|a| a.value == value) {
            Some(opt) if self.kind != FeatureKind::Numeric => opt.label.clone(),
            _ => format!("{value}"),
        }
    }
}

/// An ordered, versioned list of features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    pub version: u32,
    pub features: Vec<FeatureSpec>,
}

impl Schema {
    pub fn new(name: impl Into<String>, version: u32, features: Vec<FeatureSpec>) -> Result<Self, DataError> {
        let schema = Schema { name: name.into(), version, features };
        schema.validate()?;
        Ok(schema)
    }

    /// The shipped AMI schema: Age, Gender and the 28 questionnaire items in
    /// Table-1 order.
    pub fn ami() -> Schema {
        Schema::from_json_str(AMI_SCHEMA_JSON).expect("shipped AMI schema is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self, DataError> {
        let schema: Schema = serde_json::from_str(text).map_err(|e| DataError::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.features.is_empty() {
            return Err(DataError::Schema("schema has no features".into()));
        }
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.code.as_str()) {
                return Err(DataError::Schema(format!("duplicate feature code `{}`", f.code)));
            }
            if f.kind == FeatureKind::Binary && f.answers.len() != 2 {
                return Err(DataError::Schema(format!("binary feature `{}` needs exactly two answers", f.code)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn codes(&self) -> Vec<String> {
        self.features.iter().map(|f| f.code.clone()).collect()
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.features.iter().map(|f| f.kind).collect()
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.features.iter().position(|f| f.code == code)
    }

    pub fn feature(&self, code: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.code == code)
    }

    /// Sub-schema holding `codes`, kept in this schema's order.
    pub fn subset(&self, codes: &[String]) -> Result<Schema, DataError> {
        if let Some(missing) = codes.iter().find(|c| self.index_of(c).is_none()) {
            return Err(DataError::Schema(format!("unknown feature code `{missing}`")));
        }
        let features = self.features.iter().filter(|f| codes.contains(&f.code)).cloned().collect();
        Schema::new(self.name.clone(), self.version, features)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_schema_matches_table_one() {
        let s = Schema::ami();
        assert_eq!(s.len(), 30);
        assert_eq!(s.features[0].code, "Age in months");
        assert_eq!(s.features[1].code, "Gender");
        assert_eq!(s.features[29].code, "New2d4");
        for f in &s.features {
            assert_eq!(DomainGroup::for_ami_code(&f.code), Some(f.domain_group), "{}", f.code);
        }
        assert_eq!(s.features.iter().filter(|f| f.kind == FeatureKind::Binary).count(), 29);
    }

    #[test]
    fn encodes_answers() {
        let s = Schema::ami();
        let item = s.feature("New1a3").unwrap();
        assert_eq!(item.encode("yes"), Ok(1.0));
        assert_eq!(item.encode("No"), Ok(0.0));
        assert_eq!(item.encode("1"), Ok(1.0));
        assert!(item.encode("maybe").is_err());
        assert!(item.encode("2").is_err());
        assert_eq!(s.feature("Gender").unwrap().encode("male"), Ok(1.0));
        assert_eq!(s.feature("Gender").unwrap().encode("female"), Ok(0.0));
        assert_eq!(s.feature("Age in months").unwrap().encode("47"), Ok(47.0));
        assert!(s.feature("Age in months").unwrap().encode("forty").is_err());
    }

    #[test]
    fn ordinal_accepts_small_integers() {
        let mut f = FeatureSpec::yes_no("q", DomainGroup::Other);
        f.kind = FeatureKind::OrdinalResponse;
        assert_eq!(f.encode("3"), Ok(3.0));
        assert!(f.encode("-1").is_err());
        assert!(f.encode("1.5").is_err());
    }

    #[test]
    fn duplicate_codes_rejected() {
        let f = FeatureSpec::yes_no("a", DomainGroup::Other);
        assert!(Schema::new("x", 1, vec![f.clone(), f]).is_err());
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = Schema::ami();
        assert_eq!(a.content_hash(), Schema::ami().content_hash());
        let b = a.subset(&["Gender".to_string()]).unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
    }
}

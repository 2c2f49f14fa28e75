//! Bilingual question catalog served to questionnaire front ends.
//!
//! The shipped Hindi strings are placeholders awaiting clinical review.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::data::FeatureKind;

const SHIPPED_CATALOG_JSON: &str = include_str!("../assets/catalog_v1.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read catalog {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("catalog lists `{0}` twice")]
    DuplicateCode(String),
    #[error("catalog item `{code}` has an empty {field}")]
    EmptyText { code: String, field: &'static str },
    #[error("the catalog has no item for feature{} {}", if .0.len() == 1 { "" } else { "s" }, .0.join(", "))]
    MissingItems(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locale {
    En,
    Hi,
}

impl Locale {
    pub const SUPPORTED: [&'static str; 2] = ["en", "hi"];
}

impl FromStr for Locale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" => Ok(Locale::En),
            "hi" => Ok(Locale::Hi),
            _ => Err(format!("unsupported locale `{s}` (supported: {})", Locale::SUPPORTED.join(", "))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerChoice {
    pub label: String,
    pub encoding: f64,
    pub text_en: String,
    pub text_hi: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub code: String,
    pub kind: FeatureKind,
    pub text_en: String,
    pub text_hi: String,
    /// Empty for free numeric answers such as age.
    pub options: Vec<AnswerChoice>,
}

impl CatalogItem {
    /// Encodes one submitted answer. Accepts an option label
    /// (case-insensitive), an option's numeric encoding, or for numeric
    /// items any finite non-negative number.
    pub fn encode(&self, answer: &Value) -> Result<f64, String> {
        let number = match answer {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => {
                let s = s.trim();
                if let Some(o) = self.options.iter().find(|o| o.label.eq_ignore_ascii_case(s)) {
                    return Ok(o.encoding);
                }
                s.parse::<f64>().ok()
            }
            _ => None,
        };
        let Some(v) = number.filter(|v| v.is_finite()) else {
            return Err(self.expected());
        };
        if self.options.is_empty() {
            return if v >= 0.0 { Ok(v) } else { Err(self.expected()) };
        }
        if self.options.iter().any(|o| o.encoding == v) {
            Ok(v)
        } else {
            Err(self.expected())
        }
    }

    fn expected(&self) -> String {
        if self.options.is_empty() {
            "expected a non-negative number".to_string()
        } else {
            let labels: Vec<String> = self.options.iter().map(|o| format!("{} ({})", o.label, o.encoding)).collect();
            format!("expected one of {}", labels.join(", "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionCatalog {
    pub version: String,
    pub disclaimer_en: String,
    pub disclaimer_hi: String,
    pub items: Vec<CatalogItem>,
}

/// One item in a single language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedItem {
    pub code: String,
    pub kind: FeatureKind,
    pub text: String,
    pub options: Vec<LocalizedChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedChoice {
    pub label: String,
    pub encoding: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedCatalog {
    pub version: String,
    pub locale: Locale,
    /// Feature codes of the model the catalog was cut for.
    pub feature_mask: Vec<String>,
    pub disclaimer: String,
    pub items: Vec<LocalizedItem>,
}

impl QuestionCatalog {
    pub fn shipped() -> Self {
        Self::from_json_str(SHIPPED_CATALOG_JSON).expect("shipped catalog is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self, CatalogError> {
        let c: QuestionCatalog = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text)
    }

    fn validate(&self) -> Result<(), CatalogError> {
        let mut seen = std::collections::BTreeSet::new();
        for item in &self.items {
            if !seen.insert(item.code.as_str()) {
                return Err(CatalogError::DuplicateCode(item.code.clone()));
            }
            for (field, text) in [("text_en", &item.text_en), ("text_hi", &item.text_hi)] {
                if text.trim().is_empty() {
                    return Err(CatalogError::EmptyText { code: item.code.clone(), field });
                }
            }
        }
        Ok(())
    }

    pub fn item(&self, code: &str) -> Option<&CatalogItem> {
        self.items.iter().find(|i| i.code == code)
    }

    pub fn codes(&self) -> Vec<String> {
        self.items.iter().map(|i| i.code.clone()).collect()
    }

    /// Items covering exactly `mask`, kept in catalog order.
    pub fn restrict(&self, mask: &[String]) -> Result<QuestionCatalog, CatalogError> {
        let missing: Vec<String> = mask.iter().filter(|c| self.item(c).is_none()).cloned().collect();
        if !missing.is_empty() {
            return Err(CatalogError::MissingItems(missing));
        }
        let items = self.items.iter().filter(|i| mask.contains(&i.code)).cloned().collect();
        Ok(QuestionCatalog { items, ..self.clone() })
    }

    pub fn localized(&self, locale: Locale, feature_mask: &[String]) -> LocalizedCatalog {
        let pick = |en: &str, hi: &str| match locale {
            Locale::En => en.to_string(),
            Locale::Hi => hi.to_string(),
        };
        LocalizedCatalog {
            version: self.version.clone(),
            locale,
            feature_mask: feature_mask.to_vec(),
            disclaimer: pick(&self.disclaimer_en, &self.disclaimer_hi),
            items: self
                .items
                .iter()
                .map(|i| LocalizedItem {
                    code: i.code.clone(),
                    kind: i.kind,
                    text: pick(&i.text_en, &i.text_hi),
                    options: i
                        .options
                        .iter()
                        .map(|o| LocalizedChoice { label: o.label.clone(), encoding: o.encoding, text: pick(&o.text_en, &o.text_hi) })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn disclaimer(&self, locale: Locale) -> &str {
        match locale {
            Locale::En => &self.disclaimer_en,
            Locale::Hi => &self.disclaimer_hi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Schema;
    use crate::selection::DEFAULT_FEATURE_MASK;
    use serde_json::json;

    fn default_mask() -> Vec<String> {
        DEFAULT_FEATURE_MASK.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn shipped_catalog_covers_the_schema() {
        let c = QuestionCatalog::shipped();
        assert_eq!(c.codes(), Schema::ami().codes());
        for (item, spec) in c.items.iter().zip(&Schema::ami().features) {
            assert_eq!(item.kind, spec.kind, "{}", item.code);
        }
    }

    #[test]
    fn default_mask_gives_twenty_items_in_both_languages() {
        let c = QuestionCatalog::shipped().restrict(&default_mask()).unwrap();
        let en = c.localized(Locale::En, &default_mask());
        let hi = c.localized(Locale::Hi, &default_mask());
        assert_eq!(en.items.len(), 20);
        assert_eq!(en.items.iter().map(|i| &i.code).collect::<Vec<_>>(), hi.items.iter().map(|i| &i.code).collect::<Vec<_>>());
        assert!(en.items.iter().zip(&hi.items).all(|(a, b)| a.text != b.text));
        assert!(!en.items.iter().any(|i| i.code == "Gender" || i.code == "Age in months"));
    }

    #[test]
    fn restrict_keeps_catalog_order_and_reports_gaps() {
        let c = QuestionCatalog::shipped();
        let r = c.restrict(&["New2b".to_string(), "Gender".to_string()]).unwrap();
        assert_eq!(r.codes(), vec!["Gender", "New2b"]);
        match c.restrict(&["Nope".to_string()]) {
            Err(CatalogError::MissingItems(m)) => assert_eq!(m, vec!["Nope"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn answer_encoding() {
        let c = QuestionCatalog::shipped();
        let yes_no = c.item("New2b").unwrap();
        assert_eq!(yes_no.encode(&json!("yes")).unwrap(), 1.0);
        assert_eq!(yes_no.encode(&json!("No")).unwrap(), 0.0);
        assert_eq!(yes_no.encode(&json!(1)).unwrap(), 1.0);
        assert!(yes_no.encode(&json!(0.5)).is_err());
        assert!(yes_no.encode(&json!("maybe")).is_err());
        assert!(yes_no.encode(&json!(null)).is_err());
        let age = c.item("Age in months").unwrap();
        assert_eq!(age.encode(&json!(47)).unwrap(), 47.0);
        assert_eq!(age.encode(&json!("47")).unwrap(), 47.0);
        assert!(age.encode(&json!(-1)).is_err());
        assert_eq!(c.item("Gender").unwrap().encode(&json!("female")).unwrap(), 0.0);
    }

    #[test]
    fn locale_parsing() {
        assert_eq!("HI".parse::<Locale>().unwrap(), Locale::Hi);
        let err = "fr".parse::<Locale>().unwrap_err();
        assert!(err.contains("en, hi"));
    }

    #[test]
    fn validation() {
        let mut c = QuestionCatalog::shipped();
        c.items[3].text_hi = " ".into();
        let text = serde_json::to_string(&c).unwrap();
        assert!(matches!(QuestionCatalog::from_json_str(&text), Err(CatalogError::EmptyText { field: "text_hi", .. })));
        let mut c = QuestionCatalog::shipped();
        c.items[4].code = c.items[3].code.clone();
        assert!(matches!(QuestionCatalog::from_json_str(&serde_json::to_string(&c).unwrap()), Err(CatalogError::DuplicateCode(_))));
    }
}

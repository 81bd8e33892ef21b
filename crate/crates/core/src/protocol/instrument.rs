use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// Bundled definitions as (id, JSON text).
pub const BUILTIN_INSTRUMENTS: [(&str, &str); 4] = [
    ("rtlx", include_str!("../../data/instruments/rtlx.json")),
    (
        "annoyance",
        include_str!("../../data/instruments/annoyance.json"),
    ),
    ("thayer", include_str!("../../data/instruments/thayer.json")),
    (
        "levenson",
        include_str!("../../data/instruments/levenson.json"),
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub key: String,
    pub prompt: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subscale {
    pub name: String,
    pub items: Vec<String>,
    pub aggregation: Aggregation,
    /// Items scored as `min + max - value`.
    #[serde(default)]
    pub reversed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentDefinition {
    pub id: String,
    pub title: String,
    pub items: Vec<Item>,
    pub subscales: Vec<Subscale>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentResponse {
    pub instrument: String,
    pub values: BTreeMap<String, f64>,
}

impl InstrumentDefinition {
    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        let def: Self = serde_json::from_str(text)?;
        def.validate()?;
        Ok(def)
    }

    pub fn builtin(id: &str) -> Option<Self> {
        BUILTIN_INSTRUMENTS
            .iter()
            .find(|(k, _)| *k == id)
            .map(|(_, text)| Self::from_json(text).expect("bundled instrument is valid"))
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::InvalidInstrument(m));
        if self.items.is_empty() {
            return bad(format!("{}: no items", self.id));
        }
        let mut keys = HashSet::new();
        for item in &self.items {
            if !keys.insert(item.key.as_str()) {
                return bad(format!("duplicate item {:?}", item.key));
            }
            if !(item.min < item.max && item.min.is_finite() && item.max.is_finite()) {
                return bad(format!("item {:?}: empty scale", item.key));
            }
        }
        for s in &self.subscales {
            if s.items.is_empty() {
                return bad(format!("subscale {:?} has no items", s.name));
            }
            if let Some(k) = s.items.iter().find(|k| !keys.contains(k.as_str())) {
                return bad(format!("subscale {:?} names unknown item {k:?}", s.name));
            }
            if let Some(k) = s.reversed.iter().find(|k| !s.items.contains(k)) {
                return bad(format!(
                    "subscale {:?} reverses {k:?} outside its items",
                    s.name
                ));
            }
        }
        Ok(())
    }

    pub fn item(&self, key: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.key == key)
    }

    /// Check a response: every item present, in range, nothing extra.
    pub fn check(&self, response: &InstrumentResponse) -> Result<(), ProtocolError> {
        if response.instrument != self.id {
            return Err(ProtocolError::WrongInstrument {
                expected: self.id.clone(),
                found: response.instrument.clone(),
            });
        }
        if let Some(k) = response.values.keys().find(|k| self.item(k).is_none()) {
            return Err(ProtocolError::UnknownItem(k.clone()));
        }
        for item in &self.items {
            let v = *response
                .values
                .get(&item.key)
                .ok_or_else(|| ProtocolError::MissingItem(item.key.clone()))?;
            if !(item.min..=item.max).contains(&v) {
                return Err(ProtocolError::ScaleViolation {
                    item: item.key.clone(),
                    value: v,
                    min: item.min,
                    max: item.max,
                });
            }
        }
        Ok(())
    }
}

pub fn score_instrument(
    definition: &InstrumentDefinition,
    response: &InstrumentResponse,
) -> Result<BTreeMap<String, f64>, ProtocolError> {
    definition.check(response)?;
    let mut out = BTreeMap::new();
    for s in &definition.subscales {
        let values: Vec<f64> = s
            .items
            .iter()
            .map(|k| {
                let item = definition.item(k).expect("validated");
                let v = response.values[k];
                if s.reversed.contains(k) {
                    item.min + item.max - v
                } else {
                    v
                }
            })
            .collect();
        let sum: f64 = values.iter().sum();
        let score = match s.aggregation {
            Aggregation::Sum => sum,
            Aggregation::Mean => sum / values.len() as f64,
        };
        out.insert(s.name.clone(), score);
    }
    Ok(out)
}

/// Raw TLX: unweighted mean of five 0-100 ratings.
pub fn score_rtlx(response: &InstrumentResponse) -> Result<f64, ProtocolError> {
    if response.values.len() != 5 {
        return Err(ProtocolError::WrongItemCount {
            expected: 5,
            found: response.values.len(),
        });
    }
    for (k, &v) in &response.values {
        if !(0.0..=100.0).contains(&v) {
            return Err(ProtocolError::ScaleViolation {
                item: k.clone(),
                value: v,
                min: 0.0,
                max: 100.0,
            });
        }
    }
    Ok(response.values.values().sum::<f64>() / 5.0)
}

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorDef {
    pub name: String,
    pub items: Vec<String>,
}

/// A Likert questionnaire: an ordered list of factors, each averaging a
/// fixed set of items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentDefinition {
    pub instrument_id: String,
    #[serde(default = "default_scale_min")]
    pub scale_min: u8,
    #[serde(default = "default_scale_max")]
    pub scale_max: u8,
    pub factors: Vec<FactorDef>,
}

fn default_scale_min() -> u8 {
    1
}

fn default_scale_max() -> u8 {
    7
}

/// Numbers items `i01, i02, ...` consecutively across the factors.
fn sequential(instrument_id: &str, factors: &[(&str, usize)]) -> InstrumentDefinition {
    let mut next = 1;
    let factors = factors
        .iter()
        .map(|&(name, count)| {
            let items = (next..next + count).map(|i| format!("i{i:02}")).collect();
            next += count;
            FactorDef { name: name.to_string(), items }
        })
        .collect();
    InstrumentDefinition { instrument_id: instrument_id.to_string(), scale_min: 1, scale_max: 7, factors }
}

impl InstrumentDefinition {
    /// Theory of Planned Behavior questionnaire, 16 items.
    pub fn tpb() -> Self {
        sequential("TPB", &[("intention", 4), ("attitude", 6), ("subjective_norm", 3), ("behavioral_control", 3)])
    }

    /// Learning-analytics dashboard success questionnaire, 28 items.
    pub fn lads() -> Self {
        sequential(
            "LADS",
            &[
                ("visual_attraction", 5),
                ("usability", 6),
                ("understanding_level", 5),
                ("perceived_usefulness", 6),
                ("behavioral_changes", 6),
            ],
        )
    }

    /// Resolves `tpb` / `lads` (case-insensitive) to a preset.
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "tpb" => Some(Self::tpb()),
            "lads" => Some(Self::lads()),
            _ => None,
        }
    }

    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().flat_map(|f| f.items.iter().map(String::as_str))
    }

    pub fn item_count(&self) -> usize {
        self.factors.iter().map(|f| f.items.len()).sum()
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.factors.is_empty() {
            return Err(StatsError::InvalidInstrument("no factors".into()));
        }
        if self.scale_min >= self.scale_max {
            return Err(StatsError::InvalidInstrument(format!(
                "scale {}..{} is empty",
                self.scale_min, self.scale_max
            )));
        }
        let mut names = BTreeSet::new();
        let mut items = BTreeSet::new();
        for f in &self.factors {
            if !names.insert(f.name.as_str()) {
                return Err(StatsError::InvalidInstrument(format!("duplicate factor {:?}", f.name)));
            }
            if f.items.is_empty() {
                return Err(StatsError::InvalidInstrument(format!("factor {:?} has no items", f.name)));
            }
            for item in &f.items {
                if !items.insert(item.as_str()) {
                    return Err(StatsError::InvalidInstrument(format!("duplicate item {item:?}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_shapes() {
        let tpb = InstrumentDefinition::tpb();
        let sizes: Vec<usize> = tpb.factors.iter().map(|f| f.items.len()).collect();
        assert_eq!(sizes, vec![4, 6, 3, 3]);
        assert_eq!(tpb.item_ids().last(), Some("i16"));
        let lads = InstrumentDefinition::lads();
        assert_eq!(lads.factors.len(), 5);
        assert_eq!(lads.item_count(), 28);
        assert_eq!(lads.item_ids().last(), Some("i28"));
        tpb.validate().unwrap();
        lads.validate().unwrap();
    }

    #[test]
    fn duplicate_items_are_invalid() {
        let mut def = InstrumentDefinition::tpb();
        def.factors[1].items[0] = "i01".into();
        assert!(def.validate().is_err());
    }
}

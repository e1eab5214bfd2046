use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{csv_reader, csv_writer, finish_writer, IngestError, IngestErrorKind};
use crate::stats::InstrumentDefinition;

const FILE: &str = "survey.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pre,
    Post,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Pre => "pre",
            Phase::Post => "post",
        })
    }
}

impl std::str::FromStr for Phase {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "pre" => Ok(Phase::Pre),
            "post" => Ok(Phase::Post),
            _ => Err(()),
        }
    }
}

/// One respondent's answers in one phase, in instrument item order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponseSet {
    pub respondent_id: String,
    pub phase: Phase,
    pub instrument_id: String,
    pub answers: Vec<(String, u8)>,
}

impl SurveyResponseSet {
    pub fn answer(&self, item_id: &str) -> Option<u8> {
        self.answers.iter().find(|(id, _)| id == item_id).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyParse {
    pub sets: Vec<SurveyResponseSet>,
    /// Respondents seen in only one phase; they cannot be paired downstream.
    pub unpaired: Vec<String>,
}

/// Respondents that lack a `pre` or a `post` response set.
pub fn unpaired_respondents(sets: &[SurveyResponseSet]) -> Vec<String> {
    let mut phases: BTreeMap<&str, BTreeSet<Phase>> = BTreeMap::new();
    for s in sets {
        phases.entry(&s.respondent_id).or_default().insert(s.phase);
    }
    phases.into_iter().filter(|(_, p)| p.len() < 2).map(|(r, _)| r.to_string()).collect()
}

/// Parses `survey.csv` (`respondent_id,phase,<item ids in instrument order>`).
pub fn parse_survey_csv(bytes: &[u8], instrument: &InstrumentDefinition) -> Result<SurveyParse, IngestError> {
    instrument.validate().map_err(|e| {
        IngestError::at_path(FILE, "instrument", IngestErrorKind::InvalidInstrument { message: e.to_string() })
    })?;
    let items: Vec<&str> = instrument.item_ids().collect();
    let mut expected = vec!["respondent_id", "phase"];
    expected.extend(items.iter().copied());

    let mut reader = csv_reader(bytes);
    let header = reader.headers().map_err(|e| IngestError::from_csv(FILE, &e))?.clone();
    super::check_header(FILE, &header, &expected)?;

    let mut sets = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| IngestError::from_csv(FILE, &e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row[0].is_empty() {
            return Err(IngestError::at_row(
                FILE,
                line,
                Some("respondent_id"),
                IngestErrorKind::EmptyField { field: "respondent_id".into() },
            ));
        }
        let phase: Phase = row[1].parse().map_err(|_| {
            IngestError::at_row(FILE, line, Some("phase"), IngestErrorKind::InvalidPhase { value: row[1].into() })
        })?;
        let mut answers = Vec::with_capacity(items.len());
        for (k, item) in items.iter().enumerate() {
            let raw = &row[k + 2];
            let value = raw
                .parse::<u8>()
                .ok()
                .filter(|v| (instrument.scale_min..=instrument.scale_max).contains(v))
                .ok_or_else(|| {
                    IngestError::at_row(
                        FILE,
                        line,
                        Some(item),
                        IngestErrorKind::InvalidLikert {
                            item: item.to_string(),
                            value: raw.into(),
                            min: instrument.scale_min,
                            max: instrument.scale_max,
                        },
                    )
                })?;
            answers.push((item.to_string(), value));
        }
        sets.push(SurveyResponseSet {
            respondent_id: row[0].into(),
            phase,
            instrument_id: instrument.instrument_id.clone(),
            answers,
        });
    }
    let unpaired = unpaired_respondents(&sets);
    Ok(SurveyParse { sets, unpaired })
}

pub fn serialize_survey_csv(sets: &[SurveyResponseSet], instrument: &InstrumentDefinition) -> String {
    let mut w = csv_writer();
    let mut header = vec!["respondent_id".to_string(), "phase".to_string()];
    header.extend(instrument.item_ids().map(str::to_string));
    w.write_record(&header).expect("in-memory write");
    for s in sets {
        let mut row = vec![s.respondent_id.clone(), s.phase.to_string()];
        row.extend(instrument.item_ids().map(|id| s.answer(id).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row).expect("in-memory write");
    }
    finish_writer(w)
}

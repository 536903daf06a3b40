use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EventLog, RawField};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputationReport {
    /// Event-level attribute slots filled from another event of the same case.
    pub filled: usize,
    /// (case, attribute) pairs carrying more than one distinct value.
    pub conflicts: usize,
}

/// Propagates case attributes to every event of the case.
///
/// For each case and each of race, age, gender, insurance, language and
/// disposition, the value of the earliest event carrying it is written to all
/// events. When later events disagree the earliest value wins and the
/// conflict is counted. Per-event acuity is left as recorded.
pub fn impute_case_attributes(mut log: EventLog) -> (EventLog, ImputationReport) {
    let mut report = ImputationReport::default();
    for case in &mut log.cases {
        for field in RawField::ALL {
            let Some(first) = case
                .events
                .iter()
                .find_map(|e| e.attributes.get(field).cloned())
            else {
                continue;
            };
            let mut conflicting = false;
            for event in &mut case.events {
                let slot = event.attributes.slot(field);
                match slot {
                    None => {
                        *slot = Some(Arc::clone(&first));
                        report.filled += 1;
                    }
                    Some(v) if **v != *first => {
                        conflicting = true;
                        *slot = Some(Arc::clone(&first));
                    }
                    Some(_) => {}
                }
            }
            if conflicting {
                report.conflicts += 1;
            }
        }
    }
    (log, report)
}

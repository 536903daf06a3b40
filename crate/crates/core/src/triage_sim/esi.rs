use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vitals {
    pub heart_rate: f64,
    pub respiratory_rate: f64,
    pub spo2: f64,
}

/// Danger-zone cutoffs. Exceeding any one flags the presentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DangerZone {
    #[serde(default = "default_hr")]
    pub heart_rate_above: f64,
    #[serde(default = "default_rr")]
    pub respiratory_rate_above: f64,
    #[serde(default = "default_spo2")]
    pub spo2_below: f64,
}

fn default_hr() -> f64 {
    100.0
}

fn default_rr() -> f64 {
    20.0
}

fn default_spo2() -> f64 {
    92.0
}

impl Default for DangerZone {
    fn default() -> Self {
        DangerZone {
            heart_rate_above: default_hr(),
            respiratory_rate_above: default_rr(),
            spo2_below: default_spo2(),
        }
    }
}

impl DangerZone {
    pub fn exceeded(&self, v: &Vitals) -> bool {
        v.heart_rate > self.heart_rate_above
            || v.respiratory_rate > self.respiratory_rate_above
            || v.spo2 < self.spo2_below
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        let ok = self.heart_rate_above > 0.0
            && self.respiratory_rate_above > 0.0
            && self.spo2_below > 0.0
            && self.spo2_below <= 100.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(
                key,
                "cutoffs must be positive and spo2_below at most 100",
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatientPresentation {
    pub life_saving_needed: bool,
    pub high_risk: bool,
    pub confused: bool,
    /// 0–10 pain score.
    pub severe_pain: u8,
    pub expected_resources: u32,
    pub vitals: Vitals,
}

impl PatientPresentation {
    pub fn validate(&self) -> Result<()> {
        if self.severe_pain > 10 {
            return Err(Error::Validation(format!(
                "pain score {} above 10",
                self.severe_pain
            )));
        }
        let v = self.vitals;
        let positive = [v.heart_rate, v.respiratory_rate, v.spo2]
            .iter()
            .all(|x| x.is_finite() && *x > 0.0);
        if !positive || v.spo2 > 100.0 {
            return Err(Error::Validation(format!("implausible vitals {v:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EsiAssignment {
    pub level: u8,
    pub danger_zone_flag: bool,
    /// A level-3 candidate raised to 2 because of danger-zone vitals.
    pub upgraded: bool,
}

/// Initial ESI level.
///
/// 1 for an immediate life-saving need; 2 for high risk, confusion or pain
/// ≥ 7; otherwise 5 or 4 for zero or one expected resource; otherwise 3,
/// raised to 2 whenever a vital sign is in the danger zone.
pub fn assign_esi(p: &PatientPresentation, danger: &DangerZone) -> EsiAssignment {
    let danger_zone_flag = danger.exceeded(&p.vitals);
    let level = if p.life_saving_needed {
        1
    } else if p.high_risk || p.confused || p.severe_pain >= 7 {
        2
    } else {
        match p.expected_resources {
            0 => 5,
            1 => 4,
            _ if danger_zone_flag => 2,
            _ => 3,
        }
    };
    let upgraded = level == 2
        && danger_zone_flag
        && !p.life_saving_needed
        && !(p.high_risk || p.confused || p.severe_pain >= 7);
    EsiAssignment {
        level,
        danger_zone_flag,
        upgraded,
    }
}

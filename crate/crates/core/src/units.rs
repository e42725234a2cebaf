//! Unit conversion at the reporting boundary.

use std::f64::consts::LN_2;

pub fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}

pub fn bits_to_nats(x: f64) -> f64 {
    x * LN_2
}

/// Reporting unit selected by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    pub fn scale(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats_to_bits(nats),
        }
    }
}

impl std::str::FromStr for Units {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nats" => Ok(Units::Nats),
            "bits" => Ok(Units::Bits),
            other => Err(format!("unknown units '{other}' (expected bits or nats)")),
        }
    }
}

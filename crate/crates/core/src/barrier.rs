use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The five contextual boundaries a piece of news may cross while spreading.
///
/// Declaration order is the reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierKind {
    Economic,
    Cultural,
    Geographical,
    TimeZone,
    Political,
}

impl BarrierKind {
    pub const ALL: [BarrierKind; 5] = [
        BarrierKind::Economic,
        BarrierKind::Cultural,
        BarrierKind::Geographical,
        BarrierKind::TimeZone,
        BarrierKind::Political,
    ];

    /// Short machine name used in file names and flags.
    pub fn slug(self) -> &'static str {
        match self {
            BarrierKind::Economic => "economic",
            BarrierKind::Cultural => "cultural",
            BarrierKind::Geographical => "geographical",
            BarrierKind::TimeZone => "time-zone",
            BarrierKind::Political => "political",
        }
    }

    /// Human name used in rendered reports.
    pub fn display_name(self) -> &'static str {
        match self {
            BarrierKind::Economic => "Economic",
            BarrierKind::Cultural => "Cultural",
            BarrierKind::Geographical => "Geographical",
            BarrierKind::TimeZone => "Time Zone",
            BarrierKind::Political => "Political",
        }
    }

    /// Vector barriers are labeled by cosine similarity, the rest by equality.
    pub fn is_vector(self) -> bool {
        matches!(self, BarrierKind::Economic | BarrierKind::Cultural)
    }
}

impl fmt::Display for BarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown barrier `{0}`")]
pub struct UnknownBarrier(pub String);

impl FromStr for BarrierKind {
    type Err = UnknownBarrier;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "economic" | "economical" => Ok(BarrierKind::Economic),
            "cultural" => Ok(BarrierKind::Cultural),
            "geographical" | "geographic" => Ok(BarrierKind::Geographical),
            "timezone" => Ok(BarrierKind::TimeZone),
            "political" => Ok(BarrierKind::Political),
            _ => Err(UnknownBarrier(s.to_string())),
        }
    }
}

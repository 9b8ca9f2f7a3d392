use std::fmt;

use serde::{Deserialize, Serialize};

use crate::signalgen::{InterfererSpec, Technology};

pub const NUM_CLASSES: usize = 14;

/// Class C1..C14: C1 clean, C2..C5 LR-WPAN channels 11..14, C6..C14 BLE channels 0..8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ClassLabel(u8);

/// Technology-level collapse of the 14 classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TechClass {
    NoCti,
    LrWpan,
    Ble,
}

impl TechClass {
    pub const ALL: [TechClass; 3] = [TechClass::NoCti, TechClass::LrWpan, TechClass::Ble];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TechClass::NoCti => "No CTI",
            TechClass::LrWpan => "LR-WPAN",
            TechClass::Ble => "BLE",
        }
    }
}

impl ClassLabel {
    pub const NO_CTI: ClassLabel = ClassLabel(1);
    /// BLE channel 4, on the Wi-Fi center frequency.
    pub const BLE_CENTER: ClassLabel = ClassLabel(10);

    pub fn new(id: u8) -> Option<Self> {
        (1..=NUM_CLASSES as u8).contains(&id).then_some(Self(id))
    }

    /// Class for the zero-based network output index.
    pub fn from_index(index: usize) -> Option<Self> {
        u8::try_from(index + 1).ok().and_then(Self::new)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn all() -> impl Iterator<Item = ClassLabel> {
        (1..=NUM_CLASSES as u8).map(ClassLabel)
    }

    pub fn interferer(self) -> Option<InterfererSpec> {
        match self.0 {
            1 => None,
            2..=5 => InterfererSpec::lrwpan(self.0 + 9),
            _ => InterfererSpec::ble(self.0 - 6),
        }
    }

    pub fn from_interferer(spec: &InterfererSpec) -> Option<Self> {
        match spec.technology {
            Technology::LrWpan => (11..=14).contains(&spec.channel_index).then(|| Self(spec.channel_index - 9)),
            Technology::Ble => (spec.channel_index <= 8).then(|| Self(spec.channel_index + 6)),
        }
    }

    pub fn tech(self) -> TechClass {
        match self.0 {
            1 => TechClass::NoCti,
            2..=5 => TechClass::LrWpan,
            _ => TechClass::Ble,
        }
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = String;

    fn try_from(id: u8) -> Result<Self, Self::Error> {
        Self::new(id).ok_or_else(|| format!("class id {id} outside 1..=14"))
    }
}

impl From<ClassLabel> for u8 {
    fn from(c: ClassLabel) -> u8 {
        c.0
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

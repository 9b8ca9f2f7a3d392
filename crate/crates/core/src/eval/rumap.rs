use serde::Serialize;

use crate::dataset::{ClassLabel, NUM_CLASSES};
use crate::signalgen::SUBCARRIER_SPACING_HZ;

/// A resource unit as an inclusive subcarrier range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuSpan {
    /// 1-based RU number, counted from the lowest frequency.
    pub index: u8,
    pub first_bin: i32,
    pub last_bin: i32,
}

impl RuSpan {
    pub fn edges_hz(&self) -> (f64, f64) {
        (f64::from(self.first_bin) * SUBCARRIER_SPACING_HZ, f64::from(self.last_bin) * SUBCARRIER_SPACING_HZ)
    }

    pub fn center_hz(&self) -> f64 {
        let (lo, hi) = self.edges_hz();
        0.5 * (lo + hi)
    }

    pub fn tones(&self) -> usize {
        (self.last_bin - self.first_bin + 1) as usize
    }
}

/// The four 52-tone RUs of a 20 MHz channel.
pub const RU52_SPANS: [RuSpan; 4] = [
    RuSpan { index: 1, first_bin: -121, last_bin: -70 },
    RuSpan { index: 2, first_bin: -68, last_bin: -17 },
    RuSpan { index: 3, first_bin: 17, last_bin: 68 },
    RuSpan { index: 4, first_bin: 70, last_bin: 121 },
];

/// The two 106-tone RUs of a 20 MHz channel.
pub const RU106_SPANS: [RuSpan; 2] = [
    RuSpan { index: 1, first_bin: -122, last_bin: -17 },
    RuSpan { index: 2, first_bin: 17, last_bin: 122 },
];

/// For every class, the RUs its interferer overlaps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuMap {
    pub spans: Vec<RuSpan>,
    /// Indexed by `ClassLabel::index()`; empty for the clean class.
    sets: Vec<Vec<u8>>,
}

fn distance_to_span(lo: f64, hi: f64, span: &RuSpan) -> f64 {
    let (a, b) = span.edges_hz();
    if hi < a {
        a - hi
    } else if lo > b {
        lo - b
    } else {
        0.0
    }
}

impl RuMap {
    /// Maps each class to the RUs whose span intersects the interferer's
    /// occupied band. With `nearest_fallback`, a class touching no RU is
    /// assigned every RU at minimal distance.
    pub fn from_spans(spans: &[RuSpan], nearest_fallback: bool) -> Self {
        let sets = ClassLabel::all()
            .map(|c| {
                let Some(spec) = c.interferer() else { return Vec::new() };
                let hw = spec.occupied_half_bandwidth_hz();
                let (lo, hi) = (spec.center_offset_hz - hw, spec.center_offset_hz + hw);
                let dist: Vec<f64> = spans.iter().map(|s| distance_to_span(lo, hi, s)).collect();
                let mut set: Vec<u8> = spans.iter().zip(&dist).filter(|(_, d)| **d == 0.0).map(|(s, _)| s.index).collect();
                if set.is_empty() && nearest_fallback {
                    let best = dist.iter().cloned().fold(f64::INFINITY, f64::min);
                    set = spans.iter().zip(&dist).filter(|(_, d)| **d - best < 1e-6).map(|(s, _)| s.index).collect();
                }
                set
            })
            .collect();
        Self { spans: spans.to_vec(), sets }
    }

    pub fn ru_set(&self, class: ClassLabel) -> &[u8] {
        &self.sets[class.index()]
    }

    /// True when both classes share at least one RU.
    pub fn same_ru(&self, a: ClassLabel, b: ClassLabel) -> bool {
        let sb = self.ru_set(b);
        self.ru_set(a).iter().any(|r| sb.contains(r))
    }

    /// Classes whose interferer overlaps RU `index`.
    pub fn classes_on(&self, index: u8) -> Vec<ClassLabel> {
        ClassLabel::all().filter(|c| self.ru_set(*c).contains(&index)).collect()
    }

    pub fn len(&self) -> usize {
        debug_assert_eq!(self.sets.len(), NUM_CLASSES);
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

/// 52-tone map with the nearest-RU rule for channels inside the center gap.
pub fn build_ru_map() -> RuMap {
    RuMap::from_spans(&RU52_SPANS, true)
}

/// 106-tone map used when a 20 MHz channel is split between two users.
pub fn build_ru106_map() -> RuMap {
    RuMap::from_spans(&RU106_SPANS, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TechClass;

    fn class(id: u8) -> ClassLabel {
        ClassLabel::new(id).unwrap()
    }

    #[test]
    fn spans_have_expected_widths_and_centers() {
        assert!(RU52_SPANS.iter().all(|s| s.tones() == 52));
        assert!(RU106_SPANS.iter().all(|s| s.tones() == 106));
        let centers: Vec<f64> = RU52_SPANS.iter().map(|s| s.center_hz() / 1e6).collect();
        for (c, want) in centers.iter().zip([-7.5, -3.3, 3.3, 7.5]) {
            assert!((c - want).abs() < 0.5, "{centers:?}");
        }
    }

    #[test]
    fn lrwpan_channels_hit_one_ru_each() {
        let m = build_ru_map();
        assert_eq!(m.ru_set(class(2)), &[1]);
        assert_eq!(m.ru_set(class(3)), &[2]);
        assert_eq!(m.ru_set(class(4)), &[3]);
        assert_eq!(m.ru_set(class(5)), &[4]);
    }

    #[test]
    fn center_ble_channel_needs_nearest_rule() {
        assert!(RuMap::from_spans(&RU52_SPANS, false).ru_set(ClassLabel::BLE_CENTER).is_empty());
        assert_eq!(build_ru_map().ru_set(ClassLabel::BLE_CENTER), &[2, 3]);
    }

    #[test]
    fn each_ru_has_two_ble_and_one_lrwpan() {
        let strict = RuMap::from_spans(&RU52_SPANS, false);
        for ru in 1..=4 {
            let cls = strict.classes_on(ru);
            let ble = cls.iter().filter(|c| c.tech() == TechClass::Ble).count();
            let lr = cls.iter().filter(|c| c.tech() == TechClass::LrWpan).count();
            assert_eq!((ble, lr), (2, 1), "RU{ru}: {cls:?}");
        }
        // after the fallback every interferer class maps somewhere
        let resolved = build_ru_map();
        assert!(ClassLabel::all().skip(1).all(|c| !resolved.ru_set(c).is_empty()));
        assert!(resolved.ru_set(ClassLabel::NO_CTI).is_empty());
    }

    #[test]
    fn ru106_assignment() {
        let m = build_ru106_map();
        assert_eq!(m.ru_set(class(5)), &[2]);
        assert_eq!(m.ru_set(class(2)), &[1]);
        assert_eq!(m.ru_set(ClassLabel::BLE_CENTER), &[1, 2]);
    }
}

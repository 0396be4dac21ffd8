//! Face regions: contiguous groups of landmark indices, each feeding one
//! second-layer neuron of the structured network.

use std::ops::RangeInclusive;

use crate::dataset::NUM_POINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub name: &'static str,
    pub first: usize,
    pub last: usize,
}

impl Region {
    pub fn points(&self) -> RangeInclusive<usize> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub const REGIONS: [Region; 10] = [
    Region { name: "left_eye", first: 0, last: 7 },
    Region { name: "right_eye", first: 8, last: 15 },
    Region { name: "left_eyebrow", first: 16, last: 25 },
    Region { name: "right_eyebrow", first: 26, last: 35 },
    Region { name: "nose", first: 36, last: 47 },
    Region { name: "mouth", first: 48, last: 67 },
    Region { name: "face_contour", first: 68, last: 86 },
    Region { name: "irises_and_nose_tip", first: 87, last: 89 },
    Region { name: "line_above_left_eyebrow", first: 90, last: 94 },
    Region { name: "line_above_right_eyebrow", first: 95, last: 99 },
];

pub const MOUTH: usize = 5;

/// Region index for every landmark index.
pub fn build_region_map() -> [usize; NUM_POINTS] {
    let mut map = [usize::MAX; NUM_POINTS];
    for (r, region) in REGIONS.iter().enumerate() {
        for p in region.points() {
            map[p] = r;
        }
    }
    map
}

/// Looks a region up by index or by name (`mouth`, `left-eye`, ...).
pub fn parse_region(s: &str) -> Option<usize> {
    let key = s.trim().to_ascii_lowercase().replace('-', "_");
    if let Ok(idx) = key.parse::<usize>() {
        return Some(idx);
    }
    REGIONS.iter().position(|r| r.name == key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_partition_all_points() {
        let sizes: Vec<usize> = REGIONS.iter().map(Region::len).collect();
        assert_eq!(sizes, [8, 8, 10, 10, 12, 20, 19, 3, 5, 5]);
        assert_eq!(sizes.iter().sum::<usize>(), NUM_POINTS);
        for pair in REGIONS.windows(2) {
            assert_eq!(pair[0].last + 1, pair[1].first);
        }
        assert_eq!(REGIONS[0].first, 0);
        assert_eq!(REGIONS[9].last, 99);
    }

    #[test]
    fn region_lookup() {
        let map = build_region_map();
        assert_eq!(map[0], 0);
        assert_eq!(map[48], MOUTH);
        assert_eq!(map[67], MOUTH);
        assert_eq!(map[99], 9);
        assert!(map.iter().all(|&r| r < 10));
        assert_eq!(parse_region("Mouth"), Some(MOUTH));
        assert_eq!(parse_region("3"), Some(3));
        assert_eq!(parse_region("chin"), None);
    }
}

//! Landmark-frame datasets: parsing the repository file layout, discovery on
//! disk, and a seeded synthetic generator for tests and demos.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structnet::regions::{Region, REGIONS};

/// Tracked facial landmarks per frame.
pub const NUM_POINTS: usize = 100;
/// Coordinates per frame, interleaved as `(x0, y0, z0, x1, ...)`.
pub const NUM_COORDS: usize = 3 * NUM_POINTS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    /// Milliseconds. Carried through but never read by the model.
    pub timestamp: f64,
    coords: Vec<f64>,
}

impl LandmarkFrame {
    pub fn new(timestamp: f64, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != NUM_COORDS
            || !coords.iter().all(|c| c.is_finite())
            || !(timestamp.is_finite() && timestamp >= 0.0)
        {
            return Err(Error::InvalidFrame);
        }
        Ok(Self { timestamp, coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    /// `(x, y, z)` of landmark `point`.
    pub fn point(&self, point: usize) -> [f64; 3] {
        let c = &self.coords[3 * point..3 * point + 3];
        [c[0], c[1], c[2]]
    }
}

/// The nine grammatical markers, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerClass {
    Assertion,
    YesNoQuestion,
    Negative,
    Topic,
    Conditional,
    DoubtQuestion,
    Focus,
    Relative,
    WhQuestion,
}

impl MarkerClass {
    pub const ALL: [MarkerClass; 9] = [
        MarkerClass::Assertion,
        MarkerClass::YesNoQuestion,
        MarkerClass::Negative,
        MarkerClass::Topic,
        MarkerClass::Conditional,
        MarkerClass::DoubtQuestion,
        MarkerClass::Focus,
        MarkerClass::Relative,
        MarkerClass::WhQuestion,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&m| m == self).unwrap()
    }

    /// Name used in the repository's file names.
    pub fn file_stem(self) -> &'static str {
        match self {
            MarkerClass::Assertion => "affirmative",
            MarkerClass::YesNoQuestion => "yn_question",
            MarkerClass::Negative => "negative",
            MarkerClass::Topic => "topics",
            MarkerClass::Conditional => "conditional",
            MarkerClass::DoubtQuestion => "doubt_question",
            MarkerClass::Focus => "emphasis",
            MarkerClass::Relative => "relative",
            MarkerClass::WhQuestion => "wh_question",
        }
    }

    /// Canonical short name; also the key used in reference tables.
    pub fn name(self) -> &'static str {
        match self {
            MarkerClass::Assertion => "assertion",
            MarkerClass::YesNoQuestion => "yn_question",
            MarkerClass::Negative => "negative",
            MarkerClass::Topic => "topic",
            MarkerClass::Conditional => "conditional",
            MarkerClass::DoubtQuestion => "doubt_question",
            MarkerClass::Focus => "focus",
            MarkerClass::Relative => "relative",
            MarkerClass::WhQuestion => "wh_question",
        }
    }
}

impl fmt::Display for MarkerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MarkerClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' ', '/'], "_");
        let marker = match key.as_str() {
            "assertion" | "affirmative" => MarkerClass::Assertion,
            "yn_question" | "yes_no_question" | "yesno_question" | "yn" => {
                MarkerClass::YesNoQuestion
            }
            "negative" => MarkerClass::Negative,
            "topic" | "topics" => MarkerClass::Topic,
            "conditional" => MarkerClass::Conditional,
            "doubt_question" | "doubt" => MarkerClass::DoubtQuestion,
            "focus" | "emphasis" => MarkerClass::Focus,
            "relative" => MarkerClass::Relative,
            "wh_question" | "wh" => MarkerClass::WhQuestion,
            _ => return Err(Error::Config(format!("unknown marker {s:?}"))),
        };
        Ok(marker)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum User {
    A,
    B,
}

impl User {
    pub const ALL: [User; 2] = [User::A, User::B];

    pub fn name(self) -> &'static str {
        match self {
            User::A => "a",
            User::B => "b",
        }
    }
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for User {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(User::A),
            "b" => Ok(User::B),
            _ => Err(Error::Config(format!("unknown user {s:?}"))),
        }
    }
}

/// Frames of one marker recorded by one user, with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerDataset {
    pub marker: MarkerClass,
    pub user: User,
    frames: Vec<LandmarkFrame>,
    labels: Vec<u8>,
}

impl MarkerDataset {
    pub fn new(
        marker: MarkerClass,
        user: User,
        frames: Vec<LandmarkFrame>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if frames.len() != labels.len() {
            return Err(Error::LengthMismatch(frames.len(), labels.len()));
        }
        if let Some(pos) = labels.iter().position(|&l| l > 1) {
            return Err(Error::InvalidLabel(pos + 1, labels[pos].to_string()));
        }
        Ok(Self { marker, user, frames, labels })
    }

    pub fn frames(&self) -> &[LandmarkFrame] {
        &self.frames
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_parts(self) -> (Vec<LandmarkFrame>, Vec<u8>) {
        (self.frames, self.labels)
    }
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty())
}

/// Parses a datapoints file: one header line, then `timestamp` followed by
/// 300 coordinates per line. Whitespace and commas both delimit.
pub fn parse_datapoints_file(text: &str) -> Result<Vec<LandmarkFrame>> {
    let mut frames = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = tokens(line)
            .map(|t| t.parse::<f64>().map_err(|_| Error::MalformedLine(line_no)))
            .collect::<Result<_>>()?;
        if values.len() != NUM_COORDS + 1 {
            return Err(Error::MalformedLine(line_no));
        }
        let frame = LandmarkFrame::new(values[0], values[1..].to_vec())
            .map_err(|_| Error::MalformedLine(line_no))?;
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(frames)
}

/// Writes frames in the layout read by [`parse_datapoints_file`].
pub fn serialize_datapoints(frames: &[LandmarkFrame]) -> String {
    let mut out = String::from("timestamp");
    for p in 0..NUM_POINTS {
        out.push_str(&format!(" {p}x {p}y {p}z"));
    }
    out.push('\n');
    for frame in frames {
        out.push_str(&frame.timestamp.to_string());
        for c in &frame.coords {
            out.push(' ');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn parse_targets_file(text: &str) -> Result<Vec<u8>> {
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let token = line.trim();
        match token {
            "" => continue,
            "0" => labels.push(0),
            "1" => labels.push(1),
            other => return Err(Error::InvalidLabel(idx + 1, other.to_string())),
        }
    }
    Ok(labels)
}

pub fn serialize_targets(labels: &[u8]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_marker_dataset(
    datapoints_path: &Path,
    targets_path: &Path,
    marker: MarkerClass,
    user: User,
) -> Result<MarkerDataset> {
    let frames =
        parse_datapoints_file(&read(datapoints_path)?).map_err(|e| e.in_file(datapoints_path))?;
    let labels = parse_targets_file(&read(targets_path)?).map_err(|e| e.in_file(targets_path))?;
    MarkerDataset::new(marker, user, frames, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub positive: usize,
    pub negative: usize,
    pub total: usize,
}

pub fn dataset_summary(dataset: &MarkerDataset) -> DatasetSummary {
    let positive = dataset.labels.iter().filter(|&&l| l == 1).count();
    DatasetSummary { positive, negative: dataset.len() - positive, total: dataset.len() }
}

/// Paths of one marker/user pair on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFiles {
    pub user: User,
    pub marker: MarkerClass,
    pub datapoints: PathBuf,
    pub targets: PathBuf,
}

impl DatasetFiles {
    pub fn load(&self) -> Result<MarkerDataset> {
        load_marker_dataset(&self.datapoints, &self.targets, self.marker, self.user)
    }
}

/// Optional `manifest.json` in a data root, keyed `"<user>/<marker>"`.
#[derive(Debug, Default, Deserialize)]
#[serde(transparent)]
struct Manifest(BTreeMap<String, ManifestEntry>);

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    datapoints: PathBuf,
    targets: PathBuf,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn load_manifest(root: &Path) -> Result<Option<BTreeMap<(User, MarkerClass), ManifestEntry>>> {
    let path = root.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let manifest: Manifest =
        serde_json::from_str(&read(&path)?).map_err(|e| Error::from(e).in_file(&path))?;
    let mut out = BTreeMap::new();
    for (key, entry) in manifest.0 {
        let (user, marker) = key
            .split_once('/')
            .ok_or_else(|| Error::Config(format!("manifest key {key:?} is not <user>/<marker>")))?;
        out.insert((user.parse()?, marker.parse()?), entry);
    }
    Ok(Some(out))
}

/// File paths for one pair: the manifest entry when present, else the
/// `<user>_<marker>_{datapoints,targets}.txt` convention.
pub fn dataset_files(root: &Path, user: User, marker: MarkerClass) -> Result<DatasetFiles> {
    if let Some(manifest) = load_manifest(root)? {
        if let Some(entry) = manifest.get(&(user, marker)) {
            return Ok(DatasetFiles {
                user,
                marker,
                datapoints: root.join(&entry.datapoints),
                targets: root.join(&entry.targets),
            });
        }
    }
    let stem = format!("{}_{}", user.name(), marker.file_stem());
    Ok(DatasetFiles {
        user,
        marker,
        datapoints: root.join(format!("{stem}_datapoints.txt")),
        targets: root.join(format!("{stem}_targets.txt")),
    })
}

/// Every marker/user pair whose two files exist, in canonical order.
pub fn discover(root: &Path) -> Result<Vec<DatasetFiles>> {
    if !root.is_dir() {
        return Err(Error::io(root, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let mut found = Vec::new();
    for user in User::ALL {
        for marker in MarkerClass::ALL {
            let files = dataset_files(root, user, marker)?;
            if files.datapoints.is_file() && files.targets.is_file() {
                found.push(files);
            }
        }
    }
    Ok(found)
}

/// Parameters for [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub positives: usize,
    pub negatives: usize,
    /// Region indices (0..9) carrying the class signal.
    pub signal_regions: Vec<usize>,
    /// Fraction of coordinates replaced by the 0.0 placeholder.
    pub placeholder_fraction: f64,
    /// Shift applied to signal coordinates of positive frames, in units of
    /// that coordinate's noise standard deviation.
    pub shift: f64,
    pub marker: MarkerClass,
    pub user: User,
}

impl SyntheticConfig {
    pub fn new(seed: u64, positives: usize, negatives: usize, signal_regions: Vec<usize>) -> Self {
        Self {
            seed,
            positives,
            negatives,
            signal_regions,
            placeholder_fraction: 0.01,
            shift: 1.0,
            marker: MarkerClass::Assertion,
            user: User::A,
        }
    }
}

/// Mean and noise scale of coordinate `j` in the synthetic face template.
/// Landmarks sit on an ellipse around (320, 240) px at roughly 900 mm depth,
/// far enough from 0.0 that placeholders stay unambiguous.
fn template(j: usize) -> (f64, f64) {
    let point = j / 3;
    let angle = std::f64::consts::TAU * point as f64 / NUM_POINTS as f64;
    match j % 3 {
        0 => (320.0 + 60.0 * angle.cos(), 3.0),
        1 => (240.0 + 80.0 * angle.sin(), 3.0),
        _ => (900.0 + 0.5 * point as f64, 8.0),
    }
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<MarkerDataset> {
    if let Some(&bad) = config.signal_regions.iter().find(|&&r| r >= REGIONS.len()) {
        return Err(Error::InvalidRegion(bad));
    }
    let mut signal = [false; NUM_COORDS];
    for &r in &config.signal_regions {
        let region: &Region = &REGIONS[r];
        for point in region.points() {
            signal[3 * point..3 * point + 3].fill(true);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut labels: Vec<u8> = std::iter::repeat_n(1, config.positives)
        .chain(std::iter::repeat_n(0, config.negatives))
        .collect();
    labels.shuffle(&mut rng);

    let mut frames = Vec::with_capacity(labels.len());
    for (i, &label) in labels.iter().enumerate() {
        let coords = (0..NUM_COORDS)
            .map(|j| {
                let (mean, sd) = template(j);
                let noise: f64 = rng.sample(StandardNormal);
                let mut value = mean + sd * noise;
                if label == 1 && signal[j] {
                    // alternate the shift direction so the signal is not a
                    // uniform translation of the region
                    let dir = if j % 2 == 0 { 1.0 } else { -1.0 };
                    value += dir * config.shift * sd;
                }
                if rng.gen_bool(config.placeholder_fraction) {
                    value = 0.0;
                }
                value
            })
            .collect();
        frames.push(LandmarkFrame::new(i as f64 * 33.0, coords)?);
    }
    MarkerDataset::new(config.marker, config.user, frames, labels)
}

/// Seeded synthetic dataset with the default 1% placeholder rate.
pub fn generate_synthetic_dataset(
    seed: u64,
    n_positive: usize,
    n_negative: usize,
    signal_regions: &[usize],
) -> Result<MarkerDataset> {
    generate_synthetic(&SyntheticConfig::new(seed, n_positive, n_negative, signal_regions.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros_line(ts: &str, n: usize) -> String {
        let mut line = ts.to_string();
        for _ in 0..n {
            line.push_str(" 0.0");
        }
        line
    }

    #[test]
    fn parses_zero_frame() {
        let text = format!("header\n{}\n", zeros_line("1000", 300));
        let frames = parse_datapoints_file(&text).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].timestamp, 1000.0);
        assert!(frames[0].coords().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn short_line_is_malformed() {
        let text = format!("header\n{}\n", zeros_line("1000", 299));
        assert!(matches!(parse_datapoints_file(&text), Err(Error::MalformedLine(2))));
    }

    #[test]
    fn non_numeric_token_is_malformed() {
        let good = zeros_line("1", 300);
        let bad = zeros_line("2", 299) + " abc";
        let text = format!("h\n{good}\n\n{bad}\n");
        assert!(matches!(parse_datapoints_file(&text), Err(Error::MalformedLine(4))));
    }

    #[test]
    fn comma_delimited_accepted() {
        let line = zeros_line("5", 300).replace(' ', ",");
        let frames = parse_datapoints_file(&format!("h\n{line}\n")).unwrap();
        assert_eq!(frames[0].timestamp, 5.0);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(parse_datapoints_file("h\n\n"), Err(Error::EmptyFile)));
        assert!(matches!(parse_datapoints_file(""), Err(Error::EmptyFile)));
    }

    #[test]
    fn targets() {
        assert_eq!(parse_targets_file("1\n0\n1\n").unwrap(), vec![1, 0, 1]);
        match parse_targets_file("2\n") {
            Err(Error::InvalidLabel(1, tok)) => assert_eq!(tok, "2"),
            other => panic!("{other:?}"),
        }
        assert!(parse_targets_file("").unwrap().is_empty());
    }

    #[test]
    fn summary_counts() {
        let frame = LandmarkFrame::new(0.0, vec![1.0; NUM_COORDS]).unwrap();
        let ds = MarkerDataset::new(
            MarkerClass::Assertion,
            User::A,
            vec![frame.clone(), frame.clone(), frame],
            vec![1, 1, 0],
        )
        .unwrap();
        assert_eq!(dataset_summary(&ds), DatasetSummary { positive: 2, negative: 1, total: 3 });
        let empty = MarkerDataset::new(MarkerClass::Focus, User::B, vec![], vec![]).unwrap();
        assert_eq!(dataset_summary(&empty), DatasetSummary { positive: 0, negative: 0, total: 0 });
    }

    #[test]
    fn length_mismatch() {
        let frame = LandmarkFrame::new(0.0, vec![1.0; NUM_COORDS]).unwrap();
        let err = MarkerDataset::new(
            MarkerClass::Assertion,
            User::A,
            vec![frame.clone(), frame.clone(), frame],
            vec![1, 0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::LengthMismatch(3, 2)));
    }

    #[test]
    fn frame_invariants() {
        assert!(LandmarkFrame::new(0.0, vec![0.0; 299]).is_err());
        let mut coords = vec![0.0; 300];
        coords[17] = f64::NAN;
        assert!(LandmarkFrame::new(0.0, coords).is_err());
    }

    #[test]
    fn marker_names_round_trip() {
        for m in MarkerClass::ALL {
            assert_eq!(m.name().parse::<MarkerClass>().unwrap(), m);
            assert_eq!(m.file_stem().parse::<MarkerClass>().unwrap(), m);
        }
        assert_eq!("Affirmative".parse::<MarkerClass>().unwrap(), MarkerClass::Assertion);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic_dataset(7, 50, 50, &[5]).unwrap();
        let b = generate_synthetic_dataset(7, 50, 50, &[5]).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_dataset(8, 50, 50, &[5]).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_negatives_only() {
        let ds = generate_synthetic_dataset(7, 0, 10, &[]).unwrap();
        assert_eq!(ds.len(), 10);
        assert!(ds.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn synthetic_rejects_bad_region() {
        assert!(matches!(generate_synthetic_dataset(7, 1, 1, &[10]), Err(Error::InvalidRegion(10))));
    }

    #[test]
    fn synthetic_has_placeholders() {
        let ds = generate_synthetic_dataset(3, 100, 100, &[5]).unwrap();
        let zeros = ds.frames().iter().flat_map(|f| f.coords()).filter(|&&c| c == 0.0).count();
        let frac = zeros as f64 / (200 * NUM_COORDS) as f64;
        assert!((0.005..0.015).contains(&frac), "{frac}");
    }
}

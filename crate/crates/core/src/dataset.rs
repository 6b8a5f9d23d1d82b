//! Balanced feature-vector datasets, stratified splits and the on-disk
//! format (CSV table plus a JSON `.meta` sidecar).
//!
//! Candidate `i` of a generation run is drawn from `Rng::new(seed, i)`, so
//! the states behind any generated dataset can be rebuilt from its metadata
//! alone; only features and labels are stored.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{FeatureVector, Measurement, MeasurementPreset, CONDITIONING_FLOOR};
use crate::qlinalg::Rng;
use crate::states::{sample_density, DensityMatrix, SystemKind, ENTANGLEMENT_THRESHOLD};

const FORMAT_NAME: &str = "cew-dataset";
const FORMAT_VERSION: u32 = 1;

/// Candidates evaluated per parallel block during rejection sampling.
const DRAW_BLOCK: u64 = 1024;

/// Full-scale proportions: 4e5 / 1e5 / 1e5.
pub const FULL_SCALE_FRACTIONS: [f64; 3] = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];

/// Desk-scale record counts for training, validation and test.
pub const DESK_SIZES: [usize; 3] = [40_000, 10_000, 10_000];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Rejection sampling to exactly half entangled, half separable.
    Balanced,
    /// The first `n` usable draws, at the ensemble's own prevalence.
    Natural,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub fractions: [f64; 3],
    /// 0 = training, 1 = validation, 2 = test.
    pub part: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub count: usize,
    /// Fraction of separable records.
    pub prevalence: f64,
    pub sampling: Sampling,
    /// Size of the generated dataset this one descends from.
    pub source_count: usize,
    pub split: Option<SplitInfo>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub kind: SystemKind,
    pub preset: MeasurementPreset,
    pub records: Vec<FeatureVector>,
    pub meta: DatasetMeta,
}

/// A sampled state with its label and the stream it came from.
#[derive(Clone, Debug)]
pub struct LabeledState {
    pub stream: u64,
    pub rho: DensityMatrix,
    pub negativity: f64,
    pub entangled: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenerationStats {
    /// Candidate streams consumed up to and including the last accepted one.
    pub draws: u64,
    /// Candidates discarded because some local outcome had vanishing
    /// probability.
    pub degenerate: u64,
}

/// Draws candidate `stream`. Returns `None` when any pair of local
/// outcomes on the full grid would leave `P_xy` undefined, so the set of
/// accepted candidates does not depend on which preset is extracted later.
fn draw(kind: SystemKind, measurement: &Measurement, seed: u64, stream: u64) -> Result<Option<LabeledState>> {
    let rho = sample_density(kind, &mut Rng::new(seed, stream));
    let min_marginal = measurement
        .conditional_operators(&rho)
        .iter()
        .map(|a| (a[0] + a[3]).re)
        .fold(f64::INFINITY, f64::min);
    if min_marginal.is_nan() || min_marginal * min_marginal < CONDITIONING_FLOOR {
        return Ok(None);
    }
    let negativity = rho.negativity()?;
    Ok(Some(LabeledState {
        stream,
        rho,
        negativity,
        entangled: negativity > ENTANGLEMENT_THRESHOLD,
    }))
}

fn collect_states(
    kind: SystemKind,
    n: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<(Vec<LabeledState>, GenerationStats)> {
    let measurement = Measurement::new(kind);
    let quota = n / 2;
    let (mut ent, mut sep) = (0usize, 0usize);
    let mut out = Vec::with_capacity(n);
    let mut stats = GenerationStats::default();
    let mut next = 0u64;

    while out.len() < n {
        let block: Vec<Result<Option<LabeledState>>> = (next..next + DRAW_BLOCK)
            .into_par_iter()
            .map(|stream| draw(kind, &measurement, seed, stream))
            .collect();
        for candidate in block {
            if out.len() == n {
                break;
            }
            stats.draws += 1;
            let Some(state) = candidate? else {
                stats.degenerate += 1;
                continue;
            };
            let keep = match sampling {
                Sampling::Natural => true,
                Sampling::Balanced if state.entangled => ent < quota,
                Sampling::Balanced => sep < quota,
            };
            if keep {
                if state.entangled {
                    ent += 1;
                } else {
                    sep += 1;
                }
                out.push(state);
            }
        }
        next += DRAW_BLOCK;
    }
    Ok((out, stats))
}

/// `n/2` entangled and `n/2` separable states, in draw order.
pub fn balanced_states(kind: SystemKind, n: usize, seed: u64) -> Result<(Vec<LabeledState>, GenerationStats)> {
    if n == 0 {
        return Err(Error::EmptyDataset("requested 0 records".into()));
    }
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "balanced datasets need an even size, got {n}"
        )));
    }
    collect_states(kind, n, seed, Sampling::Balanced)
}

/// The first `n` usable states, without prevalence adjustment.
pub fn natural_states(kind: SystemKind, n: usize, seed: u64) -> Result<(Vec<LabeledState>, GenerationStats)> {
    if n == 0 {
        return Err(Error::EmptyDataset("requested 0 records".into()));
    }
    collect_states(kind, n, seed, Sampling::Natural)
}

fn to_dataset(
    kind: SystemKind,
    preset: &MeasurementPreset,
    states: &[LabeledState],
    seed: u64,
    sampling: Sampling,
) -> Result<Dataset> {
    if preset.kind != kind {
        return Err(Error::PresetMismatch {
            expected: kind.to_string(),
            found: preset.kind.to_string(),
        });
    }
    let measurement = Measurement::new(kind);
    let records = states
        .par_iter()
        .map(|s| {
            Ok(FeatureVector {
                values: measurement.feature_values(&s.rho, preset)?,
                negativity: s.negativity,
                entangled: s.entangled,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let count = records.len();
    let mut d = Dataset {
        kind,
        preset: preset.clone(),
        records,
        meta: DatasetMeta {
            seed,
            count,
            prevalence: 0.0,
            sampling,
            source_count: count,
            split: None,
        },
    };
    d.meta.prevalence = d.separable_fraction();
    Ok(d)
}

/// Balanced dataset of `n` records (prevalence 0.5), deterministic in
/// `(kind, preset, n, seed)`.
pub fn generate_balanced(kind: SystemKind, preset: &MeasurementPreset, n: usize, seed: u64) -> Result<Dataset> {
    generate_balanced_with_stats(kind, preset, n, seed).map(|(d, _)| d)
}

pub fn generate_balanced_with_stats(
    kind: SystemKind,
    preset: &MeasurementPreset,
    n: usize,
    seed: u64,
) -> Result<(Dataset, GenerationStats)> {
    let (states, stats) = balanced_states(kind, n, seed)?;
    Ok((to_dataset(kind, preset, &states, seed, Sampling::Balanced)?, stats))
}

/// Dataset at the ensemble's natural prevalence.
pub fn generate_natural(kind: SystemKind, preset: &MeasurementPreset, n: usize, seed: u64) -> Result<Dataset> {
    let (states, _) = natural_states(kind, n, seed)?;
    to_dataset(kind, preset, &states, seed, Sampling::Natural)
}

/// Stratified, order-preserving partition of record indices into training,
/// validation and test parts.
pub fn split_indices(labels: &[bool], fractions: [f64; 3]) -> Result<[Vec<usize>; 3]> {
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "split fractions must be non-negative: {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("split fractions sum to {total}, not 1")));
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    for class in [true, false] {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n = idx.len();
        let train = ((n as f64 * fractions[0]).round() as usize).min(n);
        let val = ((n as f64 * fractions[1]).round() as usize).min(n - train);
        parts[0].extend_from_slice(&idx[..train]);
        parts[1].extend_from_slice(&idx[train..train + val]);
        parts[2].extend_from_slice(&idx[train + val..]);
    }
    for (name, p) in ["training", "validation", "test"].iter().zip(parts.iter_mut()) {
        if p.is_empty() {
            return Err(Error::EmptyDataset(format!("{name} split would be empty")));
        }
        p.sort_unstable();
    }
    Ok(parts)
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn width(&self) -> usize {
        self.preset.width()
    }

    pub fn entangled_count(&self) -> usize {
        self.records.iter().filter(|r| r.entangled).count()
    }

    pub fn separable_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        1.0 - self.entangled_count() as f64 / self.records.len() as f64
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.entangled).collect()
    }

    /// Stratified split into training, validation and test datasets.
    pub fn split(&self, fractions: [f64; 3]) -> Result<[Dataset; 3]> {
        let parts = split_indices(&self.labels(), fractions)?;
        let make = |part: usize, idx: &[usize]| {
            let mut d = Dataset {
                kind: self.kind,
                preset: self.preset.clone(),
                records: idx.iter().map(|&i| self.records[i].clone()).collect(),
                meta: DatasetMeta {
                    count: idx.len(),
                    split: Some(SplitInfo { fractions, part }),
                    ..self.meta.clone()
                },
            };
            d.meta.prevalence = d.separable_fraction();
            d
        };
        let nested = self.meta.split.is_some();
        Ok([0, 1, 2].map(|p| {
            let mut d = make(p, &parts[p]);
            if nested {
                // only one level of split provenance is recorded
                d.meta.source_count = 0;
            }
            d
        }))
    }

    /// Keeps only the feature columns of `sub`, which must be measured by
    /// this dataset's preset.
    pub fn project(&self, sub: &MeasurementPreset) -> Result<Dataset> {
        let cols = self.preset.column_indices(sub)?;
        Ok(Dataset {
            kind: self.kind,
            preset: sub.clone(),
            records: self
                .records
                .iter()
                .map(|r| FeatureVector {
                    values: cols.iter().map(|&c| r.values[c]).collect(),
                    negativity: r.negativity,
                    entangled: r.entangled,
                })
                .collect(),
            meta: self.meta.clone(),
        })
    }

    /// Rebuilds the density matrices behind the records from the seed and
    /// checks them against the stored labels.
    pub fn regenerate_states(&self) -> Result<Vec<LabeledState>> {
        if self.meta.source_count == 0 {
            return Err(Error::NotRegenerable("no source generation recorded".into()));
        }
        let (parent, _) = match self.meta.sampling {
            Sampling::Balanced => balanced_states(self.kind, self.meta.source_count, self.meta.seed),
            Sampling::Natural => natural_states(self.kind, self.meta.source_count, self.meta.seed),
        }
        .map_err(|e| Error::NotRegenerable(format!("source generation failed: {e}")))?;
        let states = match &self.meta.split {
            None => parent,
            Some(info) => {
                let labels: Vec<bool> = parent.iter().map(|s| s.entangled).collect();
                let parts = split_indices(&labels, info.fractions)?;
                let idx = parts
                    .get(info.part)
                    .ok_or_else(|| Error::NotRegenerable(format!("split part {}", info.part)))?;
                idx.iter().map(|&i| parent[i].clone()).collect()
            }
        };
        if states.len() != self.records.len() {
            return Err(Error::NotRegenerable(format!(
                "regenerated {} states for {} records",
                states.len(),
                self.records.len()
            )));
        }
        for (i, (s, r)) in states.iter().zip(&self.records).enumerate() {
            if s.entangled != r.entangled || (s.negativity - r.negativity).abs() > 1e-12 {
                return Err(Error::NotRegenerable(format!(
                    "record {i} does not match its regenerated state"
                )));
            }
        }
        Ok(states)
    }

    pub fn header(&self) -> String {
        let mut h: Vec<String> = (1..=self.width()).map(|i| format!("f{i}")).collect();
        h.push("negativity".into());
        h.push("label".into());
        h.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.records.len() * (self.width() + 2) * 20);
        s.push_str(&self.header());
        s.push('\n');
        for r in &self.records {
            for v in &r.values {
                write!(s, "{v:?},").expect("writing to a String");
            }
            writeln!(s, "{:?},{}", r.negativity, u8::from(r.entangled)).expect("writing to a String");
        }
        s
    }

    pub fn meta_json(&self) -> String {
        let doc = MetaDocument {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            kind: self.kind,
            preset: PresetDocument {
                name: self.preset.name.clone(),
                pairs: self.preset.pairs.clone(),
            },
            meta: self.meta.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("metadata serializes");
        s.push('\n');
        s
    }

    /// Writes the table to `path` and the metadata to `path` + `.meta`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv())?;
        fs::write(meta_path(path), self.meta_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let csv = fs::read_to_string(path)?;
        let meta = fs::read_to_string(meta_path(path))?;
        Self::from_strs(&csv, &meta)
    }

    /// Parses a table and its metadata document.
    pub fn from_strs(csv: &str, meta_json: &str) -> Result<Dataset> {
        let (kind, preset, meta) = parse_meta(meta_json)?;
        let records = parse_table(csv, preset.width())?;
        if records.len() != meta.count {
            return Err(Error::format(
                records.len() + 1,
                format!("metadata declares {} records, table has {}", meta.count, records.len()),
            ));
        }
        Ok(Dataset {
            kind,
            preset,
            records,
            meta,
        })
    }
}

/// Sidecar path: the dataset path with `.meta` appended.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetDocument {
    name: String,
    pairs: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct MetaDocument {
    format: String,
    version: u32,
    kind: SystemKind,
    preset: PresetDocument,
    #[serde(flatten)]
    meta: DatasetMeta,
}

/// Parses a `.meta` sidecar document.
pub fn parse_meta(text: &str) -> Result<(SystemKind, MeasurementPreset, DatasetMeta)> {
    let doc: MetaDocument = serde_json::from_str(text).map_err(|e| Error::format(e.line(), e.to_string()))?;
    if doc.format != FORMAT_NAME || doc.version != FORMAT_VERSION {
        return Err(Error::format(
            1,
            format!("unsupported format {} v{}", doc.format, doc.version),
        ));
    }
    let preset = MeasurementPreset::new(doc.kind, doc.preset.name, doc.preset.pairs)
        .map_err(|e| Error::format(1, e.to_string()))?;
    if let Some(info) = &doc.meta.split {
        if info.part > 2 {
            return Err(Error::format(1, format!("split part {} out of range", info.part)));
        }
    }
    Ok((doc.kind, preset, doc.meta))
}

/// Parses the CSV body: header `f1..fB,negativity,label`, then one record
/// per line. Line numbers in errors are 1-based.
pub fn parse_table(text: &str, width: usize) -> Result<Vec<FeatureVector>> {
    let mut lines = text.split('\n');
    let expected: Vec<String> = (1..=width)
        .map(|i| format!("f{i}"))
        .chain(["negativity".to_string(), "label".to_string()])
        .collect();
    let header = lines.next().unwrap_or("");
    if header.split(',').ne(expected.iter().map(String::as_str)) {
        return Err(Error::format(1, format!("expected header `{}`", expected.join(","))));
    }

    let mut records = Vec::new();
    let mut ended = false;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.is_empty() {
            ended = true;
            continue;
        }
        if ended {
            return Err(Error::format(lineno - 1, "blank line inside table"));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width + 2 {
            return Err(Error::format(
                lineno,
                format!("expected {} fields, found {}", width + 2, fields.len()),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(lineno, format!("bad number `{s}`")))
        };
        let mut values = Vec::with_capacity(width);
        for f in &fields[..width] {
            let v = num(f)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::format(lineno, format!("feature {v} outside [0, 1]")));
            }
            values.push(v);
        }
        let negativity = num(fields[width])?;
        if !(0.0..=0.5).contains(&negativity) {
            return Err(Error::format(
                lineno,
                format!("negativity {negativity} outside [0, 0.5]"),
            ));
        }
        let entangled = match fields[width + 1] {
            "0" => false,
            "1" => true,
            other => return Err(Error::format(lineno, format!("label must be 0 or 1, found `{other}`"))),
        };
        records.push(FeatureVector {
            values,
            negativity,
            entangled,
        });
    }
    Ok(records)
}

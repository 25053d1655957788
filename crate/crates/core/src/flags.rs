//! Regional risk flags.
//!
//! A [`FlagConfig`] declares a set of indices. Each index is evaluated per
//! region (or statewide), cut into one of four bands by its thresholds, and
//! the weighted mean band is mapped to a final flag by a second threshold
//! triple.

use std::fmt;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::clustering::Partition;
use crate::data::{CityTable, Dataset};
use crate::error::{Error, Result};

const DEFAULT_CONFIG: &str = include_str!("../../../configs/flags_default.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Flag {
    Yellow = 1,
    Orange = 2,
    Red = 3,
    Black = 4,
}

impl Flag {
    pub fn from_band(band: u8) -> Option<Flag> {
        match band {
            1 => Some(Flag::Yellow),
            2 => Some(Flag::Orange),
            3 => Some(Flag::Red),
            4 => Some(Flag::Black),
            _ => None,
        }
    }

    pub fn level(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Flag::Yellow => "yellow",
            Flag::Orange => "orange",
            Flag::Red => "red",
            Flag::Black => "black",
        }
    }
}

impl From<Flag> for u8 {
    fn from(f: Flag) -> u8 {
        f.level()
    }
}

impl TryFrom<u8> for Flag {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Flag::from_band(v).ok_or_else(|| format!("flag must be 1..=4, got {v}"))
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    /// New cases in the current and previous week per 100k inhabitants.
    #[serde(rename = "active_cases_per_100k")]
    ActiveCasesPer100k,
    /// New cases this week over new cases last week.
    CaseGrowth,
    /// Occupied ICU beds this week over last week.
    IcuOccupancyChange,
    /// Deaths this week per 100k inhabitants.
    #[serde(rename = "deaths_per_100k")]
    DeathsPer100k,
    /// Occupied over total ICU beds.
    IcuOccupancyRate,
    /// Total ICU beds per 10k inhabitants.
    #[serde(rename = "icu_beds_per_10k")]
    IcuBedsPer10k,
    /// Available over total ICU beds.
    AvailableBedRatio,
}

impl IndexKind {
    fn required_panel(self) -> &'static str {
        match self {
            IndexKind::ActiveCasesPer100k | IndexKind::CaseGrowth => "cases",
            IndexKind::DeathsPer100k => "deaths",
            IndexKind::IcuOccupancyChange
            | IndexKind::IcuOccupancyRate
            | IndexKind::IcuBedsPer10k
            | IndexKind::AvailableBedRatio => "icu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Region,
    Statewide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    HigherIsWorse,
    HigherIsBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSpec {
    pub id: String,
    pub kind: IndexKind,
    pub level: Level,
    pub weight: f64,
    pub thresholds: [f64; 3],
    #[serde(default)]
    pub orientation: Orientation,
}

impl IndexSpec {
    /// Band 1..=4 of `value`; a missing value gets the worst band.
    pub fn band(&self, value: Option<f64>) -> u8 {
        let Some(v) = value else { return 4 };
        let [t1, t2, t3] = self.thresholds;
        match self.orientation {
            Orientation::HigherIsWorse => risk_band(v, &self.thresholds),
            Orientation::HigherIsBetter => {
                if v >= t3 {
                    1
                } else if v >= t2 {
                    2
                } else if v >= t1 {
                    3
                } else {
                    4
                }
            }
        }
    }
}

/// `≤ t1 → 1, ≤ t2 → 2, ≤ t3 → 3, else 4`.
fn risk_band(v: f64, t: &[f64; 3]) -> u8 {
    if v <= t[0] {
        1
    } else if v <= t[1] {
        2
    } else if v <= t[2] {
        3
    } else {
        4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub indices: Vec<IndexSpec>,
    pub final_thresholds: [f64; 3],
}

fn strictly_ascending(t: &[f64; 3]) -> bool {
    t.iter().all(|x| x.is_finite()) && t[0] < t[1] && t[1] < t[2]
}

impl FlagConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: FlagConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The bundled eight-index approximation.
    pub fn default_config() -> Self {
        Self::from_json(DEFAULT_CONFIG).expect("bundled flag config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.indices.is_empty() {
            return Err(Error::Config("indices: at least one index is required".into()));
        }
        let mut ids = std::collections::HashSet::new();
        for spec in &self.indices {
            if !ids.insert(spec.id.as_str()) {
                return Err(Error::Config(format!("indices: duplicate id {:?}", spec.id)));
            }
            if !(spec.weight.is_finite() && spec.weight > 0.0) {
                return Err(Error::Config(format!("indices.{}.weight must be positive", spec.id)));
            }
            if !strictly_ascending(&spec.thresholds) {
                return Err(Error::Config(format!(
                    "indices.{}.thresholds must be strictly ascending",
                    spec.id
                )));
            }
        }
        let total: f64 = self.indices.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("indices: weights sum to {total}, expected 1")));
        }
        if !strictly_ascending(&self.final_thresholds) {
            return Err(Error::Config("final_thresholds must be strictly ascending".into()));
        }
        Ok(())
    }

    /// Flag for a weighted score.
    pub fn final_flag(&self, score: f64) -> Flag {
        Flag::from_band(risk_band(score, &self.final_thresholds)).expect("band in 1..=4")
    }
}

/// Index values per region for one week. `values[r][x]` is index `x` of
/// region `r`; `None` marks an undefined value (e.g. a ratio over zero beds).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionIndices {
    pub week: usize,
    /// Region of each city.
    pub labels: Vec<usize>,
    pub ids: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

struct Aggregator<'a> {
    dataset: &'a Dataset,
    population: Vec<f64>,
}

impl Aggregator<'_> {
    fn sum(&self, m: &Array2<f64>, members: &[usize], week: usize) -> f64 {
        members.iter().map(|&i| m[[i, week]]).sum()
    }

    fn pop(&self, members: &[usize]) -> f64 {
        members.iter().map(|&i| self.population[i]).sum()
    }

    fn occupied(&self, members: &[usize], week: usize) -> Result<f64> {
        let p = &self.dataset.panel;
        Ok(self.sum(p.icu_total()?, members, week) - self.sum(p.icu_available()?, members, week))
    }

    fn evaluate(&self, kind: IndexKind, members: &[usize], week: usize) -> Result<Option<f64>> {
        let p = &self.dataset.panel;
        let v = match kind {
            IndexKind::ActiveCasesPer100k => {
                let c = p.cases()?;
                let mut active = self.sum(c, members, week);
                if week > 0 {
                    active += self.sum(c, members, week - 1);
                }
                Some(active / self.pop(members) * 1e5)
            }
            IndexKind::CaseGrowth => {
                let c = p.cases()?;
                (week > 0).then(|| ratio(self.sum(c, members, week), self.sum(c, members, week - 1)))
            }
            IndexKind::IcuOccupancyChange => {
                if week == 0 {
                    None
                } else {
                    Some(ratio(self.occupied(members, week)?, self.occupied(members, week - 1)?))
                }
            }
            IndexKind::DeathsPer100k => Some(self.sum(p.deaths()?, members, week) / self.pop(members) * 1e5),
            IndexKind::IcuOccupancyRate => {
                let total = self.sum(p.icu_total()?, members, week);
                (total > 0.0).then(|| (total - self.sum(p.icu_available().unwrap(), members, week)) / total)
            }
            IndexKind::IcuBedsPer10k => Some(self.sum(p.icu_total()?, members, week) / self.pop(members) * 1e4),
            IndexKind::AvailableBedRatio => {
                let total = self.sum(p.icu_total()?, members, week);
                (total > 0.0).then(|| self.sum(p.icu_available().unwrap(), members, week) / total)
            }
        };
        Ok(v)
    }
}

/// Evaluates every configured index for each region of `partition`.
pub fn compute_region_indices(
    partition: &Partition,
    dataset: &Dataset,
    week: usize,
    config: &FlagConfig,
) -> Result<RegionIndices> {
    if partition.len() != dataset.len() {
        return Err(Error::invalid("partition size does not match dataset"));
    }
    dataset.panel.check_week(week)?;
    let agg = Aggregator {
        dataset,
        population: dataset.cities.populations(),
    };
    let regions: Vec<Vec<usize>> = (0..partition.k()).map(|r| partition.members(r)).collect();
    let everyone: Vec<usize> = (0..dataset.len()).collect();
    let mut values = vec![Vec::with_capacity(config.indices.len()); regions.len()];
    for spec in &config.indices {
        let named = |e: Error| match e {
            Error::MissingPanel(panel) => Error::Config(format!(
                "index {:?} needs the {panel} panel, which the dataset does not have",
                spec.id
            )),
            other => other,
        };
        if spec.kind.required_panel() == "deaths" && !dataset.panel.has_deaths()
            || spec.kind.required_panel() == "cases" && !dataset.panel.has_cases()
            || spec.kind.required_panel() == "icu" && !dataset.panel.has_icu()
        {
            return Err(named(Error::MissingPanel(spec.kind.required_panel())));
        }
        match spec.level {
            Level::Statewide => {
                let v = agg.evaluate(spec.kind, &everyone, week).map_err(named)?;
                for row in values.iter_mut() {
                    row.push(v);
                }
            }
            Level::Region => {
                for (row, members) in values.iter_mut().zip(&regions) {
                    row.push(agg.evaluate(spec.kind, members, week).map_err(named)?);
                }
            }
        }
    }
    Ok(RegionIndices {
        week,
        labels: partition.labels().to_vec(),
        ids: config.indices.iter().map(|s| s.id.clone()).collect(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagAssignment {
    pub week: usize,
    pub region_flags: Vec<Flag>,
    pub region_scores: Vec<f64>,
    /// Region of each city.
    pub labels: Vec<usize>,
    pub city_flags: Vec<Flag>,
}

/// Weighted mean band of one region's index values.
pub fn region_score(values: &[Option<f64>], config: &FlagConfig) -> f64 {
    config
        .indices
        .iter()
        .zip(values)
        .map(|(spec, v)| spec.weight * f64::from(spec.band(*v)))
        .sum()
}

pub fn assign_flags(indices: &RegionIndices, config: &FlagConfig) -> Result<FlagAssignment> {
    let expected: Vec<&str> = config.indices.iter().map(|s| s.id.as_str()).collect();
    if indices.ids.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(Error::Config(format!(
            "region indices {:?} do not match configured indices {:?}",
            indices.ids, expected
        )));
    }
    let region_scores: Vec<f64> = indices.values.iter().map(|v| region_score(v, config)).collect();
    let region_flags: Vec<Flag> = region_scores.iter().map(|&s| config.final_flag(s)).collect();
    let city_flags = indices.labels.iter().map(|&r| region_flags[r]).collect();
    Ok(FlagAssignment {
        week: indices.week,
        region_flags,
        region_scores,
        labels: indices.labels.clone(),
        city_flags,
    })
}

/// City counts whose dynamic-region flag is lower-risk, higher-risk or equal
/// to their fixed-region flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FlagComparison {
    pub lower: usize,
    pub higher: usize,
    pub same: usize,
}

pub fn compare_flags(static_flags: &[Flag], dynamic_flags: &[Flag]) -> Result<FlagComparison> {
    if static_flags.len() != dynamic_flags.len() {
        return Err(Error::invalid("flag assignments cover different numbers of cities"));
    }
    let mut out = FlagComparison::default();
    for (s, d) in static_flags.iter().zip(dynamic_flags) {
        match d.cmp(s) {
            std::cmp::Ordering::Less => out.lower += 1,
            std::cmp::Ordering::Greater => out.higher += 1,
            std::cmp::Ordering::Equal => out.same += 1,
        }
    }
    Ok(out)
}

pub fn compare_assignments(static_assign: &FlagAssignment, dynamic_assign: &FlagAssignment) -> Result<FlagComparison> {
    if static_assign.week != dynamic_assign.week {
        return Err(Error::invalid(format!(
            "week mismatch: static week {} vs dynamic week {}",
            static_assign.week, dynamic_assign.week
        )));
    }
    compare_flags(&static_assign.city_flags, &dynamic_assign.city_flags)
}

/// Scores `partition` for `week` in one call.
pub fn flag_partition(
    partition: &Partition,
    dataset: &Dataset,
    week: usize,
    config: &FlagConfig,
) -> Result<FlagAssignment> {
    assign_flags(&compute_region_indices(partition, dataset, week, config)?, config)
}

/// Rows `city_id,week,static_region,static_flag,dynamic_region,dynamic_flag,delta`
/// where flags are levels 1..=4 and `delta = dynamic - static`.
pub fn write_comparison_rows<W: Write>(
    out: &mut W,
    cities: &CityTable,
    static_assign: &FlagAssignment,
    dynamic_assign: &FlagAssignment,
) -> std::io::Result<()> {
    for i in 0..cities.len() {
        let (s, d) = (static_assign.city_flags[i], dynamic_assign.city_flags[i]);
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            cities.cities()[i].code,
            static_assign.week,
            static_assign.labels[i],
            s.level(),
            dynamic_assign.labels[i],
            d.level(),
            i16::from(d.level()) - i16::from(s.level())
        )?;
    }
    Ok(())
}

pub const COMPARISON_HEADER: &str = "city_id,week,static_region,static_flag,dynamic_region,dynamic_flag,delta";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{City, MobilityData, TimeSeriesPanel};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn spec(id: &str, weight: f64) -> IndexSpec {
        IndexSpec {
            id: id.into(),
            kind: IndexKind::CaseGrowth,
            level: Level::Region,
            weight,
            thresholds: [1.0, 2.0, 3.0],
            orientation: Orientation::HigherIsWorse,
        }
    }

    fn config(specs: Vec<IndexSpec>) -> FlagConfig {
        FlagConfig {
            name: String::new(),
            description: String::new(),
            indices: specs,
            final_thresholds: [1.5, 2.5, 3.5],
        }
    }

    /// Four cities: regions {0,1} and {2,3}.
    fn dataset() -> Dataset {
        let cities = CityTable::new(
            (0..4)
                .map(|i| City {
                    code: 100 + i as i64,
                    name: format!("c{i}"),
                    population: [10_000, 30_000, 20_000, 20_000][i],
                    lat: 0.0,
                    lon: 0.0,
                    region: i / 2,
                })
                .collect(),
        )
        .unwrap();
        let z = ndarray::Array2::zeros((4, 4));
        let d = ndarray::Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 0.0 } else { 10.0 });
        let panel = TimeSeriesPanel::new(2)
            .with_icu(
                array![[4.0, 4.0], [4.0, 4.0], [0.0, 0.0], [0.0, 0.0]],
                array![[1.0, 0.0], [1.0, 1.0], [0.0, 0.0], [0.0, 0.0]],
            )
            .unwrap()
            .with_cases(array![[0.0, 0.0], [0.0, 0.0], [10.0, 5.0], [10.0, 25.0]])
            .unwrap();
        Dataset::new(cities, MobilityData::new(z.clone(), z, d).unwrap(), panel).unwrap()
    }

    #[test]
    fn default_config_is_valid() {
        let c = FlagConfig::default_config();
        assert_eq!(c.indices.len(), 8);
        c.validate().unwrap();
        assert!(c.indices.iter().any(|s| s.level == Level::Statewide));
    }

    #[test]
    fn uniform_extremes() {
        let c = config(vec![spec("a", 0.5), spec("b", 0.5)]);
        let low = region_score(&[Some(0.0), Some(0.5)], &c);
        assert_eq!(low, 1.0);
        assert_eq!(c.final_flag(low), Flag::Yellow);
        let high = region_score(&[Some(9.0), Some(100.0)], &c);
        assert_eq!(high, 4.0);
        assert_eq!(c.final_flag(high), Flag::Black);
    }

    #[test]
    fn mixed_bands_orange() {
        let c = config(vec![spec("a", 0.5), spec("b", 0.5)]);
        // bands 1 and 3
        let values = vec![vec![Some(0.5), Some(2.5)]];
        let idx = RegionIndices {
            week: 0,
            labels: vec![0, 0],
            ids: vec!["a".into(), "b".into()],
            values,
        };
        let a = assign_flags(&idx, &c).unwrap();
        assert_eq!(a.region_scores, vec![2.0]);
        assert_eq!(a.region_flags, vec![Flag::Orange]);
        assert_eq!(a.city_flags, vec![Flag::Orange, Flag::Orange]);
    }

    #[test]
    fn missing_value_is_worst_band() {
        let s = spec("a", 1.0);
        assert_eq!(s.band(None), 4);
        let mut better = s.clone();
        better.orientation = Orientation::HigherIsBetter;
        assert_eq!(better.band(None), 4);
        assert_eq!(better.band(Some(3.0)), 1);
        assert_eq!(better.band(Some(2.0)), 2);
        assert_eq!(better.band(Some(1.5)), 3);
        assert_eq!(better.band(Some(0.1)), 4);
    }

    #[test]
    fn zero_case_growth() {
        let ds = dataset();
        let c = config(vec![spec("g", 1.0)]);
        let p = Partition::from_labels(&ds.cities.region_labels());
        let idx = compute_region_indices(&p, &ds, 1, &c).unwrap();
        assert_eq!(idx.values[0][0], Some(0.0));
        assert_eq!(idx.values[1][0], Some(30.0 / 20.0));
        // week 0 has no previous week
        let idx0 = compute_region_indices(&p, &ds, 0, &c).unwrap();
        assert_eq!(idx0.values[0][0], None);
    }

    #[test]
    fn icu_occupancy_by_hand() {
        let ds = dataset();
        let mut s = spec("occ", 1.0);
        s.kind = IndexKind::IcuOccupancyRate;
        s.thresholds = [0.5, 0.7, 0.85];
        let c = config(vec![s]);
        let p = Partition::from_labels(&ds.cities.region_labels());
        let idx = compute_region_indices(&p, &ds, 0, &c).unwrap();
        // region 0: total 8, available 2 -> 6/8
        assert_abs_diff_eq!(idx.values[0][0].unwrap(), 0.75, epsilon = 1e-15);
        // region 1 has no beds at all
        assert_eq!(idx.values[1][0], None);
        let a = assign_flags(&idx, &c).unwrap();
        assert_eq!(a.region_flags, vec![Flag::Red, Flag::Black]);
    }

    #[test]
    fn single_region_equals_statewide() {
        let ds = dataset();
        let c = FlagConfig {
            indices: vec![
                IndexSpec {
                    kind: IndexKind::ActiveCasesPer100k,
                    thresholds: [10.0, 50.0, 150.0],
                    ..spec("r", 0.5)
                },
                IndexSpec {
                    kind: IndexKind::ActiveCasesPer100k,
                    level: Level::Statewide,
                    thresholds: [10.0, 50.0, 150.0],
                    ..spec("s", 0.5)
                },
            ],
            ..config(vec![])
        };
        let idx = compute_region_indices(&Partition::single(4), &ds, 1, &c).unwrap();
        assert_eq!(idx.values[0][0], idx.values[0][1]);
        assert_abs_diff_eq!(idx.values[0][0].unwrap(), 50.0 / 80_000.0 * 1e5, epsilon = 1e-12);
    }

    #[test]
    fn missing_panel_names_index() {
        let ds = dataset();
        let mut s = spec("mortality", 1.0);
        s.kind = IndexKind::DeathsPer100k;
        let err = compute_region_indices(&Partition::single(4), &ds, 0, &config(vec![s])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"mortality\"") && msg.contains("deaths"), "{msg}");
    }

    #[test]
    fn comparison_counts() {
        let f = |v: &[u8]| v.iter().map(|&b| Flag::from_band(b).unwrap()).collect::<Vec<_>>();
        let c = compare_flags(&f(&[1, 2, 3, 2, 4]), &f(&[2, 2, 2, 2, 4])).unwrap();
        assert_eq!(
            c,
            FlagComparison {
                lower: 1,
                higher: 1,
                same: 3
            }
        );
        let c = compare_flags(&f(&[4, 4, 4]), &f(&[1, 1, 1])).unwrap();
        assert_eq!(
            c,
            FlagComparison {
                lower: 3,
                higher: 0,
                same: 0
            }
        );
        let same = f(&[1, 3, 2]);
        assert_eq!(
            compare_flags(&same, &same).unwrap(),
            FlagComparison {
                lower: 0,
                higher: 0,
                same: 3
            }
        );
    }

    #[test]
    fn week_mismatch() {
        let a = FlagAssignment {
            week: 1,
            region_flags: vec![Flag::Red],
            region_scores: vec![3.0],
            labels: vec![0],
            city_flags: vec![Flag::Red],
        };
        let mut b = a.clone();
        b.week = 2;
        assert!(compare_assignments(&a, &b).is_err());
        assert_eq!(compare_assignments(&a, &a).unwrap().same, 1);
    }

    #[test]
    fn invalid_configs() {
        let mut c = config(vec![spec("a", 0.5), spec("b", 0.4)]);
        assert!(c.validate().unwrap_err().to_string().contains("weights sum"));
        c.indices[1].weight = 0.5;
        c.indices[1].thresholds = [1.0, 1.0, 2.0];
        assert!(c.validate().unwrap_err().to_string().contains("indices.b.thresholds"));
        let err = FlagConfig::from_json(r#"{"indices": [], "final_thresholds": [1,2,3], "colour": 1}"#).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        let err = FlagConfig::from_json(
            r#"{"indices": [{"id": "a", "kind": "case_growth", "level": "region", "thresholds": [1,2,3]}], "final_thresholds": [1,2,3]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("weight"), "{err}");
    }

    #[test]
    fn region_permutation_invariance() {
        let c = config(vec![spec("a", 0.3), spec("b", 0.7)]);
        let idx = RegionIndices {
            week: 0,
            labels: vec![0, 1, 2, 1],
            ids: vec!["a".into(), "b".into()],
            values: vec![
                vec![Some(0.5), Some(2.5)],
                vec![Some(3.5), None],
                vec![Some(1.5), Some(1.5)],
            ],
        };
        let perm = [2usize, 0, 1];
        let mut permuted = idx.clone();
        for (r, v) in idx.values.iter().enumerate() {
            permuted.values[perm[r]] = v.clone();
        }
        permuted.labels = idx.labels.iter().map(|&r| perm[r]).collect();
        let a = assign_flags(&idx, &c).unwrap();
        let b = assign_flags(&permuted, &c).unwrap();
        assert_eq!(a.city_flags, b.city_flags);
    }
}

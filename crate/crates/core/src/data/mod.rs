//! Input data: cities, commuter and distance matrices, weekly panels.
//!
//! Every type here validates its invariants on construction and is immutable
//! afterwards. Cities are addressed by their dense position `0..n` in the
//! city table; all matrices and panels index rows by that position.

mod io;
mod synthetic;

pub use io::{load_dataset, read_matrix, read_vector, write_dataset, write_matrix, DatasetPaths, LoadOptions};
pub use synthetic::{generate_synthetic, generate_synthetic_with, SyntheticDataset, SyntheticOptions};

use ndarray::{Array1, Array2};
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Cities below this population were excluded from the original study.
pub const MIN_POPULATION: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct City {
    /// External identifier carried by the input file (e.g. a census code).
    pub code: i64,
    pub name: String,
    pub population: u64,
    pub lat: f64,
    pub lon: f64,
    /// Fixed administrative region, `0..R`.
    pub region: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityTable {
    cities: Vec<City>,
    regions: usize,
}

impl CityTable {
    pub fn new(cities: Vec<City>) -> Result<Self> {
        if cities.is_empty() {
            return Err(Error::validation("city table is empty", None));
        }
        let mut seen: HashMap<i64, usize> = HashMap::new();
        for (idx, city) in cities.iter().enumerate() {
            if let Some(first) = seen.insert(city.code, idx) {
                return Err(Error::validation(
                    format!("duplicate city id {} (rows {} and {})", city.code, first, idx),
                    Some(idx),
                ));
            }
            if city.population == 0 {
                return Err(Error::validation("population must be positive", Some(idx)));
            }
            if !city.lat.is_finite() || !city.lon.is_finite() {
                return Err(Error::validation("coordinates must be finite", Some(idx)));
            }
        }
        let regions = cities.iter().map(|c| c.region).max().unwrap_or(0) + 1;
        let mut used = vec![false; regions];
        for city in &cities {
            used[city.region] = true;
        }
        if let Some(gap) = used.iter().position(|u| !u) {
            return Err(Error::validation(
                format!("region labels must be contiguous from 0; region {gap} is empty"),
                None,
            ));
        }
        Ok(CityTable { cities, regions })
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }

    pub fn cities(&self) -> &[City] {
        &self.cities
    }

    pub fn get(&self, index: usize) -> Option<&City> {
        self.cities.get(index)
    }

    pub fn region_count(&self) -> usize {
        self.regions
    }

    pub fn region_labels(&self) -> Vec<usize> {
        self.cities.iter().map(|c| c.region).collect()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.cities.iter().map(|c| c.population as f64).collect()
    }

    /// Indices of cities whose population is below `threshold`.
    pub fn below_population(&self, threshold: u64) -> Vec<usize> {
        self.cities
            .iter()
            .enumerate()
            .filter(|(_, c)| c.population < threshold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Daily commuter flows and road distances between cities.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityData {
    commute: Array2<f64>,
    education: Array2<f64>,
    distance: Array2<f64>,
}

impl MobilityData {
    pub fn new(commute: Array2<f64>, education: Array2<f64>, distance: Array2<f64>) -> Result<Self> {
        let n = commute.nrows();
        for (name, m) in [
            ("commute", &commute),
            ("education", &education),
            ("distance", &distance),
        ] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::validation(
                    format!("{name} matrix must be {n}x{n}, got {}x{}", m.nrows(), m.ncols()),
                    None,
                ));
            }
            for ((i, j), &v) in m.indexed_iter() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::validation(
                        format!("{name}[{i},{j}] must be finite and nonnegative, got {v}"),
                        Some(i),
                    ));
                }
            }
            for i in 0..n {
                if m[[i, i]] != 0.0 {
                    return Err(Error::validation(format!("{name} diagonal must be zero"), Some(i)));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (distance[[i, j]], distance[[j, i]]);
                if a <= 0.0 {
                    return Err(Error::validation(
                        format!("distance[{i},{j}] must be positive"),
                        Some(i),
                    ));
                }
                if (a - b).abs() > 1e-9 * a.max(b) {
                    return Err(Error::validation(
                        format!("distance matrix is not symmetric at ({i},{j})"),
                        Some(i),
                    ));
                }
            }
        }
        Ok(MobilityData {
            commute,
            education,
            distance,
        })
    }

    pub fn len(&self) -> usize {
        self.commute.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `t_ij`: residents of `i` working in `j`.
    pub fn commute(&self) -> &Array2<f64> {
        &self.commute
    }

    /// `e_ij`: residents of `i` studying in `j`.
    pub fn education(&self) -> &Array2<f64> {
        &self.education
    }

    pub fn distance(&self) -> &Array2<f64> {
        &self.distance
    }

    /// `t_ij + e_ij`.
    pub fn total_flow(&self, i: usize, j: usize) -> f64 {
        self.commute[[i, j]] + self.education[[i, j]]
    }

    /// Total daily outflow of residents of `i`.
    pub fn outflow(&self, i: usize) -> f64 {
        self.commute.row(i).sum() + self.education.row(i).sum()
    }
}

/// Weekly per-city series. Each panel is optional so that partial datasets
/// (e.g. mobility only) can still be loaded; consumers ask for the panel they
/// need and get [`Error::MissingPanel`] if it is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    weeks: usize,
    isolation: Option<Array2<f64>>,
    baseline_isolation: Option<Array1<f64>>,
    icu_total: Option<Array2<f64>>,
    icu_available: Option<Array2<f64>>,
    cases: Option<Array2<f64>>,
    deaths: Option<Array2<f64>>,
}

fn check_weekly(name: &str, m: &Array2<f64>, weeks: usize) -> Result<()> {
    if m.ncols() != weeks {
        return Err(Error::validation(
            format!("{name} panel has {} weeks, expected {weeks}", m.ncols()),
            None,
        ));
    }
    for ((i, t), &v) in m.indexed_iter() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::validation(
                format!("{name}[{i},{t}] must be finite and nonnegative, got {v}"),
                Some(i),
            ));
        }
    }
    Ok(())
}

impl TimeSeriesPanel {
    pub fn new(weeks: usize) -> Self {
        TimeSeriesPanel {
            weeks,
            isolation: None,
            baseline_isolation: None,
            icu_total: None,
            icu_available: None,
            cases: None,
            deaths: None,
        }
    }

    pub fn with_isolation(mut self, isolation: Array2<f64>, baseline: Array1<f64>) -> Result<Self> {
        check_weekly("isolation", &isolation, self.weeks)?;
        if baseline.len() != isolation.nrows() {
            return Err(Error::validation(
                "baseline_isolation length does not match isolation rows",
                None,
            ));
        }
        for ((i, t), &v) in isolation.indexed_iter() {
            if v > 1.0 {
                return Err(Error::validation(
                    format!("isolation[{i},{t}] must lie in [0,1], got {v}"),
                    Some(i),
                ));
            }
        }
        for (i, &b) in baseline.iter().enumerate() {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::validation(
                    format!("baseline isolation must lie in [0,1), got {b}"),
                    Some(i),
                ));
            }
        }
        self.isolation = Some(isolation);
        self.baseline_isolation = Some(baseline);
        Ok(self)
    }

    pub fn with_icu(mut self, total: Array2<f64>, available: Array2<f64>) -> Result<Self> {
        check_weekly("icu_total", &total, self.weeks)?;
        check_weekly("icu_available", &available, self.weeks)?;
        if total.dim() != available.dim() {
            return Err(Error::validation("icu_total and icu_available shapes differ", None));
        }
        for ((i, t), &l) in available.indexed_iter() {
            if l > total[[i, t]] {
                return Err(Error::validation(
                    format!("icu_available exceeds icu_total at week {t} ({l} > {})", total[[i, t]]),
                    Some(i),
                ));
            }
        }
        self.icu_total = Some(total);
        self.icu_available = Some(available);
        Ok(self)
    }

    /// Weekly newly confirmed cases.
    pub fn with_cases(mut self, cases: Array2<f64>) -> Result<Self> {
        check_weekly("cases", &cases, self.weeks)?;
        self.cases = Some(cases);
        Ok(self)
    }

    /// Weekly confirmed deaths.
    pub fn with_deaths(mut self, deaths: Array2<f64>) -> Result<Self> {
        check_weekly("deaths", &deaths, self.weeks)?;
        self.deaths = Some(deaths);
        Ok(self)
    }

    pub fn weeks(&self) -> usize {
        self.weeks
    }

    pub fn isolation(&self) -> Result<&Array2<f64>> {
        self.isolation.as_ref().ok_or(Error::MissingPanel("isolation"))
    }

    pub fn baseline_isolation(&self) -> Result<&Array1<f64>> {
        self.baseline_isolation.as_ref().ok_or(Error::MissingPanel("isolation"))
    }

    pub fn icu_total(&self) -> Result<&Array2<f64>> {
        self.icu_total.as_ref().ok_or(Error::MissingPanel("icu"))
    }

    pub fn icu_available(&self) -> Result<&Array2<f64>> {
        self.icu_available.as_ref().ok_or(Error::MissingPanel("icu"))
    }

    pub fn cases(&self) -> Result<&Array2<f64>> {
        self.cases.as_ref().ok_or(Error::MissingPanel("cases"))
    }

    pub fn deaths(&self) -> Result<&Array2<f64>> {
        self.deaths.as_ref().ok_or(Error::MissingPanel("deaths"))
    }

    pub fn has_isolation(&self) -> bool {
        self.isolation.is_some()
    }

    pub fn has_icu(&self) -> bool {
        self.icu_total.is_some()
    }

    pub fn has_cases(&self) -> bool {
        self.cases.is_some()
    }

    pub fn has_deaths(&self) -> bool {
        self.deaths.is_some()
    }

    pub fn check_week(&self, week: usize) -> Result<()> {
        if week >= self.weeks {
            return Err(Error::invalid(format!(
                "week {week} out of range (panel has {} weeks)",
                self.weeks
            )));
        }
        Ok(())
    }

    fn all_rows(&self) -> impl Iterator<Item = (&'static str, usize)> + '_ {
        [
            ("isolation", self.isolation.as_ref()),
            ("icu_total", self.icu_total.as_ref()),
            ("icu_available", self.icu_available.as_ref()),
            ("cases", self.cases.as_ref()),
            ("deaths", self.deaths.as_ref()),
        ]
        .into_iter()
        .filter_map(|(name, m)| m.map(|m| (name, m.nrows())))
    }
}

/// A complete validated input set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub cities: CityTable,
    pub mobility: MobilityData,
    pub panel: TimeSeriesPanel,
}

impl Dataset {
    pub fn new(cities: CityTable, mobility: MobilityData, panel: TimeSeriesPanel) -> Result<Self> {
        let n = cities.len();
        if mobility.len() != n {
            return Err(Error::validation(
                format!("mobility matrices are {0}x{0} but there are {n} cities", mobility.len()),
                None,
            ));
        }
        for (name, rows) in panel.all_rows() {
            if rows != n {
                return Err(Error::validation(
                    format!("{name} panel has {rows} rows but there are {n} cities"),
                    None,
                ));
            }
        }
        for (i, city) in cities.cities().iter().enumerate() {
            let out = mobility.outflow(i);
            if out > city.population as f64 {
                return Err(Error::validation(
                    format!("commuter outflow {out} exceeds population {}", city.population),
                    Some(i),
                ));
            }
        }
        Ok(Dataset {
            cities,
            mobility,
            panel,
        })
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }
}

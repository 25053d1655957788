use serde::Serialize;

use super::{partition_distance, shi_malik_with, ClusteringReport, ShiMalikOptions};
use crate::affinity::{self, AffinityKind, AffinityOptions};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeeklyOptions {
    pub affinity: AffinityOptions,
    pub clustering: ShiMalikOptions,
    /// Restrict to these weeks; all panel weeks when `None`.
    pub weeks: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeeklyReport {
    pub week: usize,
    #[serde(flatten)]
    pub report: ClusteringReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyPartitions {
    pub kind: AffinityKind,
    pub k: usize,
    pub reports: Vec<WeeklyReport>,
    /// `switches[i]` is the partition distance between reports `i` and `i+1`.
    pub switches: Vec<usize>,
}

/// Clusters every requested week with the same seed. Static constructions
/// produce a single report labelled week 0.
pub fn weekly_partitions(
    kind: AffinityKind,
    dataset: &Dataset,
    k: usize,
    options: &WeeklyOptions,
) -> Result<WeeklyPartitions> {
    let weeks: Vec<usize> = if kind.is_weekly() {
        match &options.weeks {
            Some(w) => w.clone(),
            None => (0..dataset.panel.weeks()).collect(),
        }
    } else {
        vec![0]
    };
    if weeks.is_empty() {
        return Err(Error::invalid("no weeks to cluster"));
    }
    let mut reports = Vec::with_capacity(weeks.len());
    for &week in &weeks {
        let w = affinity::build(kind, dataset, week, &options.affinity)?;
        let report = shi_malik_with(&w, k, &options.clustering)?;
        reports.push(WeeklyReport { week, report });
    }
    let switches = reports
        .windows(2)
        .map(|pair| partition_distance(&pair[0].report.best, &pair[1].report.best))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeeklyPartitions {
        kind,
        k,
        reports,
        switches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{City, CityTable, MobilityData, TimeSeriesPanel};
    use ndarray::{array, Array2};

    fn opts(restarts: usize) -> WeeklyOptions {
        WeeklyOptions {
            clustering: ShiMalikOptions {
                restarts,
                seed: 4,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn static_measure_single_report() {
        let s = crate::data::generate_synthetic(10, 2, 3).unwrap();
        let r = weekly_partitions(AffinityKind::StaticCommute, &s.dataset, 2, &opts(20)).unwrap();
        assert_eq!(r.reports.len(), 1);
        assert!(r.switches.is_empty());
    }

    #[test]
    fn repeated_week_is_stable() {
        let s = crate::data::generate_synthetic(12, 3, 8).unwrap();
        let mut o = opts(30);
        o.weeks = Some(vec![2, 2]);
        let r = weekly_partitions(AffinityKind::IsolationAdjusted, &s.dataset, 3, &o).unwrap();
        assert_eq!(r.reports[0].report.best, r.reports[1].report.best);
        assert_eq!(r.switches, vec![0]);
    }

    /// Six cities in a line, 40 km apart, every bed occupied except at two
    /// hubs. Non-hub cities attach to the nearer hub; moving the second hub
    /// from city 5 to city 3 pulls city 2 across.
    #[test]
    fn icu_flip_switches_cities() {
        let n = 6;
        let cities = CityTable::new(
            (0..n)
                .map(|i| City {
                    code: i as i64,
                    name: format!("c{i}"),
                    population: 50_000,
                    lat: 0.0,
                    lon: i as f64,
                    region: 0,
                })
                .collect(),
        )
        .unwrap();
        let d = Array2::from_shape_fn((n, n), |(i, j)| 40.0 * (i as f64 - j as f64).abs());
        let mobility = MobilityData::new(Array2::zeros((n, n)), Array2::zeros((n, n)), d).unwrap();
        let total = Array2::from_elem((n, 2), 10.0);
        let avail = array![[9.0, 9.0], [0.0, 0.0], [0.0, 0.0], [0.0, 9.0], [0.0, 0.0], [9.0, 0.0]];
        let panel = TimeSeriesPanel::new(2).with_icu(total, avail).unwrap();
        let ds = Dataset::new(cities, mobility, panel).unwrap();
        let r = weekly_partitions(AffinityKind::IcuDynamic, &ds, 2, &opts(50)).unwrap();
        let w0 = r.reports[0].report.best.clone();
        let w1 = r.reports[1].report.best.clone();
        assert_eq!(w0.labels(), &[0, 0, 0, 1, 1, 1]);
        assert_eq!(w1.labels(), &[0, 0, 1, 1, 1, 1]);
        // both are the exhaustive NCut optimum for their week
        for (week, p) in [(0, &w0), (1, &w1)] {
            let w = affinity::build(AffinityKind::IcuDynamic, &ds, week, &AffinityOptions::default()).unwrap();
            let best = (1u32..(1 << (n - 1)))
                .map(|mask| {
                    let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
                    super::super::ncut(&w, &super::super::Partition::from_labels(&labels)).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((super::super::ncut(&w, p).unwrap() - best).abs() < 1e-12);
        }
        // relabeling by hand: only city 2 changes side
        assert_eq!(r.switches, vec![1]);
    }
}

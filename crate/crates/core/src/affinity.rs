//! Affinity matrices between cities.
//!
//! Four constructions are provided: commuter volume (`A0`), commuter volume
//! damped by relative self-isolation (`A(t)`), static ICU capacity contrast
//! over road distance (`C0`) and weekly ICU availability urgency (`C(t)`).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;

use crate::data::{write_matrix, Dataset, MobilityData, TimeSeriesPanel};
use crate::error::{Error, Result};

/// Entries below this are stored as exact zeros.
pub const ZERO_CUTOFF: f64 = 1e-12;

/// Default distance smoothing constant in kilometres.
pub const DEFAULT_SMOOTHING_KM: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AffinityKind {
    StaticCommute,
    IsolationAdjusted,
    IcuStatic,
    IcuDynamic,
}

impl AffinityKind {
    pub fn label(self) -> &'static str {
        match self {
            AffinityKind::StaticCommute => "A0",
            AffinityKind::IsolationAdjusted => "A(t)",
            AffinityKind::IcuStatic => "C0",
            AffinityKind::IcuDynamic => "C(t)",
        }
    }

    /// True for constructions that change week to week.
    pub fn is_weekly(self) -> bool {
        matches!(self, AffinityKind::IsolationAdjusted | AffinityKind::IcuDynamic)
    }
}

impl fmt::Display for AffinityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AffinityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a0" => Ok(AffinityKind::StaticCommute),
            "at" | "a(t)" => Ok(AffinityKind::IsolationAdjusted),
            "c0" => Ok(AffinityKind::IcuStatic),
            "ct" | "c(t)" => Ok(AffinityKind::IcuDynamic),
            other => Err(Error::invalid(format!("unknown affinity measure {other:?}"))),
        }
    }
}

/// Which city's isolation damps the flow from `i` to `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsolationAttribution {
    #[default]
    Destination,
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityOptions {
    pub attribution: IsolationAttribution,
    pub smoothing_km: f64,
}

impl Default for AffinityOptions {
    fn default() -> Self {
        AffinityOptions {
            attribution: IsolationAttribution::Destination,
            smoothing_km: DEFAULT_SMOOTHING_KM,
        }
    }
}

/// Symmetric, nonnegative, zero-diagonal weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    weights: Array2<f64>,
    label: String,
}

impl AffinityMatrix {
    /// Validates and stores `weights`. Entries under [`ZERO_CUTOFF`] are
    /// truncated to zero first.
    pub fn new(mut weights: Array2<f64>, label: impl Into<String>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::invalid("affinity matrix must be square"));
        }
        for ((i, j), w) in weights.indexed_iter_mut() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Numerical(format!(
                    "affinity[{i},{j}] = {w} is not a finite nonnegative weight"
                )));
            }
            if *w < ZERO_CUTOFF {
                *w = 0.0;
            }
        }
        for i in 0..n {
            if weights[[i, i]] != 0.0 {
                return Err(Error::invalid(format!("affinity diagonal nonzero at {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (weights[[i, j]], weights[[j, i]]);
                if (a - b).abs() > 1e-10 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::invalid(format!("affinity not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(AffinityMatrix {
            weights,
            label: label.into(),
        })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[[i, j]]
    }

    /// CSV with a `# label=<tag>` first line.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# label={}", self.label)?;
        write_matrix(out, &self.weights)
    }
}

/// `α_ij = t_ij + t_ji + e_ij + e_ji`.
pub fn build_static_commute(mobility: &MobilityData) -> Result<AffinityMatrix> {
    let n = mobility.len();
    let w = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            mobility.total_flow(i, j) + mobility.total_flow(j, i)
        }
    });
    AffinityMatrix::new(w, AffinityKind::StaticCommute.label())
}

/// Isolation relative to the city's pre-pandemic baseline, clamped at 0.
pub fn relative_isolation(panel: &TimeSeriesPanel, city: usize, week: usize) -> Result<f64> {
    let iso = panel.isolation()?;
    let base = panel.baseline_isolation()?;
    panel.check_week(week)?;
    if city >= iso.nrows() {
        return Err(Error::invalid(format!("city {city} out of range")));
    }
    Ok(relative_isolation_value(iso[[city, week]], base[city]))
}

pub(crate) fn relative_isolation_value(beta: f64, baseline: f64) -> f64 {
    ((beta - baseline) / (1.0 - baseline)).clamp(0.0, 1.0)
}

/// Relative isolation of every city in `week`.
pub fn relative_isolation_week(panel: &TimeSeriesPanel, week: usize) -> Result<Vec<f64>> {
    let iso = panel.isolation()?;
    let base = panel.baseline_isolation()?;
    panel.check_week(week)?;
    Ok((0..iso.nrows())
        .map(|i| relative_isolation_value(iso[[i, week]], base[i]))
        .collect())
}

/// Commuter affinity where each directed flow is scaled by `1 - β*` of the
/// attributed city (the destination by default).
pub fn build_isolation_adjusted(
    mobility: &MobilityData,
    panel: &TimeSeriesPanel,
    week: usize,
    attribution: IsolationAttribution,
) -> Result<AffinityMatrix> {
    let beta = relative_isolation_week(panel, week)?;
    if beta.len() != mobility.len() {
        return Err(Error::invalid("isolation panel size does not match mobility"));
    }
    isolation_adjusted_from(mobility, &beta, attribution)
}

/// Same as [`build_isolation_adjusted`] with explicit `β*` values.
pub fn isolation_adjusted_from(
    mobility: &MobilityData,
    beta: &[f64],
    attribution: IsolationAttribution,
) -> Result<AffinityMatrix> {
    let n = mobility.len();
    let keep = |origin: usize, dest: usize| match attribution {
        IsolationAttribution::Destination => 1.0 - beta[dest],
        IsolationAttribution::Origin => 1.0 - beta[origin],
    };
    let w = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            keep(i, j) * mobility.total_flow(i, j) + keep(j, i) * mobility.total_flow(j, i)
        }
    });
    AffinityMatrix::new(w, AffinityKind::IsolationAdjusted.label())
}

/// `γ_ij = |u_i(0) - u_j(0)| / (d_ij + c)` from the first ICU week.
pub fn build_icu_static(mobility: &MobilityData, panel: &TimeSeriesPanel, smoothing_km: f64) -> Result<AffinityMatrix> {
    if !(smoothing_km.is_finite() && smoothing_km >= 0.0) {
        return Err(Error::invalid("smoothing constant must be nonnegative"));
    }
    let total = panel.icu_total()?;
    panel.check_week(0)?;
    let d = mobility.distance();
    let n = mobility.len();
    let w = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            (total[[i, 0]] - total[[j, 0]]).abs() / (d[[i, j]] + smoothing_km)
        }
    });
    AffinityMatrix::new(w, AffinityKind::IcuStatic.label())
}

/// Urgency of city `i` to seek beds elsewhere: `(u - ℓ + 1) / (u + 1)`.
pub fn icu_urgency(total: f64, available: f64) -> f64 {
    (total - available + 1.0) / (total + 1.0)
}

/// Weekly ICU affinity: the larger of the two directed urgency-weighted
/// availability differences, used for both orientations.
pub fn build_icu_dynamic(
    mobility: &MobilityData,
    panel: &TimeSeriesPanel,
    week: usize,
    smoothing_km: f64,
) -> Result<AffinityMatrix> {
    if !(smoothing_km.is_finite() && smoothing_km >= 0.0) {
        return Err(Error::invalid("smoothing constant must be nonnegative"));
    }
    panel.check_week(week)?;
    let total = panel.icu_total()?;
    let avail = panel.icu_available()?;
    let d = mobility.distance();
    let n = mobility.len();
    let eta: Vec<f64> = (0..n)
        .map(|i| icu_urgency(total[[i, week]], avail[[i, week]]))
        .collect();
    let w = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            return 0.0;
        }
        let (li, lj) = (avail[[i, week]], avail[[j, week]]);
        let denom = d[[i, j]] + smoothing_km;
        (eta[i] * (lj - li) / denom).max(eta[j] * (li - lj) / denom)
    });
    AffinityMatrix::new(w, AffinityKind::IcuDynamic.label())
}

/// Dispatches on `kind`. `week` is ignored by the static constructions.
pub fn build(kind: AffinityKind, dataset: &Dataset, week: usize, options: &AffinityOptions) -> Result<AffinityMatrix> {
    match kind {
        AffinityKind::StaticCommute => build_static_commute(&dataset.mobility),
        AffinityKind::IsolationAdjusted => {
            build_isolation_adjusted(&dataset.mobility, &dataset.panel, week, options.attribution)
        }
        AffinityKind::IcuStatic => build_icu_static(&dataset.mobility, &dataset.panel, options.smoothing_km),
        AffinityKind::IcuDynamic => build_icu_dynamic(&dataset.mobility, &dataset.panel, week, options.smoothing_km),
    }
}

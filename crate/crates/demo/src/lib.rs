//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string; failures
//! surface as a thrown JS error. The `*_json` functions hold the logic so
//! they can be tested on the host.

use metaregion::affinity::build_static_commute;
use metaregion::clustering::{partition_distance, shi_malik, Partition};
use metaregion::data::{generate_synthetic, SyntheticDataset};
use metaregion::plot::LineChart;
use metaregion::seir::{self, InfectivityProfile, IsolationPolicy, SimConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Week of the synthetic case panel used to seed simulations.
const SEED_WEEK: usize = 3;
const MAX_CITIES: usize = 200;
const MAX_HORIZON: usize = 730;

#[derive(Serialize)]
struct CityPoint {
    name: String,
    lat: f64,
    lon: f64,
    population: u64,
    planted: usize,
    label: usize,
}

#[derive(Serialize)]
struct ClusterView {
    cities: Vec<CityPoint>,
    k: usize,
    ncut: f64,
    bound: f64,
    quality_ratio: f64,
    stability: usize,
    restarts: usize,
    misplaced: usize,
    eigenvalues: Vec<f64>,
}

#[derive(Serialize)]
struct ScenarioView {
    days: Vec<usize>,
    new_cases: Vec<f64>,
    active_per_100k: Vec<f64>,
    cumulative_per_100k: Vec<f64>,
    svg: String,
}

#[derive(Serialize)]
struct SweepView {
    levels: Vec<f64>,
    active_per_100k: Vec<f64>,
    cumulative_per_100k: Vec<f64>,
    /// Level at which `r0 (1 - b)^2` drops to one.
    threshold: f64,
    svg: String,
}

fn synthetic(n: usize, blocks: usize, seed: u64) -> Result<SyntheticDataset, String> {
    if n > MAX_CITIES {
        return Err(format!("at most {MAX_CITIES} cities in the demo (got {n})"));
    }
    generate_synthetic(n, blocks, seed).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn check_unit(level: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&level) {
        Ok(())
    } else {
        Err(format!("isolation level {level} outside [0,1]"))
    }
}

fn sim_config(r0: f64, horizon: usize) -> Result<SimConfig, String> {
    if horizon > MAX_HORIZON {
        return Err(format!("horizon at most {MAX_HORIZON} days (got {horizon})"));
    }
    let config = SimConfig {
        r0,
        horizon,
        ..SimConfig::default()
    };
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

/// Clusters a synthetic network on its static commuter affinity.
pub fn cluster_synthetic_json(n: usize, blocks: usize, k: usize, seed: u64, restarts: usize) -> Result<String, String> {
    let syn = synthetic(n, blocks, seed)?;
    let w = build_static_commute(&syn.dataset.mobility).map_err(|e| e.to_string())?;
    let report = shi_malik(&w, k, restarts, seed).map_err(|e| e.to_string())?;
    let planted = Partition::from_labels(&syn.planted);
    let misplaced = partition_distance(&report.best, &planted).map_err(|e| e.to_string())?;
    let cities = syn
        .dataset
        .cities
        .cities()
        .iter()
        .zip(&syn.planted)
        .zip(report.best.labels())
        .map(|((c, &planted), &label)| CityPoint {
            name: c.name.clone(),
            lat: c.lat,
            lon: c.lon,
            population: c.population,
            planted,
            label,
        })
        .collect();
    to_json(&ClusterView {
        cities,
        k,
        ncut: report.ncut_value,
        bound: report.relaxed_bound,
        quality_ratio: report.quality_ratio,
        stability: report.stability_count,
        restarts: report.restarts,
        misplaced,
        eigenvalues: report.eigenvalues,
    })
}

/// Network-wide SEIR curve under a constant isolation level.
pub fn simulate_scenario_json(
    n: usize,
    blocks: usize,
    seed: u64,
    r0: f64,
    level: f64,
    horizon: usize,
) -> Result<String, String> {
    check_unit(level)?;
    let config = sim_config(r0, horizon)?;
    let syn = synthetic(n, blocks, seed)?;
    let ds = &syn.dataset;
    let flow = seir::build_flow_matrix(&ds.cities, &ds.mobility).map_err(|e| e.to_string())?;
    let initial = seir::seed_from_cases(ds, SEED_WEEK, &config).map_err(|e| e.to_string())?;
    let policy = IsolationPolicy::constant(level).map_err(|e| e.to_string())?;
    let t = seir::simulate(&initial, &flow, &InfectivityProfile::triangular(), &policy, &config)
        .map_err(|e| e.to_string())?;

    let total_pop: f64 = t.population.iter().sum();
    let per_100k = |x: f64| x.max(0.0) / total_pop * 1e5;
    let days: Vec<usize> = t.days.iter().map(|d| d.day).collect();
    let new_cases: Vec<f64> = t
        .days
        .iter()
        .map(|d| d.new_cases.iter().sum::<f64>().max(0.0))
        .collect();
    let active: Vec<f64> = t.days.iter().map(|d| per_100k(d.i.iter().sum())).collect();
    let cumulative: Vec<f64> = t
        .days
        .iter()
        .map(|d| per_100k(total_pop - d.s.iter().sum::<f64>()))
        .collect();

    let points = |ys: &[f64]| days.iter().zip(ys).map(|(&d, &y)| (d as f64, y)).collect();
    let svg = LineChart::new(&format!("Isolation {level:.2}, R0 {r0}"), "day", "per 100k")
        .with_series("active", points(&active))
        .with_series("cumulative", points(&cumulative))
        .render(None);
    to_json(&ScenarioView {
        days,
        new_cases,
        active_per_100k: active,
        cumulative_per_100k: cumulative,
        svg,
    })
}

/// End-of-horizon totals for `steps + 1` evenly spaced isolation levels.
pub fn isolation_sweep_json(
    n: usize,
    blocks: usize,
    seed: u64,
    r0: f64,
    horizon: usize,
    steps: usize,
) -> Result<String, String> {
    if steps == 0 || steps > 100 {
        return Err(format!("steps must be in 1..=100 (got {steps})"));
    }
    let config = sim_config(r0, horizon)?;
    let syn = synthetic(n, blocks, seed)?;
    let ds = &syn.dataset;
    let flow = seir::build_flow_matrix(&ds.cities, &ds.mobility).map_err(|e| e.to_string())?;
    let initial = seir::seed_from_cases(ds, SEED_WEEK, &config).map_err(|e| e.to_string())?;
    let levels: Vec<f64> = (0..=steps).map(|s| s as f64 / steps as f64).collect();
    let rows = seir::isolation_sweep(&initial, &flow, &InfectivityProfile::triangular(), &levels, &config)
        .map_err(|e| e.to_string())?;

    let active: Vec<f64> = rows.iter().map(|r| r.total_active_per_100k).collect();
    let cumulative: Vec<f64> = rows.iter().map(|r| r.total_cumulative_per_100k).collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.level).collect();
    let points = |ys: &[f64]| xs.iter().zip(ys).map(|(&x, &y)| (x, y)).collect();
    let svg = LineChart::new(&format!("Day {horizon} totals, R0 {r0}"), "isolation level", "per 100k")
        .with_series("active", points(&active))
        .with_series("cumulative", points(&cumulative))
        .render(None);
    to_json(&SweepView {
        levels: xs,
        active_per_100k: active,
        cumulative_per_100k: cumulative,
        threshold: 1.0 - 1.0 / r0.sqrt(),
        svg,
    })
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = clusterSynthetic)]
pub fn cluster_synthetic(n: usize, blocks: usize, k: usize, seed: u32, restarts: usize) -> Result<String, JsError> {
    js(cluster_synthetic_json(n, blocks, k, seed.into(), restarts))
}

#[wasm_bindgen(js_name = simulateScenario)]
pub fn simulate_scenario(
    n: usize,
    blocks: usize,
    seed: u32,
    r0: f64,
    level: f64,
    horizon: usize,
) -> Result<String, JsError> {
    js(simulate_scenario_json(n, blocks, seed.into(), r0, level, horizon))
}

#[wasm_bindgen(js_name = isolationSweep)]
pub fn isolation_sweep(
    n: usize,
    blocks: usize,
    seed: u32,
    r0: f64,
    horizon: usize,
    steps: usize,
) -> Result<String, JsError> {
    js(isolation_sweep_json(n, blocks, seed.into(), r0, horizon, steps))
}

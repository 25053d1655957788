use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use metaregion::affinity::{self, AffinityKind, AffinityOptions, IsolationAttribution};
use metaregion::clustering::{
    shi_malik_with, weekly_partitions, Partition, ShiMalikOptions, WeeklyOptions, WeeklyReport,
};
use metaregion::data::{self, Dataset, DatasetPaths, LoadOptions, SyntheticOptions};
use metaregion::flags::{self, FlagAssignment, FlagComparison, FlagConfig, COMPARISON_HEADER};
use metaregion::plot::LineChart;
use metaregion::seir::{self, InfectivityProfile, Trajectory, TRAJECTORY_HEADER};
use metaregion::spectral::{full_spectrum, normalized_laplacian, suggest_k};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{config_hash, csv_text, now, Outputs, RunManifest};
use crate::scenario::Scenario;
use crate::CommonArgs;

/// Cities drawn in the SVG charts (largest populations first).
const PLOTTED_CITIES: usize = 6;

fn parse_measure(s: &str) -> Result<AffinityKind, String> {
    s.parse().map_err(|e: metaregion::Error| e.to_string())
}

struct Run {
    command: &'static str,
    args: Vec<String>,
    started_at: String,
    inputs: Vec<String>,
    out: Outputs,
}

impl Run {
    fn start(command: &'static str, args: Vec<String>, common: &CommonArgs) -> CliResult<Self> {
        Ok(Run {
            command,
            args,
            started_at: now(),
            inputs: Vec::new(),
            out: Outputs::create(&common.out)?,
        })
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    fn load(&mut self, dir: &Path) -> CliResult<Dataset> {
        let paths = DatasetPaths::in_dir(dir);
        for p in paths.existing() {
            self.input(p);
        }
        let (dataset, warnings) = data::load_dataset(&paths, &LoadOptions::default())?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        Ok(dataset)
    }

    fn finish(mut self, effective: serde_json::Value, seed: Option<u64>) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            args: self.args,
            inputs: self.inputs,
            config_hash: config_hash(&effective),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at,
            finished_at: now(),
            outputs: self.out.files().to_vec(),
        };
        self.out.write_json("manifest.json", &manifest)
    }
}

fn city_ids(dataset: &Dataset) -> Vec<i64> {
    dataset.cities.cities().iter().map(|c| c.code).collect()
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Number of cities.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of planted blocks (also the fixed regions).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    blocks: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Panel length in weeks.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    weeks: u64,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn generate(a: GenerateArgs, args: Vec<String>) -> CliResult<()> {
    let mut run = Run::start("generate", args, &a.common)?;
    let opts = SyntheticOptions {
        weeks: a.weeks as usize,
        ..SyntheticOptions::new(a.n as usize, a.blocks as usize, a.seed)
    };
    let synthetic = data::generate_synthetic_with(&opts)?;
    let paths = data::write_dataset(&synthetic.dataset, run.out.dir())?;
    for p in paths.existing() {
        run.out.record(&p.file_name().expect("dataset file").to_string_lossy());
    }
    let ids = city_ids(&synthetic.dataset);
    let planted = csv_text("city_id,block", |buf| {
        use std::io::Write;
        ids.iter()
            .zip(&synthetic.planted)
            .try_for_each(|(id, b)| writeln!(buf, "{id},{b}"))
    });
    run.out.write("planted.csv", planted)?;
    run.finish(
        json!({"n": a.n, "blocks": a.blocks, "seed": a.seed, "weeks": a.weeks}),
        Some(a.seed),
    )
}

#[derive(Args)]
pub struct AffinityArgs {
    /// Dataset directory.
    dataset: PathBuf,
    /// Affinity measure: a0, at, c0 or ct.
    #[arg(long, default_value = "a0", value_parser = parse_measure)]
    measure: AffinityKind,
    /// Week for the weekly measures.
    #[arg(long, default_value_t = 0)]
    week: usize,
    /// Damp each flow by the origin city's isolation instead of the destination's.
    #[arg(long)]
    origin_attribution: bool,
    /// Largest cluster count considered by the eigengap ranking.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    max_k: u64,
    #[command(flatten)]
    common: CommonArgs,
}

fn affinity_options(origin: bool) -> AffinityOptions {
    AffinityOptions {
        attribution: if origin {
            IsolationAttribution::Origin
        } else {
            IsolationAttribution::Destination
        },
        ..Default::default()
    }
}

pub fn affinity(a: AffinityArgs, args: Vec<String>) -> CliResult<()> {
    let mut run = Run::start("affinity", args, &a.common)?;
    let dataset = run.load(&a.dataset)?;
    let w = affinity::build(a.measure, &dataset, a.week, &affinity_options(a.origin_attribution))?;
    let mut buf = Vec::new();
    w.write_csv(&mut buf).expect("in-memory write");
    run.out.write("affinity.csv", buf)?;
    let spectrum = full_spectrum(&normalized_laplacian(&w)?)?;
    let mut buf = Vec::new();
    spectrum.write_csv(&mut buf).expect("in-memory write");
    run.out.write("spectrum.csv", buf)?;
    let max_k = (a.max_k as usize).min(dataset.len().saturating_sub(1));
    if max_k >= 2 {
        let gaps = suggest_k(spectrum.eigenvalues(), max_k)?;
        let mut text = String::from("k,ratio\n");
        for g in gaps {
            let _ = writeln!(text, "{},{}", g.k, g.ratio);
        }
        run.out.write("eigengap.csv", text)?;
    }
    run.finish(
        json!({"measure": a.measure.label(), "week": a.week, "origin_attribution": a.origin_attribution, "max_k": a.max_k}),
        None,
    )
}

#[derive(Args)]
pub struct ClusterArgs {
    /// Dataset directory.
    dataset: PathBuf,
    /// Affinity measure: a0, at, c0 or ct.
    #[arg(long, default_value = "a0", value_parser = parse_measure)]
    measure: AffinityKind,
    /// Number of clusters (at least 2).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    k: u64,
    /// Single week for weekly measures; every week when omitted.
    #[arg(long)]
    week: Option<usize>,
    /// k-means restarts.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    restarts: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Damp each flow by the origin city's isolation instead of the destination's.
    #[arg(long)]
    origin_attribution: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Serialize)]
struct ClusterReport<'a> {
    measure: &'static str,
    k: usize,
    reports: &'a [WeeklyReport],
    switches: Vec<Switch>,
}

#[derive(Serialize)]
struct Switch {
    from_week: usize,
    to_week: usize,
    distance: usize,
}

pub fn cluster(a: ClusterArgs, args: Vec<String>) -> CliResult<()> {
    let mut run = Run::start("cluster", args, &a.common)?;
    let dataset = run.load(&a.dataset)?;
    let k = a.k as usize;
    let options = WeeklyOptions {
        affinity: affinity_options(a.origin_attribution),
        clustering: ShiMalikOptions {
            restarts: a.restarts as usize,
            seed: a.seed,
            ..Default::default()
        },
        weeks: a.week.map(|w| vec![w]),
    };
    let result = weekly_partitions(a.measure, &dataset, k, &options)?;
    let ids = city_ids(&dataset);

    let mut partition = String::from("city_id,week,region\n");
    let mut eigen = String::from("week,rank,lambda\n");
    for r in &result.reports {
        for (id, label) in ids.iter().zip(r.report.best.labels()) {
            let _ = writeln!(partition, "{id},{},{label}", r.week);
        }
        for (rank, l) in r.report.eigenvalues.iter().enumerate() {
            let _ = writeln!(eigen, "{},{},{l}", r.week, rank + 1);
        }
    }
    run.out.write("partition.csv", partition)?;
    run.out.write("eigenvalues.csv", eigen)?;
    let switches: Vec<Switch> = result
        .reports
        .windows(2)
        .zip(&result.switches)
        .map(|(pair, &distance)| Switch {
            from_week: pair[0].week,
            to_week: pair[1].week,
            distance,
        })
        .collect();
    if !switches.is_empty() {
        let mut text = String::from("from_week,to_week,distance\n");
        for s in &switches {
            let _ = writeln!(text, "{},{},{}", s.from_week, s.to_week, s.distance);
        }
        run.out.write("switches.csv", text)?;
    }
    run.out.write_json(
        "report.json",
        &ClusterReport {
            measure: a.measure.label(),
            k,
            reports: &result.reports,
            switches,
        },
    )?;
    run.finish(
        json!({"measure": a.measure.label(), "k": k, "week": a.week, "restarts": a.restarts, "seed": a.seed, "origin_attribution": a.origin_attribution}),
        Some(a.seed),
    )
}

#[derive(Args)]
pub struct FlagsArgs {
    /// Dataset directory.
    dataset: PathBuf,
    /// Flag formula (JSON); the bundled default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated weeks, or "all".
    #[arg(long, default_value = "all")]
    weeks: String,
    /// Number of dynamic regions; defaults to the number of fixed regions.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    dynamic_k: Option<u64>,
    /// Affinity measure for the dynamic regions.
    #[arg(long, default_value = "ct", value_parser = parse_measure)]
    measure: AffinityKind,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    restarts: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: CommonArgs,
}

fn parse_weeks(spec: &str, available: usize) -> CliResult<Vec<usize>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok((0..available).collect());
    }
    let weeks = spec
        .split(',')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("--weeks: {w:?} is not a week index")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if let Some(w) = weeks.iter().find(|&&w| w >= available) {
        return Err(CliError::usage(format!(
            "--weeks: week {w} out of range (panel has {available} weeks)"
        )));
    }
    if weeks.is_empty() {
        return Err(CliError::usage("--weeks: no weeks given"));
    }
    Ok(weeks)
}

fn flag_rows(text: &mut String, ids: &[i64], a: &FlagAssignment) {
    for (c, id) in ids.iter().enumerate() {
        let r = a.labels[c];
        let _ = writeln!(
            text,
            "{id},{},{r},{},{}",
            a.week,
            a.city_flags[c].level(),
            a.region_scores[r]
        );
    }
}

#[derive(Serialize)]
struct WeekFlags {
    week: usize,
    static_flags: FlagAssignment,
    dynamic_flags: FlagAssignment,
    comparison: FlagComparison,
}

pub fn flags(a: FlagsArgs, args: Vec<String>) -> CliResult<()> {
    let mut run = Run::start("flags", args, &a.common)?;
    let dataset = run.load(&a.dataset)?;
    let config = match &a.config {
        Some(path) => {
            run.input(path);
            FlagConfig::from_path(path)?
        }
        None => FlagConfig::default_config(),
    };
    let weeks = parse_weeks(&a.weeks, dataset.panel.weeks())?;
    let fixed = Partition::from_labels(&dataset.cities.region_labels());
    let k = a.dynamic_k.map_or(fixed.k(), |k| k as usize);
    let clustering = ShiMalikOptions {
        restarts: a.restarts as usize,
        seed: a.seed,
        ..Default::default()
    };
    let dynamic: Vec<Partition> = if k == 1 {
        vec![Partition::single(dataset.len()); weeks.len()]
    } else if a.measure.is_weekly() {
        let options = WeeklyOptions {
            clustering,
            weeks: Some(weeks.clone()),
            ..Default::default()
        };
        weekly_partitions(a.measure, &dataset, k, &options)?
            .reports
            .into_iter()
            .map(|r| r.report.best)
            .collect()
    } else {
        let w = affinity::build(a.measure, &dataset, 0, &AffinityOptions::default())?;
        vec![shi_malik_with(&w, k, &clustering)?.best; weeks.len()]
    };

    let ids = city_ids(&dataset);
    let header = "city_id,week,region,flag,score\n";
    let (mut static_csv, mut dynamic_csv) = (String::from(header), String::from(header));
    let mut comparison = csv_text(COMPARISON_HEADER, |_| Ok(()));
    let mut summary = String::from("week,lower,higher,same\n");
    let mut report = Vec::new();
    for (&week, dyn_partition) in weeks.iter().zip(&dynamic) {
        let s = flags::flag_partition(&fixed, &dataset, week, &config)?;
        let d = flags::flag_partition(dyn_partition, &dataset, week, &config)?;
        let cmp = flags::compare_assignments(&s, &d)?;
        flag_rows(&mut static_csv, &ids, &s);
        flag_rows(&mut dynamic_csv, &ids, &d);
        flags::write_comparison_rows(&mut comparison, &dataset.cities, &s, &d).expect("in-memory write");
        let _ = writeln!(summary, "{week},{},{},{}", cmp.lower, cmp.higher, cmp.same);
        report.push(WeekFlags {
            week,
            static_flags: s,
            dynamic_flags: d,
            comparison: cmp,
        });
    }
    run.out.write("flags_static.csv", static_csv)?;
    run.out.write("flags_dynamic.csv", dynamic_csv)?;
    run.out.write("comparison.csv", comparison)?;
    run.out.write("summary.csv", summary)?;
    run.out.write_json("flags.json", &report)?;
    run.finish(
        json!({"config": config, "weeks": weeks, "dynamic_k": k, "measure": a.measure.label(), "restarts": a.restarts, "seed": a.seed}),
        Some(a.seed),
    )
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Dataset directory.
    dataset: PathBuf,
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Week whose cases seed the model; overrides the scenario.
    #[arg(long)]
    seed_week: Option<usize>,
    /// Days to simulate; overrides the scenario.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

fn chart(
    trajectory: &Trajectory,
    names: &[String],
    cities: &[usize],
    title: &str,
    y: &str,
    f: impl Fn(usize, usize) -> f64,
) -> LineChart {
    let mut c = LineChart::new(title, "day", y);
    for &city in cities {
        let points = (0..trajectory.len())
            .map(|idx| (trajectory.days[idx].day as f64, f(idx, city)))
            .collect();
        c = c.with_series(&names[city], points);
    }
    c
}

pub fn simulate(a: SimulateArgs, args: Vec<String>) -> CliResult<()> {
    let mut run = Run::start("simulate", args, &a.common)?;
    let dataset = run.load(&a.dataset)?;
    run.input(&a.scenario);
    let scenario = Scenario::from_path(&a.scenario)?;
    let config = scenario.sim_config(a.horizon.map(|h| h as usize))?;
    let seed_week = a.seed_week.or(scenario.seed_week).unwrap_or(0);
    let flow = seir::build_flow_matrix(&dataset.cities, &dataset.mobility)?;
    let profile = InfectivityProfile::triangular();
    let initial = seir::seed_from_cases(&dataset, seed_week, &config)?;
    let policy = scenario.policy(&dataset, seed_week)?;
    let trajectory = seir::simulate(&initial, &flow, &profile, &policy, &config)?;

    let ids = city_ids(&dataset);
    run.out.write(
        "trajectory.csv",
        csv_text(TRAJECTORY_HEADER, |buf| {
            seir::write_trajectory_rows(buf, &dataset.cities, &trajectory)
        }),
    )?;
    let mut summary = String::from("city_id,active_per_100k,cumulative_per_100k\n");
    for (c, id) in ids.iter().enumerate() {
        let _ = writeln!(
            summary,
            "{id},{},{}",
            trajectory.final_active_per_100k(c),
            trajectory.final_cumulative_per_100k(c)
        );
    }
    run.out.write("summary.csv", summary)?;

    if !scenario.levels.is_empty() {
        let rows = seir::isolation_sweep(&initial, &flow, &profile, &scenario.levels, &config)?;
        let mut text = String::from("level,city_id,active_per_100k,cumulative_per_100k\n");
        for r in &rows {
            for (c, id) in ids.iter().enumerate() {
                let _ = writeln!(
                    text,
                    "{},{id},{},{}",
                    r.level, r.active_per_100k[c], r.cumulative_per_100k[c]
                );
            }
            let _ = writeln!(
                text,
                "{},total,{},{}",
                r.level, r.total_active_per_100k, r.total_cumulative_per_100k
            );
        }
        run.out.write("sweep.csv", text)?;
    }

    let names: Vec<String> = dataset.cities.cities().iter().map(|c| c.name.clone()).collect();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(dataset.cities.cities()[c].population));
    order.truncate(PLOTTED_CITIES);
    let stamp = (!a.common.deterministic).then(now);
    let charts = [
        (
            "new_cases.svg",
            chart(&trajectory, &names, &order, "New infections", "people", |idx, c| {
                trajectory.days[idx].new_cases[c].max(0.0)
            }),
        ),
        (
            "active_per_100k.svg",
            chart(&trajectory, &names, &order, "Active cases", "per 100k", |idx, c| {
                trajectory.active_per_100k(idx, c)
            }),
        ),
        (
            "cumulative_per_100k.svg",
            chart(&trajectory, &names, &order, "Cumulative cases", "per 100k", |idx, c| {
                trajectory.cumulative_per_100k(idx, c)
            }),
        ),
    ];
    for (name, c) in charts {
        run.out.write(name, c.render(stamp.as_deref()))?;
    }
    run.finish(
        json!({"scenario": scenario, "config": config, "seed_week": seed_week}),
        None,
    )
}

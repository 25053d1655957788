//! Deterministic discrete-time metapopulation SEIR model.
//!
//! Cities mix during the day according to a commuter [`FlowMatrix`]. Each
//! day's new infections in city `i` are
//!
//! ```text
//! I_new_i(t+1) = R0 · S_i(t) · Σ_j p_ij (1-β*_j)² Σ_{k=t-4..t} τ(k-t+5) I'_new_j(k) / P'_j
//! ```
//!
//! where primed quantities are daytime (commuter-weighted) sums. New
//! infections enter `E`, move to `I` after `incubation_offset + 1` days and
//! to `R` fourteen days after infection.

use std::collections::VecDeque;
use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::affinity::relative_isolation_value;
use crate::data::{CityTable, Dataset, MobilityData, TimeSeriesPanel};
use crate::error::{Error, Result};

/// Days from infection to removal; also the length of the kept history.
pub const DISEASE_DAYS: usize = 14;
/// Relative slack allowed on compartments before declaring blow-up.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;

/// Row-stochastic commuting proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    p: Array2<f64>,
}

impl FlowMatrix {
    pub fn new(p: Array2<f64>) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::invalid("flow matrix must be square"));
        }
        for (i, row) in p.rows().into_iter().enumerate() {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::validation("flow entries must lie in [0,1]", Some(i)));
            }
            if (row.sum() - 1.0).abs() > 1e-12 {
                return Err(Error::validation("flow row does not sum to 1", Some(i)));
            }
        }
        Ok(FlowMatrix { p })
    }

    pub fn identity(n: usize) -> Self {
        FlowMatrix { p: Array2::eye(n) }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Σ_i p_ij x_i` for every `j`.
    fn daytime(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.p[[i, j]] * xi;
            }
        }
        out
    }
}

/// `p_ij = (t_ij + e_ij) / P_i` off the diagonal, residual on it.
pub fn build_flow_matrix(cities: &CityTable, mobility: &MobilityData) -> Result<FlowMatrix> {
    let n = cities.len();
    if mobility.len() != n {
        return Err(Error::invalid("mobility matrices do not match the city table"));
    }
    let pop = cities.populations();
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        let out = mobility.outflow(i);
        if out > pop[i] {
            return Err(Error::validation(
                format!(
                    "commuters ({out}) exceed population ({}) of {}",
                    pop[i],
                    cities.cities()[i].name
                ),
                Some(i),
            ));
        }
        let mut off = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            let v = mobility.total_flow(i, j) / pop[i];
            p[[i, j]] = v;
            off += v;
        }
        p[[i, i]] = (1.0 - off).max(0.0);
    }
    Ok(FlowMatrix { p })
}

/// Transmission weights over the five contagious days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfectivityProfile {
    tau: [f64; 5],
}

impl InfectivityProfile {
    /// `(1, 2, 3, 2, 1) / 9`.
    pub fn triangular() -> Self {
        InfectivityProfile {
            tau: [1.0 / 9.0, 2.0 / 9.0, 3.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0],
        }
    }

    pub fn new(tau: [f64; 5]) -> Result<Self> {
        if tau.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(Error::invalid("infectivity weights must be nonnegative"));
        }
        if (tau.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("infectivity weights must sum to 1"));
        }
        if (tau[0] - tau[4]).abs() > 1e-12 || (tau[1] - tau[3]).abs() > 1e-12 {
            return Err(Error::invalid("infectivity weights must be symmetric about day 3"));
        }
        Ok(InfectivityProfile { tau })
    }

    /// `τ(k)` for `k` in `1..=5`; zero elsewhere.
    pub fn weight(&self, k: usize) -> f64 {
        if (1..=5).contains(&k) {
            self.tau[k - 1]
        } else {
            0.0
        }
    }
}

impl Default for InfectivityProfile {
    fn default() -> Self {
        Self::triangular()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IsolationPolicy {
    /// `β* = 0` everywhere.
    None,
    /// The same `β*` in every city on every day.
    Constant(f64),
    /// A fixed `β*` per city.
    PerCity(Vec<f64>),
    /// Weekly relative isolation from the panel, `weekly[[city, week]]`,
    /// starting at `start_week` and held at the last week afterwards.
    Actual { weekly: Array2<f64>, start_week: usize },
}

impl IsolationPolicy {
    pub fn constant(level: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::invalid(format!("isolation level {level} outside [0,1]")));
        }
        Ok(IsolationPolicy::Constant(level))
    }

    pub fn per_city(levels: Vec<f64>) -> Result<Self> {
        if let Some(i) = levels.iter().position(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::validation("isolation level outside [0,1]", Some(i)));
        }
        Ok(IsolationPolicy::PerCity(levels))
    }

    /// Relative isolation from the panel, week `start_week` onwards.
    pub fn actual(panel: &TimeSeriesPanel, start_week: usize) -> Result<Self> {
        let iso = panel.isolation()?;
        let base = panel.baseline_isolation()?;
        panel.check_week(start_week)?;
        let weekly = Array2::from_shape_fn(iso.dim(), |(i, w)| relative_isolation_value(iso[[i, w]], base[i]));
        Ok(IsolationPolicy::Actual { weekly, start_week })
    }

    /// `β*_city` on simulation day `day` (0 = seed day).
    pub fn level(&self, city: usize, day: usize) -> f64 {
        match self {
            IsolationPolicy::None => 0.0,
            IsolationPolicy::Constant(l) => *l,
            IsolationPolicy::PerCity(v) => v[city],
            IsolationPolicy::Actual { weekly, start_week } => {
                let week = (start_week + day / 7).min(weekly.ncols() - 1);
                weekly[[city, week]]
            }
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            IsolationPolicy::PerCity(v) if v.len() != n => Err(Error::invalid(format!(
                "policy covers {} cities, model has {n}",
                v.len()
            ))),
            IsolationPolicy::Actual { weekly, .. } if weekly.nrows() != n => Err(Error::invalid(format!(
                "policy covers {} cities, model has {n}",
                weekly.nrows()
            ))),
            _ => Ok(()),
        }
    }
}

fn default_r0() -> f64 {
    2.4
}
fn default_meetings() -> f64 {
    25.0
}
fn default_incubation() -> usize {
    4
}
fn default_infectious() -> usize {
    5
}
fn default_convalescent() -> usize {
    5
}
fn default_horizon() -> usize {
    44
}
fn default_seed_fraction() -> f64 {
    0.1
}
fn default_offset() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Daily contacts `L`. It cancels out of the recurrences and is kept for
    /// reference only.
    #[serde(default = "default_meetings")]
    pub meetings: f64,
    #[serde(default = "default_incubation")]
    pub incubation_days: usize,
    #[serde(default = "default_infectious")]
    pub infectious_days: usize,
    #[serde(default = "default_convalescent")]
    pub convalescent_days: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Daily new infections before the seed day, as a fraction of active cases.
    #[serde(default = "default_seed_fraction")]
    pub seed_fraction: f64,
    /// `E` loses and `I` gains the infections of day `t - incubation_offset`.
    #[serde(default = "default_offset")]
    pub incubation_offset: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            r0: default_r0(),
            meetings: default_meetings(),
            incubation_days: default_incubation(),
            infectious_days: default_infectious(),
            convalescent_days: default_convalescent(),
            horizon: default_horizon(),
            seed_fraction: default_seed_fraction(),
            incubation_offset: default_offset(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r0.is_finite() && self.r0 >= 0.0) {
            return Err(Error::Config(format!("r0 must be nonnegative, got {}", self.r0)));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.seed_fraction) {
            return Err(Error::Config("seed_fraction must lie in [0,1]".into()));
        }
        if self.incubation_offset >= DISEASE_DAYS - 1 {
            return Err(Error::Config(format!(
                "incubation_offset must be below {}",
                DISEASE_DAYS - 1
            )));
        }
        Ok(())
    }
}

/// Compartments per city plus the last fourteen days of new infections.
#[derive(Debug, Clone, PartialEq)]
pub struct SeirState {
    pub day: usize,
    pub population: Vec<f64>,
    pub s: Vec<f64>,
    pub e: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
    /// `history[0]` is day `day - 13`, `history[13]` is day `day`.
    history: VecDeque<Vec<f64>>,
}

impl SeirState {
    pub fn disease_free(population: Vec<f64>) -> Result<Self> {
        let n = population.len();
        Self::from_history(population, vec![vec![0.0; n]; DISEASE_DAYS], vec![0.0; n], 2)
    }

    /// State implied by a new-infection history (oldest first, at most
    /// fourteen days, the last entry being today) and removed counts. `E`
    /// and `I` are derived from the history with the given offset.
    pub fn from_history(
        population: Vec<f64>,
        history: Vec<Vec<f64>>,
        removed: Vec<f64>,
        incubation_offset: usize,
    ) -> Result<Self> {
        let n = population.len();
        if let Some(i) = population.iter().position(|&p| !(p.is_finite() && p > 0.0)) {
            return Err(Error::validation("population must be positive", Some(i)));
        }
        if history.len() > DISEASE_DAYS {
            return Err(Error::invalid(format!("history longer than {DISEASE_DAYS} days")));
        }
        if removed.len() != n || history.iter().any(|h| h.len() != n) {
            return Err(Error::invalid("history and removed counts must cover every city"));
        }
        if incubation_offset >= DISEASE_DAYS - 1 {
            return Err(Error::invalid("incubation offset too large"));
        }
        let mut hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(DISEASE_DAYS + 1);
        for _ in history.len()..DISEASE_DAYS {
            hist.push_back(vec![0.0; n]);
        }
        hist.extend(history);
        let mut e = vec![0.0; n];
        let mut i_ = vec![0.0; n];
        for (idx, day) in hist.iter().enumerate() {
            let lag = DISEASE_DAYS - 1 - idx;
            for c in 0..n {
                if day[c] < 0.0 || !day[c].is_finite() {
                    return Err(Error::validation("new infections must be nonnegative", Some(c)));
                }
                if lag <= incubation_offset {
                    e[c] += day[c];
                } else {
                    i_[c] += day[c];
                }
            }
        }
        let mut s = vec![0.0; n];
        for c in 0..n {
            s[c] = population[c] - e[c] - i_[c] - removed[c];
            if s[c] < -NEGATIVE_TOLERANCE * population[c] || removed[c] < 0.0 {
                return Err(Error::validation("seeded compartments exceed population", Some(c)));
            }
        }
        Ok(SeirState {
            day: 0,
            population,
            s,
            e,
            i: i_,
            r: removed,
            history: hist,
        })
    }

    pub fn len(&self) -> usize {
        self.population.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// New infections `lag` days before today (`lag` < 14).
    pub fn new_infections(&self, lag: usize) -> &[f64] {
        &self.history[DISEASE_DAYS - 1 - lag]
    }

    /// Largest `|S+E+I+R - P| / P` over cities.
    pub fn conservation_error(&self) -> f64 {
        (0..self.len())
            .map(|c| (self.s[c] + self.e[c] + self.i[c] + self.r[c] - self.population[c]).abs() / self.population[c])
            .fold(0.0, f64::max)
    }
}

/// Daytime (commuter-weighted) populations and compartments.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePopulations {
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub e: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
    /// `new_infections[lag][j]`, same convention as [`SeirState::new_infections`].
    pub new_infections: Vec<Vec<f64>>,
}

pub fn effective_populations(flow: &FlowMatrix, state: &SeirState) -> EffectivePopulations {
    EffectivePopulations {
        p: flow.daytime(&state.population),
        s: flow.daytime(&state.s),
        e: flow.daytime(&state.e),
        i: flow.daytime(&state.i),
        r: flow.daytime(&state.r),
        new_infections: (0..DISEASE_DAYS)
            .map(|lag| flow.daytime(state.new_infections(lag)))
            .collect(),
    }
}

/// Per-resident infection hazard `λ_i` with `I_new_i(t+1) = S_i λ_i`, from an
/// arbitrary history (today last).
fn hazard(
    history: &VecDeque<Vec<f64>>,
    daytime_pop: &[f64],
    flow: &FlowMatrix,
    profile: &InfectivityProfile,
    policy: &IsolationPolicy,
    day: usize,
    r0: f64,
) -> Vec<f64> {
    let n = flow.len();
    let mut pressure = vec![0.0; n];
    for lag in 0..5 {
        let tau = profile.weight(5 - lag);
        let daytime = flow.daytime(&history[DISEASE_DAYS - 1 - lag]);
        for (p, d) in pressure.iter_mut().zip(daytime) {
            *p += tau * d;
        }
    }
    for (j, p) in pressure.iter_mut().enumerate() {
        let damp = (1.0 - policy.level(j, day)).powi(2);
        *p = if daytime_pop[j] > 0.0 {
            damp * *p / daytime_pop[j]
        } else {
            0.0
        };
    }
    let m = flow.matrix();
    (0..n)
        .map(|i| r0 * (0..n).map(|j| m[[i, j]] * pressure[j]).sum::<f64>())
        .collect()
}

fn advance(state: &SeirState, new: Vec<f64>, offset: usize) -> Result<SeirState> {
    let n = state.len();
    let maturing = state.new_infections(offset).to_vec();
    let removed = state.new_infections(DISEASE_DAYS - 1).to_vec();
    let mut next = state.clone();
    for c in 0..n {
        next.s[c] -= new[c];
        next.e[c] += new[c] - maturing[c];
        next.i[c] += maturing[c] - removed[c];
        next.r[c] += removed[c];
        let floor = -NEGATIVE_TOLERANCE * state.population[c];
        if next.s[c] < floor || next.e[c] < floor || next.i[c] < floor {
            return Err(Error::Numerical(format!(
                "negative compartment in city {c} on day {}",
                state.day + 1
            )));
        }
    }
    next.history.pop_front();
    next.history.push_back(new);
    next.day += 1;
    Ok(next)
}

/// One day of the recurrences.
pub fn step(
    state: &SeirState,
    flow: &FlowMatrix,
    profile: &InfectivityProfile,
    policy: &IsolationPolicy,
    config: &SimConfig,
) -> Result<SeirState> {
    if flow.len() != state.len() {
        return Err(Error::invalid("flow matrix and state cover different cities"));
    }
    policy.check(state.len())?;
    let daytime_pop = flow.daytime(&state.population);
    let lambda = hazard(
        &state.history,
        &daytime_pop,
        flow,
        profile,
        policy,
        state.day,
        config.r0,
    );
    let new = state.s.iter().zip(&lambda).map(|(s, l)| s * l).collect();
    advance(state, new, config.incubation_offset)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub day: usize,
    pub s: Vec<f64>,
    pub e: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
    pub new_cases: Vec<f64>,
}

impl DayRecord {
    fn of(state: &SeirState) -> Self {
        DayRecord {
            day: state.day,
            s: state.s.clone(),
            e: state.e.clone(),
            i: state.i.clone(),
            r: state.r.clone(),
            new_cases: state.new_infections(0).to_vec(),
        }
    }
}

/// Daily records for days `1..=horizon` after the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub population: Vec<f64>,
    pub initial: DayRecord,
    pub days: Vec<DayRecord>,
}

fn per_100k(x: f64, p: f64) -> f64 {
    x.max(0.0) / p * 1e5
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Active cases (`I`) of `city` on record `idx`, per 100k.
    pub fn active_per_100k(&self, idx: usize, city: usize) -> f64 {
        per_100k(self.days[idx].i[city], self.population[city])
    }

    /// Everyone ever infected (`P - S`) per 100k.
    pub fn cumulative_per_100k(&self, idx: usize, city: usize) -> f64 {
        per_100k(self.population[city] - self.days[idx].s[city], self.population[city])
    }

    pub fn final_active_per_100k(&self, city: usize) -> f64 {
        self.active_per_100k(self.len() - 1, city)
    }

    pub fn final_cumulative_per_100k(&self, city: usize) -> f64 {
        self.cumulative_per_100k(self.len() - 1, city)
    }

    /// Totals over all cities per 100k inhabitants, at the last day.
    pub fn final_totals_per_100k(&self) -> (f64, f64) {
        let last = self.days.last().expect("trajectory is non-empty");
        let p: f64 = self.population.iter().sum();
        let active: f64 = last.i.iter().map(|x| x.max(0.0)).sum();
        let cum: f64 = self.population.iter().zip(&last.s).map(|(p, s)| (p - s).max(0.0)).sum();
        (active / p * 1e5, cum / p * 1e5)
    }

    /// Largest relative deviation of `S+E+I+R` from `P` over all records.
    pub fn conservation_error(&self) -> f64 {
        std::iter::once(&self.initial)
            .chain(&self.days)
            .flat_map(|d| {
                (0..self.population.len())
                    .map(move |c| (d.s[c] + d.e[c] + d.i[c] + d.r[c] - self.population[c]).abs() / self.population[c])
            })
            .fold(0.0, f64::max)
    }
}

pub fn simulate(
    initial: &SeirState,
    flow: &FlowMatrix,
    profile: &InfectivityProfile,
    policy: &IsolationPolicy,
    config: &SimConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let mut state = initial.clone();
    let mut days = Vec::with_capacity(config.horizon);
    for _ in 0..config.horizon {
        state = step(&state, flow, profile, policy, config)?;
        days.push(DayRecord::of(&state));
    }
    Ok(Trajectory {
        population: initial.population.clone(),
        initial: DayRecord::of(initial),
        days,
    })
}

/// Seeds from weekly new cases: active cases `A` (this week plus last week)
/// fill `I`; the five days up to the seed day get `seed_fraction · A` new
/// infections each; the older history days share the rest of `A` evenly;
/// earlier cases are removed.
pub fn seed_from_cases(dataset: &Dataset, week: usize, config: &SimConfig) -> Result<SeirState> {
    config.validate()?;
    let panel = &dataset.panel;
    let cases = panel.cases()?;
    panel.check_week(week)?;
    let population = dataset.cities.populations();
    let n = population.len();
    let offset = config.incubation_offset;
    let mut history = vec![vec![0.0; n]; DISEASE_DAYS];
    let mut removed = vec![0.0; n];
    // history index: 0 is 13 days ago, 13 is today
    let recent = DISEASE_DAYS - 5..DISEASE_DAYS;
    let infected_days = 0..DISEASE_DAYS - 1 - offset;
    let recent_infected = infected_days.clone().filter(|d| recent.contains(d)).count();
    let older_infected = infected_days.len() - recent_infected;
    for c in 0..n {
        let active = cases[[c, week]] + if week > 0 { cases[[c, week - 1]] } else { 0.0 };
        let cumulative: f64 = (0..=week).map(|w| cases[[c, w]]).sum();
        if active > population[c] {
            return Err(Error::validation(
                format!("active cases ({active}) exceed population at week {week}"),
                Some(c),
            ));
        }
        let daily = config.seed_fraction * active;
        let older = if older_infected > 0 {
            ((active - recent_infected as f64 * daily) / older_infected as f64).max(0.0)
        } else {
            0.0
        };
        for (d, h) in history.iter_mut().enumerate() {
            h[c] = if recent.contains(&d) { daily } else { older };
        }
        let infected: f64 = infected_days.clone().map(|d| history[d][c]).sum();
        removed[c] = (cumulative - active.max(infected)).max(0.0);
    }
    SeirState::from_history(population, history, removed, offset)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub level: f64,
    pub active_per_100k: Vec<f64>,
    pub cumulative_per_100k: Vec<f64>,
    pub total_active_per_100k: f64,
    pub total_cumulative_per_100k: f64,
}

fn sweep_row(
    initial: &SeirState,
    flow: &FlowMatrix,
    profile: &InfectivityProfile,
    level: f64,
    config: &SimConfig,
) -> Result<SweepRow> {
    let t = simulate(initial, flow, profile, &IsolationPolicy::Constant(level), config)?;
    let n = initial.len();
    let (total_active_per_100k, total_cumulative_per_100k) = t.final_totals_per_100k();
    Ok(SweepRow {
        level,
        active_per_100k: (0..n).map(|c| t.final_active_per_100k(c)).collect(),
        cumulative_per_100k: (0..n).map(|c| t.final_cumulative_per_100k(c)).collect(),
        total_active_per_100k,
        total_cumulative_per_100k,
    })
}

/// End-of-horizon outcomes for each constant isolation level, sorted by level.
pub fn isolation_sweep(
    initial: &SeirState,
    flow: &FlowMatrix,
    profile: &InfectivityProfile,
    levels: &[f64],
    config: &SimConfig,
) -> Result<Vec<SweepRow>> {
    if let Some(l) = levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::invalid(format!("isolation level {l} outside [0,1]")));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        sorted
            .par_iter()
            .map(|&l| sweep_row(initial, flow, profile, l, config))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sorted
            .iter()
            .map(|&l| sweep_row(initial, flow, profile, l, config))
            .collect()
    }
}

/// Total size of successive infection generations.
///
/// The simulation runs as usual, but each day's new infections are split
/// by the generation of the cases that produced them: the hazard is linear
/// in the history, so the split is exact. Generation 0 is the initial
/// history.
pub fn generation_sizes(
    initial: &SeirState,
    flow: &FlowMatrix,
    profile: &InfectivityProfile,
    policy: &IsolationPolicy,
    config: &SimConfig,
    generations: usize,
) -> Result<Vec<f64>> {
    config.validate()?;
    policy.check(initial.len())?;
    let n = initial.len();
    let daytime_pop = flow.daytime(&initial.population);
    let zero = || -> VecDeque<Vec<f64>> { (0..DISEASE_DAYS).map(|_| vec![0.0; n]).collect() };
    let mut by_gen: Vec<VecDeque<Vec<f64>>> = vec![initial.history.clone()];
    by_gen.extend((0..generations).map(|_| zero()));
    let mut sizes = vec![0.0; generations + 1];
    sizes[0] = initial.history.iter().flatten().sum();
    // every case of generation g is at most 5g days after the seed day
    let days = 5 * (generations + 1);
    let mut state = initial.clone();
    for _ in 0..days {
        let mut next_new = vec![vec![0.0; n]; generations + 1];
        for g in 0..generations {
            let lambda = hazard(&by_gen[g], &daytime_pop, flow, profile, policy, state.day, config.r0);
            for c in 0..n {
                next_new[g + 1][c] = state.s[c] * lambda[c];
            }
        }
        let total: Vec<f64> = (0..n).map(|c| next_new.iter().map(|v| v[c]).sum()).collect();
        for (g, new) in next_new.into_iter().enumerate() {
            sizes[g] += if g > 0 { new.iter().sum::<f64>() } else { 0.0 };
            by_gen[g].pop_front();
            by_gen[g].push_back(new);
        }
        state = advance(&state, total, config.incubation_offset)?;
    }
    Ok(sizes)
}

pub const TRAJECTORY_HEADER: &str = "city_id,day,S,E,I,R,new_cases,active_per_100k,cumulative_per_100k";

/// One row per city and day, negatives clamped to zero.
pub fn write_trajectory_rows<W: Write>(
    out: &mut W,
    cities: &CityTable,
    trajectory: &Trajectory,
) -> std::io::Result<()> {
    for (c, city) in cities.cities().iter().enumerate() {
        for (idx, d) in trajectory.days.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                city.code,
                d.day,
                d.s[c].max(0.0),
                d.e[c].max(0.0),
                d.i[c].max(0.0),
                d.r[c].max(0.0),
                d.new_cases[c].max(0.0),
                trajectory.active_per_100k(idx, c),
                trajectory.cumulative_per_100k(idx, c)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::City;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn cities(pops: &[u64]) -> CityTable {
        CityTable::new(
            pops.iter()
                .enumerate()
                .map(|(i, &p)| City {
                    code: i as i64 + 1,
                    name: format!("c{i}"),
                    population: p,
                    lat: 0.0,
                    lon: 0.0,
                    region: 0,
                })
                .collect(),
        )
        .unwrap()
    }

    fn mobility(flows: Array2<f64>) -> MobilityData {
        let n = flows.nrows();
        let d = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { 5.0 });
        MobilityData::new(flows, Array2::zeros((n, n)), d).unwrap()
    }

    fn impulse(pop: f64, seed: f64) -> SeirState {
        let mut h = vec![vec![0.0]; DISEASE_DAYS];
        h[DISEASE_DAYS - 1][0] = seed;
        SeirState::from_history(vec![pop], h, vec![0.0], 2).unwrap()
    }

    #[test]
    fn flow_matrix() {
        let f = build_flow_matrix(&cities(&[100, 50]), &mobility(array![[0.0, 20.0], [0.0, 0.0]])).unwrap();
        assert_eq!(f.matrix(), &array![[0.8, 0.2], [0.0, 1.0]]);
        let f = build_flow_matrix(&cities(&[100, 50, 70]), &mobility(Array2::zeros((3, 3)))).unwrap();
        assert_eq!(f.matrix(), &Array2::<f64>::eye(3));
    }

    #[test]
    fn flow_rejects_excess_commuters() {
        let err = build_flow_matrix(&cities(&[10, 50]), &mobility(array![[0.0, 20.0], [0.0, 0.0]])).unwrap_err();
        assert!(err.to_string().contains("c0"), "{err}");
    }

    #[test]
    fn triangular_profile() {
        let p = InfectivityProfile::triangular();
        let w: Vec<f64> = (0..=6).map(|k| p.weight(k)).collect();
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[6], 0.0);
        assert_eq!(w[3], 3.0 / 9.0);
        assert!(InfectivityProfile::new([0.5, 0.5, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn daytime_populations() {
        let state = SeirState::disease_free(vec![100.0, 300.0]).unwrap();
        let id = effective_populations(&FlowMatrix::identity(2), &state);
        assert_eq!(id.p, state.population);
        assert_eq!(id.s, state.s);
        // everyone in city 0 commutes to city 1
        let f = FlowMatrix::new(array![[0.0, 1.0], [0.25, 0.75]]).unwrap();
        let e = effective_populations(&f, &state);
        assert_eq!(e.p, vec![75.0, 100.0 + 0.75 * 300.0]);
        assert_eq!(e.p.iter().sum::<f64>(), 400.0);
    }

    #[test]
    fn disease_free_fixed_point() {
        let s0 = SeirState::disease_free(vec![1e5, 2e5]).unwrap();
        let f = FlowMatrix::new(array![[0.9, 0.1], [0.05, 0.95]]).unwrap();
        let s1 = step(
            &s0,
            &f,
            &InfectivityProfile::triangular(),
            &IsolationPolicy::None,
            &SimConfig::default(),
        )
        .unwrap();
        assert_eq!(s1.day, 1);
        assert_eq!(
            (s1.s.clone(), s1.e.clone(), s1.i.clone(), s1.r.clone()),
            (s0.s, s0.e, s0.i, s0.r)
        );
    }

    #[test]
    fn full_isolation_stops_transmission() {
        let mut h = vec![vec![10.0, 3.0]; DISEASE_DAYS];
        h[0] = vec![0.0, 0.0];
        let s0 = SeirState::from_history(vec![1e5, 1e5], h, vec![0.0, 0.0], 2).unwrap();
        let f = FlowMatrix::new(array![[0.9, 0.1], [0.05, 0.95]]).unwrap();
        let s1 = step(
            &s0,
            &f,
            &InfectivityProfile::triangular(),
            &IsolationPolicy::Constant(1.0),
            &SimConfig::default(),
        )
        .unwrap();
        assert_eq!(s1.new_infections(0), &[0.0, 0.0]);
    }

    /// One step for a single city, evaluated by hand.
    #[test]
    fn single_step_golden() {
        let p = 1e6;
        // today-4 .. today: 1, 2, 4, 8, 16
        let mut h = vec![vec![0.0]; DISEASE_DAYS];
        for (k, v) in [1.0, 2.0, 4.0, 8.0, 16.0].into_iter().enumerate() {
            h[9 + k][0] = v;
        }
        let s0 = SeirState::from_history(vec![p], h, vec![0.0], 2).unwrap();
        assert_eq!(s0.s[0], p - 31.0);
        assert_eq!(s0.e[0], 28.0);
        assert_eq!(s0.i[0], 3.0);
        let s1 = step(
            &s0,
            &FlowMatrix::identity(1),
            &InfectivityProfile::triangular(),
            &IsolationPolicy::None,
            &SimConfig::default(),
        )
        .unwrap();
        // τ(1..5) applied oldest to newest: (1 + 4 + 12 + 16 + 16) / 9 = 49/9
        let expected = 2.4 * (p - 31.0) * (49.0 / 9.0) / p;
        assert_abs_diff_eq!(s1.new_infections(0)[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(s1.s[0], p - 31.0 - expected, epsilon = 1e-9);
        // E gains today's infections and loses day t-2 (4); I gains 4
        assert_abs_diff_eq!(s1.e[0], 28.0 + expected - 4.0, epsilon = 1e-12);
        assert_eq!(s1.i[0], 7.0);
        assert_eq!(s1.r[0], 0.0);
    }

    #[test]
    fn flat_without_infections() {
        let s0 = SeirState::disease_free(vec![5e4, 7e4]).unwrap();
        let f = FlowMatrix::new(array![[0.8, 0.2], [0.1, 0.9]]).unwrap();
        let t = simulate(
            &s0,
            &f,
            &InfectivityProfile::triangular(),
            &IsolationPolicy::None,
            &SimConfig {
                horizon: 30,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(t.len(), 30);
        assert!(t.days.iter().all(|d| d.s == s0.s && d.new_cases == vec![0.0, 0.0]));
    }

    #[test]
    fn symmetric_cities_identical() {
        let mut h = vec![vec![0.0, 0.0]; DISEASE_DAYS];
        h[DISEASE_DAYS - 1] = vec![5.0, 5.0];
        let s0 = SeirState::from_history(vec![1e5, 1e5], h, vec![0.0, 0.0], 2).unwrap();
        let t = simulate(
            &s0,
            &FlowMatrix::identity(2),
            &InfectivityProfile::triangular(),
            &IsolationPolicy::None,
            &SimConfig {
                horizon: 60,
                ..Default::default()
            },
        )
        .unwrap();
        for d in &t.days {
            assert_eq!(d.s[0], d.s[1]);
            assert_eq!(d.i[0], d.i[1]);
        }
        assert!(t.conservation_error() <= 1e-9);
    }

    #[test]
    fn generation_ratio_is_r0() {
        let s0 = impulse(1e7, 10.0);
        let sizes = generation_sizes(
            &s0,
            &FlowMatrix::identity(1),
            &InfectivityProfile::triangular(),
            &IsolationPolicy::None,
            &SimConfig::default(),
            4,
        )
        .unwrap();
        for g in 0..3 {
            let ratio = sizes[g + 1] / sizes[g];
            assert!((ratio - 2.4).abs() / 2.4 < 1e-3, "generation {g}: {ratio}");
        }
    }

    #[test]
    fn seed_example() {
        // 60 + 40 = 100 active at week 1
        let ds = Dataset::new(
            cities(&[100_000]),
            mobility(Array2::zeros((1, 1))),
            TimeSeriesPanel::new(2).with_cases(array![[40.0, 60.0]]).unwrap(),
        )
        .unwrap();
        let s = seed_from_cases(&ds, 1, &SimConfig::default()).unwrap();
        for lag in 0..5 {
            assert_eq!(s.new_infections(lag), &[10.0]);
        }
        assert_abs_diff_eq!(s.i[0], 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.e[0], 30.0, epsilon = 1e-12);
        assert_eq!(s.r[0], 0.0);
        assert!(s.conservation_error() < 1e-15);
        let s0 = seed_from_cases(&ds, 0, &SimConfig::default()).unwrap();
        assert_abs_diff_eq!(s0.i[0], 40.0, epsilon = 1e-12);
    }

    #[test]
    fn seed_zero_cases_is_disease_free() {
        let ds = Dataset::new(
            cities(&[20_000, 30_000]),
            mobility(Array2::zeros((2, 2))),
            TimeSeriesPanel::new(1).with_cases(array![[0.0], [0.0]]).unwrap(),
        )
        .unwrap();
        let s = seed_from_cases(&ds, 0, &SimConfig::default()).unwrap();
        assert_eq!(s, SeirState::disease_free(vec![20_000.0, 30_000.0]).unwrap());
    }

    #[test]
    fn seed_rejects_excess() {
        let ds = Dataset::new(
            cities(&[20_000]),
            mobility(Array2::zeros((1, 1))),
            TimeSeriesPanel::new(1).with_cases(array![[25_000.0]]).unwrap(),
        )
        .unwrap();
        assert!(seed_from_cases(&ds, 0, &SimConfig::default()).is_err());
    }

    #[test]
    fn full_isolation_sweep_keeps_seed() {
        let s0 = impulse(1e5, 50.0);
        let rows = isolation_sweep(
            &s0,
            &FlowMatrix::identity(1),
            &InfectivityProfile::triangular(),
            &[1.0, 0.0, 0.5],
            &SimConfig::default(),
        )
        .unwrap();
        assert_eq!(rows.iter().map(|r| r.level).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_abs_diff_eq!(rows[2].cumulative_per_100k[0], 50.0, epsilon = 1e-9);
        assert!(rows[0].cumulative_per_100k[0] >= rows[1].cumulative_per_100k[0]);
        assert!(isolation_sweep(
            &s0,
            &FlowMatrix::identity(1),
            &InfectivityProfile::triangular(),
            &[1.5],
            &SimConfig::default()
        )
        .is_err());
    }

    #[test]
    fn actual_policy_weeks() {
        let panel = TimeSeriesPanel::new(3)
            .with_isolation(array![[0.5, 0.6, 0.7]], ndarray::arr1(&[0.5]))
            .unwrap();
        let p = IsolationPolicy::actual(&panel, 1).unwrap();
        assert_abs_diff_eq!(p.level(0, 0), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(p.level(0, 6), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(p.level(0, 7), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(p.level(0, 100), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn blow_up_is_an_error() {
        let s0 = impulse(100.0, 90.0);
        let cfg = SimConfig {
            r0: 50.0,
            horizon: 10,
            ..Default::default()
        };
        let err = simulate(
            &s0,
            &FlowMatrix::identity(1),
            &InfectivityProfile::triangular(),
            &IsolationPolicy::None,
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn config_json_defaults() {
        let c: SimConfig = serde_json::from_str(r#"{"horizon": 10}"#).unwrap();
        assert_eq!(c.r0, 2.4);
        assert_eq!(c.incubation_offset, 2);
        assert!(serde_json::from_str::<SimConfig>(r#"{"horizn": 10}"#).is_err());
        assert!(SimConfig {
            horizon: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}

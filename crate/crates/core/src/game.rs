//! Day-by-day engine for the m-stop game.
//!
//! Each day runs in synchronized stop rounds. In round `z` every agent that
//! is still unserved walks to the `z`-th restaurant of its tour. A restaurant
//! that is reserved, or already serving someone today, turns arrivals away;
//! otherwise one arrival chosen uniformly at random is served. Winners keep
//! their restaurant for the rest of the game. In the evening every unserved
//! agent plans a fresh tour over the restaurants that are still vacant.
//!
//! Restaurant and agent ids are 0-based. Preference rankings use the TSP
//! convention (`1..=n`), so ranking entry `r` denotes restaurant `r - 1`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::spatial::{self, Point, SpatialError};
use crate::tsp::{self, PreferenceRanking, TspError};

pub const DEFAULT_MAX_DAYS: u32 = 64;
pub const DEFAULT_TSP_BUDGET: u64 = 20_000;

// Sub-stream indices under the game seed.
const STREAM_RESTAURANTS: u64 = 0;
const STREAM_STARTS: u64 = 1;
const STREAM_PREFS: u64 = 2;
const STREAM_INITIAL_TOURS: u64 = 3;
const STREAM_DAYS: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
    #[error("no active agents left to play a day")]
    NoActiveAgents,
    #[error("inconsistent game state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Tsp(#[from] TspError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TourPolicy {
    /// Personalized TSP solved by variable neighbourhood search.
    #[serde(alias = "tsp")]
    MetaheuristicTsp,
    /// Uniformly random permutation of the vacant restaurants.
    #[serde(alias = "random")]
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Every agent starts at the centre of the city.
    Concentrated,
    /// Starting points drawn uniformly, independent of the restaurants.
    Uniform,
}

/// How a day's outcome is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// Agents walk their stops; collisions and same-day occupancy reject.
    Behavioral,
    /// A vacant restaurant counts as utilized when it appears among the first
    /// `m` positions of any active tour.
    #[serde(alias = "counting")]
    AnalyticCounting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    /// Number of agents, equal to the number of restaurants.
    pub n: usize,
    /// Stops per day.
    pub m: usize,
    pub tour_policy: TourPolicy,
    pub placement: Placement,
    /// Weight of the preference term in personal TSP costs.
    pub lambda: f64,
    pub seed: u64,
    pub max_days: u32,
    /// Move evaluations granted to each metaheuristic solve.
    pub tsp_budget: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig::new(100, 2)
    }
}

impl GameConfig {
    pub fn new(n: usize, m: usize) -> Self {
        GameConfig {
            n,
            m,
            tour_policy: TourPolicy::UniformRandom,
            placement: Placement::Uniform,
            lambda: tsp::DEFAULT_LAMBDA,
            seed: 0,
            max_days: DEFAULT_MAX_DAYS,
            tsp_budget: DEFAULT_TSP_BUDGET,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_policy(mut self, policy: TourPolicy) -> Self {
        self.tour_policy = policy;
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let bad = |msg: String| Err(GameError::InvalidConfig(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.m == 0 || self.m > self.n {
            return bad(format!("m = {} must lie in 1..={}", self.m, self.n));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda = {} must lie in [0, 1]", self.lambda));
        }
        if self.max_days == 0 {
            return bad("max_days must be at least 1".into());
        }
        if self.tsp_budget == 0 {
            return bad("tsp_budget must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AgentStatus {
    /// Still looking; the tour lists restaurant ids in visit order.
    Active { tour: Vec<usize> },
    Satisfied { restaurant: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub start: Point,
    pub prefs: PreferenceRanking,
    #[serde(flatten)]
    pub status: AgentStatus,
}

impl AgentState {
    pub fn is_active(&self) -> bool {
        matches!(self.status, AgentStatus::Active { .. })
    }

    pub fn tour(&self) -> Option<&[usize]> {
        match &self.status {
            AgentStatus::Active { tour } => Some(tour),
            AgentStatus::Satisfied { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RestaurantStatus {
    Vacant,
    Reserved { agent: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestaurantState {
    pub id: usize,
    pub location: Point,
    #[serde(flatten)]
    pub status: RestaurantStatus,
}

impl RestaurantState {
    pub fn is_vacant(&self) -> bool {
        self.status == RestaurantStatus::Vacant
    }
}

/// Outcome of one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayLog {
    pub day: u32,
    pub active_at_start: usize,
    pub served_today: usize,
    pub still_unserved: usize,
    /// Fraction of all agents served on or before this day.
    pub cumulative_utilization: f64,
    /// Agents served at each stop (length `m`).
    pub per_stop_services: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub config: GameConfig,
    pub agents: Vec<AgentState>,
    pub restaurants: Vec<RestaurantState>,
    /// Days played so far.
    pub day: u32,
}

/// Fresh game: uniform restaurants, agents placed per the configured mode,
/// random preferences, and day-one tours over every restaurant.
pub fn new_game(config: GameConfig) -> Result<GameState, GameError> {
    config.validate()?;
    let n = config.n;
    let locations = spatial::sample_uniform_points(n, seed::derive(config.seed, STREAM_RESTAURANTS))?;
    let starts = match config.placement {
        Placement::Concentrated => vec![Point::center(); n],
        Placement::Uniform => spatial::sample_uniform_points(n, seed::derive(config.seed, STREAM_STARTS))?,
    };
    let mut pref_rng = seed::rng_from(seed::derive(config.seed, STREAM_PREFS));
    let agents = starts
        .into_iter()
        .enumerate()
        .map(|(id, start)| AgentState {
            id,
            start,
            prefs: PreferenceRanking::random(n, &mut pref_rng),
            status: AgentStatus::Active { tour: Vec::new() },
        })
        .collect();
    let restaurants = locations
        .into_iter()
        .enumerate()
        .map(|(id, location)| RestaurantState {
            id,
            location,
            status: RestaurantStatus::Vacant,
        })
        .collect();
    let mut state = GameState {
        config,
        agents,
        restaurants,
        day: 0,
    };
    let mut rng = seed::rng_from(seed::derive(state.config.seed, STREAM_INITIAL_TOURS));
    state.revise(&mut rng)?;
    Ok(state)
}

impl GameState {
    /// Assembles a state from explicit parts, checking every invariant.
    pub fn from_parts(
        config: GameConfig,
        agents: Vec<AgentState>,
        restaurants: Vec<RestaurantState>,
        day: u32,
    ) -> Result<Self, GameError> {
        config.validate()?;
        let state = GameState {
            config,
            agents,
            restaurants,
            day,
        };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn check_invariants(&self) -> Result<(), GameError> {
        let n = self.config.n;
        let bad = |msg: String| Err(GameError::InvalidState(msg));
        if self.agents.len() != n || self.restaurants.len() != n {
            return bad(format!(
                "{} agents and {} restaurants for n = {n}",
                self.agents.len(),
                self.restaurants.len()
            ));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if a.id != i {
                return bad(format!("agent at index {i} has id {}", a.id));
            }
            match &a.status {
                AgentStatus::Satisfied { restaurant } => {
                    let ok = self.restaurants.get(*restaurant).map(|r| r.status)
                        == Some(RestaurantStatus::Reserved { agent: i });
                    if !ok {
                        return bad(format!("agent {i} holds restaurant {restaurant} without a reservation"));
                    }
                }
                AgentStatus::Active { tour } => {
                    let mut seen = vec![false; n];
                    for &r in tour {
                        if r >= n || seen[r] {
                            return bad(format!("agent {i} has an invalid tour {tour:?}"));
                        }
                        seen[r] = true;
                    }
                }
            }
        }
        for (j, r) in self.restaurants.iter().enumerate() {
            if r.id != j {
                return bad(format!("restaurant at index {j} has id {}", r.id));
            }
            if let RestaurantStatus::Reserved { agent } = r.status {
                let ok = self.agents.get(agent).map(|a| &a.status)
                    == Some(&AgentStatus::Satisfied { restaurant: j });
                if !ok {
                    return bad(format!("restaurant {j} reserved by {agent} who does not hold it"));
                }
            }
        }
        Ok(())
    }

    pub fn active_count(&self) -> usize {
        self.agents.iter().filter(|a| a.is_active()).count()
    }

    pub fn satisfied_count(&self) -> usize {
        self.config.n - self.active_count()
    }

    pub fn vacant_restaurants(&self) -> Vec<usize> {
        self.restaurants.iter().filter(|r| r.is_vacant()).map(|r| r.id).collect()
    }

    /// Satisfied agents over all agents.
    pub fn utilization(&self) -> f64 {
        self.satisfied_count() as f64 / self.config.n as f64
    }

    fn stop_limit(&self, tour: &[usize]) -> usize {
        self.config.m.min(tour.len())
    }

    /// Plays one day under the chosen scoring semantics.
    pub fn play<R: Rng + ?Sized>(&mut self, semantics: Semantics, rng: &mut R) -> Result<DayLog, GameError> {
        match semantics {
            Semantics::Behavioral => self.play_day(rng),
            Semantics::AnalyticCounting => self.play_day_counting(rng),
        }
    }

    /// Walks every active agent through its first `m` stops.
    pub fn play_day<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<DayLog, GameError> {
        let n = self.config.n;
        let m = self.config.m;
        let mut waiting: Vec<usize> = self.agents.iter().filter(|a| a.is_active()).map(|a| a.id).collect();
        if waiting.is_empty() {
            return Err(GameError::NoActiveAgents);
        }
        let active_at_start = waiting.len();

        // Reserved restaurants are occupied by their owners all day.
        let mut busy: Vec<bool> = self.restaurants.iter().map(|r| !r.is_vacant()).collect();
        let mut won: Vec<Option<usize>> = vec![None; n];
        let mut arrivals: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut per_stop = vec![0usize; m];

        for (z, served_at_stop) in per_stop.iter_mut().enumerate() {
            if waiting.is_empty() {
                break;
            }
            let mut visited = Vec::new();
            for &a in &waiting {
                if let Some(&r) = self.agents[a].tour().and_then(|t| t.get(z)) {
                    if arrivals[r].is_empty() {
                        visited.push(r);
                    }
                    arrivals[r].push(a);
                }
            }
            visited.sort_unstable();
            for r in visited {
                let group = std::mem::take(&mut arrivals[r]);
                if busy[r] {
                    continue;
                }
                let winner = group[rng.gen_range(0..group.len())];
                busy[r] = true;
                won[winner] = Some(r);
                *served_at_stop += 1;
            }
            waiting.retain(|&a| won[a].is_none());
        }

        let served_today = active_at_start - waiting.len();
        for (agent, restaurant) in won.iter().enumerate().filter_map(|(a, r)| r.map(|r| (a, r))) {
            self.settle(agent, restaurant);
        }
        Ok(self.close_day(active_at_start, served_today, per_stop))
    }

    /// Scores the day by position appearances instead of walking. The newly
    /// utilized restaurants are then handed to distinct active agents,
    /// preferring agents that listed them, so the game can continue.
    pub fn play_day_counting<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<DayLog, GameError> {
        let active: Vec<usize> = self.agents.iter().filter(|a| a.is_active()).map(|a| a.id).collect();
        if active.is_empty() {
            return Err(GameError::NoActiveAgents);
        }
        let m = self.config.m;
        let first_stop = self.counting_first_stop();
        let mut per_stop = vec![0usize; m];
        for z in first_stop.iter().flatten() {
            per_stop[*z] += 1;
        }

        let mut listed_by: Vec<Vec<usize>> = vec![Vec::new(); self.config.n];
        for &a in &active {
            let tour = self.agents[a].tour().unwrap_or(&[]);
            for &r in &tour[..self.stop_limit(tour)] {
                listed_by[r].push(a);
            }
        }
        let mut taken = vec![false; self.config.n];
        let mut pairs = Vec::new();
        for (r, z) in first_stop.iter().enumerate() {
            if z.is_none() {
                continue;
            }
            let mut pool: Vec<usize> = listed_by[r].iter().copied().filter(|&a| !taken[a]).collect();
            if pool.is_empty() {
                pool = active.iter().copied().filter(|&a| !taken[a]).collect();
            }
            let a = pool[rng.gen_range(0..pool.len())];
            taken[a] = true;
            pairs.push((a, r));
        }
        let served_today = pairs.len();
        for (a, r) in pairs {
            self.settle(a, r);
        }
        Ok(self.close_day(active.len(), served_today, per_stop))
    }

    /// For every restaurant that is vacant and appears within the first `m`
    /// positions of some active tour, the earliest such position (0-based).
    pub fn counting_first_stop(&self) -> Vec<Option<usize>> {
        let mut first = vec![None; self.config.n];
        for agent in self.agents.iter() {
            let Some(tour) = agent.tour() else { continue };
            for (z, &r) in tour[..self.stop_limit(tour)].iter().enumerate() {
                if self.restaurants[r].is_vacant() {
                    let slot: &mut Option<usize> = &mut first[r];
                    *slot = Some(slot.map_or(z, |prev| prev.min(z)));
                }
            }
        }
        first
    }

    fn settle(&mut self, agent: usize, restaurant: usize) {
        self.agents[agent].status = AgentStatus::Satisfied { restaurant };
        self.restaurants[restaurant].status = RestaurantStatus::Reserved { agent };
    }

    fn close_day(&mut self, active_at_start: usize, served_today: usize, per_stop: Vec<usize>) -> DayLog {
        self.day += 1;
        let still_unserved = active_at_start - served_today;
        DayLog {
            day: self.day,
            active_at_start,
            served_today,
            still_unserved,
            cumulative_utilization: (self.config.n - still_unserved) as f64 / self.config.n as f64,
            per_stop_services: per_stop,
        }
    }

    /// Evening revision: every active agent gets a fresh tour over exactly
    /// the currently vacant restaurants. Satisfied agents are untouched.
    pub fn revise<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(), GameError> {
        let vacant = self.vacant_restaurants();
        if vacant.is_empty() {
            return Ok(());
        }
        let locations: Vec<Point> = vacant.iter().map(|&r| self.restaurants[r].location).collect();
        let nodes: Vec<usize> = vacant.iter().map(|&r| r + 1).collect();
        for agent in self.agents.iter_mut().filter(|a| a.is_active()) {
            let local_order = match self.config.tour_policy {
                TourPolicy::UniformRandom => tsp::random_tour_with(vacant.len(), rng),
                TourPolicy::MetaheuristicTsp => {
                    let prefs = agent.prefs.restrict(&nodes);
                    let inst = tsp::build_personal_instance(agent.start, &locations, &prefs, self.config.lambda)?;
                    tsp::solve_metaheuristic(&inst, self.config.tsp_budget, rng.gen())?.0
                }
            };
            let tour = local_order.visit_order().iter().map(|&i| vacant[i - 1]).collect();
            agent.status = AgentStatus::Active { tour };
        }
        Ok(())
    }
}

/// Seed of the random stream used on `day` (1-based) for playing or, with
/// `evening = true`, for the revision that follows it.
pub fn day_stream_seed(game_seed: u64, day: u32, evening: bool) -> u64 {
    seed::derive(game_seed, STREAM_DAYS + 2 * day as u64 + evening as u64)
}

/// Plays a behavioral game to completion or `max_days`.
pub fn run_game(config: GameConfig) -> Result<Vec<DayLog>, GameError> {
    run_game_with(config, Semantics::Behavioral)
}

pub fn run_game_with(config: GameConfig, semantics: Semantics) -> Result<Vec<DayLog>, GameError> {
    let mut state = new_game(config)?;
    run_from(&mut state, semantics)
}

/// Continues an existing game until nobody is active or the day cap is hit.
pub fn run_from(state: &mut GameState, semantics: Semantics) -> Result<Vec<DayLog>, GameError> {
    let mut logs = Vec::new();
    while state.active_count() > 0 && state.day < state.config.max_days {
        let day = state.day + 1;
        let mut rng = seed::rng_from(day_stream_seed(state.config.seed, day, false));
        logs.push(state.play(semantics, &mut rng)?);
        if state.active_count() == 0 {
            break;
        }
        let mut rng = seed::rng_from(day_stream_seed(state.config.seed, day, true));
        state.revise(&mut rng)?;
    }
    Ok(logs)
}

/// Writes day logs as CSV: `day,active_at_start,served_today,still_unserved,utilization`
/// followed by `stop1..stopm` when `per_stop` is set.
pub fn write_day_logs_csv<W: Write>(out: W, logs: &[DayLog], m: usize, per_stop: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["day", "active_at_start", "served_today", "still_unserved", "utilization"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if per_stop {
        header.extend((1..=m).map(|z| format!("stop{z}")));
    }
    w.write_record(&header)?;
    for log in logs {
        let mut row = vec![
            log.day.to_string(),
            log.active_at_start.to_string(),
            log.served_today.to_string(),
            log.still_unserved.to_string(),
            crate::harness::fmt_sig(log.cumulative_utilization, 9),
        ];
        if per_stop {
            row.extend((0..m).map(|z| log.per_stop_services.get(z).copied().unwrap_or(0).to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

//! Simulation and analytics toolkit for the m-stop distributed Kolkata Paise
//! Restaurant game.
//!
//! Restaurants are scattered uniformly over a unit city square. Every agent
//! solves a personalized travelling-salesman problem over the restaurants
//! and, each day, walks the first `m` stops of its tour until one of them
//! serves it. Served agents keep their restaurant forever; the rest re-plan
//! each evening over the restaurants that are still vacant.
//!
//! The crate is split into:
//!
//! * [`spatial`]: uniform point placement and the equal-area grid partition.
//! * [`tsp`]: personalized instances, exact and metaheuristic tour solvers.
//! * [`game`]: the day-by-day game engine.
//! * [`analytics`]: closed-form expected trajectories and their
//!   exponential approximations.
//! * [`harness`]: seeded Monte Carlo replication, theory/simulation
//!   comparison and table/figure export.

pub mod analytics;
pub mod game;
pub mod harness;
pub mod seed;
pub mod spatial;
pub mod tsp;

pub use analytics::{DayStats, ModelParams, Trajectory};
pub use game::{DayLog, GameConfig, GameState, Placement, Semantics, TourPolicy};
pub use harness::{ExperimentConfig, RunReport};
pub use spatial::{CellId, Partition, Point};
pub use tsp::{PreferenceRanking, Tour, TspInstance};

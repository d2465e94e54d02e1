//! Route and charging planner for a single electric vehicle crossing a
//! layered DAG of charging stations, minimizing trip time and charging cost.

pub mod exact;
pub mod formats;
pub mod instance;
pub mod metaheuristics;
pub mod model;
pub mod pareto;

pub use instance::{Instance, NodeId};
pub use model::{Objectives, RouteSolution, Weights};
pub use pareto::Point2;

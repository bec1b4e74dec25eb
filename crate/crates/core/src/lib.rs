//! Crowd navigation with individual and flow disturbance penalties.
//!
//! A robot plans through a simulated crowd by sampling motion primitives,
//! filtering them for passive safety, and scoring the survivors by how much
//! they would disturb individual pedestrians ([`idp`]) and the crowd's
//! aggregate flow ([`fdp`]). The [`harness`] runs closed-loop episodes and
//! computes the evaluation metrics.

pub mod agent;
pub mod crowdsim;
pub mod error;
pub mod fdp;
pub mod flowfield;
pub mod geom;
pub mod harness;
pub mod idp;
pub mod map;
pub mod planner;
pub mod rng;
pub mod traj;

pub use agent::{Pedestrian, RobotState, PED_RADIUS, ROBOT_RADIUS};
pub use error::{Error, Result};
pub use geom::{ConvexPolygon, Rect, Vec2};
pub use map::StaticMap;
pub use rng::Rng;
pub use traj::{min_separation, traj_metric, traj_point_distance, Trajectory};

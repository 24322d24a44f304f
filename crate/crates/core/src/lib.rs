//! Generate novel planning domains by fusing and mutating existing ones,
//! emit guaranteed-solvable problems with witness plans, and measure
//! solvability with a built-in heuristic planner.
//!
//! The pipeline, end to end:
//!
//! 1. [`parser`] reads a STRIPS-with-typing subset of PDDL into the typed
//!    model of [`model`], and prints it back out canonically.
//! 2. [`fusion`] merges two domains (renaming collisions on the second) and
//!    runs a probabilistic mutation pass over every action.
//! 3. [`probgen`] unions the base objects and initial states, random-walks
//!    over applicable ground actions, and extracts a goal from the reached
//!    state — the walk itself certifies the problem solvable.
//! 4. [`validator`] replays plans step by step; [`planner`] grounds tasks
//!    and searches with a relaxed-plan heuristic.
//! 5. [`harness`] batches the above into depth and sweep experiments.
//!
//! Everything is deterministic in the seed: per-item random streams derive
//! from a master seed via [`seed::derive`].

pub mod fusion;
pub mod harness;
pub mod model;
pub mod parser;
pub mod planner;
pub mod probgen;
pub mod seed;
pub mod validator;

//! Landscape features for continuous single-objective black-box optimization.
//!
//! The entry point is a [`FeatureObject`]: an evaluated sample of the decision
//! space, its bounds, an optional cell grid and an optional callable objective.
//! From it any of the 17 feature sets in [`FeatureSet`] can be computed; each
//! produces a [`FeatureVector`] of named values that always ends with the
//! set's evaluation and runtime costs.
//!
//! ```
//! use lkit::{create_initial_sample, Control, FeatureObject, FeatureSet, SampleSpec};
//!
//! let spec = SampleSpec::uniform(200, 2, vec![-5.0; 2], vec![5.0; 2], 1);
//! let x = create_initial_sample(&spec).unwrap();
//! let y: Vec<f64> = x.iter().map(|p| p.iter().map(|v| v * v).sum()).collect();
//! let fo = FeatureObject::builder(x, y)
//!     .bounds(vec![-5.0; 2], vec![5.0; 2])
//!     .blocks(vec![4, 4])
//!     .build()
//!     .unwrap();
//! let nbc = lkit::compute_set(&fo, FeatureSet::Nbc, &Control::default(), 1).unwrap();
//! assert_eq!(nbc.len(), 7);
//! ```

pub mod control;
pub mod error;
pub mod feature;
pub mod features;
pub mod grid;
pub mod numkit;
pub mod object;
pub mod pipeline;
pub mod problems;
pub mod rng;
pub mod sample;
pub mod vizdata;

pub use control::Control;
pub use error::{Error, Result};
pub use feature::{
    calculate_features, compute_set, feature_names, FeatureSet, FeatureValue, FeatureVector,
};
pub use grid::CellGrid;
pub use object::{create_feature_object, FeatureObject, Objective, Summary};
pub use problems::{make_problem, Problem};
pub use sample::{create_initial_sample, SampleMethod, SampleSpec};

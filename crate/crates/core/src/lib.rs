//! Strong-constraint 4D-Var for the shallow-water equations on the sphere.
//!
//! The forward model is the semi-discrete un-staggered Turkel-Zwas scheme
//! advanced with explicit Euler steps. Around it sit hand-derived
//! tangent-linear and adjoint operators, a rank-one background covariance
//! inverted through a truncated SVD, synthetic twin-experiment observations,
//! an L-BFGS minimizer, a single-process space-time domain decomposition
//! and the experiment harness that drives the `swe4dvar` binary.
//!
//! ```
//! use swe4dvar::{ModelParams, SphereGrid, StencilVariant, SweModel};
//!
//! let grid = SphereGrid::new(16, 9).unwrap();
//! let params = ModelParams { p: 2, q: 1, msteps: 5, ..ModelParams::default() };
//! let model = SweModel::new(grid, params, StencilVariant::AsPrinted).unwrap();
//! let x0 = model.synth_initial(7, &Default::default());
//! let x5 = model.integrate(&x0).unwrap();
//! assert_eq!(x5.len(), 3 * 16 * 9);
//! ```

pub mod cost;
pub mod covariance;
pub mod dd;
mod error;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod minimize;
pub mod model;
pub mod observations;
pub mod state;
pub mod tlm;

pub use cost::{AssimilationSetup, Background};
pub use covariance::{BackgroundCov, ObsErrWeights, ObsOperator, TsvdFailure, TsvdPrecon};
pub use dd::{DomainDecomposition, Subdomain};
pub use error::{Error, Result};
pub use grid::{clamp_lat, wrap_lon, PhysicalConstants, SphereGrid};
pub use minimize::{minimize, DAResult, MinimizerOptions};
pub use model::{FieldParams, ModelParams, StencilVariant, SweModel};
pub use observations::{AssimilationWindow, ObservationSet, Problem};
pub use state::{Field, StateVector};
pub use tlm::LinearizationPoint;

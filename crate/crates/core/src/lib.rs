//! Strategyproof quantile mechanisms for placing two facilities on a line
//! at a multiset of candidate locations, when agents are split into groups
//! and each agent cares about the farther facility.
//!
//! * [`model`]: instances, candidate slots, placements and the four social
//!   objectives (AoA, MoM, MoA, AoM).
//! * [`mechanism`]: the (α, β)-Quantile mechanism with execution traces.
//! * [`oracle`]: exact optimum by pair enumeration, and distortion.
//! * [`audit`]: strategyproofness probing, structural checks, distortion
//!   scans and adversarial search.
//! * [`families`]: the lower-bound instance families.
//!
//! ```
//! use mechlab::mechanism::{run_quantile, Preset};
//! use mechlab::model::Instance;
//!
//! let inst = Instance::from_groups(&[&[0.499], &[1.0]], &[0.0, 0.0, 1.0, 1.0]).unwrap();
//! let out = run_quantile(&inst, Preset::Aoa.config()).unwrap();
//! assert_eq!(out.placement.values(), (0.0, 0.0));
//! ```

pub mod audit;
pub mod exec;
pub mod families;
pub mod generate;
pub mod mechanism;
pub mod model;
pub mod oracle;

pub use exec::Execution;
pub use mechanism::{run_quantile, Preset, QuantileConfig};
pub use model::{Instance, ObjectiveKind, Placement};
pub use oracle::{distortion_report, optimal_placement, DistortionReport, Ratio};

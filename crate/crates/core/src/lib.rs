//! Spectral-efficiency-optimal time and power allocation for wireless powered
//! networks in which devices harvest energy from a power beacon and then
//! send data to an access point, either in TDMA slots or simultaneously with
//! NOMA and successive interference cancellation.
//!
//! Modules:
//! * [`model`]: parameters, devices, channel sampling, rate and energy formulas
//! * [`tdma`], [`noma`]: optimal allocations and their KKT diagnostics
//! * [`baselines`]: fixed energy-transfer schemes and the power-limited comparison
//! * [`verify`]: brute-force oracles and executable checks of the TDMA/NOMA orderings
//! * [`bench`]: Monte Carlo sweeps and CSV output
//! * [`config`], [`cli`]: JSON documents and the `wpcn` command line

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod model;
pub mod noma;
pub mod report;
pub mod roots;
pub mod tdma;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ChannelRealization, Device, DeviceDefaults, Instance, SystemParams};
pub use noma::{solve_noma, NomaAllocation};
pub use report::{KktResiduals, Scheme, SolveReport};
pub use roots::DEFAULT_TOL;
pub use tdma::{solve_tdma, TdmaAllocation};

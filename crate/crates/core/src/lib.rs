//! QoS-constrained transceiver design for a full-duplex multi-user MIMO base
//! station with imperfect self-interference cancellation.
//!
//! The base station serves `K` single-antenna downlink users and `L`
//! single-antenna uplink users on the same band with `N_t` antennas. Residual
//! self-interference after analog and digital cancellation is modelled through
//! the second-order statistics of the SI channel estimation error. The solvers
//! minimize total transmit power subject to per-user SINR targets and an
//! optional per-antenna cap on the ADC input power:
//!
//! * [`bisection::solve_p1`]: globally optimal when the error is i.i.d.
//! * [`ao::solve_ao`]: alternating optimization for any error correlation.
//! * [`hd`]: half-duplex baselines, also the building blocks of the bisection.
//!
//! [`harness`] runs seeded Monte-Carlo sweeps and writes CSV summaries.

pub mod ao;
pub mod bisection;
pub mod error;
pub mod fixed_point;
pub mod harness;
pub mod hd;
pub mod linalg;
pub mod metrics;
pub mod params;

pub use error::{ParamError, SolveError};
pub use metrics::TransceiverSolution;
pub use params::{ChannelRealization, SiCorrelation, SystemParams};

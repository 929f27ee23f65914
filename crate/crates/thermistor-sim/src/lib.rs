//! Finite element simulation of thermistor self-heating.
//!
//! The device model couples a quasi-static potential equation with
//! gradient-dependent, possibly degenerate conductivity (p-Laplacian type)
//! to an unsteady heat equation driven by the Joule source, with Robin heat
//! exchange on the boundary. Each module owns one layer:
//!
//! * [`mesh`]: structured triangulations, P1 fields, quadrature;
//! * [`constitutive`]: conductivity/thermal laws, regularizations, I-V curves;
//! * [`linalg`]: banded symmetric direct solver for the assembled systems;
//! * [`potential`]: damped Newton/Picard solver for the potential equation;
//! * [`heat`]: implicit Euler step with lumped mass and Robin exchange;
//! * [`coupling`]: the staggered two-way coupling and the eps-continuation;
//! * [`diagnostics`]: energy/balance functionals and monotonicity suites;
//! * [`io`]: VTK/CSV serialization with bit-reproducible formatting;
//! * [`config`]: run configuration files;
//! * [`verification`]: built-in exactness, convergence, and property checks;
//! * [`runner`]: the run modes behind the `thermistor-sim` binary.
//!
//! Each major capability has a runnable example under `examples/`: start with
//! `cargo run --example self_heating`.

pub mod config;
pub mod constitutive;
pub mod coupling;
pub mod diagnostics;
pub mod heat;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod potential;
pub mod runner;
pub mod verification;

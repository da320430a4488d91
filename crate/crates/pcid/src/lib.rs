//! Online identification of piecewise-constant parameters of a linear
//! regression: switching-instant detection with adjustable lag, and an
//! adaptive law with exponential convergence under finite excitation.
//!
//! The pipeline extends the scalar regression to a square system with
//! exponentially input-damped filters, mixes it through the adjugate so
//! every unknown decouples against the scalar regressor `det(omega)`,
//! watches the mixing residual for parameter switches, resets the
//! filters at the estimated switch instants, and normalizes the update
//! gain by the smoothed regressor so the convergence rate is set by
//! configuration rather than by how exciting the data happened to be.
//!
//! Crate layout:
//!
//! * [`matrix`] - dense kernels: determinant, adjugate, minimum eigenvalue
//! * [`signals`] - schedules, samples, disturbances, the switched plant
//! * [`drem`] - extension filters, mixing, the switch-indicating residual
//! * [`detect`] - exact and robust switching-instant detection
//! * [`adaptive`] - smoothing filters and the normalized adaptive law
//! * [`baselines`] - comparison laws fed privileged switching knowledge
//! * [`config`] - scenario configuration, presets, validation
//! * [`harness`] - fixed-step experiment engine and metrics
//! * [`output`] - CSV/JSON artifact writers
//! * [`cli`] - the `pcid` command-line front end
//!
//! Each major capability has a runnable example under `examples/`; start
//! with `detect_switches` and `track_parameters`.
//!
//! ```
//! use pcid::config::parse_config;
//! use pcid::harness::run_experiment;
//!
//! // coarse grid keeps the doc test fast; presets default to 1e-4
//! let config = parse_config(
//!     Some(r#"{"scenario": "simple_noise_free", "tau_s": 1e-3, "horizon": 1.5}"#),
//!     &[],
//! )?;
//! let output = run_experiment(&config)?;
//!
//! // both parameter switches are detected, resets scheduled one lag later
//! let resets: Vec<f64> = output.events.iter().map(|e| e.t_hat).collect();
//! assert_eq!(resets.len(), 2);
//! assert!((resets[0] - 0.601).abs() < 0.01 && (resets[1] - 1.101).abs() < 0.01);
//! # Ok::<(), pcid::Error>(())
//! ```

pub mod adaptive;
pub mod baselines;
pub mod cli;
pub mod config;
pub mod detect;
pub mod drem;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod output;
pub mod signals;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::Matrix;

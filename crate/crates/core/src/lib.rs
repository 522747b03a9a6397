//! Goodness-of-fit testing for the Zeta distribution.
//!
//! The null family is `Zeta(s)` on {1, 2, ...} with pmf `k^-s / zeta(s)`,
//! `s > 1`. The toolkit provides
//!
//! * a Stein-operator test statistic built from the generator of a
//!   birth-death chain whose stationary law is Zeta, in both a Beta-function
//!   closed form and a Gauss-Jacobi quadrature form ([`stein`]),
//! * maximum-likelihood estimation of the shape parameter ([`estimation`]),
//! * exact samplers for the null and for a set of alternative count
//!   families ([`distributions`]),
//! * four competitor statistics from the literature ([`competitors`]),
//! * a parametric bootstrap test and a warp-speed Monte Carlo power-study
//!   engine with reproducible parallel seeding ([`montecarlo`]),
//! * the limit null covariance kernel and a Rayleigh-Ritz approximation of
//!   its eigenvalues ([`spectral`]).

pub mod competitors;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod stein;

pub use error::{Error, Result};

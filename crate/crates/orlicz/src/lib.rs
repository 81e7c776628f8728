//! Orlicz and L_p affine and geominimal surface areas of convex, log-concave
//! and s-concave functions, computed on tensor grids.
//!
//! * [`funcrep`]: convex potentials, grids and the regular set where the
//!   Hessian is invertible.
//! * [`transforms`]: Legendre and s-concave duals, the `F̆` envelope and
//!   Santaló-point centring.
//! * [`quadrature`]: weight functions, grid and radial integrals, the
//!   s-concave ball constant.
//! * [`affine`]: Orlicz mixed integrals and the variational surface areas.
//! * [`sconcave`]: the same quantities for s-concave functions.
//! * [`mixed`]: mixed quantities of several potentials.
//! * [`harness`]: batch verification of identities and inequalities.

pub mod affine;
pub mod config;
pub mod error;
pub mod funcrep;
pub mod harness;
pub mod family;
pub mod hfunc;
pub mod mixed;
pub mod optim;
pub mod quadrature;
pub mod sconcave;
pub mod special;
pub mod transforms;

pub use error::{Error, Result};
pub use funcrep::{FunctionRep, Grid, RegularSet};
pub use hfunc::OrliczFunction;
pub use quadrature::{IntegralResult, WeightFunction};

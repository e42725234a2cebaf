//! # htexp
//!
//! Numerical toolkit for type-II error exponents of distributed binary
//! hypothesis testing when an observer talks to a detector over a discrete
//! memoryless channel.
//!
//! The observer sees `U^k`, the detector sees side information `V^k` plus the
//! channel output `Y^n`. Under `H0` the pair is i.i.d. `P_UV`, under `H1` it is
//! i.i.d. `Q_UV`. Everything here works on small finite alphabets.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`prob`] | named-axis joint tensors, stochastic matrices, simplex lattices |
//! | [`info`] | entropy, mutual information, KL, binary helpers |
//! | [`projection`] | KL minimisation under marginal and entropy-floor constraints |
//! | [`channel`] | capacity, expurgated / red-alert exponents, pairwise divergence |
//! | [`exponents`] | separation, hybrid, one-bit, TACI, zero-capacity and k=1 exponents |
//! | [`simulator`] | exact Neyman-Pearson errors by LLR convolution, Monte Carlo companion |
//!
//! All information quantities are computed in nats. Conversion to bits only
//! happens when reports are produced (see [`units`]).

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod exponents;
pub mod info;
pub mod projection;
pub mod prob;
pub mod simulator;
pub mod units;

mod error;

pub use error::{Error, Result};
pub use prob::{Alphabet, CondDist, FiniteDist, JointDist};

//! Operator learning for the causal response of linear dynamical systems.
//!
//! The crate is split along the lifecycle of an experiment:
//!
//! * [`lindyn`] computes exact responses of linear multi-degree-of-freedom
//!   systems to ground acceleration (modal Green's functions, Duhamel
//!   convolution, non-classical damping, and a Newmark-beta integrator used
//!   as an independent check).
//! * [`signalgen`] synthesizes band-limited ground motions, runs the usual
//!   filter / resample / PGA-rescale chain, and pairs inputs with responses.
//! * [`neuralcore`] is a small dense-network substrate with hand-written
//!   backpropagation and Adam.
//! * [`operatornets`] builds DeepONet, POD-DeepONet, the multi-scale trunk and
//!   the causality network with its convolutional branch windows.
//! * [`harness`] holds losses, metrics, normalization, training and
//!   evaluation.
//!
//! A narrative guide lives in the `book/` directory of the repository; its
//! code listings are compiled as doc-tests of this crate.

pub mod error;
pub mod fft;
pub mod harness;
pub mod linalg;
pub mod lindyn;
pub mod neuralcore;
pub mod operatornets;
pub mod signalgen;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/signals.md")]
    mod signals {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/causality.md")]
    mod causality {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
}

//! Dynamic block models of renewable plants and a classical machine.
//!
//! Each block is a pure function of `(params, state, inputs)` returning state
//! derivatives and outputs, plus an equilibrium initializer that back-solves
//! the states from a terminal operating point.

/// Declares a named state vector with element-wise helpers used by the
/// integrator.
macro_rules! state_vector {
    ($(#[$m:meta])* pub struct $name:ident { $($(#[$fm:meta])* pub $f:ident),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
        pub struct $name<T = f64> {
            $($(#[$fm])* pub $f: T),*
        }

        impl<T: $crate::scalar::Real> $name<T> {
            pub const NAMES: &'static [&'static str] = &[$(stringify!($f)),*];
            pub const LEN: usize = Self::NAMES.len();

            /// Read from the first `LEN` entries of `s`.
            pub fn from_slice(s: &[T]) -> Self {
                let mut it = s.iter().copied();
                Self { $($f: it.next().expect("state slice too short")),* }
            }

            /// Write into the first `LEN` entries of `s`.
            pub fn write_slice(&self, s: &mut [T]) {
                let mut it = s.iter_mut();
                $(*it.next().expect("state slice too short") = self.$f;)*
            }

            /// `self + h·d`
            pub fn axpy(&self, h: T, d: &Self) -> Self {
                Self { $($f: self.$f + h * d.$f),* }
            }

            pub fn values(&self) -> Vec<T> {
                vec![$(self.$f),*]
            }

            pub fn max_abs(&self) -> T {
                let mut m = T::zero();
                $(m = m.max(self.$f.abs());)*
                m
            }

            pub fn is_finite(&self) -> bool {
                true $(&& self.$f.is_finite())*
            }
        }
    };
}

pub mod classical;
pub mod control;
pub mod reec;
pub mod record;
pub mod regc;
pub mod repc;
pub mod wtga;
pub mod wtgp;
pub mod wtgq;
pub mod wtgt;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) fn ensure_finite<T: Real>(what: &'static str, xs: &[T]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput(what))
    }
}

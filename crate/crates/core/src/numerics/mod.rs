//! Small numerical building blocks shared by the pricers.

pub mod banded;
pub mod dense;
pub mod diff;
pub mod gauss;
pub mod interp;
pub mod special;

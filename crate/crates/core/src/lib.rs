pub mod alphabet;
pub mod bounds;
pub mod channel;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod fading;
pub mod mi;
pub mod mmse;
pub mod numerics;

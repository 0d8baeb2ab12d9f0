pub mod collector;
pub mod fixpoint;
pub mod heap;
pub mod scheduler;
pub mod set;
pub mod verify;

#[cfg(test)]
mod testutil;

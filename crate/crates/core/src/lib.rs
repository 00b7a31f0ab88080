pub mod batch;
pub mod bridge;
pub mod cli;
pub mod eps;
pub mod farm;
pub mod numeric;
pub mod protocol;
pub mod value;

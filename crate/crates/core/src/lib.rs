pub mod algebra;
pub mod arithmetic;
pub mod cocycle;
pub mod fourier;
pub mod reduction;
pub mod renorm;

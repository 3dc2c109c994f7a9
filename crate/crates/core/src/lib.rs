pub mod algebroid;
pub mod cli;
pub mod expr;
pub mod higher;
pub mod numerics;
pub mod sampling;
pub mod strings;
pub mod tulczyjew;

pub mod cli;
pub mod conditions;
pub mod description;
pub mod effpot;
pub mod error;
pub mod graph;
pub mod heat;
pub mod linalg;
pub mod model1d;
pub mod roots;
pub mod solver;
pub mod waveguide;

pub mod bath;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod model;
pub mod oracle;
pub mod output;
pub mod protocols;
pub mod solver;
pub mod thirdq;

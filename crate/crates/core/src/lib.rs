pub mod adversary;
pub mod brain;
pub mod experiments;
pub mod gram;
pub mod pem;
pub mod report;
pub mod rng;
pub mod script;
pub mod server;
pub mod session;
pub mod symbols;
pub mod trace;

pub mod account;
pub mod agents;
pub mod analysis;
pub mod asset;
pub mod decision;
pub mod io;
pub mod llm;
pub mod matching;
pub mod money;
pub mod orderbook;
pub mod sim;
pub mod snapshot;

pub mod compiler;
pub mod explore;
pub mod generate;
pub mod guard;
pub mod ledger;
pub mod model;
pub mod models;
pub mod oracle;
pub mod replay;
pub mod repository;
pub mod runtime;
pub mod services;
pub mod value;
pub mod word;

pub mod audit;
pub mod deriv;
pub mod error;
pub mod expr;
pub mod index;
pub mod inf;
pub mod join;
pub mod lawcheck;
pub mod laws;
pub mod search;
pub mod tree;
pub mod unify;
pub mod smb;
pub mod wf;

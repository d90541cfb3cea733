pub mod corpus;
pub mod lm;
pub mod text;
pub mod meteor;
pub mod features;
pub mod learner;
pub mod eval;

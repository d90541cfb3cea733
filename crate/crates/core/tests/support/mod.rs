#![allow(dead_code)]

pub mod fuzz;
pub mod meteor;
pub mod svr;

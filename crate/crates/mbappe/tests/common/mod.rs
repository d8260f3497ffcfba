#![allow(dead_code)]

pub mod dot;

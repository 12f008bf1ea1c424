//! Bounded verification toolkit for guarded command programs: unary and
//! relational verification conditions over alignment automata, KAT-based
//! normal forms, and synthesis and checking of proofs in Hoare-style logics.

pub mod assertions;
pub mod automata;
pub mod cli;
pub mod kat;
pub mod normalform;
pub mod proof;
pub mod semantics;
pub mod specfile;
pub mod syntax;
pub mod vcgen;

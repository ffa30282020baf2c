//! Fibonacci-tree coordinates, arc-digit routing and a message simulator
//! for the hyperbolic pentagrid {5,4} and ternary heptagrid {7,3}.

pub mod carpet;
pub mod cli;
pub mod fibtree;
pub mod grid;
pub mod numeration;
pub mod oracle;
pub mod routing;
pub mod simulator;

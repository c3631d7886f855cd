pub mod fuzz;
pub mod oracle;
pub mod planted;
pub mod prompt_fixture;
pub mod synthetic;

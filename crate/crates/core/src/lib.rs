pub mod case_io;
pub mod conic;
pub mod dro_opf;
pub mod harness;
pub mod lindistflow;
pub mod registry;
pub mod uncertainty;
pub mod valuation;

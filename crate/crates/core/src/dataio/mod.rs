//! Strategy files, the shipped reference strategies and values, and report
//! output.

mod appendix;
mod file;
mod reference;
mod report;

pub use appendix::{appendix_text, load_appendix, APPENDIX_DIMS};
pub use file::{
    parse_strategy, repair_povm, serialize_strategy, Complex, MeasurementEntry, Model,
    OperatorEntry, ParseOptions, Parsed, StateEntry, Strategy, StrategyFile,
};
pub use reference::{reference_table, ReferenceRow, ReferenceTable};
pub use report::{Report, ReportRow, CSV_HEADER};

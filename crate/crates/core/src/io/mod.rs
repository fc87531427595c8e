//! File interchange: npy arrays in, npy arrays and metric reports out.

mod npy;
mod report;

pub use npy::{decode, encode, read_array, write_array, ArrayData, ArrayFile, Dtype, MAGIC};
pub use report::{
    format_float, metadata_comment_block, metric, render_report, write_report, MetricEntry,
    MetricReport, ReportFormat, ReportMetadata,
};

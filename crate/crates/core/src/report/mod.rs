//! Justice mapping, report rendering and the end-to-end pipeline.
//!
//! [`run_pipeline`] is what the `analyze` command calls. [`analyze`] is the
//! same computation on an already prepared log, without touching the disk.

mod justice;
mod pipeline;
mod render;

pub use justice::{
    dimensions, format_levels, map_to_justice, summary_lines, JusticeConfig, JusticeDimension,
    JusticeEntry, JusticeSummary,
};
pub use pipeline::{
    analyze, prepare_log, run_pipeline, Analysis, InputConfig, PipelineConfig, PipelineSummary,
    Thresholds,
};
pub use render::{
    parse_json_report, render_csv, render_json, render_markdown, render_report, ReportContext,
    ReportDocument, ReportFormat, CSV_HEADER,
};

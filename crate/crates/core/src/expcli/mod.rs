//! Experiment configuration, execution over an SNR x pilot-set grid, and
//! result persistence (CSV, plot data, details, traces).

mod cli;
mod config;
mod output;
mod run;
mod table;

pub use cli::{cli_main, EXIT_ERROR, EXIT_OK, EXIT_PARTIAL};
pub use config::{ChannelModel, ExperimentConfig, PilotSpec, QUICK_SUBCARRIERS};
pub use output::{
    curve_file_name, emit_csv, emit_plotdata, write_outputs, CONFIG_JSON, DETAILS_JSON, PLOT_DIR,
    RESULTS_CSV, TRACE_DIR,
};
pub use run::{
    au_covariance, build_channels, cell_inputs, cell_seed, run_cells, run_experiment, snr_to_power,
    CellOutcome,
};
pub use table::{csv_header, parse_csv, CellStatus, Curve, ResultRow, ResultTable};

//! Commands behind the `dct-recover` binary.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_compare, cmd_crop, cmd_dump_lp, cmd_erase, cmd_inspect, cmd_recover, cmd_sweep, exit_code, Method,
    RecoverRequest,
};
pub use config::{MaskSpec, RunConfig, SweepRange};

use clap::Parser;
use qhd_lab::cli::{dispatch, Cli};

fn main() {
    std::process::exit(dispatch(Cli::parse()));
}

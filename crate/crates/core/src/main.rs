use clap::Parser;

fn main() {
    std::process::exit(hypdim::cli::main_with(hypdim::cli::CliArgs::parse()));
}

use clap::Parser;

fn main() {
    let exit = hbc::run(hbc::Cli::parse());
    std::process::exit(exit.code());
}

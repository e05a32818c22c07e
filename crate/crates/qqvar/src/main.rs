use clap::Parser;

fn main() {
    let cli = qqvar::cli::Cli::parse();
    std::process::exit(qqvar::cli::run(cli));
}

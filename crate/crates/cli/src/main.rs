fn main() { std::process::exit(cdo_cli::run(std::env::args().collect())); }

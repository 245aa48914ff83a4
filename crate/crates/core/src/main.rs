fn main() {
    std::process::exit(djia_factors::cli::run(std::env::args_os()));
}

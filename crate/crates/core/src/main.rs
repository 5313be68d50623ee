fn main() {
    std::process::exit(rca_core::cli::run(std::env::args_os()));
}

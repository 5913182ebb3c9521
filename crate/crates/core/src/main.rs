fn main() {
    std::process::exit(modality::cli::run_with_args(std::env::args_os()));
}

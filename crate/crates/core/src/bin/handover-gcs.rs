fn main() {
    std::process::exit(handover_gcs::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(objectness_core::cli::run(std::env::args_os()));
}

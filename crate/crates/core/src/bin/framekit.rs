fn main() {
    std::process::exit(framekit::cli::run(std::env::args_os()));
}

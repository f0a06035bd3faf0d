fn main() {
    std::process::exit(qdetect::cli::run(std::env::args_os()));
}

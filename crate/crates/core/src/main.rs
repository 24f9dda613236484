fn main() {
    std::process::exit(moama::cli::run(std::env::args_os()));
}

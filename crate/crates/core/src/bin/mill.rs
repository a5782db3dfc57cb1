fn main() {
    std::process::exit(antmill::cli::run(std::env::args_os()));
}

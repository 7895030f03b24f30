fn main() {
    std::process::exit(transtech::cli::run(std::env::args_os()));
}

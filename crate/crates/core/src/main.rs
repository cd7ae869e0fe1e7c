fn main() {
    std::process::exit(beamsplit::cli::run(std::env::args_os()));
}

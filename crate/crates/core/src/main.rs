fn main() {
    std::process::exit(payset::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(focalize::cli::run(std::env::args_os()));
}

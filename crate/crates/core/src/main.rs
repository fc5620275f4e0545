fn main() {
    std::process::exit(spinphoton::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(magspec_cli::run(std::env::args_os()));
}

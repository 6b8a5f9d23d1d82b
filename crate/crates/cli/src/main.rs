fn main() {
    std::process::exit(cew_cli::run(std::env::args_os()));
}

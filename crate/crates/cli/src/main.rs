fn main() {
    std::process::exit(skit_cli::run(std::env::args_os()));
}

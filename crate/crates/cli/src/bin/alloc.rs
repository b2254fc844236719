//! `alloc solve|verify|size`, the allocation subcommands on their own.

fn main() {
    std::process::exit(skit_cli::run_alloc(std::env::args_os()));
}

fn main() {
    std::process::exit(otmd::cli::main_with(std::env::args_os().collect()));
}

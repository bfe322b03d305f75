fn main() {
    std::process::exit(rise_flock::cli::main_with_args(std::env::args_os()));
}

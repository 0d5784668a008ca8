fn main() {
    std::process::exit(looplab::cli::main_with(std::env::args_os()));
}

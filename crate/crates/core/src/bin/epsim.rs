fn main() {
    std::process::exit(epsim::cli::main_with(std::env::args_os()));
}

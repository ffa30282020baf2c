fn main() {
    std::process::exit(fibgrid::cli::main());
}

fn main() {
    std::process::exit(toepricc::cli::main());
}

fn main() {
    std::process::exit(lucid_core::cli::main());
}

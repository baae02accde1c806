fn main() {
    std::process::exit(aerokpi::cli::main());
}

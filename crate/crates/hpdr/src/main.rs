fn main() {
    std::process::exit(hpdr::cli::main());
}

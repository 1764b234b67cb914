fn main() {
    std::process::exit(netcm::cli::main());
}

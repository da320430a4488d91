fn main() {
    env_logger::init();
    std::process::exit(pcid::cli::main());
}

fn main() {
    std::process::exit(rue_bai::cli::main_from_env());
}

fn main() {
    std::process::exit(arw::cli::main_with_env());
}

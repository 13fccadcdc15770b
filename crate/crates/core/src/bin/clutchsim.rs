fn main() {
    std::process::exit(clutchsim::cli::main());
}

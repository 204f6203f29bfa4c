fn main() {
    std::process::exit(tensor_sieve::cli::run());
}

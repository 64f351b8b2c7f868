fn main() {
    std::process::exit(pqbundle_cli::run(std::env::args_os()));
}

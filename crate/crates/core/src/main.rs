fn main() {
    std::process::exit(replica_tn::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(aerialnet_cli::run_from(std::env::args_os()));
}

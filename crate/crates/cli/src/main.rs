fn main() {
    std::process::exit(brainsync_cli::main_with_args(std::env::args_os()));
}
